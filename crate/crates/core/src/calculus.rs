//! Wirtinger calculus on gridded fields.
//!
//! `d/dz = (d/dx - i d/dy) / 2` and `d/dzbar = (d/dx + i d/dy) / 2`, with
//! the axis derivatives taken by central differences (wrapping on periodic
//! axes) and one-sided stencils of the same order at open boundaries.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::chart::{ComplexField, ConformalChart, Field, Norms, RealField, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wirtinger {
    Dz,
    Dzbar,
}

/// Accuracy order of the difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    #[default]
    Second,
    Fourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

fn diff_1d<T: Sample>(get: impl Fn(usize) -> T, n: usize, periodic: bool, h: f64, i: usize, stencil: Stencil) -> T {
    let wrap = |k: isize| -> usize { k.rem_euclid(n as isize) as usize };
    let ii = i as isize;
    match stencil {
        Stencil::Second => {
            if periodic || (i > 0 && i + 1 < n) {
                (get(wrap(ii + 1)) - get(wrap(ii - 1))) * (0.5 / h)
            } else if i == 0 {
                (get(1) * 4.0 - get(0) * 3.0 - get(2)) * (0.5 / h)
            } else {
                (get(n - 1) * 3.0 - get(n - 2) * 4.0 + get(n - 3)) * (0.5 / h)
            }
        }
        Stencil::Fourth => {
            let s = 1.0 / (12.0 * h);
            if periodic || (i > 1 && i + 2 < n) {
                (get(wrap(ii - 2)) - get(wrap(ii - 1)) * 8.0 + get(wrap(ii + 1)) * 8.0 - get(wrap(ii + 2))) * s
            } else if i == 0 {
                (get(1) * 48.0 - get(0) * 25.0 - get(2) * 36.0 + get(3) * 16.0 - get(4) * 3.0) * s
            } else if i == 1 {
                (get(2) * 18.0 - get(0) * 3.0 - get(1) * 10.0 - get(3) * 6.0 + get(4)) * s
            } else if i == n - 2 {
                (get(n - 1) * 3.0 + get(n - 2) * 10.0 - get(n - 3) * 18.0 + get(n - 4) * 6.0 - get(n - 5)) * s
            } else {
                (get(n - 1) * 25.0 - get(n - 2) * 48.0 + get(n - 3) * 36.0 - get(n - 4) * 16.0 + get(n - 5) * 3.0) * s
            }
        }
    }
}

fn partial<T: Sample>(f: &Field<T>, axis: Axis, stencil: Stencil) -> Field<T> {
    let chart = *f.chart();
    let (nx, ny) = (chart.nx(), chart.ny());
    let v = f.values();
    let mut out = Vec::with_capacity(v.len());
    for iy in 0..ny {
        for ix in 0..nx {
            let d = match axis {
                Axis::X => diff_1d(|k| v[iy * nx + k], nx, chart.periodic_x(), chart.hx(), ix, stencil),
                Axis::Y => diff_1d(|k| v[k * nx + ix], ny, chart.periodic_y(), chart.hy(), iy, stencil),
            };
            out.push(d);
        }
    }
    Field::from_values(chart, out).expect("length preserved")
}

fn check_stencil<T: Copy>(f: &Field<T>, stencil: Stencil) -> Result<()> {
    let c = f.chart();
    if stencil == Stencil::Fourth && ((!c.periodic_x() && c.nx() < 6) || (!c.periodic_y() && c.ny() < 6)) {
        return Err(Error::InvalidChart("fourth-order stencils need 6 samples per open axis"));
    }
    Ok(())
}

/// Fourth order when every open axis has enough samples.
pub fn finest_stencil(chart: &ConformalChart) -> Stencil {
    let fits = |periodic: bool, n: usize| periodic || n >= 6;
    if fits(chart.periodic_x(), chart.nx()) && fits(chart.periodic_y(), chart.ny()) {
        Stencil::Fourth
    } else {
        Stencil::Second
    }
}

pub fn partial_x<T: Sample>(f: &Field<T>, stencil: Stencil) -> Field<T> {
    partial(f, Axis::X, stencil)
}

pub fn partial_y<T: Sample>(f: &Field<T>, stencil: Stencil) -> Field<T> {
    partial(f, Axis::Y, stencil)
}

pub(crate) fn wirtinger_unchecked(f: &ComplexField, which: Wirtinger, stencil: Stencil) -> ComplexField {
    let fx = partial(f, Axis::X, stencil);
    let fy = partial(f, Axis::Y, stencil);
    let i = match which {
        Wirtinger::Dz => Complex64::new(0.0, -1.0),
        Wirtinger::Dzbar => Complex64::new(0.0, 1.0),
    };
    fx.zip_map(&fy, |a, b| (a + i * b) * 0.5)
}

pub(crate) fn d_z(f: &ComplexField) -> ComplexField {
    wirtinger_unchecked(f, Wirtinger::Dz, Stencil::Second)
}

pub(crate) fn d_zbar(f: &ComplexField) -> ComplexField {
    wirtinger_unchecked(f, Wirtinger::Dzbar, Stencil::Second)
}

// Pure second derivatives use direct stencils. Nesting two one-sided first
// differences at an open boundary leaves an O(h) error on the first interior
// line, which would spoil every second-order residual.
fn second_1d<T: Sample>(get: impl Fn(usize) -> T, n: usize, periodic: bool, h: f64, i: usize, stencil: Stencil) -> T {
    let wrap = |k: isize| -> usize { k.rem_euclid(n as isize) as usize };
    let ii = i as isize;
    match stencil {
        Stencil::Second => {
            let s = 1.0 / (h * h);
            if periodic || (i > 0 && i + 1 < n) {
                (get(wrap(ii + 1)) + get(wrap(ii - 1)) - get(i) * 2.0) * s
            } else if i == 0 {
                (get(0) * 2.0 - get(1) * 5.0 + get(2) * 4.0 - get(3)) * s
            } else {
                (get(n - 1) * 2.0 - get(n - 2) * 5.0 + get(n - 3) * 4.0 - get(n - 4)) * s
            }
        }
        Stencil::Fourth => {
            let s = 1.0 / (12.0 * h * h);
            let one_sided_0 = |g: &dyn Fn(usize) -> T| {
                (g(0) * 45.0 - g(1) * 154.0 + g(2) * 214.0 - g(3) * 156.0 + g(4) * 61.0 - g(5) * 10.0) * s
            };
            let one_sided_1 =
                |g: &dyn Fn(usize) -> T| (g(0) * 10.0 - g(1) * 15.0 - g(2) * 4.0 + g(3) * 14.0 - g(4) * 6.0 + g(5)) * s;
            if periodic || (i > 1 && i + 2 < n) {
                (get(wrap(ii - 1)) * 16.0 + get(wrap(ii + 1)) * 16.0 - get(wrap(ii - 2)) - get(wrap(ii + 2)) - get(i) * 30.0) * s
            } else if i == 0 {
                one_sided_0(&get)
            } else if i == 1 {
                one_sided_1(&get)
            } else {
                let rev = |k: usize| get(n - 1 - k);
                if i == n - 1 {
                    one_sided_0(&rev)
                } else {
                    one_sided_1(&rev)
                }
            }
        }
    }
}

fn second<T: Sample>(f: &Field<T>, axis: Axis, stencil: Stencil) -> Field<T> {
    let chart = *f.chart();
    let (nx, ny) = (chart.nx(), chart.ny());
    let v = f.values();
    let mut out = Vec::with_capacity(v.len());
    for iy in 0..ny {
        for ix in 0..nx {
            let d = match axis {
                Axis::X => second_1d(|k| v[iy * nx + k], nx, chart.periodic_x(), chart.hx(), ix, stencil),
                Axis::Y => second_1d(|k| v[k * nx + ix], ny, chart.periodic_y(), chart.hy(), iy, stencil),
            };
            out.push(d);
        }
    }
    Field::from_values(chart, out).expect("length preserved")
}

/// Which complex second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondWirtinger {
    /// `f_{zz} = (f_xx - f_yy - 2i f_xy) / 4`
    ZZ,
    /// `f_{z zbar} = (f_xx + f_yy) / 4`
    ZZbar,
}

pub(crate) fn second_unchecked(f: &ComplexField, which: SecondWirtinger, stencil: Stencil) -> ComplexField {
    let fxx = second(f, Axis::X, stencil);
    let fyy = second(f, Axis::Y, stencil);
    match which {
        SecondWirtinger::ZZbar => fxx.zip_map(&fyy, |a, b| (a + b) * 0.25),
        SecondWirtinger::ZZ => {
            let fxy = partial(&partial(f, Axis::Y, stencil), Axis::X, stencil);
            let i2 = Complex64::new(0.0, 2.0);
            let d = fxx.zip_map(&fyy, |a, b| a - b);
            d.zip_map(&fxy, |a, b| (a - i2 * b) * 0.25)
        }
    }
}

/// Flat `f_{z zbar}`, a quarter of the flat Laplacian.
pub(crate) fn zzbar(f: &ComplexField) -> ComplexField {
    second_unchecked(f, SecondWirtinger::ZZbar, Stencil::Second)
}

pub(crate) fn zzbar_real(f: &RealField) -> RealField {
    let fxx = second(f, Axis::X, Stencil::Second);
    let fyy = second(f, Axis::Y, Stencil::Second);
    fxx.zip_map(&fyy, |a, b| (a + b) * 0.25)
}

pub fn second_derivative_with(f: &ComplexField, which: SecondWirtinger, stencil: Stencil) -> Result<ComplexField> {
    f.ensure_finite()?;
    check_stencil(f, stencil)?;
    Ok(second_unchecked(f, which, stencil))
}

/// Wirtinger derivative with second-order stencils.
pub fn derivative(f: &ComplexField, which: Wirtinger) -> Result<ComplexField> {
    derivative_with(f, which, Stencil::Second)
}

pub fn derivative_with(f: &ComplexField, which: Wirtinger, stencil: Stencil) -> Result<ComplexField> {
    f.ensure_finite()?;
    check_stencil(f, stencil)?;
    Ok(wirtinger_unchecked(f, which, stencil))
}

/// Pointwise Cauchy-Riemann defect `|f_zbar|` and its norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CrResidual {
    pub field: RealField,
    pub norms: Norms,
}

pub fn cr_residual(f: &ComplexField) -> Result<CrResidual> {
    let field = derivative(f, Wirtinger::Dzbar)?.modulus();
    let norms = field.norms();
    Ok(CrResidual { field, norms })
}

/// Flat operator `f_{z zbar}`.
pub fn flat_zzbar(f: &ComplexField) -> Result<ComplexField> {
    f.ensure_finite()?;
    Ok(zzbar(f))
}

/// Laplace-Beltrami operator of `g = 2 e^u dz dzbar`: `2 e^{-u} f_{z zbar}`.
pub fn metric_laplacian(f: &ComplexField, u: &RealField) -> Result<ComplexField> {
    f.same_chart(u)?;
    f.ensure_finite()?;
    u.ensure_finite()?;
    Ok(zzbar(f).zip_map(u, |w, u| w * (2.0 * (-u).exp())))
}
