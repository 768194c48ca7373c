use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::admissibility::{bonnet_admissibility, AdmissibilityOptions};
use crate::calculus::{finest_stencil, wirtinger_unchecked, Wirtinger};
use crate::chart::{ComplexField, ConformalChart, RealField};
use crate::error::{Error, Result};
use crate::reconstruction::midpoint;
use crate::surface::SurfaceData;

/// Deformation parameter field `t_def`, on a continuous branch along the
/// integration tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationState {
    pub t: RealField,
}

impl DeformationState {
    pub fn constant(chart: ConformalChart, t: f64) -> Self {
        Self {
            t: RealField::constant(chart, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfaffOptions {
    pub admissibility: AdmissibilityOptions,
    /// Largest acceptable disagreement between the two sweeps.
    pub ceiling: f64,
}

impl Default for PfaffOptions {
    fn default() -> Self {
        Self {
            admissibility: AdmissibilityOptions::default(),
            ceiling: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfaffSolution {
    pub state: DeformationState,
    /// Largest difference, modulo `2 pi`, between the row-then-column and
    /// column-then-row solutions.
    pub closure_defect: f64,
}

/// `t_zbar = i (1 - e^{-it}) a` with `a = psi_zbar / psi`; `t` is real, so
/// `t_x = 2 Re t_zbar` and `t_y = 2 Im t_zbar`.
fn slope(t: f64, a: Complex64, along_x: bool) -> f64 {
    let w = Complex64::i() * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -t)) * a;
    if along_x {
        2.0 * w.re
    } else {
        2.0 * w.im
    }
}

fn sweep(chart: &ConformalChart, a: &ComplexField, t0: f64, base: (usize, usize), rows_first: bool) -> Vec<f64> {
    let mut t = vec![f64::NAN; chart.len()];
    t[chart.index(base.0, base.1)] = t0;
    let av = a.values();
    // one RK4 step from index k to k +- 1 along a line
    let rk = |t: f64,
              line: &dyn Fn(usize) -> Complex64,
              n: usize,
              periodic: bool,
              from: usize,
              forward: bool,
              h: f64,
              along_x: bool| {
        let to = if forward { from + 1 } else { from - 1 };
        let lo = from.min(to);
        let (a0, am, a1) = (line(from), midpoint(line, n, periodic, lo), line(to));
        let s = if forward { h } else { -h };
        let k1 = slope(t, a0, along_x);
        let k2 = slope(t + 0.5 * s * k1, am, along_x);
        let k3 = slope(t + 0.5 * s * k2, am, along_x);
        let k4 = slope(t + s * k3, a1, along_x);
        t + s * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    };
    let run_x = |t: &mut Vec<f64>, iy: usize, from: usize| {
        let line = |k: usize| av[chart.index(k, iy)];
        for k in from..chart.nx() - 1 {
            t[chart.index(k + 1, iy)] = rk(
                t[chart.index(k, iy)],
                &line,
                chart.nx(),
                chart.periodic_x(),
                k,
                true,
                chart.hx(),
                true,
            );
        }
        for k in (1..=from).rev() {
            t[chart.index(k - 1, iy)] = rk(
                t[chart.index(k, iy)],
                &line,
                chart.nx(),
                chart.periodic_x(),
                k,
                false,
                chart.hx(),
                true,
            );
        }
    };
    let run_y = |t: &mut Vec<f64>, ix: usize, from: usize| {
        let line = |k: usize| av[chart.index(ix, k)];
        for k in from..chart.ny() - 1 {
            t[chart.index(ix, k + 1)] = rk(
                t[chart.index(ix, k)],
                &line,
                chart.ny(),
                chart.periodic_y(),
                k,
                true,
                chart.hy(),
                false,
            );
        }
        for k in (1..=from).rev() {
            t[chart.index(ix, k - 1)] = rk(
                t[chart.index(ix, k)],
                &line,
                chart.ny(),
                chart.periodic_y(),
                k,
                false,
                chart.hy(),
                false,
            );
        }
    };
    if rows_first {
        run_x(&mut t, base.1, base.0);
        for ix in 0..chart.nx() {
            run_y(&mut t, ix, base.1);
        }
    } else {
        run_y(&mut t, base.0, base.1);
        for iy in 0..chart.ny() {
            run_x(&mut t, iy, base.0);
        }
    }
    t
}

fn wrapped(d: f64) -> f64 {
    let r = d.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Solves `tau = 0` from `t(base) = t0` over the whole chart.
pub fn integrate_pfaff(data: &SurfaceData, t0: f64, base: (usize, usize), options: &PfaffOptions) -> Result<PfaffSolution> {
    let chart = *data.chart();
    if base.0 >= chart.nx() || base.1 >= chart.ny() {
        return Err(Error::InvalidPath("base point is off the chart"));
    }
    let psi = data.psi();
    if let Some(index) = psi.values().iter().position(|p| p.norm() <= options.admissibility.floor) {
        return Err(Error::PsiVanishes { index });
    }
    let report = bonnet_admissibility(data, &options.admissibility)?;
    if !report.admissible() {
        return Err(Error::NotAdmissible {
            linf: report.r18.norms.linf,
            threshold: report.threshold,
        });
    }
    let a = wirtinger_unchecked(psi, Wirtinger::Dzbar, finest_stencil(&chart)).zip_map(psi, |d, p| d / p);
    let rc = sweep(&chart, &a, t0, base, true);
    let cr = sweep(&chart, &a, t0, base, false);
    if let Some(index) = rc.iter().chain(&cr).position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteCoefficients {
            index: index % chart.len(),
        });
    }
    let closure_defect = rc.iter().zip(&cr).map(|(x, y)| wrapped(x - y)).fold(0.0, f64::max);
    if !(closure_defect <= options.ceiling) {
        return Err(Error::ClosureDefect {
            defect: closure_defect,
            ceiling: options.ceiling,
        });
    }
    Ok(PfaffSolution {
        state: DeformationState {
            t: RealField::from_values(chart, rc)?,
        },
        closure_defect,
    })
}

/// `(u, phi, e^{it} psi)`.
pub fn deform(data: &SurfaceData, state: &DeformationState) -> Result<SurfaceData> {
    data.u().same_chart(&state.t)?;
    state.t.ensure_finite()?;
    let psi = data.psi().zip_map(&state.t, |p, t| p * Complex64::from_polar(1.0, t));
    data.with_psi(psi)
}
