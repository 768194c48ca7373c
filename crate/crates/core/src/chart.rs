//! Rectangular conformal charts and the scalar fields sampled on them.
//!
//! A chart is a uniform grid in the conformal coordinate `z = x + iy`.
//! Samples are stored row-major, `index = iy * nx + ix`. A periodic axis
//! identifies `x_max` with `x_min`, so its spacing divides by `nx` instead
//! of `nx - 1`.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalChart {
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    periodic_x: bool,
    periodic_y: bool,
}

impl ConformalChart {
    /// Open chart over `[x_min, x_max] x [y_min, y_max]`.
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        Self::with_periodicity(nx, ny, x, y, false, false)
    }

    pub fn with_periodicity(
        nx: usize,
        ny: usize,
        x: (f64, f64),
        y: (f64, f64),
        periodic_x: bool,
        periodic_y: bool,
    ) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidChart("need at least 4 samples per axis"));
        }
        if !(x.0.is_finite() && x.1.is_finite() && y.0.is_finite() && y.1.is_finite()) {
            return Err(Error::InvalidChart("bounds must be finite"));
        }
        if x.1 <= x.0 || y.1 <= y.0 {
            return Err(Error::InvalidChart("bounds must be increasing"));
        }
        Ok(Self {
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            periodic_x,
            periodic_y,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn x_range(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }
    pub fn y_range(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }
    pub fn periodic_x(&self) -> bool {
        self.periodic_x
    }
    pub fn periodic_y(&self) -> bool {
        self.periodic_y
    }
    pub fn is_doubly_periodic(&self) -> bool {
        self.periodic_x && self.periodic_y
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hx(&self) -> f64 {
        let cells = if self.periodic_x { self.nx } else { self.nx - 1 };
        (self.x_max - self.x_min) / cells as f64
    }

    pub fn hy(&self) -> f64 {
        let cells = if self.periodic_y { self.ny } else { self.ny - 1 };
        (self.y_max - self.y_min) / cells as f64
    }

    /// The coarser of the two spacings; used to scale `h^p` tolerances.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.hx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.hy()
    }

    pub fn z(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(self.x(ix), self.y(iy))
    }

    /// Interior in the norm-reporting sense: open axes drop their two
    /// boundary lines, periodic axes keep everything.
    pub fn is_interior(&self, ix: usize, iy: usize) -> bool {
        let in_x = self.periodic_x || (ix > 0 && ix + 1 < self.nx);
        let in_y = self.periodic_y || (iy > 0 && iy + 1 < self.ny);
        in_x && in_y
    }

    /// Grid index nearest to the point `(x, y)`, if it lies on the chart.
    pub fn nearest(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.x_min) / self.hx()).round();
        let fy = ((y - self.y_min) / self.hy()).round();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Step one sample along an axis, wrapping on periodic axes.
    pub(crate) fn offset(&self, ix: usize, iy: usize, dx: isize, dy: isize) -> Option<(usize, usize)> {
        let nx = self.nx as isize;
        let ny = self.ny as isize;
        let mut x = ix as isize + dx;
        let mut y = iy as isize + dy;
        if self.periodic_x {
            x = x.rem_euclid(nx);
        } else if x < 0 || x >= nx {
            return None;
        }
        if self.periodic_y {
            y = y.rem_euclid(ny);
        } else if y < 0 || y >= ny {
            return None;
        }
        Some((x as usize, y as usize))
    }
}

/// Modulus of a sample, shared by real and complex fields.
pub trait Modulus: Copy {
    fn modulus(&self) -> f64;
    fn is_finite_sample(&self) -> bool;
}

impl Modulus for f64 {
    fn modulus(&self) -> f64 {
        self.abs()
    }
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
}

impl Modulus for Complex64 {
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Samples usable by the finite-difference stencils.
pub trait Sample: Modulus + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Default {}

impl<T> Sample for T where T: Modulus + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Default {}

/// A scalar field sampled on every node of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    chart: ConformalChart,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Copy> Field<T> {
    pub fn from_values(chart: ConformalChart, values: Vec<T>) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(Error::LengthMismatch {
                expected: chart.len(),
                got: values.len(),
            });
        }
        Ok(Self { chart, values })
    }

    pub fn constant(chart: ConformalChart, value: T) -> Self {
        Self {
            chart,
            values: alloc::vec![value; chart.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(chart: ConformalChart, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut values = Vec::with_capacity(chart.len());
        for iy in 0..chart.ny() {
            let y = chart.y(iy);
            for ix in 0..chart.nx() {
                values.push(f(chart.x(ix), y));
            }
        }
        Self { chart, values }
    }

    pub fn chart(&self) -> &ConformalChart {
        &self.chart
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> T {
        self.values[self.chart.index(ix, iy)]
    }

    #[inline]
    pub fn at(&self, index: usize) -> T {
        self.values[index]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            chart: self.chart,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same chart.
    ///
    /// Panics if the charts differ; public entry points check chart
    /// agreement before reaching here.
    pub fn zip_map<U: Copy, V: Copy>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Field<V> {
        assert_eq!(self.chart, other.chart, "zip_map across different charts");
        Field {
            chart: self.chart,
            values: self.values.iter().zip(other.values.iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn same_chart<U>(&self, other: &Field<U>) -> Result<()> {
        if self.chart == other.chart {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }
}

impl<T: Modulus> Field<T> {
    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite_sample()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn modulus(&self) -> RealField {
        self.map(|v| v.modulus())
    }

    /// Norms under the chart's interior policy.
    pub fn norms(&self) -> Norms {
        self.norms_where(|_| true)
    }

    /// Norms over interior nodes that also satisfy `keep(index)`.
    pub fn norms_where(&self, keep: impl Fn(usize) -> bool) -> Norms {
        let chart = &self.chart;
        let mut linf = 0.0f64;
        let mut squares = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            let (ix, iy) = chart.coords(i);
            if !chart.is_interior(ix, iy) || !keep(i) {
                continue;
            }
            let m = v.modulus();
            linf = linf.max(m);
            squares.push(m * m);
        }
        let l2 = (pairwise_sum(&squares) * chart.hx() * chart.hy()).sqrt();
        Norms { linf, l2 }
    }

    /// Largest modulus over every node, boundary included.
    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }
    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }
    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }
}

/// Sup and discrete L2 norms (`sqrt(sum |f|^2 hx hy)`) of a residual field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Norms {
    pub linf: f64,
    pub l2: f64,
}

impl Norms {
    pub fn max(self, other: Norms) -> Norms {
        Norms {
            linf: self.linf.max(other.linf),
            l2: self.l2.max(other.l2),
        }
    }
}

/// Fixed-order pairwise summation, so reductions do not depend on how the
/// caller produced the terms.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        n if n <= 8 => terms.iter().sum(),
        n => {
            let (a, b) = terms.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_depends_on_periodicity() {
        let open = ConformalChart::new(5, 5, (0.0, 1.0), (0.0, 2.0)).unwrap();
        assert_eq!(open.hx(), 0.25);
        assert_eq!(open.hy(), 0.5);
        let torus = ConformalChart::with_periodicity(4, 8, (0.0, 1.0), (0.0, 2.0), true, true).unwrap();
        assert_eq!(torus.hx(), 0.25);
        assert_eq!(torus.hy(), 0.25);
    }

    #[test]
    fn rejects_degenerate_charts() {
        assert!(ConformalChart::new(3, 8, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(ConformalChart::new(8, 8, (1.0, 1.0), (0.0, 1.0)).is_err());
        assert!(ConformalChart::new(8, 8, (0.0, 1.0), (0.0, f64::NAN)).is_err());
    }

    #[test]
    fn row_major_layout() {
        let chart = ConformalChart::new(4, 5, (0.0, 3.0), (0.0, 4.0)).unwrap();
        let f = RealField::from_fn(chart, |x, y| x + 10.0 * y);
        assert_eq!(f.values()[chart.index(2, 3)], 32.0);
        assert_eq!(chart.coords(14), (2, 3));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let chart = ConformalChart::new(4, 4, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let err = RealField::from_values(chart, alloc::vec![0.0; 15]).unwrap_err();
        assert_eq!(err, Error::LengthMismatch { expected: 16, got: 15 });
    }

    #[test]
    fn norms_skip_open_boundary() {
        let chart = ConformalChart::new(4, 4, (0.0, 3.0), (0.0, 3.0)).unwrap();
        let f = RealField::from_fn(chart, |x, y| if x == 0.0 || y == 3.0 { 100.0 } else { 1.0 });
        let n = f.norms();
        assert_eq!(n.linf, 1.0);
        assert!((n.l2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_exact_terms() {
        let terms: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&terms), 499500.0);
    }
}
