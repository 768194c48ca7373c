use alloc::vec;

use num_complex::Complex64;

use crate::calculus::{cr_residual, finest_stencil, partial_x, partial_y, zzbar_real};
use crate::chart::{ComplexField, Norms, RealField};
use crate::error::{Error, Result};
use crate::integrability::Tolerance;
use crate::reconstruction::midpoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionOptions {
    /// Bound on `r_{z zbar}` and on the period of the conjugate.
    pub tolerance: Tolerance,
    /// Node where the conjugate is fixed to zero.
    pub base: (usize, usize),
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::h2(),
            base: (0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicCompletion {
    /// `h` with `h + conj(h) = r`.
    pub h: ComplexField,
    pub cr: Norms,
}

/// Holomorphic `h = r/2 + i s/2` with `s` the harmonic conjugate of `r`,
/// `ds = -r_y dx + r_x dy`, integrated by Simpson's rule along the
/// row-then-column tree from `options.base`.
pub fn holomorphic_completion(r: &RealField, options: &CompletionOptions) -> Result<HolomorphicCompletion> {
    r.ensure_finite()?;
    let chart = *r.chart();
    let (bx, by) = options.base;
    if bx >= chart.nx() || by >= chart.ny() {
        return Err(Error::InvalidPath("base point is off the chart"));
    }
    let threshold = options.tolerance.threshold(&chart);
    let lap = zzbar_real(r).norms().linf;
    if lap > threshold {
        return Err(Error::NotHarmonic { linf: lap, threshold });
    }
    let stencil = finest_stencil(&chart);
    // s_x = -r_y, s_y = r_x
    let sx = partial_y(r, stencil).map(|v| -v);
    let sy = partial_x(r, stencil);

    let simpson = |g: &dyn Fn(usize) -> f64, n: usize, periodic: bool, lo: usize, h: f64| {
        (g(lo) + 4.0 * midpoint(g, n, periodic, lo) + g((lo + 1) % n)) * h / 6.0
    };
    let (gx, gy) = (sx.values(), sy.values());
    let row_increment = |iy: usize, lo: usize| {
        let g = |k: usize| gx[chart.index(k, iy)];
        simpson(&g, chart.nx(), chart.periodic_x(), lo, chart.hx())
    };
    let col_increment = |ix: usize, lo: usize| {
        let g = |k: usize| gy[chart.index(ix, k)];
        simpson(&g, chart.ny(), chart.periodic_y(), lo, chart.hy())
    };

    // a periodic axis must not carry a period
    let mut period = 0.0f64;
    if chart.periodic_x() {
        for iy in 0..chart.ny() {
            period = period.max((0..chart.nx()).map(|k| row_increment(iy, k)).sum::<f64>().abs());
        }
    }
    if chart.periodic_y() {
        for ix in 0..chart.nx() {
            period = period.max((0..chart.ny()).map(|k| col_increment(ix, k)).sum::<f64>().abs());
        }
    }
    if period > threshold {
        return Err(Error::MultivaluedConjugate { period });
    }

    let mut s = vec![0.0; chart.len()];
    for k in bx..chart.nx() - 1 {
        s[chart.index(k + 1, by)] = s[chart.index(k, by)] + row_increment(by, k);
    }
    for k in (1..=bx).rev() {
        s[chart.index(k - 1, by)] = s[chart.index(k, by)] - row_increment(by, k - 1);
    }
    for ix in 0..chart.nx() {
        for k in by..chart.ny() - 1 {
            s[chart.index(ix, k + 1)] = s[chart.index(ix, k)] + col_increment(ix, k);
        }
        for k in (1..=by).rev() {
            s[chart.index(ix, k - 1)] = s[chart.index(ix, k)] - col_increment(ix, k - 1);
        }
    }
    let h = ComplexField::from_values(
        chart,
        r.values()
            .iter()
            .zip(&s)
            .map(|(&r, &s)| Complex64::new(0.5 * r, 0.5 * s))
            .collect(),
    )?;
    let cr = cr_residual(&h)?.norms;
    Ok(HolomorphicCompletion { h, cr })
}
