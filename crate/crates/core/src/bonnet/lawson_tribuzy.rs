use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::erode;
use crate::calculus::zzbar_real;
use crate::chart::{ComplexField, Norms, RealField};
use crate::error::{Error, Result};
use crate::integrability::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtOptions {
    /// Nodes with `|psi1| <= floor` are left out.
    pub floor: f64,
    /// Allowed `||psi1| - |psi2||`, relative to `max |psi1|`.
    pub modulus_tolerance: f64,
    pub tolerance: Tolerance,
}

impl Default for LtOptions {
    fn default() -> Self {
        Self {
            floor: 1e-8,
            modulus_tolerance: 1e-10,
            tolerance: Tolerance::h2(),
        }
    }
}

/// Phase `theta` of `psi2 / psi1` and `q_lt = 1 - e^{i theta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtDiagnostics {
    pub theta: RealField,
    pub q: ComplexField,
    pub lap_log_abs_q: RealField,
    pub lap_arg_q: RealField,
    pub lap_log_abs_q_norms: Norms,
    pub lap_arg_q_norms: Norms,
    /// Extremes of `Delta_g log|q_lt|` on the evaluation mask.
    pub lap_log_abs_q_range: (f64, f64),
    /// Nodes where the Laplacians are evaluated.
    pub mask: Vec<bool>,
    pub threshold: f64,
}

impl LtDiagnostics {
    pub fn arg_q_harmonic(&self) -> bool {
        self.lap_arg_q_norms.linf <= self.threshold
    }

    /// `Delta_g log|q_lt| <= 0` up to the tolerance.
    pub fn log_abs_q_subharmonic_sign(&self) -> bool {
        self.lap_log_abs_q_range.1 <= self.threshold
    }
}

fn wrap(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

pub fn lt_diagnostics(psi1: &ComplexField, psi2: &ComplexField, u: &RealField, options: &LtOptions) -> Result<LtDiagnostics> {
    psi1.same_chart(psi2)?;
    psi1.same_chart(u)?;
    psi1.ensure_finite()?;
    psi2.ensure_finite()?;
    u.ensure_finite()?;
    let chart = *psi1.chart();
    let scale = psi1.max_modulus().max(1.0);
    let gap = psi1.zip_map(psi2, |a, b| a.norm() - b.norm()).max_modulus();
    if gap > options.modulus_tolerance * scale {
        return Err(Error::ModulusMismatch { linf: gap });
    }
    let ok: Vec<bool> = psi1.values().iter().map(|p| p.norm() > options.floor).collect();
    let seed = (0..chart.len())
        .filter(|&i| ok[i])
        .max_by(|&a, &b| psi1.at(a).norm().total_cmp(&psi1.at(b).norm()))
        .ok_or(Error::EmptyMask)?;
    let principal: Vec<f64> = psi2.values().iter().zip(psi1.values()).map(|(b, a)| (b / a).arg()).collect();

    let neighbours = |i: usize| {
        let (ix, iy) = chart.coords(i);
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .filter_map(move |(dx, dy)| chart.offset(ix, iy, dx, dy).map(|(x, y)| chart.index(x, y)))
    };
    let mut theta = vec![f64::NAN; chart.len()];
    theta[seed] = if principal[seed] > 0.0 {
        principal[seed]
    } else {
        principal[seed] + 2.0 * PI
    };
    let mut queue = VecDeque::from([seed]);
    while let Some(i) = queue.pop_front() {
        for j in neighbours(i) {
            if ok[j] && theta[j].is_nan() {
                theta[j] = theta[i] + wrap(principal[j] - principal[i]);
                queue.push_back(j);
            }
        }
    }
    for i in (0..chart.len()).filter(|&i| ok[i] && !theta[i].is_nan()) {
        for j in neighbours(i).filter(|&j| ok[j]) {
            let expected = wrap(principal[j] - principal[i]);
            if (theta[j] - theta[i] - expected).abs() > 1e-9 {
                let (ix, iy) = chart.coords(i);
                return Err(Error::BranchHolonomy { ix, iy });
            }
        }
    }

    // 1 - e^{i theta} = 2 sin(theta/2) e^{i (theta - pi)/2}
    let inside: Vec<bool> = theta.iter().map(|&t| t > 0.0 && t < 2.0 * PI).collect();
    let log_abs: Vec<f64> = theta
        .iter()
        .zip(&inside)
        .map(|(&t, &k)| if k { (2.0 * (0.5 * t).sin()).ln() } else { 0.0 })
        .collect();
    let arg: Vec<f64> = theta
        .iter()
        .zip(&inside)
        .map(|(&t, &k)| if k { 0.5 * (t - PI) } else { 0.0 })
        .collect();
    let q = ComplexField::from_values(
        chart,
        theta
            .iter()
            .map(|&t| {
                if t.is_nan() {
                    Complex64::new(0.0, 0.0)
                } else {
                    1.0 - Complex64::from_polar(1.0, t)
                }
            })
            .collect(),
    )?;
    let mask = erode(&chart, &inside, 2);
    let laplacian = |values: Vec<f64>| -> Result<RealField> {
        let f = RealField::from_values(chart, values)?;
        let mut lap = zzbar_real(&f).zip_map(u, |w, u| 2.0 * (-u).exp() * w);
        for (v, m) in lap.values_mut().iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(lap)
    };
    let lap_log_abs_q = laplacian(log_abs)?;
    let lap_arg_q = laplacian(arg)?;
    let range = (0..chart.len())
        .filter(|&i| {
            let (ix, iy) = chart.coords(i);
            mask[i] && chart.is_interior(ix, iy)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = lap_log_abs_q.at(i);
            (lo.min(v), hi.max(v))
        });
    let theta = RealField::from_values(chart, theta.into_iter().map(|t| if t.is_nan() { 0.0 } else { t }).collect())?;
    Ok(LtDiagnostics {
        lap_log_abs_q_norms: lap_log_abs_q.norms_where(|i| mask[i]),
        lap_arg_q_norms: lap_arg_q.norms_where(|i| mask[i]),
        lap_log_abs_q_range: range,
        theta,
        q,
        lap_log_abs_q,
        lap_arg_q,
        mask,
        threshold: options.tolerance.threshold(&chart),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ConformalChart;

    fn chart() -> ConformalChart {
        ConformalChart::new(48, 48, (0.0, 1.0), (0.0, 1.0)).unwrap()
    }

    #[test]
    fn constant_phase() {
        let c = chart();
        let p1 = ComplexField::constant(c, 1.0.into());
        let p2 = ComplexField::constant(c, Complex64::from_polar(1.0, 2.0));
        let d = lt_diagnostics(&p1, &p2, &RealField::constant(c, 0.0), &Default::default()).unwrap();
        assert!(d.theta.values().iter().all(|&t| (t - 2.0).abs() < 1e-15));
        assert_eq!(d.lap_arg_q_norms.linf, 0.0);
        assert_eq!(d.lap_log_abs_q_norms.linf, 0.0);
        assert!(d.arg_q_harmonic() && d.log_abs_q_subharmonic_sign());
        let q = d.q.at(7);
        assert!(((q - 1.0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_is_unwrapped_into_the_open_interval() {
        // theta = 3 + sin x crosses pi, where the principal value jumps
        let c = ConformalChart::new(64, 16, (0.0, 6.0), (0.0, 1.0)).unwrap();
        let p1 = ComplexField::constant(c, 1.0.into());
        let p2 = ComplexField::from_fn(c, |x, _| Complex64::from_polar(1.0, 3.0 + x.sin()));
        let d = lt_diagnostics(&p1, &p2, &RealField::constant(c, 0.0), &Default::default()).unwrap();
        for ix in 0..c.nx() {
            assert!((d.theta.get(ix, 5) - (3.0 + c.x(ix).sin())).abs() < 1e-12);
        }
        // Delta_g arg q = 2 (theta/2)_{z zbar} = theta_xx / 4
        assert!(!d.arg_q_harmonic());
        let (ix, iy) = (20, 8);
        assert!((d.lap_arg_q.get(ix, iy) + 0.25 * c.x(ix).sin()).abs() < 1e-2);
    }

    #[test]
    fn holonomy_around_a_zero_is_detected() {
        let c = ConformalChart::new(33, 33, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let p1 = ComplexField::constant(c, 1.0.into());
        // unit field with a phase vortex; psi1 has no zero so the mask is full
        let p2 = ComplexField::from_fn(c, |x, y| {
            let z = Complex64::new(x - 0.01, y - 0.01);
            z / z.norm()
        });
        assert!(matches!(
            lt_diagnostics(&p1, &p2, &RealField::constant(c, 0.0), &Default::default()),
            Err(Error::BranchHolonomy { .. })
        ));
        let p3 = ComplexField::constant(c, 2.0.into());
        assert!(matches!(
            lt_diagnostics(&p1, &p3, &RealField::constant(c, 0.0), &Default::default()),
            Err(Error::ModulusMismatch { .. })
        ));
    }
}
