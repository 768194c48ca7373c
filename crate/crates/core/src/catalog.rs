//! Exact and semi-exact test data: constant solutions, one-dimensional
//! profiles of the Gauss equation and controlled perturbations.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::chart::{ComplexField, ConformalChart, RealField};
use crate::error::{Error, Result};
use crate::surface::{SpaceForm, SurfaceData};

/// Largest Gauss defect accepted for constant data.
pub const CONSTANT_TOLERANCE: f64 = 1e-12;

/// Profiles are rejected once `|u|` exceeds this.
pub const BLOW_UP_CAP: f64 = 50.0;

/// `|phi0|^2 + c e^{u0} - e^{-2 u0} |psi0|^2`.
pub fn constant_gauss_defect(space: SpaceForm, u0: f64, phi0: Complex64, psi0: Complex64) -> f64 {
    phi0.norm_sqr() + space.c_f64() * u0.exp() - (-2.0 * u0).exp() * psi0.norm_sqr()
}

pub fn make_constant_solution(
    chart: ConformalChart,
    space: SpaceForm,
    u0: f64,
    phi0: Complex64,
    psi0: Complex64,
) -> Result<SurfaceData> {
    let residual = constant_gauss_defect(space, u0, phi0, psi0);
    if !(residual.abs() <= CONSTANT_TOLERANCE) {
        return Err(Error::ConstraintViolated { residual });
    }
    SurfaceData::constant(chart, space, u0, phi0, psi0)
}

/// `u'' = 4 (e^{-2u} |psi0|^2 - c e^u)`.
fn profile_rhs(c: f64, psi2: f64, u: f64) -> f64 {
    4.0 * ((-2.0 * u).exp() * psi2 - c * u.exp())
}

/// Equilibrium of the profile equation for `c = 1`: `e^{3 u*} = |psi0|^2`.
pub fn profile_equilibrium(psi0: Complex64) -> f64 {
    2.0 * psi0.norm().ln() / 3.0
}

/// Data with `phi = 0`, `psi = psi0` and `u = u(x)` solving the Gauss
/// equation, integrated by RK4 from `x_min` and constant in `y`.
pub fn solve_profile_ode(
    space: SpaceForm,
    psi0: Complex64,
    u_init: f64,
    du_init: f64,
    chart: ConformalChart,
) -> Result<SurfaceData> {
    let c = space.c_f64();
    match space {
        SpaceForm::Hyperbolic => {
            return Err(Error::SignObstruction(
                "c = -1 with phi = 0 forces u_{z zbar} = e^u + e^{-2u}|psi|^2 > 0 on a profile that must stay bounded",
            ))
        }
        SpaceForm::Flat if psi0 != Complex64::new(0.0, 0.0) => {
            return Err(Error::SignObstruction("c = 0 with psi != 0 has no bounded profile"))
        }
        _ => {}
    }
    if chart.periodic_x() {
        return Err(Error::InvalidChart("profile charts must be open in x"));
    }
    for v in [psi0.re, psi0.im, u_init, du_init] {
        if !v.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
    }
    let psi2 = psi0.norm_sqr();
    let phi = ComplexField::constant(chart, Complex64::new(0.0, 0.0));
    let psi = ComplexField::constant(chart, psi0);
    if space == SpaceForm::Projective && psi2 > 0.0 {
        let eq = profile_equilibrium(psi0);
        if (u_init - eq).abs() < 1e-12 && du_init.abs() < 1e-12 {
            return SurfaceData::new(space, RealField::constant(chart, eq), phi, psi);
        }
    }

    let h = chart.hx();
    let mut profile = Vec::with_capacity(chart.nx());
    let (mut u, mut v) = (u_init, du_init);
    profile.push(u);
    for ix in 1..chart.nx() {
        let f = |u: f64| profile_rhs(c, psi2, u);
        let (k1u, k1v) = (v, f(u));
        let (k2u, k2v) = (v + 0.5 * h * k1v, f(u + 0.5 * h * k1u));
        let (k3u, k3v) = (v + 0.5 * h * k2v, f(u + 0.5 * h * k2u));
        let (k4u, k4v) = (v + h * k3v, f(u + h * k3u));
        u += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0;
        v += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0;
        if !(u.abs() <= BLOW_UP_CAP) {
            return Err(Error::ProfileBlowUp { x: chart.x(ix) });
        }
        profile.push(u);
    }
    let u = RealField::from_values(chart, (0..chart.len()).map(|i| profile[i % chart.nx()]).collect())?;
    SurfaceData::new(space, u, phi, psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbTarget {
    U,
    Phi,
    Psi,
}

/// `b = exp(-|z - centre|^2 / width^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub centre: (f64, f64),
    pub width: f64,
}

impl Bump {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - self.centre.0).powi(2) + (y - self.centre.1).powi(2);
        (-r2 / (self.width * self.width)).exp()
    }

    /// `b_{z zbar} = b (r^2 / w^4 - 1 / w^2)`.
    pub fn zzbar(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - self.centre.0).powi(2) + (y - self.centre.1).powi(2);
        let w2 = self.width * self.width;
        self.value(x, y) * (r2 / (w2 * w2) - 1.0 / w2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub data: SurfaceData,
    /// First-order change of the Gauss residual.
    pub predicted_gauss: RealField,
}

/// Adds `epsilon * bump` to one field (the real part for `phi` and `psi`).
pub fn perturb(data: &SurfaceData, target: PerturbTarget, epsilon: f64, bump: &Bump) -> Result<Perturbation> {
    let chart = *data.chart();
    let c = data.space().c_f64();
    let b = RealField::from_fn(chart, |x, y| bump.value(x, y));
    let (mut u, mut phi, mut psi) = (data.u().clone(), data.phi().clone(), data.psi().clone());
    match target {
        PerturbTarget::U => {
            u = u.zip_map(&b, |u, b| u + epsilon * b);
        }
        PerturbTarget::Phi => {
            phi = phi.zip_map(&b, |p, b| p + epsilon * b);
        }
        PerturbTarget::Psi => {
            psi = psi.zip_map(&b, |p, b| p + epsilon * b);
        }
    }
    let mut predicted = Vec::with_capacity(chart.len());
    for i in 0..chart.len() {
        let (ix, iy) = chart.coords(i);
        let (x, y) = (chart.x(ix), chart.y(iy));
        let (u0, phi0, psi0, bv) = (data.u().at(i), data.phi().at(i), data.psi().at(i), b.at(i));
        let psi_term = (-2.0 * u0).exp() * psi0.norm_sqr();
        predicted.push(
            epsilon
                * match target {
                    PerturbTarget::U => bump.zzbar(x, y) + c * u0.exp() * bv + 2.0 * psi_term * bv,
                    PerturbTarget::Phi => 2.0 * phi0.re * bv,
                    PerturbTarget::Psi => -2.0 * (-2.0 * u0).exp() * psi0.re * bv,
                },
        );
    }
    Ok(Perturbation {
        data: SurfaceData::new(data.space(), u, phi, psi)?,
        predicted_gauss: RealField::from_values(chart, predicted)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bonnet::{deform, DeformationState};
    use crate::integrability::{classify, integrability_residuals, Tolerance};
    use core::f64::consts::PI;

    fn unit(n: usize) -> ConformalChart {
        ConformalChart::new(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_examples() {
        let cases = [
            (SpaceForm::Flat, 0.0, c(1.0, 0.0), c(1.0, 0.0)),
            (SpaceForm::Projective, 0.0, c(0.0, 0.0), c(1.0, 0.0)),
            (SpaceForm::Hyperbolic, 0.0, c(1.0, 0.0), c(0.0, 0.0)),
        ];
        for (space, u0, phi0, psi0) in cases {
            let d = make_constant_solution(unit(16), space, u0, phi0, psi0).unwrap();
            assert_eq!(integrability_residuals(&d).linf(), 0.0);
        }
        assert!(matches!(
            make_constant_solution(unit(8), SpaceForm::Flat, 0.0, c(1.0, 0.0), c(2.0, 0.0)),
            Err(Error::ConstraintViolated { residual }) if residual == -3.0
        ));
    }

    #[test]
    fn minimal_constants_form_an_associated_family() {
        let d = make_constant_solution(unit(16), SpaceForm::Projective, 0.0, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let k = classify(&d, &Tolerance::h2());
        assert!(k.minimal.verdict && k.conformal_maslov.verdict && k.hamiltonian_stationary.verdict);
        let base = integrability_residuals(&d);
        for t in [0.3, PI / 4.0, 2.0] {
            let e = deform(&d, &DeformationState::constant(*d.chart(), t)).unwrap();
            let r = integrability_residuals(&e);
            assert_eq!(r.closedness_norms, base.closedness_norms);
            assert_eq!(r.codazzi_norms, base.codazzi_norms);
            // |e^{it} psi|^2 can differ from |psi|^2 in the last bit
            assert!((r.gauss_norms.linf - base.gauss_norms.linf).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_rejections() {
        let chart = unit(16);
        assert!(matches!(
            solve_profile_ode(SpaceForm::Hyperbolic, c(1.0, 0.0), 0.0, 0.0, chart),
            Err(Error::SignObstruction(_))
        ));
        assert!(matches!(
            solve_profile_ode(SpaceForm::Flat, c(1.0, 0.0), 0.0, 0.0, chart),
            Err(Error::SignObstruction(_))
        ));
        let long = ConformalChart::new(64, 4, (0.0, 10.0), (0.0, 1.0)).unwrap();
        assert!(matches!(
            solve_profile_ode(SpaceForm::Projective, c(1.0, 0.0), -2.0, -20.0, long),
            Err(Error::ProfileBlowUp { .. })
        ));
        let ring = ConformalChart::with_periodicity(16, 16, (0.0, 1.0), (0.0, 1.0), true, false).unwrap();
        assert!(solve_profile_ode(SpaceForm::Projective, c(1.0, 0.0), 0.1, 0.0, ring).is_err());
    }

    #[test]
    fn equilibrium_is_exactly_constant() {
        let d = solve_profile_ode(SpaceForm::Projective, c(1.0, 0.0), 0.0, 0.0, unit(32)).unwrap();
        assert!(d.u().values().iter().all(|&u| u == 0.0));
        assert_eq!(integrability_residuals(&d).linf(), 0.0);
        let psi0 = c(0.0, 8.0);
        let d = solve_profile_ode(SpaceForm::Projective, psi0, profile_equilibrium(psi0), 0.0, unit(8)).unwrap();
        assert!(integrability_residuals(&d).gauss_norms.linf < 1e-12);
    }

    #[test]
    fn small_oscillation_has_frequency_sqrt_12() {
        let chart = ConformalChart::new(4001, 4, (0.0, 4.0), (0.0, 1.0)).unwrap();
        let d = solve_profile_ode(SpaceForm::Projective, c(1.0, 0.0), 0.01, 0.0, chart).unwrap();
        let u: Vec<f64> = (0..chart.nx()).map(|ix| d.u().get(ix, 0)).collect();
        let mut crossings = Vec::new();
        for k in 0..u.len() - 1 {
            if u[k] > 0.0 && u[k + 1] <= 0.0 || u[k] < 0.0 && u[k + 1] >= 0.0 {
                let s = u[k] / (u[k] - u[k + 1]);
                crossings.push(chart.x(k) + s * chart.hx());
            }
        }
        let half = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        let expected = PI / 12f64.sqrt();
        assert!((half / expected - 1.0).abs() < 0.01, "{half} {expected}");
    }

    #[test]
    fn profile_gauss_residual_is_second_order() {
        let gauss = |n: usize| {
            let chart = ConformalChart::new(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap();
            let d = solve_profile_ode(SpaceForm::Projective, c(1.0, 0.0), 0.3, 0.0, chart).unwrap();
            let r = integrability_residuals(&d);
            assert_eq!(r.codazzi_norms.linf, 0.0);
            r.gauss_norms.linf
        };
        let (a, b, c) = (gauss(32), gauss(64), gauss(128));
        assert!(
            (3.5..=4.5).contains(&(a / b)) && (3.5..=4.5).contains(&(b / c)),
            "{a} {b} {c}"
        );
    }

    #[test]
    fn perturbation_predictions() {
        let d = make_constant_solution(unit(65), SpaceForm::Flat, 0.0, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let bump = Bump {
            centre: (0.5, 0.5),
            width: 0.15,
        };
        let same = perturb(&d, PerturbTarget::U, 0.0, &bump).unwrap();
        assert_eq!(same.data, d);

        // psi only changes Gauss and Codazzi, never closedness
        let p = perturb(&d, PerturbTarget::Psi, 0.1, &bump).unwrap();
        let r = integrability_residuals(&p.data);
        assert_eq!(r.closedness_norms.linf, 0.0);
        assert!(r.gauss_norms.linf > 1e-3 && r.codazzi_norms.linf > 1e-3);

        // linear response of the Gauss residual to a bump on u
        let sizes = [1e-3, 1e-2, 1e-1];
        let measured: Vec<f64> = sizes
            .iter()
            .map(|&e| {
                integrability_residuals(&perturb(&d, PerturbTarget::U, e, &bump).unwrap().data)
                    .gauss_norms
                    .linf
            })
            .collect();
        assert!((measured[1] / measured[0] / 10.0 - 1.0).abs() < 0.05, "{measured:?}");
        let p = perturb(&d, PerturbTarget::U, 1e-3, &bump).unwrap();
        let predicted = p.predicted_gauss.norms().linf;
        assert!((measured[0] / predicted - 1.0).abs() < 0.05, "{} {predicted}", measured[0]);
    }
}
