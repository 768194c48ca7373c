//! Residuals of the structure equations of a conformal Lagrangian surface
//! and the classification predicates built on them.
//!
//! With `g = 2 e^u dz dzbar`, `Phi = phi dz` and `Psi = psi dz^3`, the data
//! is integrable when
//!
//! * closedness: `phi_zbar - conj(phi)_z = 0`
//! * Gauss: `u_{z zbar} + |phi|^2 + c e^u - e^{-2u} |psi|^2 = 0`
//! * Codazzi: `e^{-2u} psi_zbar - (e^{-u} phi)_z = 0`

use num_complex::Complex64;

use crate::calculus::{d_z, d_zbar, zzbar_real};
use crate::chart::{ComplexField, ConformalChart, Norms, RealField};
use crate::surface::SurfaceData;

/// How a residual threshold scales with the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToleranceClass {
    /// Fixed threshold, for data that should satisfy the equations to rounding.
    #[default]
    Exact,
    /// `C h^2`, for sampled analytic data under second-order stencils.
    H2,
    /// `C h^4`.
    H4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub class: ToleranceClass,
    /// Threshold of the exact class.
    pub value: f64,
    /// `C` of the scaled classes.
    pub constant: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            class: ToleranceClass::Exact,
            value: 1e-8,
            constant: 10.0,
        }
    }
}

impl Tolerance {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            ..Self::default()
        }
    }

    pub fn h2() -> Self {
        Self {
            class: ToleranceClass::H2,
            ..Self::default()
        }
    }

    pub fn h4() -> Self {
        Self {
            class: ToleranceClass::H4,
            ..Self::default()
        }
    }

    /// The numeric threshold on `chart`.
    pub fn threshold(&self, chart: &ConformalChart) -> f64 {
        let h = chart.h();
        match self.class {
            ToleranceClass::Exact => self.value,
            ToleranceClass::H2 => self.constant * h * h,
            ToleranceClass::H4 => self.constant * h.powi(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityResiduals {
    pub closedness: ComplexField,
    pub gauss: RealField,
    pub codazzi: ComplexField,
    pub closedness_norms: Norms,
    pub gauss_norms: Norms,
    pub codazzi_norms: Norms,
}

impl IntegrabilityResiduals {
    /// Largest interior sup norm of the three residuals.
    pub fn linf(&self) -> f64 {
        self.closedness_norms
            .linf
            .max(self.gauss_norms.linf)
            .max(self.codazzi_norms.linf)
    }

    pub fn passes(&self, tol: &Tolerance) -> bool {
        self.linf() <= tol.threshold(self.gauss.chart())
    }
}

/// `e^{-u} phi`, the coefficient whose `z`-derivative enters Codazzi.
fn weighted_phi(data: &SurfaceData) -> ComplexField {
    data.phi().zip_map(data.u(), |p, u| p * (-u).exp())
}

pub fn integrability_residuals(data: &SurfaceData) -> IntegrabilityResiduals {
    let c = data.space().c_f64();
    let (u, phi, psi) = (data.u(), data.phi(), data.psi());

    let closedness = d_zbar(phi).zip_map(&d_z(&phi.conj()), |a, b| a - b);

    let mut gauss = zzbar_real(u);
    for (i, g) in gauss.values_mut().iter_mut().enumerate() {
        let ui = u.at(i);
        *g += phi.at(i).norm_sqr() + c * ui.exp() - (-2.0 * ui).exp() * psi.at(i).norm_sqr();
    }

    let lhs = d_zbar(psi).zip_map(u, |p, u| p * (-2.0 * u).exp());
    let codazzi = lhs.zip_map(&d_z(&weighted_phi(data)), |a, b| a - b);

    IntegrabilityResiduals {
        closedness_norms: closedness.norms(),
        gauss_norms: gauss.norms(),
        codazzi_norms: codazzi.norms(),
        closedness,
        gauss,
        codazzi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub residual: f64,
    pub verdict: bool,
}

impl Criterion {
    fn new(residual: f64, threshold: f64) -> Self {
        Self {
            residual,
            verdict: residual <= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    /// `max |phi|` over the whole chart.
    pub minimal: Criterion,
    /// Holomorphy of `Phi`: `|phi_zbar|`.
    pub hamiltonian_stationary: Criterion,
    /// `|(e^{-u} phi)_z|`.
    pub conformal_maslov: Criterion,
    /// When Codazzi holds, `|(e^{-u} phi)_z|` and `|e^{-2u} psi_zbar|` must
    /// agree; residual is the difference of their sup norms, checked
    /// against twice the threshold. `None` if Codazzi fails.
    pub codazzi_transfer: Option<Criterion>,
}

pub fn classify(data: &SurfaceData, tol: &Tolerance) -> Classification {
    let threshold = tol.threshold(data.chart());
    let minimal = Criterion::new(data.phi().max_modulus(), threshold);
    let hs = d_zbar(data.phi()).norms().linf;
    let cm_field = d_z(&weighted_phi(data));
    let cm = cm_field.norms().linf;

    let residuals = integrability_residuals(data);
    let codazzi_transfer = (residuals.codazzi_norms.linf <= threshold).then(|| {
        let weighted_psi = d_zbar(data.psi()).zip_map(data.u(), |p, u| p * (-2.0 * u).exp());
        Criterion::new((cm - weighted_psi.norms().linf).abs(), 2.0 * threshold)
    });

    Classification {
        minimal,
        hamiltonian_stationary: Criterion::new(hs, threshold),
        conformal_maslov: Criterion::new(cm, threshold),
        codazzi_transfer,
    }
}

/// `phi` of a surface whose Maslov form is conformal: `e^u g` with `g`
/// antiholomorphic has `(e^{-u} phi)_z = 0`.
pub fn conformal_maslov_phi(u: &RealField, g: &ComplexField) -> ComplexField {
    g.zip_map(u, |g, u| g * Complex64::new(u.exp(), 0.0))
}
