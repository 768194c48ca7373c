//! The fundamental data `(u, phi, psi)` of a conformal Lagrangian surface
//! and the pointwise invariants derived from it.
//!
//! The metric is `g = 2 e^u dz dzbar`, the mean curvature form is
//! `Phi = phi dz` and the cubic Hopf differential is `Psi = psi dz^3`.

use num_complex::Complex64;

use crate::calculus::zzbar_real;
use crate::chart::{ComplexField, ConformalChart, RealField};
use crate::error::{Error, Result};

/// Ambient complex space form of holomorphic sectional curvature `4c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceForm {
    /// `CH^2`, `c = -1`
    Hyperbolic,
    /// `C^2`, `c = 0`
    Flat,
    /// `CP^2`, `c = 1`
    Projective,
}

impl SpaceForm {
    pub fn from_c(c: i64) -> Result<Self> {
        match c {
            -1 => Ok(Self::Hyperbolic),
            0 => Ok(Self::Flat),
            1 => Ok(Self::Projective),
            other => Err(Error::InvalidSpaceForm(other)),
        }
    }

    pub fn c(self) -> i64 {
        match self {
            Self::Hyperbolic => -1,
            Self::Flat => 0,
            Self::Projective => 1,
        }
    }

    pub fn c_f64(self) -> f64 {
        self.c() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceData {
    space: SpaceForm,
    u: RealField,
    phi: ComplexField,
    psi: ComplexField,
}

impl SurfaceData {
    pub fn new(space: SpaceForm, u: RealField, phi: ComplexField, psi: ComplexField) -> Result<Self> {
        u.same_chart(&phi)?;
        u.same_chart(&psi)?;
        u.ensure_finite()?;
        phi.ensure_finite()?;
        psi.ensure_finite()?;
        Ok(Self { space, u, phi, psi })
    }

    /// Constant data on `chart`, without any integrability check.
    pub fn constant(chart: ConformalChart, space: SpaceForm, u: f64, phi: Complex64, psi: Complex64) -> Result<Self> {
        Self::new(
            space,
            RealField::constant(chart, u),
            ComplexField::constant(chart, phi),
            ComplexField::constant(chart, psi),
        )
    }

    pub fn space(&self) -> SpaceForm {
        self.space
    }
    pub fn chart(&self) -> &ConformalChart {
        self.u.chart()
    }
    pub fn u(&self) -> &RealField {
        &self.u
    }
    pub fn phi(&self) -> &ComplexField {
        &self.phi
    }
    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    /// Same metric and mean curvature form, new Hopf differential.
    pub fn with_psi(&self, psi: ComplexField) -> Result<Self> {
        Self::new(self.space, self.u.clone(), self.phi.clone(), psi)
    }

    pub fn into_parts(self) -> (SpaceForm, RealField, ComplexField, ComplexField) {
        (self.space, self.u, self.phi, self.psi)
    }
}

/// Gauss curvature of the metric alone: `K = -e^{-u} u_{z zbar}`.
pub fn gauss_curvature(data: &SurfaceData) -> RealField {
    zzbar_real(data.u()).zip_map(data.u(), |uzz, u| -(-u).exp() * uzz)
}

/// `|psi|^2 - e^{3u} (e^{-u}|phi|^2 + c - K)`; vanishes where the Gauss
/// equation holds.
pub fn invariant_identity_residual(data: &SurfaceData) -> RealField {
    let k = gauss_curvature(data);
    let c = data.space().c_f64();
    let mut out = k.clone();
    for (i, r) in out.values_mut().iter_mut().enumerate() {
        let u = data.u().at(i);
        let phi = data.phi().at(i);
        let psi = data.psi().at(i);
        *r = psi.norm_sqr() - (3.0 * u).exp() * ((-u).exp() * phi.norm_sqr() + c - k.at(i));
    }
    out
}

/// Length of the mean curvature vector, from `|phi|^2 = |H|^2 e^u / 2`.
pub fn mean_curvature_norm(data: &SurfaceData) -> RealField {
    data.phi()
        .zip_map(data.u(), |phi, u| (2.0 * phi.norm_sqr() * (-u).exp()).sqrt())
}

/// Maslov form `sigma_H = -(Phi + conj Phi)` in the real coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct MaslovForm {
    /// coefficient of `dx`
    pub dx: RealField,
    /// coefficient of `dy`
    pub dy: RealField,
}

pub fn maslov_form(data: &SurfaceData) -> MaslovForm {
    MaslovForm {
        dx: data.phi().map(|p| -2.0 * p.re),
        dy: data.phi().map(|p| 2.0 * p.im),
    }
}

/// Coefficient of `dx ^ dy` in `d sigma_H`.
pub fn maslov_exterior_derivative(data: &SurfaceData) -> RealField {
    use crate::calculus::{partial_x, partial_y, Stencil};
    let m = maslov_form(data);
    let dy_x = partial_x(&m.dy, Stencil::Second);
    let dx_y = partial_y(&m.dx, Stencil::Second);
    dy_x.zip_map(&dx_y, |a, b| a - b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedInvariants {
    pub gauss_curvature: RealField,
    pub mean_curvature_norm: RealField,
    pub maslov: MaslovForm,
}

pub fn derived_invariants(data: &SurfaceData) -> DerivedInvariants {
    DerivedInvariants {
        gauss_curvature: gauss_curvature(data),
        mean_curvature_norm: mean_curvature_norm(data),
        maslov: maslov_form(data),
    }
}
