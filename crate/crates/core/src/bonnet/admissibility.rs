use alloc::vec::Vec;

use num_complex::Complex64;

use super::{erode, Residual};
use crate::calculus::{finest_stencil, second_unchecked, wirtinger_unchecked, SecondWirtinger, Stencil, Wirtinger};
use crate::chart::{ComplexField, RealField};
use crate::error::{Error, Result};
use crate::integrability::Tolerance;
use crate::surface::{gauss_curvature, SurfaceData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityOptions {
    /// Nodes with `|psi| <= floor` (and their neighbours) are left out.
    pub floor: f64,
    /// Lower bound on `e^{-u}|phi|^2 + c - K` for the curvature forms.
    pub curvature_floor: f64,
    pub tolerance: Tolerance,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        Self {
            floor: 1e-8,
            curvature_floor: 1e-8,
            tolerance: Tolerance::h2(),
        }
    }
}

/// Residuals of the conditions for a Bonnet deformation to exist.
///
/// * `r17 = (log psi)_{z zbar} - |(log psi)_zbar|^2`
/// * `r18 = (psi_zbar / |psi|^2)_z`, the admissibility criterion; analytically
///   `r17 = conj(psi) r18`
/// * `r19 = ((e^{-u} phi)_z / (|phi|^2 + e^u (c - K)))_z`
/// * `r20 = (log(e^{3u} D))_{z zbar} - 2 e^u |(e^{-u} phi)_z|^2 / D` with
///   `D = e^{-u}|phi|^2 + c - K`
/// * `r21 = (alpha_psi)_{z zbar}`, from the locally unwrapped phase of `psi`
/// * `r_iso = Im (log psi)_{z zbar}`, zero exactly for isothermic data
/// * `r_invpsi = (1/psi)_{z zbar}`
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub r17: Residual,
    pub r18: Residual,
    pub r19: Residual,
    pub r20: Residual,
    pub r21: Residual,
    pub r_iso: Residual,
    pub r_invpsi: Residual,
    /// Nodes where `psi` is bounded away from zero.
    pub mask: Vec<bool>,
    pub threshold: f64,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.r18.norms.linf <= self.threshold
    }

    pub fn r17_holds(&self) -> bool {
        self.r17.norms.linf <= self.threshold
    }

    /// The two equivalent forms give the same verdict.
    pub fn equivalence_agrees(&self) -> bool {
        self.admissible() == self.r17_holds()
    }

    pub fn isothermic(&self) -> bool {
        self.r_iso.norms.linf <= self.threshold
    }

    pub fn inverse_psi_harmonic(&self) -> bool {
        self.r_invpsi.norms.linf <= self.threshold
    }
}

fn d_z(f: &ComplexField, s: Stencil) -> ComplexField {
    wirtinger_unchecked(f, Wirtinger::Dz, s)
}

fn d_zbar(f: &ComplexField, s: Stencil) -> ComplexField {
    wirtinger_unchecked(f, Wirtinger::Dzbar, s)
}

fn zzbar(f: &ComplexField, s: Stencil) -> ComplexField {
    second_unchecked(f, SecondWirtinger::ZZbar, s)
}

fn safe_div(num: &ComplexField, den: &ComplexField, ok: &[bool]) -> ComplexField {
    let mut out = num.zip_map(den, |a, b| a / b);
    for (v, k) in out.values_mut().iter_mut().zip(ok) {
        if !k {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// `(alpha_psi)_{z zbar}` with phase differences taken between neighbours,
/// so no global branch of `arg psi` is needed. Boundary nodes of open axes
/// are set to zero.
fn phase_zzbar(psi: &ComplexField, ok: &[bool]) -> ComplexField {
    let chart = *psi.chart();
    let (hx2, hy2) = (chart.hx() * chart.hx(), chart.hy() * chart.hy());
    let mut out = ComplexField::constant(chart, Complex64::new(0.0, 0.0));
    for i in 0..chart.len() {
        if !ok[i] {
            continue;
        }
        let (ix, iy) = chart.coords(i);
        let p = psi.at(i);
        let step = |dx, dy| chart.offset(ix, iy, dx, dy).map(|(jx, jy)| (psi.get(jx, jy) / p).arg());
        if let (Some(e), Some(w), Some(n), Some(s)) = (step(1, 0), step(-1, 0), step(0, 1), step(0, -1)) {
            let lap = (e + w) / hx2 + (n + s) / hy2;
            out.values_mut()[i] = Complex64::new(0.25 * lap, 0.0);
        }
    }
    out
}

pub fn bonnet_admissibility(data: &SurfaceData, options: &AdmissibilityOptions) -> Result<AdmissibilityReport> {
    let chart = *data.chart();
    let st = finest_stencil(&chart);
    let (u, phi, psi) = (data.u(), data.phi(), data.psi());
    let nonzero: Vec<bool> = psi.values().iter().map(|p| p.norm() > options.floor).collect();
    let mask = erode(&chart, &nonzero, 2);
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }

    let psi_zbar = d_zbar(psi, st);
    let a = safe_div(&psi_zbar, psi, &nonzero);
    let a_z = d_z(&a, st);
    let r17 = a_z.zip_map(&a, |az, a| az - a.norm_sqr());
    let abs2 = psi.map(|p| Complex64::new(p.norm_sqr(), 0.0));
    let r18 = d_z(&safe_div(&psi_zbar, &abs2, &nonzero), st);
    let r_iso = a_z.map(|v| Complex64::new(v.im, 0.0));
    let ones = ComplexField::constant(chart, Complex64::new(1.0, 0.0));
    let r_invpsi = zzbar(&safe_div(&ones, psi, &nonzero), st);
    let r21 = phase_zzbar(psi, &mask);

    // curvature forms
    let c = data.space().c_f64();
    let k = gauss_curvature(data);
    let d: RealField = {
        let mut d = k.clone();
        for (i, v) in d.values_mut().iter_mut().enumerate() {
            *v = (-u.at(i)).exp() * phi.at(i).norm_sqr() + c - k.at(i);
        }
        d
    };
    let d_ok: Vec<bool> = d.values().iter().map(|&v| v > options.curvature_floor).collect();
    let curv_mask: Vec<bool> = erode(&chart, &d_ok, 2).iter().zip(&mask).map(|(a, b)| *a && *b).collect();
    let weighted = phi.zip_map(u, |p, u| p * (-u).exp());
    let g = d_z(&weighted, st);
    let denom19 = d.zip_map(u, |d, u| Complex64::new(u.exp() * d, 0.0));
    let r19 = d_z(&safe_div(&g, &denom19, &d_ok), st);
    let log_term = {
        let mut l = d.zip_map(u, |d, u| Complex64::new((3.0 * u).exp() * d, 0.0));
        for (v, ok) in l.values_mut().iter_mut().zip(&d_ok) {
            *v = if *ok {
                Complex64::new(v.re.ln(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        l
    };
    let mut r20 = zzbar(&log_term, st);
    for (i, v) in r20.values_mut().iter_mut().enumerate() {
        if d_ok[i] {
            *v -= 2.0 * u.at(i).exp() * g.at(i).norm_sqr() / d.at(i);
        }
    }

    Ok(AdmissibilityReport {
        r17: Residual::masked(r17, &mask),
        r18: Residual::masked(r18, &mask),
        r19: Residual::masked(r19, &curv_mask),
        r20: Residual::masked(r20, &curv_mask),
        r21: Residual::masked(r21, &mask),
        r_iso: Residual::masked(r_iso, &mask),
        r_invpsi: Residual::masked(r_invpsi, &mask),
        mask,
        threshold: options.tolerance.threshold(&chart),
    })
}
