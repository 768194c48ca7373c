use alloc::vec::Vec;

use num_complex::Complex64;

use super::{erode, Residual};
use crate::calculus::{cr_residual, finest_stencil, second_unchecked, wirtinger_unchecked, SecondWirtinger, Wirtinger};
use crate::chart::{ComplexField, RealField};
use crate::error::{Error, Result};
use crate::integrability::Tolerance;
use crate::surface::SurfaceData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HStructureOptions {
    /// Lower bound on `h + hbar`, `|h_z|` and `|(e^{-u} phi)_z|` on the mask.
    pub floor: f64,
    /// `phi` counts as real when `max |Im phi|` is below this.
    pub reality: f64,
    pub tolerance: Tolerance,
}

impl Default for HStructureOptions {
    fn default() -> Self {
        Self {
            floor: 1e-8,
            reality: 1e-10,
            tolerance: Tolerance::h2(),
        }
    }
}

/// Derivatives along the level sets of `t_w = w + wbar`, `w = int dz / h_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct TOnlyChecks {
    pub weighted_phi: Residual,
    pub metric_over_hz: Residual,
    pub psi_over_hz: Residual,
    /// Set for `c != 0`, where the checks carry no verdict.
    pub informational: bool,
}

impl TOnlyChecks {
    pub fn linf(&self) -> f64 {
        self.weighted_phi
            .norms
            .linf
            .max(self.metric_over_hz.norms.linf)
            .max(self.psi_over_hz.norms.linf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HStructure {
    /// `psi_zbar / (e^{-u} phi)_z - e^{2u}`.
    pub r24_psi: Residual,
    /// `-hbar_zbar / ((h + hbar)^2 (e^{-u} phi)_z) - e^{2u}`.
    pub r24_h: Residual,
    /// `None` when `phi` is not real.
    pub t_only: Option<TOnlyChecks>,
    pub r_hode: Residual,
    pub q_geom: RealField,
    pub q_geom_t_only: Residual,
    pub mask: Vec<bool>,
    pub threshold: f64,
}

impl HStructure {
    pub fn r24_linf(&self) -> f64 {
        self.r24_psi.norms.linf.max(self.r24_h.norms.linf)
    }
}

/// `E - conj(E)` with `E = h_zz (h + hbar) - h_z^2`.
pub fn h_ode_residual(h: &ComplexField) -> Result<ComplexField> {
    h.ensure_finite()?;
    let stencil = finest_stencil(h.chart());
    let hz = wirtinger_unchecked(h, Wirtinger::Dz, stencil);
    let hzz = second_unchecked(h, SecondWirtinger::ZZ, stencil);
    let mut out = hzz;
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let e = *v * (2.0 * h.at(i).re) - hz.at(i) * hz.at(i);
        *v = e - e.conj();
    }
    Ok(out)
}

/// `i (h_z f_z - conj(h_z) f_zbar)`, the derivative along `Im w`.
fn along_level_sets(f: &ComplexField, hz: &ComplexField) -> ComplexField {
    let stencil = finest_stencil(f.chart());
    let fz = wirtinger_unchecked(f, Wirtinger::Dz, stencil);
    let fzb = wirtinger_unchecked(f, Wirtinger::Dzbar, stencil);
    let mut out = fz;
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let a = hz.at(i);
        *v = Complex64::i() * (a * *v - a.conj() * fzb.at(i));
    }
    out
}

pub fn h_structure_checks(data: &SurfaceData, h: &ComplexField, options: &HStructureOptions) -> Result<HStructure> {
    data.u().same_chart(h)?;
    h.ensure_finite()?;
    let chart = *data.chart();
    let threshold = options.tolerance.threshold(&chart);
    let cr = cr_residual(h)?.norms.linf;
    if cr > threshold {
        return Err(Error::NotHolomorphic { linf: cr, threshold });
    }
    let stencil = finest_stencil(&chart);
    let (u, phi, psi) = (data.u(), data.phi(), data.psi());
    let positive: Vec<bool> = h.values().iter().map(|v| 2.0 * v.re > options.floor).collect();
    let mask = erode(&chart, &positive, 2);
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let hz = wirtinger_unchecked(h, Wirtinger::Dz, stencil);
    if let Some(index) = (0..chart.len()).find(|&i| mask[i] && hz.at(i).norm() <= options.floor) {
        return Err(Error::SingularCoordinate { index });
    }

    let weighted = phi.zip_map(u, |p, u| p * (-u).exp());
    let g = wirtinger_unchecked(&weighted, Wirtinger::Dz, stencil);
    let psi_zbar = wirtinger_unchecked(psi, Wirtinger::Dzbar, stencil);
    let g_ok: Vec<bool> = g.values().iter().map(|v| v.norm() > options.floor).collect();
    let mask24: Vec<bool> = mask.iter().zip(&g_ok).map(|(a, b)| *a && *b).collect();
    let mut r24_psi = g.clone();
    let mut r24_h = g.clone();
    for i in 0..chart.len() {
        if !mask24[i] {
            continue;
        }
        let e2u = (2.0 * u.at(i)).exp();
        let s = 2.0 * h.at(i).re;
        r24_psi.values_mut()[i] = psi_zbar.at(i) / g.at(i) - e2u;
        // hbar_zbar = conj(h_z)
        r24_h.values_mut()[i] = -hz.at(i).conj() / (s * s * g.at(i)) - e2u;
    }

    let q_geom = RealField::from_values(
        chart,
        (0..chart.len())
            .map(|i| {
                if mask[i] {
                    hz.at(i).norm_sqr() / (2.0 * h.at(i).re)
                } else {
                    0.0
                }
            })
            .collect(),
    )?;
    let q_geom_t_only = Residual::masked(along_level_sets(&q_geom.to_complex(), &hz), &mask);

    let phi_real = phi.values().iter().all(|p| p.im.abs() <= options.reality);
    let t_only = phi_real.then(|| {
        let metric = u.zip_map(&hz, |u, a| (2.0 * u).exp() / a);
        let ratio = psi.zip_map(&hz, |p, a| Complex64::new(p.norm() / a.norm(), 0.0));
        // quotients are only meaningful on the mask; keep them finite elsewhere
        let clean = |mut f: ComplexField| {
            for (v, m) in f.values_mut().iter_mut().zip(&mask) {
                if !m || !v.is_finite() {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            f
        };
        TOnlyChecks {
            weighted_phi: Residual::masked(along_level_sets(&weighted, &hz), &mask),
            metric_over_hz: Residual::masked(along_level_sets(&clean(metric), &hz), &mask),
            psi_over_hz: Residual::masked(along_level_sets(&clean(ratio), &hz), &mask),
            informational: data.space().c() != 0,
        }
    });

    Ok(HStructure {
        r24_psi: Residual::masked(r24_psi, &mask24),
        r24_h: Residual::masked(r24_h, &mask24),
        t_only,
        r_hode: Residual::masked(h_ode_residual(h)?, &mask),
        q_geom,
        q_geom_t_only,
        mask,
        threshold,
    })
}
