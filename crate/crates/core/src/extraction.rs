//! Recovering `(u, phi, psi)` from a sampled immersion.
//!
//! With `<.,.>` the complex-bilinear extension of the ambient real form:
//! `e^u = <f_z, f_zbar>`, `phi = e^{-u} <f_{z zbar}, J f_z>` and
//! `psi = <f_{zz}, J f_z>`, for the flat immersion `f` and for the
//! horizontal lift `F` alike.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::calculus::{second_unchecked, wirtinger_unchecked, SecondWirtinger, Stencil, Wirtinger};
use crate::chart::{ComplexField, Norms, RealField};
use crate::error::{Error, Result};
use crate::reconstruction::Immersion;
use crate::surface::{SpaceForm, SurfaceData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Smallest admissible `<f_z, f_zbar>`.
    pub floor: f64,
    /// Largest admissible `|(F, F) - c|` for lifts.
    pub quadric_tolerance: f64,
    pub stencil: Stencil,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            floor: 1e-12,
            quadric_tolerance: 1e-6,
            stencil: Stencil::Fourth,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionDiagnostics {
    /// `|<f_z, f_z>|`
    pub conformality: RealField,
    /// `|<f_z, J f_zbar>|`
    pub lagrangian: RealField,
    /// `max(|<F_z, JF>|, |<F_zbar, JF>|)`; `None` for `c = 0`.
    pub horizontality: Option<RealField>,
    /// `|(F, F) - c|`; `None` for `c = 0`.
    pub quadric: Option<RealField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub data: SurfaceData,
    pub diagnostics: ExtractionDiagnostics,
}

fn bilinear(b: &[f64], x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).zip(b).map(|((a, c), w)| a * c * *w).sum()
}

fn apply_j(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

pub fn extract_data(imm: &Immersion, options: &ExtractOptions) -> Result<Extraction> {
    let chart = *imm.chart();
    let space = imm.space();
    let dim = 2 * imm.dim();
    let stencil = {
        let fits = (chart.periodic_x() || chart.nx() >= 6) && (chart.periodic_y() || chart.ny() >= 6);
        if fits {
            options.stencil
        } else {
            Stencil::Second
        }
    };
    let b: Vec<f64> = match space {
        SpaceForm::Flat => alloc::vec![1.0; 4],
        s => {
            let c = s.c_f64();
            alloc::vec![c, c, 1.0, 1.0, 1.0, 1.0]
        }
    };

    // real ambient coordinates as fields
    let comps: Vec<ComplexField> = (0..dim)
        .map(|k| {
            let vals = imm
                .points()
                .iter()
                .map(|p| {
                    let v = p[k / 2];
                    Complex64::new(if k % 2 == 0 { v.re } else { v.im }, 0.0)
                })
                .collect();
            ComplexField::from_values(chart, vals).expect("chart length")
        })
        .collect();
    let fz: Vec<ComplexField> = comps.iter().map(|f| wirtinger_unchecked(f, Wirtinger::Dz, stencil)).collect();
    let fzz: Vec<ComplexField> = comps
        .iter()
        .map(|f| second_unchecked(f, SecondWirtinger::ZZ, stencil))
        .collect();
    let fzzb: Vec<ComplexField> = comps
        .iter()
        .map(|f| second_unchecked(f, SecondWirtinger::ZZbar, stencil))
        .collect();

    let n = chart.len();
    let (mut u, mut phi, mut psi) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut conf, mut lag, mut hor, mut quad) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        let a: Vec<Complex64> = fz.iter().map(|f| f.at(i)).collect();
        let abar: Vec<Complex64> = a.iter().map(|x| x.conj()).collect();
        let ja = apply_j(&a);
        let eu = bilinear(&b, &a, &abar).re;
        if !(eu > options.floor) {
            return Err(Error::DegenerateMetric { index: i });
        }
        let zz: Vec<Complex64> = fzz.iter().map(|f| f.at(i)).collect();
        let zzb: Vec<Complex64> = fzzb.iter().map(|f| f.at(i)).collect();
        u.push(eu.ln());
        phi.push(bilinear(&b, &zzb, &ja) / eu);
        psi.push(bilinear(&b, &zz, &ja));
        conf.push(bilinear(&b, &a, &a).norm());
        lag.push(bilinear(&b, &a, &apply_j(&abar)).norm());
        if space != SpaceForm::Flat {
            let pos: Vec<Complex64> = comps.iter().map(|f| f.at(i)).collect();
            let jf = apply_j(&pos);
            hor.push(bilinear(&b, &a, &jf).norm().max(bilinear(&b, &abar, &jf).norm()));
            quad.push((bilinear(&b, &pos, &pos).re - space.c_f64()).abs());
        }
    }
    let real = |v: Vec<f64>| RealField::from_values(chart, v).expect("chart length");
    let (horizontality, quadric) = if space == SpaceForm::Flat {
        (None, None)
    } else {
        let q = real(quad);
        let deviation = q.max_modulus();
        if deviation > options.quadric_tolerance {
            return Err(Error::QuadricViolation { deviation });
        }
        (Some(real(hor)), Some(q))
    };
    let data = SurfaceData::new(
        space,
        real(u),
        ComplexField::from_values(chart, phi)?,
        ComplexField::from_values(chart, psi)?,
    )?;
    Ok(Extraction {
        data,
        diagnostics: ExtractionDiagnostics {
            conformality: real(conf),
            lagrangian: real(lag),
            horizontality,
            quadric,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataDistance {
    pub du: Norms,
    pub dphi: Norms,
    pub dpsi: Norms,
    pub congruent: bool,
}

/// Field-by-field distance of two data sets on the same chart; congruent
/// when every sup norm is within `tolerance`.
pub fn data_distance(a: &SurfaceData, b: &SurfaceData, tolerance: f64) -> Result<DataDistance> {
    a.u().same_chart(b.u())?;
    if a.space() != b.space() {
        return Err(Error::SpaceFormMismatch);
    }
    let du = a.u().zip_map(b.u(), |x, y| x - y).norms();
    let dphi = a.phi().zip_map(b.phi(), |x, y| x - y).norms();
    let dpsi = a.psi().zip_map(b.psi(), |x, y| x - y).norms();
    let congruent = du.linf <= tolerance && dphi.linf <= tolerance && dpsi.linf <= tolerance;
    Ok(DataDistance {
        du,
        dphi,
        dpsi,
        congruent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ConformalChart;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chart(n: usize) -> ConformalChart {
        ConformalChart::new(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap()
    }

    #[test]
    fn plane_has_zero_data() {
        let s = 2f64.sqrt();
        let imm = Immersion::from_fn(SpaceForm::Flat, chart(12), |x, y| [c(s * x, 0.0), c(s * y, 0.0), c(0.0, 0.0)]).unwrap();
        let e = extract_data(&imm, &ExtractOptions::default()).unwrap();
        assert!(e.data.u().max_modulus() < 1e-13);
        assert!(e.data.phi().max_modulus() < 1e-12);
        assert!(e.data.psi().max_modulus() < 1e-12);
        assert!(e.diagnostics.conformality.max_modulus() < 1e-13);
        assert!(e.diagnostics.lagrangian.max_modulus() < 1e-13);
    }

    #[test]
    fn complex_line_is_not_lagrangian() {
        // f = (x + iy, y): the first factor is a complex line
        let imm = Immersion::from_fn(SpaceForm::Flat, chart(12), |x, y| [c(x, y), c(y, 0.0), c(0.0, 0.0)]).unwrap();
        let e = extract_data(&imm, &ExtractOptions::default()).unwrap();
        let lag = &e.diagnostics.lagrangian;
        let chart = *lag.chart();
        for i in 0..chart.len() {
            let (ix, iy) = chart.coords(i);
            if chart.is_interior(ix, iy) {
                assert!(lag.at(i) > 0.1);
            }
        }
    }

    #[test]
    fn degenerate_maps_are_rejected() {
        let imm = Immersion::from_fn(SpaceForm::Flat, chart(8), |_, _| [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(
            extract_data(&imm, &ExtractOptions::default()),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn lifts_off_the_quadric_are_rejected() {
        let imm = Immersion::from_fn(SpaceForm::Projective, chart(8), |x, y| [c(2.0, 0.0), c(x, 0.0), c(y, 0.0)]).unwrap();
        assert!(matches!(
            extract_data(&imm, &ExtractOptions::default()),
            Err(Error::QuadricViolation { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let ch = chart(8);
        let one = c(1.0, 0.0);
        let a = SurfaceData::constant(ch, SpaceForm::Projective, 0.0, c(0.0, 0.0), one).unwrap();
        let d = data_distance(&a, &a, 1e-8).unwrap();
        assert!(d.congruent && d.du.linf + d.dphi.linf + d.dpsi.linf == 0.0);
        let b = a.with_psi(ComplexField::constant(ch, c(0.0, 1.0))).unwrap();
        let d = data_distance(&a, &b, 1e-8).unwrap();
        assert!(!d.congruent);
        assert!((d.dpsi.linf - 2f64.sqrt()).abs() < 1e-15);
        let flat = SurfaceData::constant(ch, SpaceForm::Flat, 0.0, one, one).unwrap();
        assert_eq!(data_distance(&a, &flat, 1e-8), Err(Error::SpaceFormMismatch));
    }
}
