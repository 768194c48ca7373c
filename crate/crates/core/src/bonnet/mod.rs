//! Bonnet deformations, Bonnet pairs and their diagnostics.
//!
//! A Bonnet deformation keeps `u` and `phi` and rotates the cubic
//! differential, `psi* = e^{it} psi`, with `t` solving a Pfaff system.
//! Names follow one convention throughout: `alpha_psi` is the phase of
//! `psi` and `alpha_pair` the pair ratio; `q_geom` is `|h_z|^2 / (h + hbar)`
//! and `q_lt` is `1 - e^{i theta}`; `t_def` is the deformation parameter
//! and `t_w = w + wbar` the coordinate along an isothermic chart.

mod admissibility;
mod conjugate;
mod hstructure;
mod lawson_tribuzy;
mod pair;
mod pfaff;
mod umbilic;

pub use admissibility::{bonnet_admissibility, AdmissibilityOptions, AdmissibilityReport};
pub use conjugate::{holomorphic_completion, CompletionOptions, HolomorphicCompletion};
pub use hstructure::{h_ode_residual, h_structure_checks, HStructure, HStructureOptions, TOnlyChecks};
pub use lawson_tribuzy::{lt_diagnostics, LtDiagnostics, LtOptions};
pub use pair::{pair_compose, pair_decompose, PairDecomposition, PairOptions};
pub use pfaff::{deform, integrate_pfaff, DeformationState, PfaffOptions, PfaffSolution};
pub use umbilic::{umbilic_analysis, UmbilicCluster, UmbilicOptions, UmbilicPoint, UmbilicReport, Unresolved};

use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{ComplexField, ConformalChart, Norms};

/// A residual field with its norms over an evaluation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub field: ComplexField,
    pub norms: Norms,
}

impl Residual {
    /// Norms over interior nodes where `mask` holds; the field is zeroed
    /// elsewhere so that it stays finite.
    pub(crate) fn masked(field: ComplexField, mask: &[bool]) -> Self {
        let field = {
            let mut f = field;
            for (v, keep) in f.values_mut().iter_mut().zip(mask) {
                if !keep {
                    *v = num_complex::Complex64::new(0.0, 0.0);
                }
            }
            f
        };
        let norms = field.norms_where(|i| mask[i]);
        Self { field, norms }
    }
}

/// Nodes whose whole `radius` neighbourhood satisfies `ok`. Off-chart
/// neighbours of open axes are ignored.
pub(crate) fn erode(chart: &ConformalChart, ok: &[bool], radius: isize) -> Vec<bool> {
    let mut out = vec![false; ok.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let (ix, iy) = chart.coords(i);
        *o = (-radius..=radius).all(|dy| {
            (-radius..=radius).all(|dx| match chart.offset(ix, iy, dx, dy) {
                Some((jx, jy)) => ok[chart.index(jx, jy)],
                None => true,
            })
        });
    }
    out
}
