use alloc::vec::Vec;

use num_complex::Complex64;

use crate::calculus::cr_residual;
use crate::chart::{ComplexField, Norms, RealField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    /// `alpha_pair` is computed directly where `|h| > floor` and filled
    /// elsewhere.
    pub floor: f64,
    /// Half-width of the patch used to fill `alpha_pair` near zeros of `h`.
    pub patch: usize,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self { floor: 1e-8, patch: 2 }
    }
}

/// `psi1 = h (i alpha + 1) / 2`, `psi2 = h (i alpha - 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDecomposition {
    pub h: ComplexField,
    pub q: ComplexField,
    pub alpha: RealField,
    /// Nodes with `|h| > floor`.
    pub mask: Vec<bool>,
    /// Masked nodes whose `alpha` came from the fill.
    pub filled: Vec<usize>,
    pub cr: Norms,
    /// `|psi1| - |psi2|`.
    pub modulus_gap: Norms,
    /// `Im(-i q / h)` on the mask.
    pub alpha_imag: Norms,
    /// `q hbar + h qbar` on the mask.
    pub orthogonality: Norms,
}

pub fn pair_compose(h: &ComplexField, alpha: &RealField) -> Result<(ComplexField, ComplexField)> {
    h.same_chart(alpha)?;
    h.ensure_finite()?;
    alpha.ensure_finite()?;
    let psi1 = h.zip_map(alpha, |h, a| 0.5 * h * Complex64::new(1.0, a));
    let psi2 = h.zip_map(alpha, |h, a| 0.5 * h * Complex64::new(-1.0, a));
    Ok((psi1, psi2))
}

/// Solves the normal equations of a small least-squares problem by
/// Gaussian elimination with partial pivoting.
fn least_squares<const N: usize>(rows: &[([f64; N], f64)]) -> Option<[f64; N]> {
    let mut m = [[0.0; N]; N];
    let mut rhs = [0.0; N];
    for (row, value) in rows {
        for i in 0..N {
            rhs[i] += row[i] * value;
            for j in 0..N {
                m[i][j] += row[i] * row[j];
            }
        }
    }
    let scale = (0..N).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    for col in 0..N {
        let pivot = (col..N).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..N {
            let f = m[r][col] / m[col][col];
            for c in col..N {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for r in (0..N).rev() {
        let tail: f64 = (r + 1..N).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - tail) / m[r][r];
    }
    Some(x)
}

pub fn pair_decompose(psi1: &ComplexField, psi2: &ComplexField, options: &PairOptions) -> Result<PairDecomposition> {
    psi1.same_chart(psi2)?;
    psi1.ensure_finite()?;
    psi2.ensure_finite()?;
    if psi1.values() == psi2.values() {
        return Err(Error::NotAPair);
    }
    let chart = *psi1.chart();
    let h = psi1.zip_map(psi2, |a, b| a - b);
    let q = psi1.zip_map(psi2, |a, b| a + b);
    let mask: Vec<bool> = h.values().iter().map(|v| v.norm() > options.floor).collect();
    let ratio = q.zip_map(&h, |q, h| -Complex64::i() * q / h);
    let mut alpha: Vec<f64> = ratio
        .values()
        .iter()
        .zip(&mask)
        .map(|(r, &m)| if m { r.re } else { 0.0 })
        .collect();

    // fill near zeros of h with a local quadratic fit of alpha
    let mut filled = Vec::new();
    for i in (0..chart.len()).filter(|&i| !mask[i]) {
        let (ix, iy) = chart.coords(i);
        let mut value = None;
        for radius in options.patch.max(1)..=options.patch.max(1) + 3 {
            let r = radius as isize;
            let mut rows = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    if let Some((jx, jy)) = chart.offset(ix, iy, dx, dy) {
                        let j = chart.index(jx, jy);
                        if mask[j] {
                            let (x, y) = (dx as f64, dy as f64);
                            rows.push(([1.0, x, y, x * x, x * y, y * y], alpha[j]));
                        }
                    }
                }
            }
            if rows.len() >= 9 {
                if let Some(coef) = least_squares(&rows) {
                    value = Some(coef[0]);
                    break;
                }
            }
        }
        if let Some(v) = value {
            alpha[i] = v;
            filled.push(i);
        }
    }
    // anything left takes the nearest masked value
    let nearest = |i: usize| {
        let (ix, iy) = chart.coords(i);
        (0..chart.len()).filter(|&j| mask[j]).min_by_key(|&j| {
            let (jx, jy) = chart.coords(j);
            (jx as isize - ix as isize).pow(2) + (jy as isize - iy as isize).pow(2)
        })
    };
    for i in 0..chart.len() {
        if !mask[i] && !filled.contains(&i) {
            alpha[i] = nearest(i).map_or(0.0, |j| alpha[j]);
        }
    }

    // sqrt of the exact-when-representable square, not hypot: equal
    // squared moduli must give a gap of exactly zero
    let gap = psi1.zip_map(psi2, |a, b| a.norm_sqr().sqrt() - b.norm_sqr().sqrt());
    let alpha_imag = ratio.im().norms_where(|i| mask[i]);
    let orthogonality = q.zip_map(&h, |q, h| q * h.conj() + h * q.conj()).norms_where(|i| mask[i]);
    Ok(PairDecomposition {
        cr: cr_residual(&h)?.norms,
        modulus_gap: gap.norms(),
        alpha_imag,
        orthogonality,
        alpha: RealField::from_values(chart, alpha)?,
        h,
        q,
        mask,
        filled,
    })
}
