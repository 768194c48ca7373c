//! Integration of the frame equations: from data `(u, phi, psi)` back to an
//! immersion.
//!
//! States are complexified real frames written as matrices whose columns
//! are ambient vectors.
//!
//! * `c = 0`: ambient `R^4 = C^2` with coordinates `(x1, y1, x2, y2)` and
//!   `J` multiplication by `i`. Columns `[f_z, f_zbar, Jf_z, Jf_zbar, f]`.
//! * `c = +-1`: the horizontal lift in `C^3 = R^6` with the real form
//!   `diag(c, c, 1, 1, 1, 1)`. Columns `[F, JF, F_z, F_zbar, JF_z, JF_zbar]`.
//!
//! Along an edge with increment `dz` the state obeys `S' = S A` with
//! `A = U dz + V dzbar` (plus the position column for `c = 0`), stepped by
//! classical fourth-order Runge-Kutta.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::calculus::{finest_stencil, wirtinger_unchecked, Wirtinger};
use crate::chart::{ConformalChart, Sample};
use crate::error::{Error, Result};
use crate::integrability::{integrability_residuals, Tolerance};
use crate::linalg::CMatrix;
use crate::surface::{SpaceForm, SurfaceData};
use crate::winding::GridLoop;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn frame_columns(space: SpaceForm) -> usize {
    match space {
        SpaceForm::Flat => 4,
        _ => 6,
    }
}

fn state_shape(space: SpaceForm) -> (usize, usize) {
    match space {
        SpaceForm::Flat => (4, 5),
        _ => (6, 6),
    }
}

/// Pointwise values entering the coefficient matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePoint {
    pub u: f64,
    pub u_z: Complex64,
    pub phi: Complex64,
    pub psi: Complex64,
}

impl FramePoint {
    fn is_finite(&self) -> bool {
        self.u.is_finite()
            && [self.u_z, self.phi, self.psi]
                .iter()
                .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// `S_z = S U`, `S_zbar = S V` on the frame columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrices {
    pub u: CMatrix,
    pub v: CMatrix,
}

pub fn coefficient_matrices(space: SpaceForm, p: &FramePoint) -> CoefficientMatrices {
    let n = frame_columns(space);
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    let phi = p.phi;
    let phib = phi.conj();
    let w = p.psi * (-p.u).exp();
    let wb = w.conj();
    let uz = p.u_z;
    let uzb = uz.conj();
    match space {
        SpaceForm::Flat => {
            let rows_u = [
                [uz, ZERO, -phi, -phib],
                [ZERO, ZERO, -w, -phi],
                [phi, phib, uz, ZERO],
                [w, phi, ZERO, ZERO],
            ];
            let rows_v = [
                [ZERO, ZERO, -phib, -wb],
                [ZERO, uzb, -phi, -phib],
                [phib, wb, ZERO, ZERO],
                [phi, phib, ZERO, uzb],
            ];
            for i in 0..4 {
                for j in 0..4 {
                    u[(i, j)] = rows_u[i][j];
                    v[(i, j)] = rows_v[i][j];
                }
            }
        }
        _ => {
            // F_{z zbar} = -c e^u F + ...: +e^u F on the hyperbolic side
            let k = Complex64::new(-space.c_f64() * p.u.exp(), 0.0);
            let set = |m: &mut CMatrix, col: usize, entries: &[(usize, Complex64)]| {
                for &(row, val) in entries {
                    m[(row, col)] = val;
                }
            };
            set(&mut u, 0, &[(2, ONE)]);
            set(&mut u, 1, &[(4, ONE)]);
            set(&mut u, 2, &[(2, uz), (4, phi), (5, w)]);
            set(&mut u, 3, &[(0, k), (4, phib), (5, phi)]);
            set(&mut u, 4, &[(4, uz), (2, -phi), (3, -w)]);
            set(&mut u, 5, &[(1, k), (2, -phib), (3, -phi)]);

            set(&mut v, 0, &[(3, ONE)]);
            set(&mut v, 1, &[(5, ONE)]);
            set(&mut v, 2, &[(0, k), (4, phib), (5, phi)]);
            set(&mut v, 3, &[(3, uzb), (4, wb), (5, phib)]);
            set(&mut v, 4, &[(1, k), (2, -phib), (3, -phi)]);
            set(&mut v, 5, &[(5, uzb), (2, -wb), (3, -phib)]);
        }
    }
    CoefficientMatrices { u, v }
}

/// Generator of the full state along an edge with increment `dz`.
fn generator(space: SpaceForm, p: &FramePoint, dz: Complex64) -> CMatrix {
    let m = coefficient_matrices(space, p);
    let frame = &m.u.scale(dz) + &m.v.scale(dz.conj());
    match space {
        SpaceForm::Flat => {
            let mut a = CMatrix::zeros(5, 5);
            for i in 0..4 {
                for j in 0..4 {
                    a[(i, j)] = frame[(i, j)];
                }
            }
            // df = f_z dz + f_zbar dzbar
            a[(0, 4)] = dz;
            a[(1, 4)] = dz.conj();
            a
        }
        _ => frame,
    }
}

/// Real bilinear form of the ambient space, diagonal entries.
fn form(space: SpaceForm) -> [f64; 6] {
    match space {
        SpaceForm::Flat => [1.0, 1.0, 1.0, 1.0, 0.0, 0.0],
        s => {
            let c = s.c_f64();
            [c, c, 1.0, 1.0, 1.0, 1.0]
        }
    }
}

fn apply_j(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; v.len()];
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

/// Pointwise violation of each frame invariant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameInvariants {
    /// `|<f_z, f_z>|`
    pub conformality: f64,
    /// `|<f_z, f_zbar> - e^u|`
    pub metric: f64,
    /// `|<f_z, J f_zbar>|`
    pub lagrangian: f64,
    /// `|<F, F> - c|`; zero for `c = 0`.
    pub quadric: f64,
    /// `|<F_z, JF>|` and `|<F_zbar, JF>|`; zero for `c = 0`.
    pub horizontality: f64,
    /// Largest deviation of the full Gram matrix from its model value.
    pub gram: f64,
    /// Deviation from the column relations (`J` pairs, conjugate pairs,
    /// real position).
    pub structure: f64,
}

impl FrameInvariants {
    pub fn max(&self) -> f64 {
        [
            self.conformality,
            self.metric,
            self.lagrangian,
            self.quadric,
            self.horizontality,
            self.gram,
            self.structure,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn combine(self, other: Self) -> Self {
        Self {
            conformality: self.conformality.max(other.conformality),
            metric: self.metric.max(other.metric),
            lagrangian: self.lagrangian.max(other.lagrangian),
            quadric: self.quadric.max(other.quadric),
            horizontality: self.horizontality.max(other.horizontality),
            gram: self.gram.max(other.gram),
            structure: self.structure.max(other.structure),
        }
    }
}

/// A frame together with the position it is attached to.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    space: SpaceForm,
    state: CMatrix,
}

impl Frame {
    pub fn from_state(space: SpaceForm, state: CMatrix) -> Result<Self> {
        if (state.rows(), state.cols()) != state_shape(space) {
            return Err(Error::InvalidPath("frame state has the wrong shape"));
        }
        Ok(Self { space, state })
    }

    pub fn space(&self) -> SpaceForm {
        self.space
    }

    pub fn state(&self) -> &CMatrix {
        &self.state
    }

    /// Ambient position: `f` in `C^2` for `c = 0`, the lift `F` in `C^3`
    /// otherwise.
    pub fn position(&self) -> Vec<Complex64> {
        let col = match self.space {
            SpaceForm::Flat => 4,
            _ => 0,
        };
        let v = self.state.column(col);
        (0..v.len() / 2)
            .map(|k| Complex64::new(v[2 * k].re, v[2 * k + 1].re))
            .collect()
    }

    /// `S^T B S` over the frame columns.
    pub fn gram(&self) -> CMatrix {
        let n = frame_columns(self.space);
        let b = form(self.space);
        CMatrix::from_fn(n, n, |i, j| {
            (0..self.state.rows())
                .map(|r| self.state[(r, i)] * self.state[(r, j)] * b[r])
                .sum()
        })
    }

    /// Violations of the invariants the exact flow conserves, given the
    /// conformal factor at the frame's base point.
    pub fn invariants(&self, u: f64) -> FrameInvariants {
        let g = self.gram();
        let eu = u.exp();
        let model = model_gram(self.space, eu);
        let gram = (&g - &model).max_abs();
        let col = |j| self.state.column(j);
        let diff = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        let conj = |a: &[Complex64]| a.iter().map(|x| x.conj()).collect::<Vec<_>>();
        match self.space {
            SpaceForm::Flat => {
                let structure = diff(&col(2), &apply_j(&col(0)))
                    .max(diff(&col(3), &apply_j(&col(1))))
                    .max(diff(&col(1), &conj(&col(0))))
                    .max(col(4).iter().fold(0.0f64, |m, x| m.max(x.im.abs())));
                FrameInvariants {
                    conformality: g[(0, 0)].norm(),
                    metric: (g[(0, 1)] - eu).norm(),
                    lagrangian: g[(0, 3)].norm(),
                    quadric: 0.0,
                    horizontality: 0.0,
                    gram,
                    structure,
                }
            }
            s => {
                let structure = diff(&col(1), &apply_j(&col(0)))
                    .max(diff(&col(4), &apply_j(&col(2))))
                    .max(diff(&col(5), &apply_j(&col(3))))
                    .max(diff(&col(3), &conj(&col(2))))
                    .max(col(0).iter().fold(0.0f64, |m, x| m.max(x.im.abs())));
                FrameInvariants {
                    conformality: g[(2, 2)].norm(),
                    metric: (g[(2, 3)] - eu).norm(),
                    lagrangian: g[(2, 5)].norm(),
                    quadric: (g[(0, 0)] - s.c_f64()).norm(),
                    horizontality: g[(1, 2)].norm().max(g[(1, 3)].norm()),
                    gram,
                    structure,
                }
            }
        }
    }
}

fn model_gram(space: SpaceForm, eu: f64) -> CMatrix {
    let n = frame_columns(space);
    let mut m = CMatrix::zeros(n, n);
    let e = Complex64::new(eu, 0.0);
    let pairs: &[(usize, usize)] = match space {
        SpaceForm::Flat => &[(0, 1), (2, 3)],
        _ => &[(2, 3), (4, 5)],
    };
    for &(i, j) in pairs {
        m[(i, j)] = e;
        m[(j, i)] = e;
    }
    if space != SpaceForm::Flat {
        let c = Complex64::new(space.c_f64(), 0.0);
        m[(0, 0)] = c;
        m[(1, 1)] = c;
    }
    m
}

/// Canonical adapted frame for conformal factor `u` at the base point.
pub fn initial_frame_for(space: SpaceForm, u: f64) -> Frame {
    let s = (2.0 * u.exp()).sqrt();
    let h = Complex64::new(0.5 * s, 0.0);
    let ih = Complex64::new(0.0, 0.5 * s);
    let (rows, cols) = state_shape(space);
    let mut st = CMatrix::zeros(rows, cols);
    match space {
        SpaceForm::Flat => {
            // f_x = s e0, f_y = s e2
            st.set_column(0, &[h, ZERO, -ih, ZERO]);
            st.set_column(1, &[h, ZERO, ih, ZERO]);
            st.set_column(2, &[ZERO, h, ZERO, -ih]);
            st.set_column(3, &[ZERO, h, ZERO, ih]);
        }
        _ => {
            // F = e0, F_x = s e2, F_y = s e4
            st[(0, 0)] = ONE;
            st[(1, 1)] = ONE;
            st.set_column(2, &[ZERO, ZERO, h, ZERO, -ih, ZERO]);
            st.set_column(3, &[ZERO, ZERO, h, ZERO, ih, ZERO]);
            st.set_column(4, &[ZERO, ZERO, ZERO, h, ZERO, -ih]);
            st.set_column(5, &[ZERO, ZERO, ZERO, h, ZERO, ih]);
        }
    }
    Frame { space, state: st }
}

pub fn initial_frame(data: &SurfaceData, base: (usize, usize)) -> Result<Frame> {
    let chart = data.chart();
    if base.0 >= chart.nx() || base.1 >= chart.ny() {
        return Err(Error::InvalidPath("base point is off the chart"));
    }
    Ok(initial_frame_for(data.space(), data.u().get(base.0, base.1)))
}

/// A walk over grid nodes in which consecutive nodes are axis neighbours
/// (wrapping on periodic axes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    nodes: Vec<(usize, usize)>,
}

pub(crate) fn step_between(chart: &ConformalChart, a: (usize, usize), b: (usize, usize)) -> Option<(isize, isize)> {
    [(1, 0), (-1, 0), (0, 1), (0, -1)]
        .into_iter()
        .find(|&(dx, dy)| chart.offset(a.0, a.1, dx, dy) == Some(b))
}

impl GridPath {
    pub fn new(chart: &ConformalChart, nodes: Vec<(usize, usize)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidPath("empty path"));
        }
        for &(ix, iy) in &nodes {
            if ix >= chart.nx() || iy >= chart.ny() {
                return Err(Error::InvalidPath("path leaves the chart"));
            }
        }
        for w in nodes.windows(2) {
            if step_between(chart, w[0], w[1]).is_none() {
                return Err(Error::InvalidPath("consecutive path nodes are not neighbours"));
            }
        }
        Ok(Self { nodes })
    }

    /// Straight run along row `iy` (no wrapping).
    pub fn row(chart: &ConformalChart, iy: usize, from: usize, to: usize) -> Result<Self> {
        Self::new(chart, straight(from, to).map(|ix| (ix, iy)).collect())
    }

    /// Straight run along column `ix` (no wrapping).
    pub fn column(chart: &ConformalChart, ix: usize, from: usize, to: usize) -> Result<Self> {
        Self::new(chart, straight(from, to).map(|iy| (ix, iy)).collect())
    }

    pub fn row_then_column(chart: &ConformalChart, from: (usize, usize), to: (usize, usize)) -> Result<Self> {
        let mut nodes: Vec<_> = straight(from.0, to.0).map(|ix| (ix, from.1)).collect();
        nodes.extend(straight(from.1, to.1).skip(1).map(|iy| (to.0, iy)));
        Self::new(chart, nodes)
    }

    pub fn column_then_row(chart: &ConformalChart, from: (usize, usize), to: (usize, usize)) -> Result<Self> {
        let mut nodes: Vec<_> = straight(from.1, to.1).map(|iy| (from.0, iy)).collect();
        nodes.extend(straight(from.0, to.0).skip(1).map(|ix| (ix, to.1)));
        Self::new(chart, nodes)
    }

    /// One full turn around a periodic x axis, starting and ending at `ix0`.
    pub fn periodic_row(chart: &ConformalChart, ix0: usize, iy: usize) -> Result<Self> {
        if !chart.periodic_x() {
            return Err(Error::InvalidPath("x axis is not periodic"));
        }
        let n = chart.nx();
        Self::new(chart, (0..=n).map(|k| ((ix0 + k) % n, iy)).collect())
    }

    pub fn from_loop(chart: &ConformalChart, lp: &GridLoop) -> Result<Self> {
        let nodes = lp
            .nodes(chart)
            .map_err(|_| Error::InvalidPath("loop does not fit the chart"))?;
        Self::new(chart, nodes)
    }

    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    /// Euclidean length in the coordinate `z`.
    pub fn length(&self, chart: &ConformalChart) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| match step_between(chart, w[0], w[1]) {
                Some((_, 0)) => chart.hx(),
                _ => chart.hy(),
            })
            .sum()
    }
}

fn straight(from: usize, to: usize) -> impl Iterator<Item = usize> {
    let n = from.abs_diff(to);
    (0..=n).map(move |k| if to >= from { from + k } else { from - k })
}

/// Value at the midpoint of the edge `(lo, lo + 1)` by cubic interpolation
/// along one axis.
pub(crate) fn midpoint<T: Sample>(get: impl Fn(usize) -> T, n: usize, periodic: bool, lo: usize) -> T {
    let w = |k: isize| (lo as isize + k).rem_euclid(n as isize) as usize;
    if periodic || (lo >= 1 && lo + 2 < n) {
        (get(w(0)) * 9.0 + get(w(1)) * 9.0 - get(w(-1)) - get(w(2))) * (1.0 / 16.0)
    } else if lo == 0 {
        (get(0) * 5.0 + get(1) * 15.0 - get(2) * 5.0 + get(3)) * (1.0 / 16.0)
    } else {
        (get(n - 4) - get(n - 3) * 5.0 + get(n - 2) * 15.0 + get(n - 1) * 5.0) * (1.0 / 16.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorOptions {
    /// Rescale `F` and `JF` back onto the quadric after every step.
    pub project: bool,
}

/// Frame transport over one data set, with the derivative of `u`
/// precomputed on the grid.
#[derive(Debug, Clone)]
pub struct FrameIntegrator<'a> {
    data: &'a SurfaceData,
    u_z: Vec<Complex64>,
    options: IntegratorOptions,
}

/// Frames and invariant violations along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSamples {
    pub frames: Vec<Frame>,
    pub drift: FrameInvariants,
}

impl PathSamples {
    pub fn last(&self) -> &Frame {
        self.frames.last().expect("paths are non-empty")
    }
}

impl<'a> FrameIntegrator<'a> {
    pub fn new(data: &'a SurfaceData) -> Self {
        Self::with_options(data, IntegratorOptions::default())
    }

    pub fn with_options(data: &'a SurfaceData, options: IntegratorOptions) -> Self {
        let chart = data.chart();
        let stencil = finest_stencil(chart);
        let u_z = wirtinger_unchecked(&data.u().to_complex(), Wirtinger::Dz, stencil).into_values();
        Self { data, u_z, options }
    }

    pub fn data(&self) -> &SurfaceData {
        self.data
    }

    fn point(&self, i: usize) -> FramePoint {
        FramePoint {
            u: self.data.u().at(i),
            u_z: self.u_z[i],
            phi: self.data.phi().at(i),
            psi: self.data.psi().at(i),
        }
    }

    fn edge_midpoint(&self, a: (usize, usize), b: (usize, usize), step: (isize, isize)) -> FramePoint {
        let chart = self.data.chart();
        let (u, phi, psi) = (self.data.u().values(), self.data.phi().values(), self.data.psi().values());
        if step.1 == 0 {
            let lo = if step.0 > 0 { a.0 } else { b.0 };
            let iy = a.1;
            let idx = |k: usize| chart.index(k, iy);
            let (n, p) = (chart.nx(), chart.periodic_x());
            FramePoint {
                u: midpoint(|k| u[idx(k)], n, p, lo),
                u_z: midpoint(|k| self.u_z[idx(k)], n, p, lo),
                phi: midpoint(|k| phi[idx(k)], n, p, lo),
                psi: midpoint(|k| psi[idx(k)], n, p, lo),
            }
        } else {
            let lo = if step.1 > 0 { a.1 } else { b.1 };
            let ix = a.0;
            let idx = |k: usize| chart.index(ix, k);
            let (n, p) = (chart.ny(), chart.periodic_y());
            FramePoint {
                u: midpoint(|k| u[idx(k)], n, p, lo),
                u_z: midpoint(|k| self.u_z[idx(k)], n, p, lo),
                phi: midpoint(|k| phi[idx(k)], n, p, lo),
                psi: midpoint(|k| psi[idx(k)], n, p, lo),
            }
        }
    }

    /// One Runge-Kutta step from node `a` to its neighbour `b`.
    fn step(&self, state: &CMatrix, a: (usize, usize), b: (usize, usize)) -> Result<CMatrix> {
        let chart = self.data.chart();
        let step = step_between(chart, a, b).ok_or(Error::InvalidPath("consecutive path nodes are not neighbours"))?;
        let dz = Complex64::new(step.0 as f64 * chart.hx(), step.1 as f64 * chart.hy());
        let (ia, ib) = (chart.index(a.0, a.1), chart.index(b.0, b.1));
        let (pa, pm, pb) = (self.point(ia), self.edge_midpoint(a, b, step), self.point(ib));
        if !pm.is_finite() {
            return Err(Error::NonFiniteCoefficients { index: ia });
        }
        let space = self.data.space();
        let (g0, gm, g1) = (
            generator(space, &pa, dz),
            generator(space, &pm, dz),
            generator(space, &pb, dz),
        );
        if !(g0.is_finite() && gm.is_finite() && g1.is_finite()) {
            return Err(Error::NonFiniteCoefficients { index: ia });
        }
        let half = Complex64::new(0.5, 0.0);
        let k1 = state * &g0;
        let k2 = &(state + &k1.scale(half)) * &gm;
        let k3 = &(state + &k2.scale(half)) * &gm;
        let k4 = &(state + &k3) * &g1;
        let two = Complex64::new(2.0, 0.0);
        let incr = &(&(&k1 + &k2.scale(two)) + &k3.scale(two)) + &k4;
        let mut next = state + &incr.scale(Complex64::new(1.0 / 6.0, 0.0));
        if self.options.project && space != SpaceForm::Flat {
            project_quadric(space, &mut next);
        }
        Ok(next)
    }

    /// Transport `frame0`, attached to the first node of `path`, along it.
    pub fn integrate_path(&self, path: &GridPath, frame0: &Frame) -> Result<PathSamples> {
        if frame0.space != self.data.space() {
            return Err(Error::InvalidPath("frame and data live in different space forms"));
        }
        let chart = self.data.chart();
        let nodes = path.nodes();
        let mut frames = Vec::with_capacity(nodes.len());
        let u_at = |n: (usize, usize)| self.data.u().get(n.0, n.1);
        let mut drift = frame0.invariants(u_at(nodes[0]));
        frames.push(frame0.clone());
        for w in nodes.windows(2) {
            if w[0].0 >= chart.nx() || w[1].0 >= chart.nx() || w[0].1 >= chart.ny() || w[1].1 >= chart.ny() {
                return Err(Error::InvalidPath("path leaves the chart"));
            }
            let state = self.step(&frames.last().expect("non-empty").state, w[0], w[1])?;
            let f = Frame {
                space: frame0.space,
                state,
            };
            drift = drift.combine(f.invariants(u_at(w[1])));
            frames.push(f);
        }
        Ok(PathSamples { frames, drift })
    }
}

fn project_quadric(space: SpaceForm, state: &mut CMatrix) {
    let c = space.c_f64();
    let b = form(space);
    let q: f64 = (0..6).map(|r| b[r] * state[(r, 0)].re * state[(r, 0)].re).sum();
    let s = (c * q).sqrt();
    if s > 0.0 && s.is_finite() {
        for r in 0..6 {
            state[(r, 0)] /= s;
            state[(r, 1)] /= s;
        }
    }
}

pub fn integrate_frame_path(data: &SurfaceData, path: &GridPath, frame0: &Frame) -> Result<PathSamples> {
    FrameIntegrator::new(data).integrate_path(path, frame0)
}

/// Sampled immersion: `f` in `C^2` for `c = 0`, the lift `F` in `C^3`
/// for `c = +-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    space: SpaceForm,
    chart: ConformalChart,
    points: Vec<[Complex64; 3]>,
}

impl Immersion {
    /// `points` holds one ambient point per node; the third coordinate is
    /// ignored for `c = 0`.
    pub fn new(space: SpaceForm, chart: ConformalChart, points: Vec<[Complex64; 3]>) -> Result<Self> {
        if points.len() != chart.len() {
            return Err(Error::LengthMismatch {
                expected: chart.len(),
                got: points.len(),
            });
        }
        let dim = Self::dim_of(space);
        if let Some(index) = points
            .iter()
            .position(|p| p[..dim].iter().any(|v| !(v.re.is_finite() && v.im.is_finite())))
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { space, chart, points })
    }

    /// Samples an analytic map, for tests and synthetic inputs.
    pub fn from_fn(space: SpaceForm, chart: ConformalChart, f: impl Fn(f64, f64) -> [Complex64; 3]) -> Result<Self> {
        let points = (0..chart.len())
            .map(|i| {
                let (ix, iy) = chart.coords(i);
                f(chart.x(ix), chart.y(iy))
            })
            .collect();
        Self::new(space, chart, points)
    }

    fn dim_of(space: SpaceForm) -> usize {
        match space {
            SpaceForm::Flat => 2,
            _ => 3,
        }
    }

    pub fn space(&self) -> SpaceForm {
        self.space
    }

    pub fn chart(&self) -> &ConformalChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        Self::dim_of(self.space)
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i][..self.dim()]
    }

    pub fn points(&self) -> &[[Complex64; 3]] {
        &self.points
    }

    /// Projective representative of sample `i` (lift samples only).
    pub fn projective(&self, i: usize, tolerance: f64) -> Result<[Complex64; 3]> {
        hopf_project(&self.points[i], self.space, tolerance)
    }

    /// Largest `|(F, F) - c|` over the samples; zero for `c = 0`.
    pub fn quadric_deviation(&self) -> f64 {
        if self.space == SpaceForm::Flat {
            return 0.0;
        }
        self.points
            .iter()
            .map(|p| (hermitian(self.space, p, p).re - self.space.c_f64()).abs())
            .fold(0.0, f64::max)
    }
}

/// `(Z, W) = c z0 conj(w0) + z1 conj(w1) + z2 conj(w2)`.
pub fn hermitian(space: SpaceForm, z: &[Complex64; 3], w: &[Complex64; 3]) -> Complex64 {
    z[0] * w[0].conj() * space.c_f64() + z[1] * w[1].conj() + z[2] * w[2].conj()
}

/// Point of the complex space form represented by the lift sample `f`:
/// rescaled onto the quadric, then rotated along the fibre so that its
/// first non-negligible coordinate is real and positive.
pub fn hopf_project(f: &[Complex64; 3], space: SpaceForm, tolerance: f64) -> Result<[Complex64; 3]> {
    if space == SpaceForm::Flat {
        return Err(Error::InvalidSpaceForm(0));
    }
    let size = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if size == 0.0 {
        return Err(Error::ZeroVector);
    }
    let c = space.c_f64();
    let q = hermitian(space, f, f).re;
    let deviation = (q - c).abs();
    if deviation > tolerance || c * q <= 0.0 {
        return Err(Error::QuadricViolation { deviation });
    }
    let s = (c * q).sqrt();
    let k = f.iter().position(|v| v.norm() > 1e-8 * size).expect("non-zero vector");
    let phase = f[k].conj() / f[k].norm();
    Ok([f[0] * phase / s, f[1] * phase / s, f[2] * phase / s])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    pub tolerance: Tolerance,
    pub override_integrability: bool,
    /// Hard ceiling on the cross-path defect.
    pub ceiling: f64,
    pub integrator: IntegratorOptions,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::default(),
            override_integrability: false,
            ceiling: 1.0,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub immersion: Immersion,
    /// Frames of the row-then-column sweep, one per node.
    pub frames: Vec<Frame>,
    /// Largest state difference between the row-then-column and the
    /// column-then-row sweeps.
    pub cross_defect: f64,
    /// Worst frame invariant violation over the row-then-column sweep.
    pub drift: FrameInvariants,
}

fn sweep(
    integ: &FrameIntegrator,
    base: (usize, usize),
    frame0: &Frame,
    rows_first: bool,
) -> Result<(Vec<Option<Frame>>, FrameInvariants)> {
    let chart = *integ.data().chart();
    let mut out: Vec<Option<Frame>> = vec![None; chart.len()];
    let mut drift = FrameInvariants::default();
    let mut spine = |path: GridPath, out: &mut Vec<Option<Frame>>, start: &Frame| -> Result<()> {
        let s = integ.integrate_path(&path, start)?;
        drift = drift.combine(s.drift);
        for (node, f) in path.nodes().iter().zip(s.frames) {
            out[chart.index(node.0, node.1)] = Some(f);
        }
        Ok(())
    };
    let (first_len, second_len) = if rows_first {
        (chart.nx(), chart.ny())
    } else {
        (chart.ny(), chart.nx())
    };
    let first_base = if rows_first { base.0 } else { base.1 };
    let second_base = if rows_first { base.1 } else { base.0 };
    let line = |fixed: usize, from: usize, to: usize, along_x: bool| {
        if along_x {
            GridPath::row(&chart, fixed, from, to)
        } else {
            GridPath::column(&chart, fixed, from, to)
        }
    };
    for to in [first_len - 1, 0] {
        spine(line(second_base, first_base, to, rows_first)?, &mut out, frame0)?;
    }
    for k in 0..first_len {
        let node = if rows_first { (k, base.1) } else { (base.0, k) };
        let start = out[chart.index(node.0, node.1)].clone().expect("spine filled");
        for to in [second_len - 1, 0] {
            spine(line(k, second_base, to, !rows_first)?, &mut out, &start)?;
        }
    }
    Ok((out, drift))
}

/// Integrates the frame over the whole chart from `base`, after checking
/// integrability (unless overridden).
pub fn reconstruct_grid(data: &SurfaceData, base: (usize, usize), options: &ReconstructOptions) -> Result<Reconstruction> {
    if !options.override_integrability {
        let r = integrability_residuals(data);
        let threshold = options.tolerance.threshold(data.chart());
        if !r.passes(&options.tolerance) {
            return Err(Error::IntegrabilityRejected {
                linf: r.linf(),
                threshold,
            });
        }
    }
    let frame0 = initial_frame(data, base)?;
    let integ = FrameIntegrator::with_options(data, options.integrator);
    let (rc, drift) = sweep(&integ, base, &frame0, true)?;
    let (cr, _) = sweep(&integ, base, &frame0, false)?;
    let mut cross_defect = 0.0f64;
    let mut frames = Vec::with_capacity(rc.len());
    for (a, b) in rc.into_iter().zip(cr) {
        let (a, b) = (a.expect("sweep covers the chart"), b.expect("sweep covers the chart"));
        cross_defect = cross_defect.max((&a.state - &b.state).max_abs());
        frames.push(a);
    }
    if !(cross_defect <= options.ceiling) {
        return Err(Error::ReconstructionFailed {
            defect: cross_defect,
            ceiling: options.ceiling,
        });
    }
    let points = frames
        .iter()
        .map(|f| {
            let p = f.position();
            [p[0], p[1], p.get(2).copied().unwrap_or(ZERO)]
        })
        .collect();
    let immersion = Immersion::new(data.space(), *data.chart(), points)?;
    Ok(Reconstruction {
        immersion,
        frames,
        cross_defect,
        drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    /// Operator norm of the change of the frame columns around the loop.
    pub frame: f64,
    /// Distance between start and end positions.
    pub position: f64,
}

pub fn monodromy(data: &SurfaceData, lp: &GridLoop) -> Result<Monodromy> {
    let chart = data.chart();
    let path = GridPath::from_loop(chart, lp)?;
    let start = path.nodes()[0];
    let frame0 = initial_frame(data, start)?;
    let s = integrate_frame_path(data, &path, &frame0)?;
    let end = s.last();
    let n = frame_columns(data.space());
    let d = &end.state - &frame0.state;
    let frame_block = CMatrix::from_fn(d.rows(), n, |i, j| d[(i, j)]);
    let (p0, p1) = (frame0.position(), end.position());
    let position = p0.iter().zip(&p1).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    Ok(Monodromy {
        frame: frame_block.operator_norm(),
        position,
    })
}

/// Frame part of [`monodromy`].
pub fn monodromy_defect(data: &SurfaceData, lp: &GridLoop) -> Result<f64> {
    monodromy(data, lp).map(|m| m.frame)
}
