//! Stiefel frames on a truncated polarized mode window: projections,
//! the universal connection and curvature, the transgression form, virtual
//! dimension, and the inclusion of finite Grassmannians.
//!
//! Window rows are ordered by mode, negative modes first: row
//! `(m + n_minus)·fiber + c` holds component `c` of mode `m`, for
//! `m ∈ [−n_minus, n_plus)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::chernforms::{wedge_trace, NodeOpForm};
use crate::error::{Error, Result};
use crate::geomgrid::{differentiate, multi_indices, simpson_weights, Codomain, GradedForm, SampledMap};
use crate::numkernel::{
    frobenius, identity, left_pseudo_inverse, numerical_rank, projection_residual, range_basis, smallest_singular_value,
    ComplexMatrix, ONE, ZERO,
};
use crate::par;

/// Modes `−n_minus … n_plus − 1`, each carrying `fiber` components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolarizedWindow {
    pub n_minus: usize,
    pub n_plus: usize,
    pub fiber: usize,
}

impl PolarizedWindow {
    pub fn new(n_minus: usize, n_plus: usize) -> Self {
        PolarizedWindow { n_minus, n_plus, fiber: 1 }
    }

    pub fn with_fiber(n_minus: usize, n_plus: usize, fiber: usize) -> Self {
        PolarizedWindow { n_minus, n_plus, fiber }
    }

    /// Symmetric window `[−m, m)`.
    pub fn symmetric(m: usize) -> Self {
        PolarizedWindow::new(m, m)
    }

    pub fn dim(&self) -> usize {
        (self.n_minus + self.n_plus) * self.fiber
    }

    pub fn plus_dim(&self) -> usize {
        self.n_plus * self.fiber
    }

    pub fn minus_dim(&self) -> usize {
        self.n_minus * self.fiber
    }

    pub fn row(&self, mode: i64, comp: usize) -> usize {
        debug_assert!(mode >= -(self.n_minus as i64) && mode < self.n_plus as i64 && comp < self.fiber);
        (mode + self.n_minus as i64) as usize * self.fiber + comp
    }

    pub fn mode_of(&self, row: usize) -> i64 {
        (row / self.fiber) as i64 - self.n_minus as i64
    }

    pub fn contains_mode(&self, mode: i64) -> bool {
        mode >= -(self.n_minus as i64) && mode < self.n_plus as i64
    }

    /// Grading involution: `−1` on negative modes, `+1` on the rest.
    pub fn epsilon(&self) -> ComplexMatrix {
        let mut e = ComplexMatrix::zeros(self.dim(), self.dim());
        for r in 0..self.dim() {
            e[(r, r)] = if self.mode_of(r) < 0 { -ONE } else { ONE };
        }
        e
    }

    pub fn pi_plus(&self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.dim(), self.dim());
        for r in self.minus_dim()..self.dim() {
            p[(r, r)] = ONE;
        }
        p
    }

    /// Rows of `m` belonging to modes `[lo, hi)`.
    pub fn select_modes(&self, m: &ComplexMatrix, lo: i64, hi: i64) -> ComplexMatrix {
        let rows: Vec<usize> = (0..self.dim()).filter(|&r| (lo..hi).contains(&self.mode_of(r))).collect();
        m.select_rows(rows.iter())
    }

    /// Standard basis columns of `H₊` (the basepoint frame `w₀`).
    pub fn standard_plus_columns(&self) -> ComplexMatrix {
        let mut w = ComplexMatrix::zeros(self.dim(), self.plus_dim());
        for j in 0..self.plus_dim() {
            w[(self.minus_dim() + j, j)] = ONE;
        }
        w
    }

    fn require_square(&self) -> Result<()> {
        if self.n_minus != self.n_plus {
            return Err(Error::AsymmetricWindow { n_minus: self.n_minus, n_plus: self.n_plus });
        }
        Ok(())
    }

    /// The polarization swap `U e_m = e_{−m−1}` (componentwise on the fiber).
    pub fn flip_matrix(&self) -> Result<ComplexMatrix> {
        self.require_square()?;
        let mut u = ComplexMatrix::zeros(self.dim(), self.dim());
        for r in 0..self.dim() {
            let m = self.mode_of(r);
            let c = r % self.fiber;
            u[(self.row(-m - 1, c), r)] = ONE;
        }
        Ok(u)
    }
}

/// Data that makes the safe-window index count valid for a frame whose
/// columns are `X e_j` for input modes `j ∈ [0, columns)` of a banded `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafeWindow {
    /// Number of input modes `C` spanned by the frame columns.
    pub columns: usize,
    pub bandwidth: usize,
}

/// An injective frame `w` on a window, with its cached orthogonal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    window: PolarizedWindow,
    w: ComplexMatrix,
    pi: ComplexMatrix,
    safe: Option<SafeWindow>,
}

/// Smallest singular value a frame may have.
pub const FRAME_SMIN: f64 = 1e-8;

impl Frame {
    pub fn new(window: PolarizedWindow, w: ComplexMatrix) -> Result<Self> {
        if w.nrows() != window.dim() || w.ncols() == 0 || w.ncols() > w.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "frame of shape {:?} on a window of dimension {}",
                w.shape(),
                window.dim()
            )));
        }
        let pi = frame_projection(&w)?;
        Ok(Frame { window, w, pi, safe: None })
    }

    /// The basepoint frame `w₀` spanning `H₊`.
    pub fn basepoint(window: PolarizedWindow) -> Self {
        let w = window.standard_plus_columns();
        Frame { window, pi: window.pi_plus(), w, safe: None }
    }

    pub fn with_safe_window(mut self, safe: SafeWindow) -> Self {
        self.safe = Some(safe);
        self
    }

    pub fn window(&self) -> PolarizedWindow {
        self.window
    }

    pub fn w(&self) -> &ComplexMatrix {
        &self.w
    }

    pub fn safe_window(&self) -> Option<SafeWindow> {
        self.safe
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// The same frame acted on from the right by `q` (a gauge change).
    pub fn gauge(&self, q: &ComplexMatrix) -> Result<Frame> {
        Frame::new(self.window, &self.w * q)
    }
}

/// `w (w* w)^{-1} w*`.
pub fn frame_projection(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(w * left_pseudo_inverse(w)?)
}

pub fn projection_from_frame(f: &Frame) -> ComplexMatrix {
    f.pi.clone()
}

/// `F = 2π − I`.
pub fn involution_from_projection(pi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let res = projection_residual(pi);
    if !(res < 1e-8) {
        return Err(Error::NotProjection(res));
    }
    Ok(pi * Complex64::new(2.0, 0.0) - identity(pi.nrows()))
}

/// Connection `Θ = (w* w)^{-1} w* π_W dw`.
///
/// `w* π_W = w*`, so this is the left pseudo-inverse applied to `dw`.
pub fn connection_theta(fr: &Frame, dw: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(left_pseudo_inverse(&fr.w)? * dw)
}

/// Curvature `w⁻¹ π [(∂_u π)(∂_v π) − (∂_v π)(∂_u π)] w`.
pub fn curvature_omega(fr: &Frame, dpi_u: &ComplexMatrix, dpi_v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let pinv = left_pseudo_inverse(&fr.w)?;
    let comm = dpi_u * dpi_v - dpi_v * dpi_u;
    Ok(pinv * &fr.pi * comm * &fr.w)
}

/// Derivative of `π_W` along a frame direction `dw`:
/// `(I − π) dw w⁺ + (w⁺)* dw* (I − π)` with `w⁺` the left pseudo-inverse.
pub fn projection_derivative(w: &ComplexMatrix, dw: &ComplexMatrix) -> Result<ComplexMatrix> {
    let pinv = left_pseudo_inverse(w)?;
    let pi = w * &pinv;
    let h = identity(w.nrows()) - pi;
    let a = &h * dw * &pinv;
    Ok(&a + a.adjoint())
}

fn check_isometry(s: &ComplexMatrix) -> Result<()> {
    let res = frobenius(&(s.adjoint() * s - identity(s.ncols())));
    if !(res < 1e-8) {
        return Err(Error::NotIsometry(res));
    }
    Ok(())
}

/// Universal connection `S* dS` on the finite Stiefel manifold.
pub fn finite_universal_connection(s: &ComplexMatrix, ds: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_isometry(s)?;
    Ok(s.adjoint() * ds)
}

/// Curvature of `S* dS` on two tangent vectors: `(h dS₁)*(h dS₂) − (h dS₂)*(h dS₁)`
/// with `h = I − S S*` the horizontal projection.
pub fn finite_curvature(s: &ComplexMatrix, ds1: &ComplexMatrix, ds2: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_isometry(s)?;
    let h = identity(s.nrows()) - s * s.adjoint();
    let (a, b) = (&h * ds1, &h * ds2);
    Ok(a.adjoint() * &b - b.adjoint() * &a)
}

/// `Θ` on every coordinate direction at one node.
pub fn theta_at(w: &ComplexMatrix, dw: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let pinv = left_pseudo_inverse(w)?;
    Ok(dw.iter().map(|d| &pinv * d).collect())
}

/// `Θ` and `Ω` at one node as operator-valued forms.
pub fn connection_and_curvature_at(w: &ComplexMatrix, dw: &[ComplexMatrix]) -> Result<(NodeOpForm, NodeOpForm)> {
    let dim = dw.len();
    let pinv = left_pseudo_inverse(w)?;
    let pi = w * &pinv;
    let h = identity(w.nrows()) - &pi;
    let dpi: Vec<ComplexMatrix> = dw
        .iter()
        .map(|d| {
            let a = &h * d * &pinv;
            &a + a.adjoint()
        })
        .collect();
    let theta = NodeOpForm::one(dw.iter().map(|d| &pinv * d).collect());
    let left = &pinv * &pi;
    let omega = NodeOpForm::two(dim, |a, b| &left * (&dpi[a] * &dpi[b] - &dpi[b] * &dpi[a]) * w);
    Ok((theta, omega))
}

/// Number of Simpson nodes for the auxiliary `t` integral in `η`.
pub const ETA_T_NODES: usize = 17;

/// Components of the transgression form `η_k` at one node, one per increasing
/// multi-index of degree `2k − 1`.
pub fn eta_at(w: &ComplexMatrix, dw: &[ComplexMatrix], k: usize) -> Result<Vec<Complex64>> {
    let dim = dw.len();
    if k == 0 || 2 * k - 1 > dim {
        return Err(Error::DegreeOverflow { degree: 2 * k.max(1) - 1, dim });
    }
    let (theta, omega) = connection_and_curvature_at(w, dw)?;
    let theta_sq = NodeOpForm::two(dim, |a, b| theta.at1(a) * theta.at1(b) - theta.at1(b) * theta.at1(a));
    let idx = multi_indices(dim, 2 * k - 1);
    let mut acc = vec![ZERO; idx.len()];
    let tw = simpson_weights(ETA_T_NODES, 1.0 / (ETA_T_NODES - 1) as f64);
    for (i, wt) in tw.iter().enumerate() {
        let t = i as f64 / (ETA_T_NODES - 1) as f64;
        let phi = NodeOpForm::two(dim, |a, b| {
            omega.at2(a, b) * Complex64::new(t, 0.0) + theta_sq.at2(a, b) * Complex64::new(t * t - t, 0.0)
        });
        let mut factors = vec![&theta];
        factors.extend(std::iter::repeat(&phi).take(k - 1));
        for (c, m) in idx.iter().enumerate() {
            acc[c] += wedge_trace(&factors, m) * *wt;
        }
    }
    let scale = crate::chernforms::ChernCoefficients::even(k).scalar * Complex64::new(k as f64, 0.0);
    Ok(acc.into_iter().map(|z| z * scale).collect())
}

/// Transgression form `η_k` of a sampled frame family.
pub fn transgression_eta(frames: &SampledMap, k: usize) -> Result<GradedForm> {
    let g = frames.domain();
    if k == 0 || 2 * k - 1 > g.dim() {
        return Err(Error::DegreeOverflow { degree: 2 * k.max(1) - 1, dim: g.dim() });
    }
    let jets = differentiate(frames);
    let per_node = par::map_indices(g.n_nodes(), |node| {
        let dw: Vec<ComplexMatrix> = jets.partials.iter().map(|p| p[node].clone()).collect();
        eta_at(frames.value(node), &dw, k)
    });
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;
    GradedForm::from_nodes(g, 2 * k - 1, -(k as i32), per_node)
}

/// Projection family of a sampled frame family.
pub fn projection_family(frames: &SampledMap) -> Result<SampledMap> {
    let vals = par::map_slice(frames.values(), frame_projection);
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    SampledMap::new(frames.domain().clone(), vals, Codomain::Projection)
}

/// Finite-rank encoding of a subspace: explicit orthonormal columns plus a set
/// of standard-basis tail modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSpec {
    pub window: PolarizedWindow,
    pub columns: ComplexMatrix,
    pub tail_modes: Vec<i64>,
    pub bandwidth: usize,
}

impl SubspaceSpec {
    pub fn new(window: PolarizedWindow, columns: ComplexMatrix, tail_modes: Vec<i64>, bandwidth: usize) -> Result<Self> {
        if columns.ncols() > 0 && columns.nrows() != window.dim() {
            return Err(Error::ShapeMismatch(format!("columns have {} rows, window {}", columns.nrows(), window.dim())));
        }
        if tail_modes.iter().any(|&m| !window.contains_mode(m)) {
            return Err(Error::WindowTooSmall("tail mode outside the window".into()));
        }
        if columns.ncols() > 0 {
            let res = frobenius(&(columns.adjoint() * &columns - identity(columns.ncols())));
            if !(res < 1e-10) {
                return Err(Error::NotIsometry(res));
            }
            for &m in &tail_modes {
                for c in 0..window.fiber {
                    let r = window.row(m, c);
                    let leak = columns.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if leak > 1e-10 {
                        return Err(Error::NotIsometry(leak));
                    }
                }
            }
        }
        Ok(SubspaceSpec { window, columns, tail_modes, bandwidth })
    }

    /// Frame `[columns | e_tail]`.
    pub fn frame(&self) -> Result<Frame> {
        let win = self.window;
        let ntail = self.tail_modes.len() * win.fiber;
        let mut w = ComplexMatrix::zeros(win.dim(), self.columns.ncols() + ntail);
        if self.columns.ncols() > 0 {
            w.view_mut((0, 0), self.columns.shape()).copy_from(&self.columns);
        }
        let mut j = self.columns.ncols();
        for &m in &self.tail_modes {
            for c in 0..win.fiber {
                w[(win.row(m, c), j)] = ONE;
                j += 1;
            }
        }
        Frame::new(win, w)
    }

    /// `H₊` with explicit extra columns `e_m` for each listed mode.
    pub fn plus_with_modes(window: PolarizedWindow, extra: &[i64]) -> Result<Self> {
        let mut cols = ComplexMatrix::zeros(window.dim(), extra.len() * window.fiber);
        for (j, &m) in extra.iter().enumerate() {
            for c in 0..window.fiber {
                cols[(window.row(m, c), j * window.fiber + c)] = ONE;
            }
        }
        let tail = (0..window.n_plus as i64).filter(|m| !extra.contains(m)).collect();
        SubspaceSpec::new(window, cols, tail, 0)
    }
}

/// JSON form of a [`SubspaceSpec`]: columns inline as `[re, im]` rows, or the
/// first node of a binary grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpecJson {
    pub n_minus: usize,
    pub n_plus: usize,
    #[serde(default)]
    pub columns: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub columns_file: Option<String>,
    pub tail_modes: Vec<i64>,
    pub bandwidth: usize,
}

impl SubspaceSpecJson {
    pub fn resolve(&self, base: Option<&Path>) -> Result<SubspaceSpec> {
        let window = PolarizedWindow::new(self.n_minus, self.n_plus);
        let columns = match (&self.columns, &self.columns_file) {
            (Some(rows), None) => {
                let ncols = rows.first().map_or(0, |r| r.len());
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::Format("ragged column matrix".into()));
                }
                ComplexMatrix::from_fn(rows.len(), ncols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]))
            }
            (None, Some(file)) => {
                let path = base.map_or_else(|| Path::new(file).to_path_buf(), |b| b.join(file));
                let map = crate::geomgrid::read_grid_file(&path, Codomain::Frame)?;
                map.value(0).clone()
            }
            (None, None) => ComplexMatrix::zeros(window.dim(), 0),
            (Some(_), Some(_)) => return Err(Error::Format("give either columns or columns_file".into())),
        };
        SubspaceSpec::new(window, columns, self.tail_modes.clone(), self.bandwidth)
    }
}

/// Kernel and cokernel counts behind a virtual dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualDimensionReport {
    pub virtual_dimension: i64,
    pub kernel: usize,
    pub cokernel: usize,
    pub safe_modes: usize,
    pub band_leak: f64,
    pub method: String,
}

/// Relative rank threshold for the kernel and cokernel counts.
pub const INDEX_RANK_RTOL: f64 = 1e-8;
/// Largest entry allowed outside a declared band.
pub const BAND_TOL: f64 = 1e-10;

fn rank_rel(m: &ComplexMatrix, scale: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    numerical_rank(m, INDEX_RANK_RTOL * scale.max(f64::MIN_POSITIVE)).numerical_rank
}

/// Largest entry of `frame` outside the band `|row mode − column mode| ≤ B`,
/// where column `j` carries input mode `j / fiber`.
fn band_leak(win: &PolarizedWindow, frame: &ComplexMatrix, bandwidth: usize) -> f64 {
    let mut leak = 0.0f64;
    for j in 0..frame.ncols() {
        let cm = (j / win.fiber) as i64;
        for r in 0..frame.nrows() {
            if (win.mode_of(r) - cm).unsigned_abs() as usize > bandwidth {
                leak = leak.max(frame[(r, j)].norm());
            }
        }
    }
    leak
}

/// Safe-window index count.
///
/// `ker = #columns − rank(π₊ w)` and
/// `coker = S·fiber − rank(P_{[0,S)} w)` on the safe modes `[0, S)`, where
/// no column outside the frame can reach.
pub fn safe_window_index(win: &PolarizedWindow, frame: &ComplexMatrix, safe_modes: usize) -> VirtualDimensionReport {
    let scale = frame.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let plus = win.select_modes(frame, 0, win.n_plus as i64);
    let kernel = frame.ncols() - rank_rel(&plus, scale);
    let safe = win.select_modes(frame, 0, safe_modes as i64);
    let cokernel = safe_modes * win.fiber - rank_rel(&safe, scale);
    VirtualDimensionReport {
        virtual_dimension: kernel as i64 - cokernel as i64,
        kernel,
        cokernel,
        safe_modes,
        band_leak: 0.0,
        method: "safe_window".into(),
    }
}

/// Virtual dimension of `X(H₊)` for a banded operator `X` on the window.
///
/// The frame is `X e_j` for input modes `j ∈ [0, C)` with `C = n_plus − B`, so
/// every column fits inside the window; the safe modes are `[0, C − B)`.
pub fn virtual_dimension_operator(
    win: &PolarizedWindow,
    x: &ComplexMatrix,
    bandwidth: usize,
) -> Result<VirtualDimensionReport> {
    let frame = operator_image_frame(win, x, bandwidth)?;
    virtual_dimension(&frame)
}

/// Frame for `X(H₊)` trimmed to the columns whose image fits in the window.
pub fn operator_image_frame(win: &PolarizedWindow, x: &ComplexMatrix, bandwidth: usize) -> Result<Frame> {
    if x.shape() != (win.dim(), win.dim()) {
        return Err(Error::ShapeMismatch(format!("operator {:?} on window of dimension {}", x.shape(), win.dim())));
    }
    if win.n_plus <= 2 * bandwidth || win.n_minus < bandwidth {
        return Err(Error::WindowTooSmall(format!(
            "window ({}, {}) cannot hold bandwidth {bandwidth}",
            win.n_minus, win.n_plus
        )));
    }
    let c = win.n_plus - bandwidth;
    let cols = x.columns(win.minus_dim(), c * win.fiber).into_owned();
    Ok(Frame::new(*win, cols)?.with_safe_window(SafeWindow { columns: c, bandwidth }))
}

/// Virtual dimension of the subspace spanned by a frame.
///
/// Frames carrying [`SafeWindow`] data use the safe-window count (after the
/// band check). Other frames describe a subspace of the finite window with the
/// modes above it implicitly included, so the count is `rank − n_plus`.
pub fn virtual_dimension(frame: &Frame) -> Result<VirtualDimensionReport> {
    let win = frame.window();
    match frame.safe_window() {
        Some(SafeWindow { columns, bandwidth }) => {
            let leak = band_leak(&win, frame.w(), bandwidth);
            if leak > BAND_TOL {
                return Err(Error::BandwidthViolation { bandwidth, leak });
            }
            if columns <= bandwidth {
                return Err(Error::WindowTooSmall("no safe modes left".into()));
            }
            let mut rep = safe_window_index(&win, frame.w(), columns - bandwidth);
            rep.band_leak = leak;
            Ok(rep)
        }
        None => {
            let rank = frame.rank();
            Ok(VirtualDimensionReport {
                virtual_dimension: rank as i64 - win.plus_dim() as i64,
                kernel: rank.saturating_sub(win.plus_dim()),
                cokernel: win.plus_dim().saturating_sub(rank),
                safe_modes: win.n_plus,
                band_leak: 0.0,
                method: "finite_window".into(),
            })
        }
    }
}

/// Virtual dimension from a [`SubspaceSpec`].
///
/// Explicit columns must vanish on modes `≥ n_plus − B` and the tail must
/// cover those modes, so the top of the window looks like `H₊` there.
pub fn virtual_dimension_spec(spec: &SubspaceSpec) -> Result<VirtualDimensionReport> {
    let win = spec.window;
    if win.n_plus <= spec.bandwidth {
        return Err(Error::WindowTooSmall("bandwidth exceeds the positive window".into()));
    }
    let safe = win.n_plus - spec.bandwidth;
    let mut leak = 0.0f64;
    for r in 0..win.dim() {
        if win.mode_of(r) >= safe as i64 {
            for j in 0..spec.columns.ncols() {
                leak = leak.max(spec.columns[(r, j)].norm());
            }
        }
    }
    if leak > BAND_TOL {
        return Err(Error::BandwidthViolation { bandwidth: spec.bandwidth, leak });
    }
    if (safe as i64..win.n_plus as i64).any(|m| !spec.tail_modes.contains(&m)) {
        return Err(Error::WindowTooSmall("tail does not cover the top of the window".into()));
    }
    let frame = spec.frame()?;
    let mut rep = safe_window_index(&win, frame.w(), safe);
    rep.band_leak = leak;
    Ok(rep)
}

/// Row of window `win` holding coordinate `j` of `C^{2N}`: the first `N`
/// coordinates are modes `0 … N−1`, the last `N` are modes `−1 … −N`.
pub fn finite_coordinate_row(win: &PolarizedWindow, n: usize, j: usize) -> usize {
    let mode = if j < n { j as i64 } else { n as i64 - 1 - j as i64 };
    win.row(mode, 0)
}

fn check_inclusion_window(win: &PolarizedWindow, n: usize) -> Result<()> {
    if win.fiber != 1 || win.n_plus < n || win.n_minus < n {
        return Err(Error::WindowTooSmall(format!(
            "window ({}, {}) cannot hold C^{}",
            win.n_minus,
            win.n_plus,
            2 * n
        )));
    }
    Ok(())
}

/// Isometric embedding `C^{2N} → window`.
pub fn finite_embedding(win: &PolarizedWindow, n: usize) -> Result<ComplexMatrix> {
    check_inclusion_window(win, n)?;
    let mut e = ComplexMatrix::zeros(win.dim(), 2 * n);
    for j in 0..2 * n {
        e[(finite_coordinate_row(win, n, j), j)] = ONE;
    }
    Ok(e)
}

/// Projection onto the tail `H_N = span{e_m : N ≤ m < n_plus}`.
pub fn tail_projection(win: &PolarizedWindow, n: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(win.dim(), win.dim());
    for m in n..win.n_plus {
        let r = win.row(m as i64, 0);
        p[(r, r)] = ONE;
    }
    p
}

/// `π ↦ E π E* + π_N`.
pub fn include_projection(p: &ComplexMatrix, win: &PolarizedWindow) -> Result<ComplexMatrix> {
    if p.nrows() % 2 != 0 || !p.is_square() {
        return Err(Error::ShapeMismatch("finite projection must act on C^{2N}".into()));
    }
    let n = p.nrows() / 2;
    let e = finite_embedding(win, n)?;
    Ok(&e * p * e.adjoint() + tail_projection(win, n))
}

/// Frame for `W ⊕ H_N` where `W ⊂ C^{2N}` is the range of `p`.
pub fn include_finite_grassmannian(p: &ComplexMatrix, win: &PolarizedWindow) -> Result<Frame> {
    let res = projection_residual(p);
    if !(res < 1e-8) {
        return Err(Error::NotProjection(res));
    }
    let n = p.nrows() / 2;
    let e = finite_embedding(win, n)?;
    let basis = &e * range_basis(p);
    let tail = win.n_plus - n;
    let mut w = ComplexMatrix::zeros(win.dim(), basis.ncols() + tail);
    w.view_mut((0, 0), basis.shape()).copy_from(&basis);
    for (j, m) in (n..win.n_plus).enumerate() {
        w[(win.row(m as i64, 0), basis.ncols() + j)] = ONE;
    }
    Frame::new(*win, w)
}

/// Finite-truncation surrogates for the restricted-Grassmannian conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostics {
    /// `‖[π, ε]‖_HS`.
    pub commutator_hs: f64,
    /// Trace norm of `F − ε`.
    pub involution_trace_norm: f64,
}

pub fn decay_diagnostics(pi: &ComplexMatrix, win: &PolarizedWindow) -> Result<DecayDiagnostics> {
    let eps = win.epsilon();
    let f = involution_from_projection(pi)?;
    let commutator_hs = frobenius(&(pi * &eps - &eps * pi));
    let involution_trace_norm = numerical_rank(&(f - eps), 0.0).singular_values.iter().sum();
    Ok(DecayDiagnostics { commutator_hs, involution_trace_norm })
}

/// True when consecutive entries of a window-doubling sequence differ by less
/// than `tol` from the second entry on.
pub fn is_cauchy(seq: &[f64], tol: f64) -> bool {
    seq.len() >= 2 && seq.windows(2).skip(seq.len().saturating_sub(2)).all(|p| (p[1] - p[0]).abs() < tol)
}

/// Smallest singular value of a frame (conditioning diagnostic).
pub fn frame_conditioning(f: &Frame) -> f64 {
    smallest_singular_value(f.w())
}
