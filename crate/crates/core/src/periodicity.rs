//! The two periodicity maps at finite truncation: loops of unitaries to
//! block-Toeplitz multiplication operators, and loops of projections to
//! their holonomy.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chernforms::ch_odd;
use crate::error::{Error, Result};
use crate::geomgrid::{integrate, Codomain, DomainGrid, DomainKind, SampledMap};
use crate::numkernel::{
    fixtures, frobenius, identity, polar_unitary, range_basis, smallest_singular_value, wrap_angle, ComplexMatrix,
    ZERO,
};
use crate::par;
use crate::stiefel::{frame_projection, operator_image_frame, virtual_dimension, Frame, PolarizedWindow, BAND_TOL};

/// `M_γ` on the modes `[−M, M)` of `L²(S¹; Cⁿ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzWindow {
    pub window: PolarizedWindow,
    pub bandwidth: usize,
    /// `γ̂_j` for `j = −B … B`.
    pub coefficients: Vec<ComplexMatrix>,
    pub operator: ComplexMatrix,
    /// Largest `‖γ̂_j‖_F` with `|j| > B`.
    pub band_leak: f64,
}

impl ToeplitzWindow {
    pub fn fiber(&self) -> usize {
        self.window.fiber
    }

    pub fn coefficient(&self, j: i64) -> Option<&ComplexMatrix> {
        let b = self.bandwidth as i64;
        (j.abs() <= b).then(|| &self.coefficients[(j + b) as usize])
    }

    /// `‖P₊ X P₋‖_HS`, the block taking `H₋` into `H₊`.
    pub fn hs_minus_plus(&self) -> f64 {
        let (m, d) = (self.window.minus_dim(), self.window.dim());
        frobenius(&self.operator.view((m, 0), (d - m, m)).into_owned())
    }

    /// `‖P₋ X P₊‖_HS`, the block taking `H₊` into `H₋`.
    pub fn hs_plus_minus(&self) -> f64 {
        let (m, d) = (self.window.minus_dim(), self.window.dim());
        frobenius(&self.operator.view((0, m), (m, d - m)).into_owned())
    }

    /// Orthonormality defect of the columns whose image stays inside the
    /// window (input modes `[−M + B, M − B)`).
    pub fn bulk_unitarity_residual(&self) -> f64 {
        let win = &self.window;
        let b = self.bandwidth as i64;
        let lo = -(win.n_minus as i64) + b;
        let hi = win.n_plus as i64 - b;
        if lo >= hi {
            return 0.0;
        }
        let first = win.row(lo, 0);
        let count = (hi - lo) as usize * win.fiber;
        let cols = self.operator.columns(first, count);
        frobenius(&(cols.adjoint() * cols - identity(count)))
    }
}

fn require_circle(g: &DomainGrid) -> Result<()> {
    if g.kind() != DomainKind::Circle {
        return Err(Error::UnsupportedDomain(format!("expected a circle, got {}", g.kind().name())));
    }
    Ok(())
}

/// Fourier coefficients `γ̂_j = (1/N) Σ_k γ(θ_k) e^{−ijθ_k}`, stored at
/// `j mod N`.
pub fn fourier_coefficients(gamma: &SampledMap) -> Result<Vec<ComplexMatrix>> {
    require_circle(gamma.domain())?;
    let n = gamma.domain().resolutions()[0];
    let (rows, cols) = gamma.shape();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let entries = par::map_indices(rows * cols, |e| {
        let (i, j) = (e / cols, e % cols);
        let mut line: Vec<Complex64> = gamma.values().iter().map(|m| m[(i, j)]).collect();
        fft.process(&mut line);
        line
    });
    let scale = 1.0 / n as f64;
    Ok((0..n)
        .map(|k| ComplexMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j][k] * scale))
        .collect())
}

/// Assemble `M_γ` on modes `[−M, M)` for a loop of bandwidth `B`.
///
/// The circle needs at least `4B` samples; coefficients beyond the band must
/// vanish to `10⁻¹⁰`.
pub fn toeplitz_from_loop(gamma: &SampledMap, m: usize, bandwidth: usize) -> Result<ToeplitzWindow> {
    require_circle(gamma.domain())?;
    if gamma.codomain() != Codomain::Unitary {
        return Err(Error::ShapeMismatch("multiplication operators need a unitary loop".into()));
    }
    let n = gamma.domain().resolutions()[0];
    if n < 4 * bandwidth.max(1) {
        return Err(Error::BadResolution(format!("circle resolution {n} is below 4B = {}", 4 * bandwidth)));
    }
    if m == 0 {
        return Err(Error::WindowTooSmall("empty mode window".into()));
    }
    let hat = fourier_coefficients(gamma)?;
    let band_leak = (bandwidth + 1..=n / 2)
        .flat_map(|j| [j, n - j])
        .map(|k| frobenius(&hat[k % n]))
        .fold(0.0, f64::max);
    if band_leak > BAND_TOL {
        return Err(Error::BandwidthViolation { bandwidth, leak: band_leak });
    }
    let b = bandwidth as i64;
    let coefficients: Vec<ComplexMatrix> = (-b..=b).map(|j| hat[j.rem_euclid(n as i64) as usize].clone()).collect();
    let fiber = gamma.shape().0;
    let window = PolarizedWindow::with_fiber(m, m, fiber);
    let modes: Vec<i64> = (-(m as i64)..m as i64).collect();
    let block_rows = par::map_slice(&modes, |&r| {
        let mut row = ComplexMatrix::zeros(fiber, window.dim());
        for k in (r - b).max(-(m as i64))..=(r + b).min(m as i64 - 1) {
            let c = window.row(k, 0);
            row.view_mut((0, c), (fiber, fiber)).copy_from(&coefficients[(r - k + b) as usize]);
        }
        row
    });
    let mut operator = ComplexMatrix::zeros(window.dim(), window.dim());
    for (i, row) in block_rows.iter().enumerate() {
        operator.view_mut((i * fiber, 0), row.shape()).copy_from(row);
    }
    Ok(ToeplitzWindow { window, bandwidth, coefficients, operator, band_leak })
}

/// Frame for `M_γ(H₊)` trimmed to the safe columns.
pub fn h_odd_project(t: &ToeplitzWindow) -> Result<Frame> {
    operator_image_frame(&t.window, &t.operator, t.bandwidth)
}

/// Winding number of `det γ` by phase continuation around the circle.
pub fn det_winding(gamma: &SampledMap) -> Result<f64> {
    require_circle(gamma.domain())?;
    let dets: Vec<Complex64> = gamma.values().iter().map(|m| m.determinant()).collect();
    if let Some(z) = dets.iter().find(|z| !(z.norm() > 1e-14)) {
        return Err(Error::SingularInput(z.norm()));
    }
    let total: f64 = (0..dets.len()).map(|k| wrap_angle((dets[(k + 1) % dets.len()] / dets[k]).arg())).sum();
    Ok(total / (2.0 * PI))
}

/// `∫_{S¹} ch₁(γ)`.
pub fn ch1_integral(gamma: &SampledMap) -> Result<f64> {
    Ok(integrate(&ch_odd(gamma, 1)?)?.re)
}

/// Window and band for [`bott_consistency`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BottConfig {
    pub modes: usize,
    pub bandwidth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottDiagnostics {
    pub resolution: usize,
    pub modes: usize,
    pub bandwidth: usize,
    pub band_leak: f64,
    pub hs_minus_plus: f64,
    pub hs_plus_minus: f64,
    pub bulk_unitarity_residual: f64,
    pub kernel: usize,
    pub cokernel: usize,
    pub integrality_tolerance: f64,
}

/// Three routes to the degree-zero shadow of periodicity for a loop `γ`.
///
/// `verdict` holds when `−∫ch₁(γ)`, the winding of `det γ` and
/// `−virtual_dimension(M_γ H₊)` are the same integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottReport {
    pub ch1_integral: f64,
    pub det_winding: f64,
    pub virtual_dimension: i64,
    pub verdict: bool,
    pub diagnostics: BottDiagnostics,
}

/// Distance to the nearest integer allowed in the verdict.
pub const INTEGRALITY_TOL: f64 = 1e-6;

pub fn bott_consistency(gamma: &SampledMap, config: BottConfig) -> Result<BottReport> {
    let ch1 = ch1_integral(gamma)?;
    let winding = det_winding(gamma)?;
    let t = toeplitz_from_loop(gamma, config.modes, config.bandwidth)?;
    let vd = virtual_dimension(&h_odd_project(&t)?)?;
    let near = |x: f64| (x - x.round()).abs() < INTEGRALITY_TOL;
    let verdict = near(ch1)
        && near(winding)
        && (-ch1).round() as i64 == winding.round() as i64
        && winding.round() as i64 == -vd.virtual_dimension;
    Ok(BottReport {
        ch1_integral: ch1,
        det_winding: winding,
        virtual_dimension: vd.virtual_dimension,
        verdict,
        diagnostics: BottDiagnostics {
            resolution: gamma.domain().resolutions()[0],
            modes: config.modes,
            bandwidth: config.bandwidth,
            band_leak: t.band_leak,
            hs_minus_plus: t.hs_minus_plus(),
            hs_plus_minus: t.hs_plus_minus(),
            bulk_unitarity_residual: t.bulk_unitarity_residual(),
            kernel: vd.kernel,
            cokernel: vd.cokernel,
            integrality_tolerance: INTEGRALITY_TOL,
        },
    })
}

/// A random polynomial loop `γ(θ) = V₀ Π_i (P_i z^{s_i} + 1 − P_i)` with
/// random projections `P_i` and signs `s_i`, sampled on `res` points.
///
/// Returns the loop, its bandwidth and the winding `Σ s_i rank P_i`.
pub fn random_polynomial_loop<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    factors: usize,
    res: usize,
) -> Result<(SampledMap, usize, i64)> {
    let v0 = fixtures::unitary(rng, n);
    let mut parts = Vec::with_capacity(factors);
    let mut winding = 0i64;
    for _ in 0..factors {
        let rank = rng.random_range(1..=n);
        let sign: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
        let p = frame_projection(&fixtures::gaussian(rng, n, rank))?;
        winding += sign * rank as i64;
        parts.push((p, sign));
    }
    let g = crate::geomgrid::make_domain(DomainKind::Circle, &[res])?;
    let gamma = SampledMap::from_fn(g, Codomain::Unitary, |_, x| {
        let mut m = v0.clone();
        for (p, s) in &parts {
            let z = Complex64::from_polar(1.0, *s as f64 * x[0]);
            m = m * (p * z + (identity(n) - p));
        }
        m
    })?;
    Ok((gamma, factors.max(1), winding))
}

/// A smooth loop of projections `t ↦ π(t)`, `t ∈ [0, 1]`.
pub trait ProjectionPath: Sync {
    /// `(π(t), π̇(t))`.
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix);

    /// The frame `w₀` the lift starts from; an orthonormal basis of `im π(0)`
    /// unless overridden.
    fn initial_frame(&self) -> ComplexMatrix {
        range_basis(&self.eval(0.0).0)
    }
}

/// Closure-backed path.
pub struct FnPath<F> {
    pub f: F,
}

impl<F> ProjectionPath for FnPath<F>
where
    F: Fn(f64) -> (ComplexMatrix, ComplexMatrix) + Sync,
{
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix) {
        (self.f)(t)
    }
}

/// `a` followed by `b`, each run at double speed.
pub struct ConcatPath<'a> {
    pub first: &'a dyn ProjectionPath,
    pub second: &'a dyn ProjectionPath,
}

impl ProjectionPath for ConcatPath<'_> {
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix) {
        let (p, dp) = if t < 0.5 { self.first.eval(2.0 * t) } else { self.second.eval(2.0 * t - 1.0) };
        (p, dp * Complex64::new(2.0, 0.0))
    }

    fn initial_frame(&self) -> ComplexMatrix {
        self.first.initial_frame()
    }
}

/// A projection loop sampled on a circle, evaluated between nodes by
/// trigonometric interpolation (`t = θ / 2π`).
pub struct SampledLoopPath {
    /// `(j, π̂_j)` for the retained frequencies.
    coefficients: Vec<(f64, ComplexMatrix)>,
    start: ComplexMatrix,
}

impl SampledLoopPath {
    pub fn new(pi: &SampledMap) -> Result<Self> {
        if pi.codomain() != Codomain::Projection {
            return Err(Error::ShapeMismatch("holonomy needs a projection loop".into()));
        }
        let hat = fourier_coefficients(pi)?;
        let n = hat.len();
        let coefficients = (0..n)
            .filter(|&k| 2 * k != n)
            .map(|k| {
                let j = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
                (j, hat[k].clone())
            })
            .collect();
        Ok(SampledLoopPath { coefficients, start: pi.value(0).clone() })
    }
}

impl ProjectionPath for SampledLoopPath {
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix) {
        let (r, c) = self.start.shape();
        let mut p = ComplexMatrix::zeros(r, c);
        let mut dp = ComplexMatrix::zeros(r, c);
        for (j, h) in &self.coefficients {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j * t);
            p += h * e;
            dp += h * (e * Complex64::new(0.0, 2.0 * PI * j));
        }
        (p, dp)
    }

    fn initial_frame(&self) -> ComplexMatrix {
        range_basis(&self.start)
    }
}

/// Default number of RK4 steps for [`kato_transport`].
pub const KATO_STEPS: usize = 4096;
/// Step-halving tolerance on the holonomy phase.
pub const KATO_STEP_TOL: f64 = 1e-6;
/// Loop closure tolerance.
pub const LOOP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyResult {
    /// Fiber coordinate: `w(1) = w₀ Q`.
    pub q: ComplexMatrix,
    /// `Q |Q|⁻¹`.
    pub u: ComplexMatrix,
    /// `arg det U`.
    pub phase: f64,
    /// Largest `‖π w − w‖_F` before re-projection.
    pub tracking_residual: f64,
    /// `‖w*w − w₀*w₀‖_F` at the end.
    pub orthonormality_drift: f64,
    pub steps: usize,
    /// Phase change when the step count is halved.
    pub step_delta: f64,
    pub flagged: bool,
}

impl HolonomyResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q": matrix_json(&self.q),
            "u": matrix_json(&self.u),
            "phase": self.phase,
            "tracking_residual": self.tracking_residual,
            "orthonormality_drift": self.orthonormality_drift,
            "steps": self.steps,
            "step_delta": self.step_delta,
            "flagged": self.flagged,
        })
    }
}

/// Row-major `[[re, im], …]` rows.
pub fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}

struct Lift {
    w: ComplexMatrix,
    tracking: f64,
}

fn integrate_lift(path: &dyn ProjectionPath, w0: &ComplexMatrix, steps: usize) -> Result<Lift> {
    let h = 1.0 / steps as f64;
    let hc = Complex64::new(h, 0.0);
    let mut w = w0.clone();
    let mut tracking = 0.0f64;
    let rhs = |t: f64, w: &ComplexMatrix| path.eval(t).1 * w;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &w);
        let k2 = rhs(t + 0.5 * h, &(&w + &k1 * (hc * 0.5)));
        let k3 = rhs(t + 0.5 * h, &(&w + &k2 * (hc * 0.5)));
        let k4 = rhs(t + h, &(&w + &k3 * hc));
        let next = &w + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (hc / 6.0);
        let (p, _) = path.eval(t + h);
        let projected = &p * &next;
        tracking = tracking.max(frobenius(&(&projected - &next)));
        w = projected;
        let smin = smallest_singular_value(&w);
        if !(smin > 1e-8) {
            return Err(Error::LostRank(smin));
        }
    }
    Ok(Lift { w, tracking })
}

fn holonomy_phase(q: &ComplexMatrix) -> f64 {
    q.determinant().arg()
}

/// Horizontal lift `ẇ = π̇ w` around the loop by RK4 with re-projection onto
/// `im π(t)` after each step, and the resulting fiber coordinate.
pub fn kato_transport(path: &dyn ProjectionPath, steps: usize) -> Result<HolonomyResult> {
    let (p0, _) = path.eval(0.0);
    let (p1, _) = path.eval(1.0);
    let gap = frobenius(&(&p0 - &p1));
    if !(gap < LOOP_TOL) {
        return Err(Error::NotALoop(gap));
    }
    let steps = steps.max(2);
    let w0 = path.initial_frame();
    let full = integrate_lift(path, &w0, steps)?;
    let half = integrate_lift(path, &w0, steps / 2)?;
    let pinv = crate::numkernel::left_pseudo_inverse(&w0)?;
    let q = &pinv * &full.w;
    let q_half = &pinv * &half.w;
    let u = polar_unitary(&q)?;
    let step_delta = wrap_angle(holonomy_phase(&q) - holonomy_phase(&q_half)).abs();
    let gram0 = w0.adjoint() * &w0;
    Ok(HolonomyResult {
        phase: holonomy_phase(&u),
        orthonormality_drift: frobenius(&(full.w.adjoint() * &full.w - gram0)),
        tracking_residual: full.tracking,
        steps,
        step_delta,
        flagged: step_delta > KATO_STEP_TOL,
        q,
        u,
    })
}

/// The rank-one loop `ψ(t) = cos(θ₀/2) e₀ + e^{2πi s t} sin(θ₀/2) e₁` in `C²`
/// traversed `s` times (`s = ±1` for a simple loop).
pub fn bloch_loop(colatitude: f64, s: f64) -> FnPath<impl Fn(f64) -> (ComplexMatrix, ComplexMatrix) + Sync> {
    let (sn, cs) = (colatitude / 2.0).sin_cos();
    FnPath {
        f: move |t: f64| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * s * t);
            let psi = ComplexMatrix::from_column_slice(2, 1, &[Complex64::new(cs, 0.0), e * sn]);
            let dpsi = ComplexMatrix::from_column_slice(2, 1, &[ZERO, e * Complex64::new(0.0, 2.0 * PI * s) * sn]);
            let p = &psi * psi.adjoint();
            let dp = &dpsi * psi.adjoint() + &psi * dpsi.adjoint();
            (p, dp)
        },
    }
}

/// `exp(−iπ s (1 − cos θ₀))`, the holonomy of [`bloch_loop`].
pub fn bloch_holonomy(colatitude: f64, s: f64) -> Complex64 {
    Complex64::from_polar(1.0, -PI * s * (1.0 - colatitude.cos()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomgrid::make_domain;
    use crate::numkernel::unitarity_residual;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zn(n: i32, res: usize) -> SampledMap {
        let g = make_domain(DomainKind::Circle, &[res]).unwrap();
        SampledMap::from_fn(g, Codomain::Unitary, |_, x| {
            ComplexMatrix::from_element(1, 1, Complex64::from_polar(1.0, n as f64 * x[0]))
        })
        .unwrap()
    }

    #[test]
    fn identity_loop_gives_identity_operator() {
        let g = make_domain(DomainKind::Circle, &[32]).unwrap();
        let id = SampledMap::from_fn(g, Codomain::Unitary, |_, _| identity(2)).unwrap();
        let t = toeplitz_from_loop(&id, 8, 2).unwrap();
        assert!(frobenius(&(&t.operator - identity(32))) < 1e-14);
        assert!(t.hs_minus_plus() < 1e-14 && t.hs_plus_minus() < 1e-14);
    }

    #[test]
    fn shift_pattern_for_z() {
        let t = toeplitz_from_loop(&zn(1, 64), 16, 2).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                let want = if r == c + 1 { 1.0 } else { 0.0 };
                assert!((t.operator[(r, c)].re - want).abs() < 1e-12 && t.operator[(r, c)].im.abs() < 1e-12);
            }
        }
        let minus_plus = t.operator.view((16, 0), (16, 16)).into_owned();
        assert_eq!(crate::numkernel::numerical_rank_default(&minus_plus).numerical_rank, 1);
        assert!(t.bulk_unitarity_residual() < 1e-10);
    }

    #[test]
    fn band_and_resolution_contracts() {
        assert!(matches!(toeplitz_from_loop(&zn(3, 64), 16, 2), Err(Error::BandwidthViolation { .. })));
        assert!(matches!(toeplitz_from_loop(&zn(1, 12), 16, 4), Err(Error::BadResolution(_))));
    }

    #[test]
    fn index_of_zn() {
        for n in -3i32..=3 {
            let b = n.unsigned_abs() as usize + 2;
            let t = toeplitz_from_loop(&zn(n, 128), 64, b).unwrap();
            assert_eq!(virtual_dimension(&h_odd_project(&t).unwrap()).unwrap().virtual_dimension, -n as i64);
        }
    }

    #[test]
    fn bott_for_zn_and_diagonal() {
        for n in -2..=2 {
            let rep = bott_consistency(&zn(n, 256), BottConfig { modes: 64, bandwidth: 4 }).unwrap();
            assert!(rep.verdict, "{rep:?}");
            assert_eq!(rep.det_winding.round() as i32, n);
        }
        let g = make_domain(DomainKind::Circle, &[64]).unwrap();
        let d = SampledMap::from_fn(g, Codomain::Unitary, |_, x| {
            let z = Complex64::from_polar(1.0, x[0]);
            ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![z, z.conj()]))
        })
        .unwrap();
        let rep = bott_consistency(&d, BottConfig { modes: 32, bandwidth: 2 }).unwrap();
        assert!(rep.verdict && rep.virtual_dimension == 0);
    }

    #[test]
    fn random_loops_pass_bott() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let (gamma, b, w) = random_polynomial_loop(&mut rng, 2, 3, 64).unwrap();
            let rep = bott_consistency(&gamma, BottConfig { modes: 32, bandwidth: b }).unwrap();
            assert!(rep.verdict, "{rep:?}");
            assert_eq!(rep.det_winding.round() as i64, w);
        }
    }

    #[test]
    fn equator_holonomy_is_minus_one() {
        let h = kato_transport(&bloch_loop(PI / 2.0, 1.0), KATO_STEPS).unwrap();
        assert!((h.q[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-6);
        assert!(unitarity_residual(&h.u) < 1e-8 && !h.flagged);
        assert!(h.orthonormality_drift < 1e-8);
    }

    #[test]
    fn colatitude_law_and_concatenation() {
        for th in [0.3, 1.0, 2.2] {
            let h = kato_transport(&bloch_loop(th, 1.0), KATO_STEPS).unwrap();
            assert!((h.q[(0, 0)] - bloch_holonomy(th, 1.0)).norm() < 1e-6);
        }
        let (a, b) = (bloch_loop(0.7, 1.0), bloch_loop(0.7, -2.0));
        let prod = kato_transport(&a, KATO_STEPS).unwrap().q[(0, 0)] * kato_transport(&b, KATO_STEPS).unwrap().q[(0, 0)];
        let cat = kato_transport(&ConcatPath { first: &a, second: &b }, KATO_STEPS).unwrap();
        assert!((cat.q[(0, 0)] - prod).norm() < 1e-6);
    }

    #[test]
    fn sampled_loop_matches_analytic() {
        let g = make_domain(DomainKind::Circle, &[32]).unwrap();
        let path = bloch_loop(1.1, 1.0);
        let pi = SampledMap::from_fn(g, Codomain::Projection, |_, x| (path.f)(x[0] / (2.0 * PI)).0).unwrap();
        let h = kato_transport(&SampledLoopPath::new(&pi).unwrap(), KATO_STEPS).unwrap();
        assert!((h.q[(0, 0)] - bloch_holonomy(1.1, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn open_path_is_rejected() {
        let open = FnPath { f: |t: f64| bloch_loop(1.0, 0.5).eval(t) };
        assert!(matches!(kato_transport(&open, 64), Err(Error::NotALoop(_))));
    }
}
