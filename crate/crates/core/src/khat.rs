//! Class-level data for the computable cases: the point and the circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chernforms::{ch_even, ch_odd, ch_total, cs_form, Homotopy, Parity};
use crate::error::{Error, Result};
use crate::geomgrid::{d, integrate, Codomain, DomainGrid, DomainKind, FormReport, GradedForm, SampledMap};
use crate::numkernel::{det_phase, frobenius, identity, numerical_rank_default, ComplexMatrix, ZERO};
use crate::periodicity::{det_winding, kato_transport, SampledLoopPath, KATO_STEPS};
use crate::stiefel::{include_projection, PolarizedWindow};

/// Tolerance for the integrality of underlying invariants.
pub const INTEGER_TOL: f64 = 1e-6;
/// Basepoint tolerance for nullhomotopies.
pub const BASEPOINT_TOL: f64 = 1e-10;

fn require_circle(g: &DomainGrid) -> Result<()> {
    if g.kind() != DomainKind::Circle {
        return Err(Error::UnsupportedDomain(format!(
            "class-level invariants are complete only on the circle, got {}",
            g.kind().name()
        )));
    }
    Ok(())
}

fn parity_of(f: &SampledMap) -> Result<Parity> {
    match f.codomain() {
        Codomain::Unitary => Ok(Parity::Odd),
        Codomain::Projection => Ok(Parity::Even),
        _ => Err(Error::ShapeMismatch("classes need unitary or projection representatives".into())),
    }
}

/// Real function on a circle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunction {
    pub domain: DomainGrid,
    pub values: Vec<f64>,
}

impl CircleFunction {
    pub fn new(domain: DomainGrid, values: Vec<f64>) -> Result<Self> {
        require_circle(&domain)?;
        if values.len() != domain.n_nodes() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("function must have one finite value per node".into()));
        }
        Ok(CircleFunction { domain, values })
    }

    pub fn from_fn(domain: DomainGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..domain.n_nodes()).map(|i| f(domain.axis_coord(0, i))).collect();
        Self::new(domain, values)
    }

    pub fn as_form(&self, u_power: i32) -> Result<GradedForm> {
        GradedForm::scalar(&self.domain, u_power, self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }
}

/// Local connection form `iα` of a trivial line bundle over the circle,
/// `α` sampled as the coefficient of `dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleConnection {
    pub alpha: CircleFunction,
    pub rank: usize,
}

impl CircleConnection {
    pub fn new(alpha: CircleFunction) -> Self {
        CircleConnection { alpha, rank: 1 }
    }

    pub fn constant(domain: DomainGrid, c: f64) -> Result<Self> {
        Ok(Self::new(CircleFunction::from_fn(domain, |_| c)?))
    }

    /// `∮ α`.
    pub fn period(&self) -> f64 {
        let h = self.alpha.domain.spacing(0);
        self.alpha.values.iter().sum::<f64>() * h
    }

    /// `det hol = exp(i · rank · ∮α)`.
    pub fn holonomy(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.rank as f64 * self.period())
    }

    pub fn as_form(&self) -> Result<GradedForm> {
        GradedForm::from_nodes(
            &self.alpha.domain,
            1,
            -1,
            self.alpha.values.iter().map(|&v| vec![Complex64::new(v, 0.0)]).collect(),
        )
    }
}

/// `(1/2πi) log(det hol₊ / det hol₋) dθ` on the principal branch, as a
/// constant 1-form with coefficient in `(−1/2, 1/2]`.
pub fn holonomy_log_det(plus: &CircleConnection, minus: &CircleConnection) -> Result<GradedForm> {
    if plus.alpha.domain != minus.alpha.domain {
        return Err(Error::ShapeMismatch("connections live on different grids".into()));
    }
    let c = (plus.holonomy() / minus.holonomy()).arg() / (2.0 * PI);
    let c = if c <= -0.5 { c + 1.0 } else { c };
    let g = &plus.alpha.domain;
    GradedForm::from_nodes(g, 1, -1, vec![vec![Complex64::new(c, 0.0)]; g.n_nodes()])
}

/// Reduce into `[0, 1)`.
pub fn mod1(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two reals modulo `Z`.
pub fn dist_mod1(a: f64, b: f64) -> f64 {
    let r = mod1(a - b);
    r.min(1.0 - r)
}

/// `det_phase(u) / 2π mod 1`.
pub fn point_class_odd(u: &ComplexMatrix) -> Result<f64> {
    Ok(mod1(det_phase(u)? / (2.0 * PI)))
}

/// Integer data behind the underlying class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderlyingData {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub virtdim: Option<i64>,
    /// Distance of the raw value from the reported integer.
    pub integrality_defect: f64,
}

fn projection_virtual_dimension(p: &ComplexMatrix, window: Option<PolarizedWindow>) -> i64 {
    let rank = numerical_rank_default(p).numerical_rank as i64;
    rank - window.map_or(0, |w| w.plus_dim() as i64)
}

/// Winding of `det` for unitary loops; virtual dimension for projection
/// loops. Other domains are rejected.
pub fn underlying_i(f: &SampledMap) -> Result<UnderlyingData> {
    require_circle(f.domain())?;
    match parity_of(f)? {
        Parity::Odd => {
            let w = det_winding(f)?;
            Ok(UnderlyingData { winding: Some(w.round() as i64), virtdim: None, integrality_defect: (w - w.round()).abs() })
        }
        Parity::Even => {
            // One path component: the count is constant along the loop.
            let vd = projection_virtual_dimension(f.value(0), f.window());
            Ok(UnderlyingData { winding: None, virtdim: Some(vd), integrality_defect: 0.0 })
        }
    }
}

/// `R([f]) = f*ch`: positive-degree components from the Chern forms and,
/// for projections, the constant degree-0 component from the virtual
/// dimension.
pub fn curvature_r(f: &SampledMap, k_max: usize) -> Result<Vec<GradedForm>> {
    let mut out = Vec::new();
    if f.codomain() == Codomain::Projection {
        let vd = projection_virtual_dimension(f.value(0), f.window());
        out.push(GradedForm::scalar(f.domain(), 0, vec![Complex64::new(vd as f64, 0.0); f.domain().n_nodes()])?);
    }
    out.extend(ch_total(f, k_max)?);
    Ok(out)
}

/// Drop coordinates on which the map is the basepoint at every node
/// (identity for unitaries, `π₊` for projections on a window).
pub fn strip_stabilization(f: &SampledMap) -> Result<SampledMap> {
    let n = f.shape().0;
    let base = match (f.codomain(), f.window()) {
        (Codomain::Unitary, _) => identity(n),
        (Codomain::Projection, Some(w)) if w.dim() == n => w.pi_plus(),
        _ => return Ok(f.clone()),
    };
    let trivial = |i: usize| {
        f.values().iter().all(|m| {
            (0..n).all(|j| (m[(i, j)] - base[(i, j)]).norm() < 1e-12 && (m[(j, i)] - base[(j, i)]).norm() < 1e-12)
        })
    };
    let mut keep: Vec<usize> = (0..n).filter(|&i| !trivial(i)).collect();
    if keep.is_empty() {
        keep.push(n - 1);
    }
    if keep.len() == n {
        return Ok(f.clone());
    }
    let values = f.values().iter().map(|m| m.select_rows(keep.iter()).select_columns(keep.iter())).collect();
    let out = SampledMap::new(f.domain().clone(), values, f.codomain())?;
    match f.window() {
        Some(w) if w.fiber == 1 => {
            let minus = keep.iter().filter(|&&i| w.mode_of(i) < 0).count();
            out.with_window(PolarizedWindow::new(minus, keep.len() - minus))
        }
        _ => Ok(out),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    #[serde(flatten)]
    pub underlying: UnderlyingData,
    /// Determinant phase (odd) or holonomy phase (even) over `2π`, mod 1.
    pub det_phase_mod1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassChecks {
    /// `sup |R(a(x)) − dx|` for classes built by `a`; absent otherwise.
    #[serde(rename = "RaEqualsD")]
    pub ra_equals_d: Option<f64>,
    /// Cycle integrals of `R` agree with the Chern numbers of `I`.
    #[serde(rename = "squareCommutes")]
    pub square_commutes: bool,
    /// Largest `sup |d R_k|` over the curvature components.
    pub curvature_closed: f64,
}

/// Everything the class API knows about one class.
#[derive(Debug, Clone)]
pub struct KhatClassData {
    pub parity: Parity,
    pub representative: SampledMap,
    pub curvature: Vec<GradedForm>,
    pub invariants: Invariants,
    /// The form `x` with `[f] = a(x)`, when the class was built by `a`.
    pub primitive: Option<GradedForm>,
    pub checks: ClassChecks,
    pub provenance: Vec<String>,
}

impl KhatClassData {
    /// `{parity, invariants, curvature, checks}`.
    pub fn report(&self) -> ClassReport {
        ClassReport {
            parity: self.parity,
            invariants: self.invariants.clone(),
            curvature: self.curvature.iter().map(|c| c.report()).collect(),
            checks: self.checks.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub parity: Parity,
    pub invariants: Invariants,
    pub curvature: Vec<FormReport>,
    pub checks: ClassChecks,
    pub provenance: Vec<String>,
}

fn closedness(curvature: &[GradedForm]) -> Result<f64> {
    let mut worst = 0.0f64;
    for c in curvature {
        if c.degree < c.domain.dim() {
            worst = worst.max(d(c)?.sup_norm());
        }
    }
    Ok(worst)
}

/// On the circle: `∫ch₁ = −winding` for unitaries; the degree-0 component is
/// the virtual dimension for projections.
fn square_commutes(parity: Parity, curvature: &[GradedForm], underlying: &UnderlyingData) -> Result<bool> {
    Ok(match parity {
        Parity::Odd => match (curvature.iter().find(|c| c.degree == 1), underlying.winding) {
            (Some(c1), Some(w)) => (integrate(c1)?.re + w as f64).abs() < INTEGER_TOL,
            _ => false,
        },
        Parity::Even => match (curvature.iter().find(|c| c.degree == 0), underlying.virtdim) {
            (Some(c0), Some(v)) => (c0.component(&[], 0).re - v as f64).abs() < INTEGER_TOL,
            _ => false,
        },
    })
}

/// Class data for an arbitrary representative on the circle, after
/// stripping stabilization blocks.
pub fn classify(f: &SampledMap, k_max: usize) -> Result<KhatClassData> {
    let parity = parity_of(f)?;
    require_circle(f.domain())?;
    let g = strip_stabilization(f)?;
    let stripped = f.shape().0 - g.shape().0;
    let curvature = curvature_r(&g, k_max)?;
    let underlying = underlying_i(&g)?;
    let det_phase_mod1 = match parity {
        Parity::Odd => point_class_odd(g.value(0))?,
        Parity::Even => mod1(kato_transport(&SampledLoopPath::new(&g)?, KATO_STEPS)?.phase / (2.0 * PI)),
    };
    let checks = ClassChecks {
        ra_equals_d: None,
        square_commutes: square_commutes(parity, &curvature, &underlying)?,
        curvature_closed: closedness(&curvature)?,
    };
    Ok(KhatClassData {
        parity,
        representative: g,
        curvature,
        invariants: Invariants { underlying, det_phase_mod1 },
        primitive: None,
        checks,
        provenance: vec![format!("classify: stripped {stripped} stabilization coordinates")],
    })
}

fn default_window(win: Option<PolarizedWindow>) -> Result<PolarizedWindow> {
    let w = win.unwrap_or(PolarizedWindow::new(1, 1));
    if w.fiber != 1 || w.n_plus == 0 || w.n_minus == 0 {
        return Err(Error::WindowTooSmall("need a scalar window with both signs".into()));
    }
    Ok(w)
}

/// Representative `θ ↦ exp(−2πi φ(θ))` on mode 0 of the window, identity
/// elsewhere.
pub fn a_odd_representative(phi: &CircleFunction, win: Option<PolarizedWindow>) -> Result<SampledMap> {
    let w = default_window(win)?;
    let r = w.row(0, 0);
    let values = phi
        .values
        .iter()
        .map(|&p| {
            let mut m = identity(w.dim());
            m[(r, r)] = Complex64::from_polar(1.0, -2.0 * PI * p);
            m
        })
        .collect();
    SampledMap::new(phi.domain.clone(), values, Codomain::Unitary)?.with_window(w)
}

/// `t ↦ exp(−2πi t φ)`, from the identity to [`a_odd_representative`].
pub fn a_odd_nullhomotopy(phi: &CircleFunction, win: Option<PolarizedWindow>, n_t: usize) -> Result<Homotopy> {
    let w = default_window(win)?;
    let r = w.row(0, 0);
    Homotopy::build(&phi.domain, Codomain::Unitary, 0.0, 1.0, n_t, |t, node| {
        let p = phi.values[node];
        let e = Complex64::from_polar(1.0, -2.0 * PI * t * p);
        let mut m = identity(w.dim());
        m[(r, r)] = e;
        let mut dm = ComplexMatrix::zeros(w.dim(), w.dim());
        dm[(r, r)] = e * Complex64::new(0.0, -2.0 * PI * p);
        (m, dm)
    })
}

/// Time nodes used for the canonical nullhomotopies built here.
pub const NULL_TIME_NODES: usize = 17;

/// `a(φ + Z)` for a real function `φ` on the circle.
pub fn a_odd(phi: &CircleFunction, win: Option<PolarizedWindow>) -> Result<KhatClassData> {
    let rep = a_odd_representative(phi, win)?;
    let curvature = curvature_r(&rep, 1)?;
    let dphi = d(&phi.as_form(-1)?)?;
    let ra = curvature[0].max_diff(&dphi)?;
    let underlying = underlying_i(&rep)?;
    let checks = ClassChecks {
        ra_equals_d: Some(ra),
        square_commutes: square_commutes(Parity::Odd, &curvature, &underlying)?,
        curvature_closed: closedness(&curvature)?,
    };
    Ok(KhatClassData {
        parity: Parity::Odd,
        invariants: Invariants { underlying, det_phase_mod1: point_class_odd(rep.value(0))? },
        representative: rep,
        curvature,
        primitive: Some(phi.as_form(-1)?),
        checks,
        provenance: vec!["a_odd: exp(-2πiφ) on mode 0".into()],
    })
}

/// `∫₀^θ α` at the nodes, spectrally: `a₀θ + Σ_{j≠0} â_j (e^{ijθ} − 1)/(ij)`.
fn antiderivative(alpha: &CircleFunction) -> Vec<f64> {
    let n = alpha.values.len();
    let mut hat: Vec<Complex64> = alpha.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut hat);
    for z in hat.iter_mut() {
        *z /= n as f64;
    }
    let a0 = hat[0].re;
    (0..n)
        .map(|k| {
            let th = alpha.domain.axis_coord(0, k);
            let mut acc = ZERO;
            for (idx, h) in hat.iter().enumerate().skip(1) {
                if 2 * idx == n {
                    continue;
                }
                let j = if 2 * idx < n { idx as f64 } else { idx as f64 - n as f64 };
                acc += h * (Complex64::from_polar(1.0, j * th) - 1.0) / Complex64::new(0.0, j);
            }
            a0 * th + acc.re
        })
        .collect()
}

/// Periods this close to `2πZ` are treated as trivial holonomy.
const TRIVIAL_PERIOD: f64 = 1e-9;

/// Rank-one projection loop in `C²` whose Kato holonomy along `[0, θ]` is
/// `exp(i∫₀^θ α)` up to a gauge term that closes up at `θ = 2π`.
///
/// `ψ(θ) = cos(β/2) e₀ + e^{−iφ(θ)} sin(β/2) e₁` with `sin²(β/2) = A'/2π`,
/// `A' = ∮α mod 2π` and `φ(θ) = (A'θ/2π + osc(θ)) / sin²(β/2)`.
pub fn a_even_finite_loop(alpha: &CircleConnection) -> Vec<ComplexMatrix> {
    let a = alpha.period() * alpha.rank as f64;
    let a_red = a.rem_euclid(2.0 * PI);
    let g = &alpha.alpha.domain;
    let e0 = {
        let mut p = ComplexMatrix::zeros(2, 2);
        p[(0, 0)] = Complex64::new(1.0, 0.0);
        p
    };
    if a_red < TRIVIAL_PERIOD || 2.0 * PI - a_red < TRIVIAL_PERIOD {
        return vec![e0; g.n_nodes()];
    }
    let s = a_red / (2.0 * PI);
    let (sn, cs) = (s.sqrt(), (1.0 - s).sqrt());
    let prim = antiderivative(&alpha.alpha);
    let a0 = alpha.period() / (2.0 * PI);
    (0..g.n_nodes())
        .map(|k| {
            let th = g.axis_coord(0, k);
            let osc = alpha.rank as f64 * (prim[k] - a0 * th);
            let phi = (a_red * th / (2.0 * PI) + osc) / s;
            let psi = ComplexMatrix::from_column_slice(2, 1, &[Complex64::new(cs, 0.0), Complex64::from_polar(sn, -phi)]);
            &psi * psi.adjoint()
        })
        .collect()
}

/// `a([α] + Z)`: the classifying loop of the trivial line bundle with
/// connection `iα`, included into the window through `C² → window`.
pub fn a_even(alpha: &CircleConnection, win: Option<PolarizedWindow>) -> Result<KhatClassData> {
    let w = default_window(win)?;
    let values = a_even_finite_loop(alpha)
        .iter()
        .map(|p| include_projection(p, &w))
        .collect::<Result<Vec<_>>>()?;
    let rep = SampledMap::new(alpha.alpha.domain.clone(), values, Codomain::Projection)?.with_window(w)?;
    let curvature = curvature_r(&rep, 1)?;
    let underlying = underlying_i(&rep)?;
    let hol = kato_transport(&SampledLoopPath::new(&rep)?, KATO_STEPS)?;
    // Positive-degree curvature and dα both vanish on the circle, so R∘a = d
    // reduces to the degree-0 part, which `a` leaves at zero.
    let ra = curvature.iter().filter(|c| c.degree == 0).map(|c| c.sup_norm()).fold(0.0, f64::max);
    let checks = ClassChecks {
        ra_equals_d: Some(ra),
        square_commutes: square_commutes(Parity::Even, &curvature, &underlying)?,
        curvature_closed: closedness(&curvature)?,
    };
    let mut provenance = vec!["a_even: rank-1 loop in C², included at N = 1".to_string()];
    if hol.flagged {
        provenance.push(format!("kato step check flagged (delta {:e})", hol.step_delta));
    }
    Ok(KhatClassData {
        parity: Parity::Even,
        invariants: Invariants { underlying, det_phase_mod1: mod1(hol.phase / (2.0 * PI)) },
        representative: rep,
        curvature,
        primitive: Some(alpha.as_form()?),
        checks,
        provenance,
    })
}

/// Chern–Simons forms of a nullhomotopy and the `R∘a = d` residual
/// `sup |d CS − ch(H₁)|`.
#[derive(Debug, Clone)]
pub struct NullhomotopyCs {
    pub forms: Vec<GradedForm>,
    pub ra_equals_d: f64,
}

pub fn cs_of_nullhomotopy(h: &Homotopy, k_max: usize) -> Result<NullhomotopyCs> {
    let start = h.start();
    let n = start.shape().0;
    let base = match h.codomain() {
        Codomain::Unitary => identity(n),
        Codomain::Projection => match start.window() {
            Some(w) => w.pi_plus(),
            None => return Err(Error::ShapeMismatch("projection homotopy without a window has no basepoint".into())),
        },
        _ => return Err(Error::ShapeMismatch("Chern–Simons forms need unitary or projection slices".into())),
    };
    let gap = start.values().iter().map(|m| frobenius(&(m - &base))).fold(0.0, f64::max);
    if !(gap < BASEPOINT_TOL) {
        return Err(Error::NotBasedAtIdentity(gap));
    }
    let unitary = h.codomain() == Codomain::Unitary;
    let dim = h.domain().dim();
    let mut forms = Vec::new();
    let mut ra = 0.0f64;
    for k in 1..=k_max {
        let degree = if unitary { 2 * k - 2 } else { 2 * k - 1 };
        if degree > dim {
            break;
        }
        let cs = cs_form(h, k)?;
        if degree < dim {
            let ch = if unitary { ch_odd(h.end(), k)? } else { ch_even(h.end(), k)? };
            ra = ra.max(d(&cs)?.max_diff(&ch)?);
        }
        forms.push(cs);
    }
    Ok(NullhomotopyCs { forms, ra_equals_d: ra })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomgrid::make_domain;
    use crate::kops::{blocksum, Grading};
    use crate::numkernel::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle(n: usize) -> DomainGrid {
        make_domain(DomainKind::Circle, &[n]).unwrap()
    }

    #[test]
    fn point_classes() {
        assert_eq!(point_class_odd(&identity(3)).unwrap(), 0.0);
        let mut u = identity(3);
        u[(0, 0)] = Complex64::from_polar(1.0, 2.0 * PI * 0.3);
        assert!(dist_mod1(point_class_odd(&u).unwrap(), 0.3) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (fixtures::unitary(&mut rng, 4), fixtures::unitary(&mut rng, 4));
        let s = point_class_odd(&blocksum(&a, &b, Grading::Ungraded).unwrap()).unwrap();
        let sum = point_class_odd(&a).unwrap() + point_class_odd(&b).unwrap();
        assert!(dist_mod1(s, sum) < 1e-9);
    }

    #[test]
    fn a_odd_constant_and_shift() {
        let phi = CircleFunction::from_fn(circle(32), |_| 0.3).unwrap();
        let cls = a_odd(&phi, None).unwrap();
        let dp = det_phase(cls.representative.value(5)).unwrap();
        assert!(dist_mod1(dp / (2.0 * PI), -0.3) < 1e-12);
        let shifted = CircleFunction::from_fn(circle(32), |_| 2.3).unwrap();
        let r2 = a_odd_representative(&shifted, None).unwrap();
        let diff = r2.values().iter().zip(cls.representative.values()).map(|(a, b)| frobenius(&(a - b))).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn a_odd_round_trip_and_ra() {
        let phi = CircleFunction::from_fn(circle(64), |th| 0.2 + 0.3 * th.sin() + 0.1 * (2.0 * th).cos()).unwrap();
        let cls = a_odd(&phi, None).unwrap();
        assert!(cls.checks.ra_equals_d.unwrap() < 1e-6);
        let h = a_odd_nullhomotopy(&phi, None, NULL_TIME_NODES).unwrap();
        let cs = cs_of_nullhomotopy(&h, 1).unwrap();
        let cs0 = &cs.forms[0];
        for node in 0..64 {
            let v = cs0.component(&[], node);
            assert!((v.re - phi.values[node]).abs() < 1e-8 && v.im.abs() < 1e-8);
            let back = Complex64::from_polar(1.0, -2.0 * PI * v.re);
            assert!((back - cls.representative.value(node)[(1, 1)]).norm() < 1e-8);
        }
    }

    #[test]
    fn lemma_value_for_constant_connections() {
        let g = circle(64);
        for c in [0.0, 0.3, 0.8, -1.25] {
            let plus = CircleConnection::constant(g.clone(), c).unwrap();
            let minus = CircleConnection::constant(g.clone(), 0.0).unwrap();
            let f = holonomy_log_det(&plus, &minus).unwrap();
            assert!(dist_mod1(f.component(&[0], 7).re, c) < 1e-9);
        }
    }

    #[test]
    fn log_det_is_gauge_invariant() {
        let g = circle(64);
        let a = CircleConnection::new(CircleFunction::from_fn(g.clone(), |_| 0.37).unwrap());
        let b = CircleConnection::new(CircleFunction::from_fn(g.clone(), |th| 0.37 + 0.5 * th.cos() - 0.2 * (3.0 * th).sin()).unwrap());
        let zero = CircleConnection::constant(g, 0.0).unwrap();
        let fa = holonomy_log_det(&a, &zero).unwrap();
        let fb = holonomy_log_det(&b, &zero).unwrap();
        assert!(fa.max_diff(&fb).unwrap() < 1e-8);
    }

    #[test]
    fn a_even_holonomy() {
        let g = circle(64);
        let zero = a_even(&CircleConnection::constant(g.clone(), 0.0).unwrap(), None).unwrap();
        let w = PolarizedWindow::new(1, 1);
        assert!(frobenius(&(zero.representative.value(3) - w.pi_plus())) < 1e-14);
        for c in [0.2, 0.65] {
            let cls = a_even(&CircleConnection::constant(g.clone(), c).unwrap(), None).unwrap();
            assert!(dist_mod1(cls.invariants.det_phase_mod1, c) < 1e-6, "{c}: {}", cls.invariants.det_phase_mod1);
            assert_eq!(cls.invariants.underlying.virtdim, Some(0));
        }
        let wavy = CircleConnection::new(CircleFunction::from_fn(g, |th| 0.4 + 0.3 * th.cos()).unwrap());
        let cls = a_even(&wavy, Some(PolarizedWindow::new(2, 3))).unwrap();
        assert!(dist_mod1(cls.invariants.det_phase_mod1, 0.4) < 1e-6);
    }

    #[test]
    fn underlying_rejects_torus() {
        let g = make_domain(DomainKind::Torus2, &[8, 8]).unwrap();
        let f = SampledMap::from_fn(g, Codomain::Unitary, |_, _| identity(2)).unwrap();
        assert!(matches!(underlying_i(&f), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn classify_z3_and_strip() {
        let f = SampledMap::from_fn(circle(128), Codomain::Unitary, |_, x| {
            let mut m = identity(3);
            m[(1, 1)] = Complex64::from_polar(1.0, 3.0 * x[0]);
            m
        })
        .unwrap();
        let cls = classify(&f, 2).unwrap();
        assert_eq!(cls.representative.shape(), (1, 1));
        assert_eq!(cls.invariants.underlying.winding, Some(3));
        assert!(cls.checks.square_commutes);
        let rep = serde_json::to_value(cls.report()).unwrap();
        assert_eq!(rep["parity"], "odd");
        assert_eq!(rep["invariants"]["winding"], 3);
    }

    #[test]
    fn nullhomotopy_must_start_at_basepoint() {
        let phi = CircleFunction::from_fn(circle(16), |th| th.sin()).unwrap();
        let h = a_odd_nullhomotopy(&phi, None, 9).unwrap().reverse();
        assert!(matches!(cs_of_nullhomotopy(&h, 1), Err(Error::NotBasedAtIdentity(_))));
        let c = Homotopy::constant(&a_odd_representative(&CircleFunction::from_fn(circle(16), |_| 0.0).unwrap(), None).unwrap(), 9).unwrap();
        assert!(cs_of_nullhomotopy(&c, 1).unwrap().forms[0].sup_norm() < 1e-15);
    }
}
