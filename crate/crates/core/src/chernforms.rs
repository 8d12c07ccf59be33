//! Pullbacks of the universal Chern character forms and Chern–Simons forms
//! of homotopies.
//!
//! Wedge products of operator-valued forms are evaluated on coordinate
//! vectors with the determinant convention: a product of forms of degrees
//! `p₁ … p_r` on `v₁ … v_n` is `(1/∏ pᵢ!) Σ_σ sgn σ ∏ αᵢ(v_σ…)`. For 1-forms
//! this is the plain signed sum over `S_m`; for the `k`-th power of a 2-form
//! it carries the factor `1/2^k`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomgrid::{
    differentiate, exactness_residual, fd4_derivative, generating_cycles, multi_indices, simpson_weights, Codomain,
    DomainGrid, GradedForm, SampledMap, MIN_INTERVAL,
};
use crate::numkernel::{projection_residual, unitarity_residual, ComplexMatrix, I, ZERO};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// Normalizing scalar in front of `tr(ω^{2k−1})` or `tr(Ω^k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernCoefficients {
    pub parity: Parity,
    pub k: usize,
    pub scalar: Complex64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn i_over_2pi_pow(k: usize) -> Complex64 {
    (I / (2.0 * PI)).powi(k as i32)
}

impl ChernCoefficients {
    /// `(i/2π)^k (−1)^{k−1} (k−1)! / (2k−1)!`.
    pub fn odd(k: usize) -> Self {
        assert!(k >= 1);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let scalar = i_over_2pi_pow(k) * (sign * factorial(k - 1) / factorial(2 * k - 1));
        ChernCoefficients { parity: Parity::Odd, k, scalar }
    }

    /// `(i/2π)^k / k!`.
    pub fn even(k: usize) -> Self {
        let scalar = i_over_2pi_pow(k) / factorial(k);
        ChernCoefficients { parity: Parity::Even, k, scalar }
    }
}

/// Value at one node of an operator-valued 1- or 2-form, on coordinate
/// directions `0 … dim−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeOpForm {
    pub dim: usize,
    pub degree: usize,
    /// Degree 1: `values[a]`. Degree 2: `values[a·dim + b]`, antisymmetric.
    values: Vec<ComplexMatrix>,
}

impl NodeOpForm {
    pub fn one(values: Vec<ComplexMatrix>) -> Self {
        NodeOpForm { dim: values.len(), degree: 1, values }
    }

    /// 2-form from its values on pairs `a < b`.
    pub fn two<F>(dim: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> ComplexMatrix,
    {
        let mut vals: Vec<Option<ComplexMatrix>> = vec![None; dim * dim];
        let mut shape = (0, 0);
        for a in 0..dim {
            for b in a + 1..dim {
                let m = f(a, b);
                shape = m.shape();
                vals[b * dim + a] = Some(-&m);
                vals[a * dim + b] = Some(m);
            }
        }
        let values = vals.into_iter().map(|v| v.unwrap_or_else(|| ComplexMatrix::zeros(shape.0, shape.1))).collect();
        NodeOpForm { dim, degree: 2, values }
    }

    pub fn at1(&self, a: usize) -> &ComplexMatrix {
        &self.values[a]
    }

    pub fn at2(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.values[a * self.dim + b]
    }

    fn eval(&self, slots: &[usize]) -> &ComplexMatrix {
        match self.degree {
            1 => &self.values[slots[0]],
            _ => &self.values[slots[0] * self.dim + slots[1]],
        }
    }
}

type PermTable = Arc<Vec<(Vec<usize>, f64)>>;

/// All permutations of `0..n` with their signs, computed once per `n`.
pub fn permutations(n: usize) -> PermTable {
    static CACHE: OnceLock<Mutex<HashMap<usize, PermTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("permutation cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut out = Vec::new();
            let mut cur = Vec::with_capacity(n);
            collect_permutations(n, &mut cur, &mut out);
            Arc::new(out)
        })
        .clone()
}

fn collect_permutations(n: usize, cur: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
    if cur.len() == n {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| cur[i] > cur[j]).count();
        out.push((cur.clone(), if inversions % 2 == 0 { 1.0 } else { -1.0 }));
        return;
    }
    for v in 0..n {
        if !cur.contains(&v) {
            cur.push(v);
            collect_permutations(n, cur, out);
            cur.pop();
        }
    }
}

fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `tr(α₁ ∧ … ∧ α_r)` evaluated on the coordinate directions `slots` (in
/// that order).
pub fn wedge_trace(factors: &[&NodeOpForm], slots: &[usize]) -> Complex64 {
    let n: usize = factors.iter().map(|f| f.degree).sum();
    assert_eq!(n, slots.len(), "slot count must equal the total degree");
    let norm: f64 = factors.iter().map(|f| factorial(f.degree)).product();
    let perms = permutations(n);
    let mut acc = ZERO;
    let mut buf = [0usize; 2];
    for (perm, sign) in perms.iter() {
        let mut cursor = 0;
        let mut mats: Vec<&ComplexMatrix> = Vec::with_capacity(factors.len());
        for f in factors {
            for s in 0..f.degree {
                buf[s] = slots[perm[cursor + s]];
            }
            cursor += f.degree;
            mats.push(f.eval(&buf[..f.degree]));
        }
        let term = match mats.len() {
            1 => crate::numkernel::trace(mats[0]),
            _ => {
                let mut prod = mats[0].clone();
                for m in &mats[1..mats.len() - 1] {
                    prod = &prod * *m;
                }
                trace_of_product(&prod, mats[mats.len() - 1])
            }
        };
        acc += term * *sign;
    }
    acc / norm
}

/// `tr(α^m)` on every increasing multi-index of degree `m · deg α`.
pub fn wedge_trace_power(alpha: &NodeOpForm, m: usize) -> Result<Vec<Complex64>> {
    let degree = m * alpha.degree;
    if degree > alpha.dim {
        return Err(Error::ArityTooLarge { arity: degree, dim: alpha.dim });
    }
    let factors = vec![alpha; m];
    Ok(multi_indices(alpha.dim, degree).iter().map(|idx| wedge_trace(&factors, idx)).collect())
}

/// Maurer–Cartan form `f⁻¹ df` at a node (unitary `f`, so `f⁻¹ = f*`).
pub fn maurer_cartan_at(f: &ComplexMatrix, df: &[ComplexMatrix]) -> NodeOpForm {
    let fi = f.adjoint();
    NodeOpForm::one(df.iter().map(|d| &fi * d).collect())
}

/// Curvature 2-form `p[(∂_a p)(∂_b p) − (∂_b p)(∂_a p)]` at a node.
pub fn projection_curvature_at(p: &ComplexMatrix, dp: &[ComplexMatrix]) -> NodeOpForm {
    NodeOpForm::two(dp.len(), |a, b| p * (&dp[a] * &dp[b] - &dp[b] * &dp[a]))
}

/// Components of `ch_{2k−1}` at a node.
pub fn ch_odd_at(f: &ComplexMatrix, df: &[ComplexMatrix], k: usize) -> Result<Vec<Complex64>> {
    let c = ChernCoefficients::odd(k).scalar;
    Ok(wedge_trace_power(&maurer_cartan_at(f, df), 2 * k - 1)?.into_iter().map(|z| z * c).collect())
}

/// Components of `ch_{2k}` at a node.
pub fn ch_even_at(p: &ComplexMatrix, dp: &[ComplexMatrix], k: usize) -> Result<Vec<Complex64>> {
    let c = ChernCoefficients::even(k).scalar;
    Ok(wedge_trace_power(&projection_curvature_at(p, dp), k)?.into_iter().map(|z| z * c).collect())
}

fn require_unitary(f: &SampledMap) -> Result<()> {
    if f.codomain() != Codomain::Unitary {
        let worst = f.values().iter().map(unitarity_residual).fold(0.0, f64::max);
        if !(worst < 1e-8) {
            return Err(Error::NotUnitary(worst));
        }
    }
    Ok(())
}

fn require_projection(p: &SampledMap) -> Result<()> {
    if p.codomain() != Codomain::Projection {
        let worst = p.values().iter().map(projection_residual).fold(0.0, f64::max);
        if !(worst < 1e-8) {
            return Err(Error::NotProjection(worst));
        }
    }
    Ok(())
}

fn node_partials(jets: &[Vec<ComplexMatrix>], node: usize) -> Vec<ComplexMatrix> {
    jets.iter().map(|p| p[node].clone()).collect()
}

fn assemble(domain: &DomainGrid, degree: usize, u_power: i32, per_node: Vec<Result<Vec<Complex64>>>) -> Result<GradedForm> {
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;
    GradedForm::from_nodes(domain, degree, u_power, per_node)
}

/// Pullback `f* ch_{2k−1}` of a unitary-valued map.
pub fn ch_odd(f: &SampledMap, k: usize) -> Result<GradedForm> {
    let g = f.domain();
    if k == 0 || 2 * k - 1 > g.dim() {
        return Err(Error::DegreeOverflow { degree: (2 * k).saturating_sub(1), dim: g.dim() });
    }
    require_unitary(f)?;
    let jets = differentiate(f);
    let vals = par::map_indices(g.n_nodes(), |node| ch_odd_at(f.value(node), &node_partials(&jets.partials, node), k));
    assemble(g, 2 * k - 1, -(k as i32), vals)
}

/// Pullback `p* ch_{2k}` of a projection-valued map, `k ≥ 1`.
pub fn ch_even(p: &SampledMap, k: usize) -> Result<GradedForm> {
    let g = p.domain();
    if k == 0 || 2 * k > g.dim() {
        return Err(Error::DegreeOverflow { degree: 2 * k, dim: g.dim() });
    }
    require_projection(p)?;
    let jets = differentiate(p);
    let vals = par::map_indices(g.n_nodes(), |node| ch_even_at(p.value(node), &node_partials(&jets.partials, node), k));
    assemble(g, 2 * k, -(k as i32), vals)
}

/// Every positive-degree component up to `k_max` that fits on the domain;
/// parity follows the codomain tag.
pub fn ch_total(f: &SampledMap, k_max: usize) -> Result<Vec<GradedForm>> {
    let dim = f.domain().dim();
    match f.codomain() {
        Codomain::Unitary => (1..=k_max).filter(|k| 2 * k - 1 <= dim).map(|k| ch_odd(f, k)).collect(),
        Codomain::Projection => (1..=k_max).filter(|k| 2 * k <= dim).map(|k| ch_even(f, k)).collect(),
        Codomain::Frame => {
            let p = crate::stiefel::projection_family(f)?;
            ch_total(&p, k_max)
        }
        Codomain::Generic => Err(Error::ShapeMismatch("a generic map has no Chern character".into())),
    }
}

/// A smooth one-parameter family of sampled maps, with time derivatives.
///
/// The time nodes carry quadrature weights. Concatenation appends nodes and
/// weights, so fiber integrals over a concatenation are the sums of the
/// pieces.
#[derive(Debug, Clone)]
pub struct Homotopy {
    time_nodes: Vec<f64>,
    time_weights: Vec<f64>,
    slices: Vec<SampledMap>,
    velocities: Vec<Vec<ComplexMatrix>>,
}

fn uniform_times(t0: f64, t1: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < MIN_INTERVAL || n % 2 == 0 {
        return Err(Error::BadResolution(format!("time grid needs an odd count ≥ {MIN_INTERVAL}, got {n}")));
    }
    let h = (t1 - t0) / (n - 1) as f64;
    let nodes = (0..n).map(|i| t0 + h * i as f64).collect();
    Ok((nodes, simpson_weights(n, h)))
}

impl Homotopy {
    /// Sample `f(t, node) = (value, ∂_t value)` on `n_t` uniform times in
    /// `[t0, t1]`.
    pub fn build<F>(domain: &DomainGrid, codomain: Codomain, t0: f64, t1: f64, n_t: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> (ComplexMatrix, ComplexMatrix) + Sync + Send,
    {
        let (time_nodes, time_weights) = uniform_times(t0, t1, n_t)?;
        let nn = domain.n_nodes();
        let all = par::map_indices(n_t * nn, |i| f(time_nodes[i / nn], i % nn));
        let mut slices = Vec::with_capacity(n_t);
        let mut velocities = Vec::with_capacity(n_t);
        let mut it = all.into_iter();
        for _ in 0..n_t {
            let (vals, vels): (Vec<_>, Vec<_>) = it.by_ref().take(nn).unzip();
            slices.push(SampledMap::new(domain.clone(), vals, codomain)?);
            velocities.push(vels);
        }
        Ok(Homotopy { time_nodes, time_weights, slices, velocities })
    }

    /// Slices on a uniform time grid; time derivatives by fourth-order finite
    /// differences.
    pub fn from_slices(t0: f64, t1: f64, slices: Vec<SampledMap>) -> Result<Self> {
        let n_t = slices.len();
        let (time_nodes, time_weights) = uniform_times(t0, t1, n_t)?;
        let domain = slices[0].domain().clone();
        if slices.iter().any(|s| *s.domain() != domain || s.codomain() != slices[0].codomain()) {
            return Err(Error::ShapeMismatch("slices differ in grid or codomain".into()));
        }
        let (rows, cols) = slices[0].shape();
        let h = (t1 - t0) / (n_t - 1) as f64;
        let nn = domain.n_nodes();
        let per_node = par::map_indices(nn, |node| {
            let mut out = vec![ComplexMatrix::zeros(rows, cols); n_t];
            let mut line = vec![ZERO; n_t];
            for i in 0..rows {
                for j in 0..cols {
                    for (t, s) in slices.iter().enumerate() {
                        line[t] = s.value(node)[(i, j)];
                    }
                    for (t, v) in fd4_derivative(&line, h).into_iter().enumerate() {
                        out[t][(i, j)] = v;
                    }
                }
            }
            out
        });
        let mut velocities = vec![Vec::with_capacity(nn); n_t];
        for node_vals in per_node {
            for (t, m) in node_vals.into_iter().enumerate() {
                velocities[t].push(m);
            }
        }
        Ok(Homotopy { time_nodes, time_weights, slices, velocities })
    }

    /// The constant homotopy at `f`.
    pub fn constant(f: &SampledMap, n_t: usize) -> Result<Self> {
        let (time_nodes, time_weights) = uniform_times(0.0, 1.0, n_t)?;
        let (r, c) = f.shape();
        let zero = vec![ComplexMatrix::zeros(r, c); f.domain().n_nodes()];
        Ok(Homotopy { time_nodes, time_weights, slices: vec![f.clone(); n_t], velocities: vec![zero; n_t] })
    }

    pub fn domain(&self) -> &DomainGrid {
        self.slices[0].domain()
    }

    pub fn codomain(&self) -> Codomain {
        self.slices[0].codomain()
    }

    pub fn n_times(&self) -> usize {
        self.slices.len()
    }

    pub fn time_nodes(&self) -> &[f64] {
        &self.time_nodes
    }

    pub fn time_weights(&self) -> &[f64] {
        &self.time_weights
    }

    pub fn slices(&self) -> &[SampledMap] {
        &self.slices
    }

    pub fn velocities(&self, t: usize) -> &[ComplexMatrix] {
        &self.velocities[t]
    }

    pub fn start(&self) -> &SampledMap {
        &self.slices[0]
    }

    pub fn end(&self) -> &SampledMap {
        &self.slices[self.slices.len() - 1]
    }

    /// `H * G`: run `self`, then `other`. Endpoints must agree within `tol`.
    pub fn concat(&self, other: &Homotopy, tol: f64) -> Result<Homotopy> {
        let gap = self
            .end()
            .values()
            .iter()
            .zip(other.start().values())
            .map(|(a, b)| crate::numkernel::frobenius(&(a - b)))
            .fold(0.0, f64::max);
        if !(gap < tol) || self.domain() != other.domain() {
            return Err(Error::ShapeMismatch(format!("homotopies do not compose (endpoint gap {gap:e})")));
        }
        let shift = self.time_nodes[self.time_nodes.len() - 1] - other.time_nodes[0];
        let mut out = self.clone();
        out.time_nodes.extend(other.time_nodes.iter().map(|t| t + shift));
        out.time_weights.extend_from_slice(&other.time_weights);
        out.slices.extend(other.slices.iter().cloned());
        out.velocities.extend(other.velocities.iter().cloned());
        Ok(out)
    }

    /// The same path run backwards.
    pub fn reverse(&self) -> Homotopy {
        let (t0, t1) = (self.time_nodes[0], self.time_nodes[self.time_nodes.len() - 1]);
        Homotopy {
            time_nodes: self.time_nodes.iter().rev().map(|t| t0 + t1 - t).collect(),
            time_weights: self.time_weights.iter().rev().copied().collect(),
            slices: self.slices.iter().rev().cloned().collect(),
            velocities: self.velocities.iter().rev().map(|v| v.iter().map(|m| -m).collect()).collect(),
        }
    }

    /// Apply `f(value, velocity) = (value', velocity')` at every (time, node).
    pub fn map_pointwise<F>(&self, codomain: Codomain, f: F) -> Result<Homotopy>
    where
        F: Fn(&ComplexMatrix, &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) + Sync + Send,
    {
        let mut slices = Vec::with_capacity(self.n_times());
        let mut velocities = Vec::with_capacity(self.n_times());
        for (s, v) in self.slices.iter().zip(&self.velocities) {
            let pairs = par::map_indices(s.values().len(), |i| f(s.value(i), &v[i]));
            let (vals, vels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            slices.push(SampledMap::new(s.domain().clone(), vals, codomain)?);
            velocities.push(vels);
        }
        Ok(Homotopy { time_nodes: self.time_nodes.clone(), time_weights: self.time_weights.clone(), slices, velocities })
    }

    /// Combine two homotopies on the same time grid node by node.
    pub fn zip_pointwise<F>(&self, other: &Homotopy, codomain: Codomain, f: F) -> Result<Homotopy>
    where
        F: Fn((&ComplexMatrix, &ComplexMatrix), (&ComplexMatrix, &ComplexMatrix)) -> (ComplexMatrix, ComplexMatrix)
            + Sync
            + Send,
    {
        if self.time_nodes != other.time_nodes || self.domain() != other.domain() {
            return Err(Error::ShapeMismatch("homotopies live on different grids".into()));
        }
        let mut slices = Vec::with_capacity(self.n_times());
        let mut velocities = Vec::with_capacity(self.n_times());
        for t in 0..self.n_times() {
            let (a, b) = (&self.slices[t], &other.slices[t]);
            let pairs = par::map_indices(a.values().len(), |i| {
                f((a.value(i), &self.velocities[t][i]), (b.value(i), &other.velocities[t][i]))
            });
            let (vals, vels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            slices.push(SampledMap::new(a.domain().clone(), vals, codomain)?);
            velocities.push(vels);
        }
        Ok(Homotopy { time_nodes: self.time_nodes.clone(), time_weights: self.time_weights.clone(), slices, velocities })
    }
}

/// Chern–Simons form `∫_I ι_{∂t} H*ch`: the pulled-back form on
/// `domain × I` with time as the first slot, contracted with `∂t` and
/// integrated over `t`. Degree `2k − 2` for unitary slices (from
/// `ch_{2k−1}`), `2k − 1` for projection slices (from `ch_{2k}`).
pub fn cs_form(h: &Homotopy, k: usize) -> Result<GradedForm> {
    let g = h.domain().clone();
    let dim = g.dim();
    let unitary = match h.codomain() {
        Codomain::Unitary => true,
        Codomain::Projection => false,
        _ => return Err(Error::ShapeMismatch("Chern–Simons forms need unitary or projection slices".into())),
    };
    if k == 0 {
        return Err(Error::DegreeOverflow { degree: 0, dim });
    }
    let degree = if unitary { 2 * k - 2 } else { 2 * k - 1 };
    if degree > dim {
        return Err(Error::DegreeOverflow { degree, dim });
    }
    let coeff = if unitary { ChernCoefficients::odd(k).scalar } else { ChernCoefficients::even(k).scalar };
    let idx: Vec<Vec<usize>> = multi_indices(dim, degree)
        .into_iter()
        .map(|m| std::iter::once(0).chain(m.into_iter().map(|a| a + 1)).collect())
        .collect();
    let slice_vals: Vec<Vec<Vec<Complex64>>> = h
        .slices
        .iter()
        .zip(&h.velocities)
        .map(|(s, vel)| {
            let jets = differentiate(s);
            par::map_indices(g.n_nodes(), |node| {
                let mut d = Vec::with_capacity(dim + 1);
                d.push(vel[node].clone());
                d.extend(node_partials(&jets.partials, node));
                if unitary {
                    let alpha = maurer_cartan_at(s.value(node), &d);
                    let factors = vec![&alpha; 2 * k - 1];
                    idx.iter().map(|m| wedge_trace(&factors, m) * coeff).collect()
                } else {
                    let omega = projection_curvature_at(s.value(node), &d);
                    let factors = vec![&omega; k];
                    idx.iter().map(|m| wedge_trace(&factors, m) * coeff).collect()
                }
            })
        })
        .collect();
    let per_node = par::map_indices(g.n_nodes(), |node| {
        (0..idx.len())
            .map(|c| {
                let mut acc = ZERO;
                for (t, w) in h.time_weights.iter().enumerate() {
                    acc += slice_vals[t][node][c] * *w;
                }
                acc
            })
            .collect::<Vec<_>>()
    });
    GradedForm::from_nodes(&g, degree, -(k as i32), per_node)
}

/// Exactness residual of one CS component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsResidual {
    pub k: usize,
    pub degree: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsExactReport {
    pub residuals: Vec<CsResidual>,
    pub tolerance: f64,
    pub exact: bool,
}

/// Cycle-integral (or, in degree 0, sup-norm) residuals of every CS component
/// up to `k_max` that fits on the domain.
pub fn cs_exact(h: &Homotopy, k_max: usize, tolerance: f64) -> Result<CsExactReport> {
    let dim = h.domain().dim();
    let unitary = h.codomain() == Codomain::Unitary;
    let mut residuals = Vec::new();
    for k in 1..=k_max {
        let degree = if unitary { 2 * k - 2 } else { 2 * k - 1 };
        if degree > dim {
            break;
        }
        let cs = cs_form(h, k)?;
        let residual = exactness_residual(&cs, &generating_cycles(h.domain(), degree));
        residuals.push(CsResidual { k, degree, residual });
    }
    let exact = residuals.iter().all(|r| r.residual < tolerance);
    Ok(CsExactReport { residuals, tolerance, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomgrid::{integrate, make_domain, DomainKind};
    use crate::numkernel::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_phase_loop(n: usize, phases: &[i32]) -> SampledMap {
        let g = make_domain(DomainKind::Circle, &[n]).unwrap();
        SampledMap::from_fn(g, Codomain::Unitary, |_, x| {
            ComplexMatrix::from_fn(phases.len(), phases.len(), |i, j| {
                if i == j {
                    Complex64::from_polar(1.0, phases[i] as f64 * x[0])
                } else {
                    ZERO
                }
            })
        })
        .unwrap()
    }

    #[test]
    fn coefficients() {
        let c1 = ChernCoefficients::odd(1).scalar;
        assert!((c1 - I / (2.0 * PI)).norm() < 1e-16);
        let c2 = ChernCoefficients::odd(2).scalar;
        assert!((c2 - (I / (2.0 * PI)).powi(2) * (-1.0 / 6.0)).norm() < 1e-16);
        assert!((ChernCoefficients::even(2).scalar - (I / (2.0 * PI)).powi(2) / 2.0).norm() < 1e-16);
    }

    #[test]
    fn permutation_table() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<f64>(), 0.0);
        // Sign agrees with inversion parity.
        for (perm, s) in p.iter() {
            let inv = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
            assert_eq!(*s, if inv % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn wedge_single_slot() {
        let a = NodeOpForm::one(vec![ComplexMatrix::from_element(1, 1, I)]);
        assert_eq!(wedge_trace_power(&a, 1).unwrap(), vec![I]);
        assert!(matches!(wedge_trace_power(&a, 2), Err(Error::ArityTooLarge { arity: 2, dim: 1 })));
    }

    #[test]
    fn commuting_diagonal_cube_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<ComplexMatrix> = (0..3)
            .map(|_| {
                let d = fixtures::gaussian(&mut rng, 3, 1);
                ComplexMatrix::from_diagonal(&d.column(0))
            })
            .collect();
        let a = NodeOpForm::one(vals.clone());
        let got = wedge_trace_power(&a, 3).unwrap()[0];
        let mut brute = ZERO;
        for (p, s) in permutations(3).iter() {
            brute += crate::numkernel::trace(&(&vals[p[0]] * &vals[p[1]] * &vals[p[2]])) * *s;
        }
        assert!((got - brute).norm() < 1e-14);
        // Commuting matrices: the alternating sum vanishes.
        assert!(got.norm() < 1e-12);
    }

    /// Operator-valued wedge by shuffles, the textbook route.
    fn shuffle_wedge(a: &[(Vec<usize>, ComplexMatrix)], b: &[(Vec<usize>, ComplexMatrix)], idx: &[usize]) -> ComplexMatrix {
        let n = idx.len();
        let p = a[0].0.len();
        let shape = a[0].1.nrows();
        let mut out = ComplexMatrix::zeros(shape, shape);
        for sel in multi_indices(n, p) {
            let left: Vec<usize> = sel.iter().map(|&i| idx[i]).collect();
            let right: Vec<usize> = (0..n).filter(|i| !sel.contains(i)).map(|i| idx[i]).collect();
            let perm: Vec<usize> = sel.iter().copied().chain((0..n).filter(|i| !sel.contains(i))).collect();
            let inv = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
            let sign = if inv % 2 == 0 { 1.0 } else { -1.0 };
            let fa = &a.iter().find(|(m, _)| *m == left).unwrap().1;
            let fb = &b.iter().find(|(m, _)| *m == right).unwrap().1;
            out += (fa * fb).scale(sign);
        }
        out
    }

    #[test]
    fn determinant_convention_matches_shuffle_wedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = 4;
        let one: Vec<ComplexMatrix> = (0..dim).map(|_| fixtures::gaussian(&mut rng, 3, 3)).collect();
        let pairs: Vec<ComplexMatrix> = (0..dim * dim).map(|_| fixtures::gaussian(&mut rng, 3, 3)).collect();
        let alpha = NodeOpForm::one(one.clone());
        let omega = NodeOpForm::two(dim, |a, b| pairs[a * dim + b].clone());
        let as_list1: Vec<(Vec<usize>, ComplexMatrix)> = (0..dim).map(|a| (vec![a], one[a].clone())).collect();
        let as_list2: Vec<(Vec<usize>, ComplexMatrix)> =
            multi_indices(dim, 2).into_iter().map(|m| (m.clone(), omega.at2(m[0], m[1]).clone())).collect();
        // α ∧ α as a 2-form, then (α∧α) ∧ Ω as a 4-form.
        let aa: Vec<(Vec<usize>, ComplexMatrix)> = multi_indices(dim, 2)
            .into_iter()
            .map(|m| (m.clone(), shuffle_wedge(&as_list1, &as_list1, &m)))
            .collect();
        let idx = vec![0, 1, 2, 3];
        let want = crate::numkernel::trace(&shuffle_wedge(&aa, &as_list2, &idx));
        let got = wedge_trace(&[&alpha, &alpha, &omega], &idx);
        assert!((got - want).norm() < 1e-10 * want.norm().max(1.0));
        // Ω ∧ Ω with the 1/4 normalization.
        let want2 = crate::numkernel::trace(&shuffle_wedge(&as_list2, &as_list2, &idx));
        let got2 = wedge_trace(&[&omega, &omega], &idx);
        assert!((got2 - want2).norm() < 1e-10 * want2.norm().max(1.0));
    }

    #[test]
    fn winding_sign() {
        for n in -3..=3 {
            let f = diag_phase_loop(64, &[n]);
            let ch1 = ch_odd(&f, 1).unwrap();
            assert!((integrate(&ch1).unwrap() - Complex64::new(-(n as f64), 0.0)).norm() < 1e-10);
        }
        let f = diag_phase_loop(64, &[1, -1]);
        assert!(integrate(&ch_odd(&f, 1).unwrap()).unwrap().norm() < 1e-12);
        assert!(matches!(ch_odd(&f, 2), Err(Error::DegreeOverflow { .. })));
    }

    #[test]
    fn constant_maps_have_no_curvature() {
        let g = make_domain(DomainKind::Torus3, &[8, 8, 8]).unwrap();
        let u = fixtures::unitary(&mut ChaCha8Rng::seed_from_u64(1), 3);
        let f = SampledMap::from_fn(g, Codomain::Unitary, |_, _| u.clone()).unwrap();
        for form in ch_total(&f, 3).unwrap() {
            assert!(form.sup_norm() < 1e-12);
        }
        let loop_ = diag_phase_loop(32, &[2]);
        let all = ch_total(&loop_, 2).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].degree, 1);
    }

    #[test]
    fn constant_homotopy_has_zero_cs() {
        let f = diag_phase_loop(32, &[1, 2]);
        let h = Homotopy::constant(&f, 9).unwrap();
        assert_eq!(cs_form(&h, 1).unwrap().sup_norm(), 0.0);
        let rep = cs_exact(&h, 3, 1e-6).unwrap();
        assert!(rep.exact);
        assert_eq!(rep.residuals.len(), 1);
    }

    #[test]
    fn phase_rotation_cs0() {
        // H_t = e^{2πi c t}: CS₀ = (i/2π)·(2πi c) = −c.
        let g = make_domain(DomainKind::Circle, &[16]).unwrap();
        let c = 0.3;
        let h = Homotopy::build(&g, Codomain::Unitary, 0.0, 1.0, 9, |t, _| {
            let z = Complex64::from_polar(1.0, 2.0 * PI * c * t);
            (ComplexMatrix::from_element(1, 1, z), ComplexMatrix::from_element(1, 1, z * I * (2.0 * PI * c)))
        })
        .unwrap();
        let cs = cs_form(&h, 1).unwrap();
        assert!(cs.components[0].iter().all(|z| (z + c).norm() < 1e-12));
        let back = h.reverse();
        assert!(cs_form(&back, 1).unwrap().components[0].iter().all(|z| (z - c).norm() < 1e-12));
        let slices = (0..33)
            .map(|i| {
                let z = Complex64::from_polar(1.0, 2.0 * PI * c * i as f64 / 32.0);
                SampledMap::from_fn(g.clone(), Codomain::Unitary, |_, _| ComplexMatrix::from_element(1, 1, z)).unwrap()
            })
            .collect();
        let fd = Homotopy::from_slices(0.0, 1.0, slices).unwrap();
        assert!(cs_form(&fd, 1).unwrap().components[0].iter().all(|z| (z + c).norm() < 1e-5));
        let twice = h.concat(&h.map_pointwise(Codomain::Unitary, |v, d| {
            let s = ComplexMatrix::from_element(1, 1, Complex64::from_polar(1.0, 2.0 * PI * c));
            (&s * v, &s * d)
        }).unwrap(), 1e-12).unwrap();
        assert!(cs_form(&twice, 1).unwrap().components[0].iter().all(|z| (z + 2.0 * c).norm() < 1e-12));
    }
}
