//! Blocksum, flip, adjoint inversion and the canonical homotopies behind the
//! group laws.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

use crate::chernforms::Homotopy;
use crate::error::{Error, Result};
use crate::geomgrid::{Codomain, SampledMap};
use crate::numkernel::{direct_sum, frobenius, identity, ComplexMatrix, ONE};
use crate::par;
use crate::stiefel::PolarizedWindow;

/// How the two summands are interleaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    /// `e_{2k} ↦ (e_k, 0)`, `e_{2k+1} ↦ (0, e_k)` on plain indices.
    Ungraded,
    /// The same rule applied to modes, so `H₊` and `H₋` are interleaved
    /// separately: mode `m` comes from summand `m mod 2`, mode `⌊m/2⌋`.
    Graded(PolarizedWindow),
}

/// The shuffle `ρ: H → H₁ ⊕ H₂` as an index map.
///
/// Ungraded summands may differ in size; once the smaller one runs out the
/// remaining indices come from the larger one in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleIso {
    pub grading: Grading,
    pub left: usize,
    pub right: usize,
    /// `source[i] = (summand, index in summand)` for result index `i`.
    pub source: Vec<(usize, usize)>,
}

impl ShuffleIso {
    pub fn new(grading: Grading, half: usize) -> Result<Self> {
        Self::unequal(grading, half, half)
    }

    pub fn unequal(grading: Grading, left: usize, right: usize) -> Result<Self> {
        let source = match grading {
            Grading::Ungraded => {
                let m = left.min(right);
                let tail = if left > right { 0 } else { 1 };
                (0..left + right).map(|i| if i < 2 * m { (i % 2, i / 2) } else { (tail, i - m) }).collect()
            }
            Grading::Graded(win) => {
                if win.dim() != left || left != right {
                    return Err(Error::ShapeMismatch(format!(
                        "graded blocksum needs both summands on the window (dimension {}), got {left} and {right}",
                        win.dim()
                    )));
                }
                let big = doubled(&win);
                (0..big.dim())
                    .map(|r| {
                        let m = big.mode_of(r);
                        let c = r % win.fiber;
                        (m.rem_euclid(2) as usize, win.row(m.div_euclid(2), c))
                    })
                    .collect()
            }
        };
        Ok(ShuffleIso { grading, left, right, source })
    }

    /// `ρ` as a permutation matrix from the result space to `H₁ ⊕ H₂`.
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.left + self.right;
        let mut r = ComplexMatrix::zeros(n, n);
        for (i, &(s, j)) in self.source.iter().enumerate() {
            r[(s * self.left + j, i)] = ONE;
        }
        r
    }

    /// `ρ*(a ⊕ b)ρ`, assembled entrywise.
    pub fn apply(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.left + self.right;
        ComplexMatrix::from_fn(n, n, |i, j| {
            let (si, ri) = self.source[i];
            let (sj, rj) = self.source[j];
            match (si == sj, si) {
                (true, 0) => a[(ri, rj)],
                (true, _) => b[(ri, rj)],
                _ => Complex64::new(0.0, 0.0),
            }
        })
    }

    /// Result indices paired by the rotation `C_t`: `(2k, 2k+1)` in the
    /// interleaved order, which pairs the two summands and keeps the grading.
    pub fn rotation_pairs(&self) -> Vec<(usize, usize)> {
        match self.grading {
            Grading::Ungraded => (0..self.left.min(self.right)).map(|k| (2 * k, 2 * k + 1)).collect(),
            Grading::Graded(win) => {
                let big = doubled(&win);
                let mut pairs = Vec::with_capacity(self.left);
                for m in -(win.n_minus as i64)..win.n_plus as i64 {
                    for c in 0..win.fiber {
                        pairs.push((big.row(2 * m, c), big.row(2 * m + 1, c)));
                    }
                }
                pairs
            }
        }
    }
}

/// Window of a blocksum: twice as many modes on each side.
pub fn doubled(win: &PolarizedWindow) -> PolarizedWindow {
    PolarizedWindow::with_fiber(2 * win.n_minus, 2 * win.n_plus, win.fiber)
}

fn check_pair(a: &ComplexMatrix, b: &ComplexMatrix, grading: Grading) -> Result<usize> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::ShapeMismatch(format!("blocksum of {:?} and {:?}", a.shape(), b.shape())));
    }
    if let Grading::Graded(win) = grading {
        if win.dim() != a.nrows() {
            return Err(Error::ShapeMismatch(format!("operator {:?} on window of dimension {}", a.shape(), win.dim())));
        }
    }
    Ok(a.nrows())
}

/// `a ⊞ b = ρ*(a ⊕ b)ρ`.
pub fn blocksum(a: &ComplexMatrix, b: &ComplexMatrix, grading: Grading) -> Result<ComplexMatrix> {
    let n = check_pair(a, b, grading)?;
    Ok(ShuffleIso::new(grading, n)?.apply(a, b))
}

/// Ungraded blocksum of square summands of different sizes, as needed for
/// `(f ⊞ g) ⊞ h`.
pub fn blocksum_unequal(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::ShapeMismatch(format!("blocksum of {:?} and {:?}", a.shape(), b.shape())));
    }
    Ok(ShuffleIso::unequal(Grading::Ungraded, a.nrows(), b.nrows())?.apply(a, b))
}

/// Blocksum of two sampled maps on the same grid.
pub fn blocksum_maps(f: &SampledMap, g: &SampledMap, grading: Grading) -> Result<SampledMap> {
    let n = check_pair(f.value(0), g.value(0), grading)?;
    let rho = ShuffleIso::new(grading, n)?;
    let out = f.zip_with(g, f.codomain(), |a, b| rho.apply(a, b))?;
    match grading {
        Grading::Graded(win) => out.with_window(doubled(&win)),
        Grading::Ungraded => Ok(out),
    }
}

/// Blocksum of two homotopies on the same grids.
pub fn blocksum_homotopies(h: &Homotopy, g: &Homotopy, grading: Grading) -> Result<Homotopy> {
    let n = check_pair(h.start().value(0), g.start().value(0), grading)?;
    let rho = ShuffleIso::new(grading, n)?;
    h.zip_pointwise(g, h.codomain(), |(a, da), (b, db)| (rho.apply(a, b), rho.apply(da, db)))
}

/// `U x U`.
pub fn flip(x: &ComplexMatrix, win: &PolarizedWindow) -> Result<ComplexMatrix> {
    let u = win.flip_matrix()?;
    Ok(&u * x * &u)
}

/// `U (I − π) U`: orthogonal complement, then swap the polarization.
pub fn flip_subspace(pi: &ComplexMatrix, win: &PolarizedWindow) -> Result<ComplexMatrix> {
    let u = win.flip_matrix()?;
    Ok(&u * (identity(pi.nrows()) - pi) * &u)
}

fn map_window(f: &SampledMap, win: Option<PolarizedWindow>) -> Result<PolarizedWindow> {
    win.or(f.window()).ok_or_else(|| Error::ShapeMismatch("map carries no polarization window".into()))
}

/// Pointwise flip of a sampled map: conjugation for unitaries, the subspace
/// flip for projections.
pub fn flip_map(f: &SampledMap, win: Option<PolarizedWindow>) -> Result<SampledMap> {
    let win = map_window(f, win)?;
    let u = win.flip_matrix()?;
    let out = match f.codomain() {
        Codomain::Projection => f.map(Codomain::Projection, |p| &u * (identity(p.nrows()) - p) * &u)?,
        c => f.map(c, |x| &u * x * &u)?,
    };
    out.with_window(win)
}

/// Pointwise flip of a homotopy.
pub fn flip_homotopy(h: &Homotopy, win: &PolarizedWindow) -> Result<Homotopy> {
    let u = win.flip_matrix()?;
    match h.codomain() {
        Codomain::Projection => h.map_pointwise(Codomain::Projection, |p, dp| {
            (&u * (identity(p.nrows()) - p) * &u, -(&u * dp * &u))
        }),
        c => h.map_pointwise(c, |x, dx| (&u * x * &u, &u * dx * &u)),
    }
}

/// Pointwise adjoint (the inverse, for unitaries).
pub fn adjoint_map(f: &SampledMap) -> Result<SampledMap> {
    let out = f.map(f.codomain(), |x| x.adjoint())?;
    match f.window() {
        Some(w) => out.with_window(w),
        None => Ok(out),
    }
}

pub fn adjoint_homotopy(h: &Homotopy) -> Result<Homotopy> {
    h.map_pointwise(h.codomain(), |x, dx| (x.adjoint(), dx.adjoint()))
}

/// `C_t` and `dC_t/dt`: on each pair `(p, q)` the rotation
/// `(x, y) ↦ (cx + sy, −sx + cy)`, identity elsewhere.
pub fn rotation(pairs: &[(usize, usize)], n: usize, t: f64) -> (ComplexMatrix, ComplexMatrix) {
    let (s, c) = t.sin_cos();
    let mut rot = identity(n);
    let mut drot = ComplexMatrix::zeros(n, n);
    for &(p, q) in pairs {
        rot[(p, p)] = Complex64::new(c, 0.0);
        rot[(p, q)] = Complex64::new(s, 0.0);
        rot[(q, p)] = Complex64::new(-s, 0.0);
        rot[(q, q)] = Complex64::new(c, 0.0);
        drot[(p, p)] = Complex64::new(-s, 0.0);
        drot[(p, q)] = Complex64::new(c, 0.0);
        drot[(q, p)] = Complex64::new(-c, 0.0);
        drot[(q, q)] = Complex64::new(-s, 0.0);
    }
    (rot, drot)
}

/// Default number of time nodes for the canonical homotopies.
pub const DEFAULT_TIME_NODES: usize = 17;

/// A path of unitaries `t ↦ (A_t, dA_t/dt)` on `[0, 1]`.
pub trait UnitaryPath: Sync {
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix);
}

/// `A_t = exp(t X)` for skew-hermitian `X`.
pub struct ExpPath {
    pub generator: ComplexMatrix,
}

impl UnitaryPath for ExpPath {
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix) {
        let a = crate::numkernel::expm(&(&self.generator * Complex64::new(t, 0.0)));
        let da = &self.generator * &a;
        (a, da)
    }
}

impl<F> UnitaryPath for F
where
    F: Fn(f64) -> (ComplexMatrix, ComplexMatrix) + Sync,
{
    fn eval(&self, t: f64) -> (ComplexMatrix, ComplexMatrix) {
        self(t)
    }
}

/// `H_t = A_t f A_t*`.
pub fn conjugation_homotopy(f: &SampledMap, path: &dyn UnitaryPath, n_t: usize) -> Result<Homotopy> {
    let (a0, _) = path.eval(0.0);
    let start = frobenius(&(a0 - identity(f.shape().0)));
    if !(start < 1e-10) {
        return Err(Error::BadPathStart(start));
    }
    let last = n_t.max(2) - 1;
    let path_vals = par::map_indices(n_t, |i| path.eval(i as f64 / last as f64));
    Homotopy::build(f.domain(), f.codomain(), 0.0, 1.0, n_t, |t, node| {
        let (a, da) = &path_vals[((t * last as f64).round() as usize).min(last)];
        let x = f.value(node);
        (a * x * a.adjoint(), da * x * a.adjoint() + a * x * da.adjoint())
    })
}

/// `H_t = (A ⊞ 1) C_t (1 ⊞ A*) C_t*` for `t ∈ [0, π/2]`, from `f ⊞ f*` to `I`.
pub fn inversion_homotopy_odd(f: &SampledMap, grading: Grading, n_t: usize) -> Result<Homotopy> {
    let n = f.shape().0;
    check_pair(f.value(0), f.value(0), grading)?;
    let rho = ShuffleIso::new(grading, n)?;
    let pairs = rho.rotation_pairs();
    let one = identity(n);
    Homotopy::build(f.domain(), Codomain::Unitary, 0.0, FRAC_PI_2, n_t, |t, node| {
        let a = f.value(node);
        let left = rho.apply(a, &one);
        let mid = rho.apply(&one, &a.adjoint());
        let (c, dc) = rotation(&pairs, 2 * n, t);
        let val = &left * &c * &mid * c.adjoint();
        let vel = &left * (&dc * &mid * c.adjoint() + &c * &mid * dc.adjoint());
        (val, vel)
    })
}

/// `H_t = (A ⊞ 1) C_t (1 ⊞ B) C_t*` for `t ∈ [0, π/2]`, from `a ⊞ b` to
/// `ab ⊞ 1`.
pub fn eckmann_hilton_homotopy(a: &SampledMap, b: &SampledMap, grading: Grading, n_t: usize) -> Result<Homotopy> {
    let n = check_pair(a.value(0), b.value(0), grading)?;
    if a.domain() != b.domain() {
        return Err(Error::ShapeMismatch("maps live on different grids".into()));
    }
    let rho = ShuffleIso::new(grading, n)?;
    let pairs = rho.rotation_pairs();
    let one = identity(n);
    Homotopy::build(a.domain(), Codomain::Unitary, 0.0, FRAC_PI_2, n_t, |t, node| {
        let left = rho.apply(a.value(node), &one);
        let mid = rho.apply(&one, b.value(node));
        let (c, dc) = rotation(&pairs, 2 * n, t);
        let val = &left * &c * &mid * c.adjoint();
        let vel = &left * (&dc * &mid * c.adjoint() + &c * &mid * dc.adjoint());
        (val, vel)
    })
}

/// Unitary `H_t = ρ* C_t* (X ⊕ flip X) C_t ρ` on the doubled window, where
/// `C_t` rotates the negative modes of the first copy into the positive
/// modes of the second (`e¹_{−m−1} ↔ e²_m`, the identification made by `U`).
/// Returns `(H_t, dH_t/dt)`.
pub fn even_inversion_operator(x: &ComplexMatrix, win: &PolarizedWindow, t: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = win.dim();
    let fx = flip(x, win)?;
    let sum = direct_sum(x, &fx);
    let mut pairs = Vec::with_capacity(win.minus_dim());
    for m in 0..win.n_minus as i64 {
        for c in 0..win.fiber {
            pairs.push((win.row(-m - 1, c), n + win.row(m, c)));
        }
    }
    let (c, dc) = rotation(&pairs, 2 * n, t);
    let h = c.adjoint() * &sum * &c;
    let dh = dc.adjoint() * &sum * &c + c.adjoint() * &sum * &dc;
    let r = ShuffleIso::new(Grading::Graded(*win), n)?.matrix();
    Ok((r.adjoint() * h * &r, r.adjoint() * dh * &r))
}

/// Projection homotopy `π_t = H_t π₊ H_t*` from `(X ⊞ flip X)(H₊)` at `t = 0`
/// to the basepoint at `t = π/2`.
pub fn inversion_homotopy_even(x: &SampledMap, win: Option<PolarizedWindow>, n_t: usize) -> Result<Homotopy> {
    let win = map_window(x, win)?;
    if win.n_minus != win.n_plus {
        return Err(Error::AsymmetricWindow { n_minus: win.n_minus, n_plus: win.n_plus });
    }
    let pp = doubled(&win).pi_plus();
    let h = Homotopy::build(x.domain(), Codomain::Projection, 0.0, FRAC_PI_2, n_t, |t, node| {
        let (h, dh) = even_inversion_operator(x.value(node), &win, t).expect("symmetric window checked above");
        let a = &dh * &pp * h.adjoint();
        (&h * &pp * h.adjoint(), &a + a.adjoint())
    })?;
    Ok(h)
}

/// Projection-valued map `x π₊ x*`.
pub fn image_projection_map(x: &SampledMap, win: &PolarizedWindow) -> Result<SampledMap> {
    let pp = win.pi_plus();
    x.map(Codomain::Projection, |u| u * &pp * u.adjoint())?.with_window(*win)
}

/// Permutation `P` with `g ⊞ f = P (f ⊞ g) P*`.
pub fn commutator_permutation(grading: Grading, n: usize) -> Result<ComplexMatrix> {
    let rho = ShuffleIso::new(grading, n)?.matrix();
    let mut swap = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        swap[(i, n + i)] = ONE;
        swap[(n + i, i)] = ONE;
    }
    Ok(rho.adjoint() * swap * rho)
}

/// Permutation `P'` with `(f ⊞ g) ⊞ h = P' (f ⊞ (g ⊞ h)) P'*` (ungraded),
/// for summands of sizes `p`, `q`, `r`.
pub fn associator_permutation(p: usize, q: usize, r: usize) -> Result<ComplexMatrix> {
    let inner_l = ShuffleIso::unequal(Grading::Ungraded, p, q)?.matrix();
    let outer_l = ShuffleIso::unequal(Grading::Ungraded, p + q, r)?.matrix();
    let inner_r = ShuffleIso::unequal(Grading::Ungraded, q, r)?.matrix();
    let outer_r = ShuffleIso::unequal(Grading::Ungraded, p, q + r)?.matrix();
    // Both bracketings expressed in coordinates on C^p ⊕ C^q ⊕ C^r.
    let left = direct_sum(&inner_l, &identity(r)) * outer_l;
    let right = direct_sum(&identity(p), &inner_r) * outer_r;
    Ok(left.adjoint() * right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{fixtures, projection_residual, unitarity_residual};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn blocksum_examples() {
        let i4 = identity(4);
        assert_eq!(blocksum(&i4, &i4, Grading::Ungraded).unwrap(), identity(8));
        let x = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(3, |i, _| Complex64::new(i as f64, 0.0)));
        let y = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(3, |i, _| Complex64::new(10.0 + i as f64, 0.0)));
        let s = blocksum(&x, &y, Grading::Ungraded).unwrap();
        let want = [0.0, 10.0, 1.0, 11.0, 2.0, 12.0];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(s[(i, i)].re, *w);
        }
        assert!(matches!(blocksum(&x, &i4, Grading::Ungraded), Err(Error::ShapeMismatch(_))));
        assert_eq!(blocksum_unequal(&x, &i4).unwrap().nrows(), 7);
        assert!(matches!(blocksum_unequal(&x, &fixtures::gaussian(&mut rng(), 3, 2)), Err(Error::ShapeMismatch(_))));
        assert!(matches!(blocksum(&x, &i4, Grading::Graded(PolarizedWindow::new(2, 1))), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn graded_blocksum_keeps_polarization() {
        let win = PolarizedWindow::new(3, 3);
        let eps = win.epsilon();
        let s = blocksum(&eps, &eps, Grading::Graded(win)).unwrap();
        assert_eq!(s, doubled(&win).epsilon());
        let rho = ShuffleIso::new(Grading::Graded(win), 6).unwrap();
        let mut r = rng();
        let (a, b) = (fixtures::gaussian(&mut r, 6, 6), fixtures::gaussian(&mut r, 6, 6));
        let direct = rho.matrix().adjoint() * direct_sum(&a, &b) * rho.matrix();
        assert_eq!(direct, rho.apply(&a, &b));
    }

    #[test]
    fn blocksum_preserves_classes() {
        let mut r = rng();
        let (u, v) = (fixtures::unitary(&mut r, 8), fixtures::unitary(&mut r, 8));
        assert!(unitarity_residual(&blocksum(&u, &v, Grading::Ungraded).unwrap()) < 1e-12);
        let p = crate::stiefel::frame_projection(&fixtures::gaussian(&mut r, 8, 3)).unwrap();
        let q = crate::stiefel::frame_projection(&fixtures::gaussian(&mut r, 8, 5)).unwrap();
        assert!(projection_residual(&blocksum(&p, &q, Grading::Ungraded).unwrap()) < 1e-12);
    }

    #[test]
    fn flip_examples() {
        let win = PolarizedWindow::new(4, 4);
        assert_eq!(flip(&win.epsilon(), &win).unwrap(), -win.epsilon());
        let x = fixtures::gaussian(&mut rng(), 8, 8);
        assert_eq!(flip(&flip(&x, &win).unwrap(), &win).unwrap(), x);
        assert!(matches!(flip(&x, &PolarizedWindow::new(3, 5)), Err(Error::AsymmetricWindow { .. })));
        assert_eq!(flip_subspace(&win.pi_plus(), &win).unwrap(), win.pi_plus());
    }

    #[test]
    fn commutativity_and_associativity_permutations() {
        let mut r = rng();
        let n = 3;
        let (f, g, h) = (fixtures::gaussian(&mut r, n, n), fixtures::gaussian(&mut r, n, n), fixtures::gaussian(&mut r, 2, 2));
        let p = commutator_permutation(Grading::Ungraded, n).unwrap();
        let fg = blocksum(&f, &g, Grading::Ungraded).unwrap();
        let gf = blocksum(&g, &f, Grading::Ungraded).unwrap();
        assert_eq!(frobenius(&(gf - &p * fg * p.adjoint())), 0.0);
        let pa = associator_permutation(n, n, 2).unwrap();
        let l = blocksum_unequal(&blocksum(&f, &g, Grading::Ungraded).unwrap(), &h).unwrap();
        let rr = blocksum_unequal(&f, &blocksum_unequal(&g, &h).unwrap()).unwrap();
        assert_eq!(frobenius(&(l - &pa * rr * pa.adjoint())), 0.0);
    }

    #[test]
    fn even_inversion_endpoint_is_stabilized() {
        let win = PolarizedWindow::new(3, 3);
        let x = fixtures::unitary(&mut rng(), 6);
        let (h0, _) = even_inversion_operator(&x, &win, 0.0).unwrap();
        assert!(frobenius(&(h0 - blocksum(&x, &flip(&x, &win).unwrap(), Grading::Graded(win)).unwrap())) < 1e-14);
        let (h1, _) = even_inversion_operator(&x, &win, FRAC_PI_2).unwrap();
        let eps = doubled(&win).epsilon();
        assert!(frobenius(&(&h1 * &eps - &eps * &h1)) < 1e-12);
    }
}
