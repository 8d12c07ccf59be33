//! Dense complex linear algebra used by every other module.
//!
//! Factorizations (SVD, Schur, Cholesky) come from `nalgebra`; this module
//! adds the handful of operations the geometry needs on top of them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex matrix, the value type for every operator in the crate.
pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative factor for the default rank threshold.
pub const DEFAULT_RANK_RTOL: f64 = 1e-8;

/// Singular values and the count above a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    pub threshold: f64,
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `‖u* u − I‖_F`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

/// `max(‖p² − p‖_F, ‖p − p*‖_F)`.
pub fn projection_residual(p: &ComplexMatrix) -> f64 {
    if !p.is_square() {
        return f64::INFINITY;
    }
    let idem = frobenius(&(p * p - p));
    let herm = frobenius(&(p - p.adjoint()));
    idem.max(herm)
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Block-diagonal direct sum `a ⊕ b`.
pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

fn sorted_singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Singular values of `m` (descending) and how many exceed `threshold`.
pub fn numerical_rank(m: &ComplexMatrix, threshold: f64) -> RankReport {
    let singular_values = if m.is_empty() { Vec::new() } else { sorted_singular_values(m) };
    let numerical_rank = singular_values.iter().filter(|&&s| s > threshold).count();
    RankReport { singular_values, numerical_rank, threshold }
}

/// Rank with the scale-invariant default threshold `1e-8 · σ_max`.
pub fn numerical_rank_default(m: &ComplexMatrix) -> RankReport {
    if m.is_empty() {
        return RankReport { singular_values: Vec::new(), numerical_rank: 0, threshold: 0.0 };
    }
    let sv = sorted_singular_values(m);
    let threshold = DEFAULT_RANK_RTOL * sv.first().copied().unwrap_or(0.0);
    let numerical_rank = sv.iter().filter(|&&s| s > threshold).count();
    RankReport { singular_values: sv, numerical_rank, threshold }
}

/// Unitary polar factor `m (m* m)^{-1/2}`, computed from the SVD `m = V Σ W*`
/// as `V W*`.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("polar factor needs a square matrix, got {:?}", m.shape())));
    }
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-12) {
        return Err(Error::SingularInput(smin));
    }
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::SingularInput(smin)),
    }
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Principal argument of `det u` in `(−π, π]`, from an LU determinant.
pub fn det_phase(u: &ComplexMatrix) -> Result<f64> {
    let res = unitarity_residual(u);
    if !(res < 1e-8) {
        return Err(Error::NotUnitary(res));
    }
    Ok(wrap_angle(u.determinant().arg()))
}

/// `exp(a)` for skew-hermitian `a` by scaling and squaring of a Taylor
/// polynomial.
pub fn mat_exp_skew(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("exponential needs a square matrix, got {:?}", a.shape())));
    }
    let norm = frobenius(a);
    let skew = frobenius(&(a + a.adjoint()));
    if !(skew < 1e-10 * norm + 1e-12) {
        return Err(Error::NotSkew(skew));
    }
    Ok(expm(a))
}

/// Scaling-and-squaring exponential without the skewness check.
pub(crate) fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let norm = frobenius(a);
    let mut squarings = 0u32;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
    }
    let scaled = a * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    // ‖scaled‖ ≤ 1/4: 18 Taylor terms put the truncation error below 1e-22.
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=18 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Left pseudo-inverse `(w* w)^{-1} w*` of an injective matrix.
pub fn left_pseudo_inverse(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let smin = sorted_singular_values(w).last().copied().unwrap_or(0.0);
    if !(smin > 1e-8) {
        return Err(Error::DegenerateFrame(smin));
    }
    let gram = w.adjoint() * w;
    let chol = gram.cholesky().ok_or(Error::DegenerateFrame(smin))?;
    Ok(chol.solve(&w.adjoint()))
}

/// Smallest singular value (0 for an empty matrix).
pub fn smallest_singular_value(m: &ComplexMatrix) -> f64 {
    sorted_singular_values(m).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis for the range of a projection (eigenvalues near 1).
pub fn range_basis(p: &ComplexMatrix) -> ComplexMatrix {
    let svd = p.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 0.5).collect();
    let mut out = zeros(p.nrows(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        out.set_column(j, &u.column(c));
    }
    out
}

/// Seeded random fixtures shared by tests, the verify suite and benches.
pub mod fixtures {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        })
    }

    pub fn skew_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
        let g = gaussian(rng, n, n);
        (&g - g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
        let g = gaussian(rng, n, n);
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Haar-ish random unitary (polar factor of a Gaussian matrix).
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
        loop {
            if let Ok(u) = polar_unitary(&gaussian(rng, n, n)) {
                return u;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polar_of_identity_and_positive_scalar() {
        let u = polar_unitary(&identity(3)).unwrap();
        assert!(frobenius(&(u - identity(3))) < 1e-14);
        let m = ComplexMatrix::from_element(1, 1, c(2.0, 0.0));
        let u = polar_unitary(&m).unwrap();
        assert!((u[(0, 0)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn polar_rejects_singular() {
        let mut m = identity(3);
        m[(2, 2)] = ZERO;
        assert!(matches!(polar_unitary(&m), Err(Error::SingularInput(_))));
    }

    #[test]
    fn polar_matches_inverse_square_root_route() {
        // Independent route: (m*m)^{-1/2} from the hermitian eigen-decomposition.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = fixtures::gaussian(&mut rng, 6, 6);
        let u = polar_unitary(&m).unwrap();
        let gram = m.adjoint() * &m;
        let eig = gram.clone().symmetric_eigen();
        let inv_sqrt = ComplexMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(1.0 / l.sqrt(), 0.0)));
        let v = &eig.eigenvectors;
        let oracle = &m * (v * inv_sqrt * v.adjoint());
        assert!(frobenius(&(&u - oracle)) < 1e-10);
        assert!(unitarity_residual(&u) < 1e-10);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&zeros(3, 3), 1e-8).numerical_rank, 0);
        assert_eq!(numerical_rank(&identity(4), 1e-8).numerical_rank, 4);
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(1e-12, 0.0)]));
        let r = numerical_rank(&d, 1e-8);
        assert_eq!(r.numerical_rank, 1);
        assert!(r.singular_values[0] >= r.singular_values[1]);
    }

    #[test]
    fn det_phase_examples() {
        assert!(det_phase(&identity(3)).unwrap().abs() < 1e-14);
        let a = 2.0 * std::f64::consts::PI * 0.3;
        let mut u = identity(3);
        u[(0, 0)] = Complex64::from_polar(1.0, a);
        assert!((det_phase(&u).unwrap() - a).abs() < 1e-13);
        let mut v = identity(2);
        v[(0, 0)] = c(-1.0, 0.0);
        assert!((det_phase(&v).unwrap() - std::f64::consts::PI).abs() < 1e-13);
        assert!(matches!(det_phase(&(identity(2) * c(2.0, 0.0))), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn det_phase_matches_lu_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 5, 9] {
            let u = fixtures::unitary(&mut rng, n);
            let det = u.clone().determinant();
            assert!((wrap_angle(det_phase(&u).unwrap() - det.arg())).abs() < 1e-10);
        }
    }

    #[test]
    fn exp_examples() {
        let e = mat_exp_skew(&zeros(3, 3)).unwrap();
        assert!(frobenius(&(e - identity(3))) < 1e-15);
        let th = 0.77;
        let a = ComplexMatrix::from_element(1, 1, c(0.0, th));
        let e = mat_exp_skew(&a).unwrap();
        assert!((e[(0, 0)] - Complex64::from_polar(1.0, th)).norm() < 1e-14);
        assert!(matches!(mat_exp_skew(&identity(2)), Err(Error::NotSkew(_))));
    }

    #[test]
    fn exp_inverse_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = fixtures::skew_hermitian(&mut rng, 6) * c(3.0, 0.0);
        let e = mat_exp_skew(&a).unwrap();
        let einv = mat_exp_skew(&(-&a)).unwrap();
        assert!(frobenius(&(&e * &einv - identity(6))) < 1e-10);
        assert!(unitarity_residual(&e) < 1e-10);
        assert!(frobenius(&(e.adjoint() - einv)) < 1e-10);
    }

    #[test]
    fn pseudo_inverse_is_left_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = fixtures::gaussian(&mut rng, 7, 3);
        let p = left_pseudo_inverse(&w).unwrap();
        assert!(frobenius(&(p * &w - identity(3))) < 1e-12);
        assert!(matches!(left_pseudo_inverse(&zeros(4, 2)), Err(Error::DegenerateFrame(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn polar_is_unitary(seed in any::<u64>(), n in 1usize..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = fixtures::gaussian(&mut rng, n, n);
                if let Ok(u) = polar_unitary(&m) {
                    prop_assert!(unitarity_residual(&u) < 1e-10);
                }
            }

            #[test]
            fn det_phase_adds_under_direct_sum(seed in any::<u64>(), n in 1usize..5, m in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = fixtures::unitary(&mut rng, n);
                let v = fixtures::unitary(&mut rng, m);
                let lhs = det_phase(&direct_sum(&u, &v)).unwrap();
                let rhs = det_phase(&u).unwrap() + det_phase(&v).unwrap();
                prop_assert!(wrap_angle(lhs - rhs).abs() < 1e-9);
            }

            #[test]
            fn rank_monotone_in_threshold(seed in any::<u64>(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = fixtures::gaussian(&mut rng, 5, 4);
                let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                prop_assert!(numerical_rank(&m, lo).numerical_rank >= numerical_rank(&m, hi).numerical_rank);
            }

            #[test]
            fn exp_adjoint_is_exp_of_negative(seed in any::<u64>(), n in 1usize..6, scale in 0.01f64..8.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = fixtures::skew_hermitian(&mut rng, n) * c(scale, 0.0);
                let e = mat_exp_skew(&a).unwrap();
                let f = mat_exp_skew(&(-a)).unwrap();
                prop_assert!(frobenius(&(e.adjoint() - f)) < 1e-10);
            }
        }
    }
}
