use chernlab::chernforms::{ch_even_at, ch_odd_at};
use chernlab::khat::{dist_mod1, mod1, point_class_odd};
use chernlab::kops::{blocksum, commutator_permutation, flip, flip_subspace, Grading, ShuffleIso};
use chernlab::numkernel::{fixtures, frobenius, identity, unitarity_residual, ComplexMatrix};
use chernlab::par;
use chernlab::periodicity::{random_polynomial_loop, toeplitz_from_loop};
use chernlab::stiefel::PolarizedWindow;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grading(graded: bool, n_minus: usize, n_plus: usize) -> (Grading, usize) {
    if graded {
        let win = PolarizedWindow::new(n_minus, n_plus);
        (Grading::Graded(win), win.dim())
    } else {
        (Grading::Ungraded, n_minus + n_plus)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shuffle_is_a_bijection(graded: bool, n_minus in 0usize..4, n_plus in 1usize..4) {
        let (g, half) = grading(graded, n_minus, n_plus);
        let iso = ShuffleIso::new(g, half).unwrap();
        let mut seen = iso.source.clone();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), 2 * half);
        let p = iso.matrix();
        prop_assert!(frobenius(&(p.adjoint() * &p - identity(2 * half))) == 0.0);
    }

    #[test]
    fn unequal_shuffle_is_a_bijection(left in 1usize..6, right in 1usize..6) {
        let iso = ShuffleIso::unequal(Grading::Ungraded, left, right).unwrap();
        let p = iso.matrix();
        prop_assert!(frobenius(&(p.adjoint() * &p - identity(left + right))) == 0.0);
    }

    #[test]
    fn blocksum_is_conjugated_direct_sum(seed: u64, graded: bool, n_minus in 1usize..3, n_plus in 1usize..3) {
        let (g, half) = grading(graded, n_minus, n_plus);
        let mut r = rng(seed);
        let (a, b) = (fixtures::unitary(&mut r, half), fixtures::unitary(&mut r, half));
        let s = blocksum(&a, &b, g).unwrap();
        let rho = ShuffleIso::new(g, half).unwrap().matrix();
        let direct = chernlab::numkernel::direct_sum(&a, &b);
        prop_assert!(frobenius(&(&s - rho.adjoint() * direct * &rho)) < 1e-14);
        prop_assert!(unitarity_residual(&s) < 1e-12);
        let p = commutator_permutation(g, half).unwrap();
        let swapped = blocksum(&b, &a, g).unwrap();
        prop_assert!(frobenius(&(swapped - &p * &s * p.adjoint())) < 1e-14);
    }

    #[test]
    fn flip_is_an_involution(seed: u64, m in 1usize..4) {
        let win = PolarizedWindow::new(m, m);
        let mut r = rng(seed);
        let x = fixtures::unitary(&mut r, win.dim());
        prop_assert!(frobenius(&(flip(&flip(&x, &win).unwrap(), &win).unwrap() - &x)) < 1e-14);
        prop_assert!(frobenius(&(flip(&win.epsilon(), &win).unwrap() + win.epsilon())) < 1e-14);
        let cols = x.columns(0, m).into_owned();
        let pi = &cols * cols.adjoint();
        let back = flip_subspace(&flip_subspace(&pi, &win).unwrap(), &win).unwrap();
        prop_assert!(frobenius(&(back - pi)) < 1e-13);
    }

    #[test]
    fn odd_forms_negate_under_inversion(seed: u64, n in 1usize..4) {
        // df = f A_a with skew A_a; then d(f*) = −A_a f*.
        let mut r = rng(seed);
        let f = fixtures::unitary(&mut r, n);
        let gens: Vec<ComplexMatrix> = (0..3).map(|_| fixtures::skew_hermitian(&mut r, n)).collect();
        let df: Vec<ComplexMatrix> = gens.iter().map(|a| &f * a).collect();
        let dfi: Vec<ComplexMatrix> = gens.iter().map(|a| -(a * f.adjoint())).collect();
        for k in 1..=2 {
            let a = ch_odd_at(&f, &df, k).unwrap();
            let b = ch_odd_at(&f.adjoint(), &dfi, k).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x + y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn even_forms_negate_on_complements(seed: u64, rank in 1usize..3) {
        // π = U P U*, dπ = [X, π] with skew X.
        let mut r = rng(seed);
        let u = fixtures::unitary(&mut r, 4);
        let cols = u.columns(0, rank).into_owned();
        let pi = &cols * cols.adjoint();
        let dpi: Vec<ComplexMatrix> = (0..4)
            .map(|_| {
                let x = fixtures::skew_hermitian(&mut r, 4);
                &x * &pi - &pi * &x
            })
            .collect();
        let comp = identity(4) - &pi;
        let neg: Vec<ComplexMatrix> = dpi.iter().map(|d| -d).collect();
        for k in 1..=2 {
            let a = ch_even_at(&pi, &dpi, k).unwrap();
            let b = ch_even_at(&comp, &neg, k).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x + y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn toeplitz_blocks_depend_on_mode_difference(seed: u64, fiber in 1usize..3, factors in 1usize..3) {
        let mut r = rng(seed);
        let (gamma, band, _) = random_polynomial_loop(&mut r, fiber, factors, 32).unwrap();
        let t = toeplitz_from_loop(&gamma, 8, band).unwrap();
        let win = t.window;
        for a in -8i64..8 {
            for b in -8i64..8 {
                let block = ComplexMatrix::from_fn(fiber, fiber, |i, j| t.operator[(win.row(a, i), win.row(b, j))]);
                let expect = t.coefficient(a - b).cloned().unwrap_or_else(|| ComplexMatrix::zeros(fiber, fiber));
                prop_assert!(frobenius(&(block - expect)) < 1e-12);
            }
        }
    }

    #[test]
    fn point_class_is_additive(seed: u64, n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let (u, v) = (fixtures::unitary(&mut r, n), fixtures::unitary(&mut r, m));
        let sum = point_class_odd(&chernlab::numkernel::direct_sum(&u, &v)).unwrap();
        let parts = point_class_odd(&u).unwrap() + point_class_odd(&v).unwrap();
        prop_assert!(dist_mod1(sum, parts) < 1e-10);
        prop_assert!(dist_mod1(point_class_odd(&(&u * &u.adjoint())).unwrap(), 0.0) < 1e-12);
    }

    #[test]
    fn mod1_lands_in_unit_interval(x in -1e6f64..1e6) {
        let y = mod1(x);
        prop_assert!((0.0..1.0).contains(&y));
        prop_assert!(dist_mod1(x, y) < 1e-9);
    }

    #[test]
    fn pairwise_sum_ignores_thread_count(xs in proptest::collection::vec(-1e3f64..1e3, 0..5000)) {
        let zs: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x, -x)).collect();
        let one = par::with_jobs(1, || par::pairwise_sum(&zs));
        let many = par::with_jobs(4, || par::pairwise_sum(&zs));
        prop_assert_eq!(one, many);
        let naive: f64 = xs.iter().sum();
        prop_assert!((one.re - naive).abs() <= 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
    }
}
