use proptest::prelude::*;

use super::*;
use crate::random::{random_density, random_hermitian, random_unitary, seeded_rng};

fn bell_projector() -> Matrix<f64> {
    let h = 1.0 / 2f64.sqrt();
    let psi = ket::<f64>(&[h, 0.0, 0.0, h]);
    Matrix::outer(&psi, &psi)
}

#[test]
fn psd_sqrt_examples() {
    let id = Matrix::<f64>::identity(2);
    assert!(psd_sqrt(&id).unwrap().max_abs_diff(&id) < 1e-15);

    let m = Matrix::<f64>::from_diagonal(&[4.0, 9.0]);
    let r = psd_sqrt(&m).unwrap();
    assert!(r.max_abs_diff(&Matrix::from_diagonal(&[2.0, 3.0])) < 1e-14);

    // ½(|00⟩⟨00| + |11⟩⟨11|): squaring the root must return the input.
    let m = Matrix::<f64>::from_diagonal(&[0.5, 0.0, 0.0, 0.5]);
    let r = psd_sqrt(&m).unwrap();
    assert!((&r * &r).max_abs_diff(&m) < 1e-15);
    assert!((r[(0, 0)].re - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn psd_sqrt_rejects_negative() {
    let m = Matrix::<f64>::from_diagonal(&[1.0, -1e-3]);
    assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd { .. })));
    // Round-off negatives are clamped.
    let m = Matrix::<f64>::from_diagonal(&[1.0, -1e-12]);
    assert!(psd_sqrt(&m).is_ok());
}

#[test]
fn support_inv_sqrt_examples() {
    let id = Matrix::<f64>::identity(2);
    assert!(support_inv_sqrt(&id).unwrap().max_abs_diff(&id) < 1e-15);

    let m = Matrix::<f64>::from_diagonal(&[4.0, 0.0]);
    let r = support_inv_sqrt(&m).unwrap();
    assert!(r.max_abs_diff(&Matrix::from_diagonal(&[0.5, 0.0])) < 1e-15);

    let m = Matrix::<f64>::from_diagonal(&[0.25, 0.75]);
    let r = support_inv_sqrt(&m).unwrap();
    assert!(r.max_abs_diff(&Matrix::from_diagonal(&[2.0, 2.0 / 3f64.sqrt()])) < 1e-14);
    assert!(r.sandwich(&m).max_abs_diff(&id) < 1e-14);

    let zero = Matrix::<f64>::zeros(3, 3);
    assert_eq!(support_inv_sqrt(&zero).unwrap(), zero);
}

#[test]
fn partial_trace_examples() {
    let bell = bell_projector();
    let marginal = partial_trace(&bell, 2, 2, Keep::Q).unwrap();
    assert!(marginal.max_abs_diff(&Matrix::identity(2).scale(0.5)) < 1e-15);

    let mut rng = seeded_rng(3);
    let rho = random_density::<f64, _>(&mut rng, 2, 2);
    let tau = random_density::<f64, _>(&mut rng, 3, 3).matrix().scale(2.5);
    let prod = tensor(rho.matrix(), &tau);
    let kept = partial_trace(&prod, 2, 3, Keep::Q).unwrap();
    assert!(kept.max_abs_diff(&rho.matrix().scale(2.5)) < 1e-14);
    let kept_a = partial_trace(&prod, 2, 3, Keep::A).unwrap();
    assert!(kept_a.max_abs_diff(&tau) < 1e-14);

    let gamma1 = Matrix::<f64>::from_diagonal(&[0.5, 0.0, 0.0, 0.5]);
    let m = partial_trace(&gamma1, 2, 2, Keep::Q).unwrap();
    assert!(m.max_abs_diff(&Matrix::identity(2).scale(0.5)) < 1e-15);

    assert!(matches!(
        partial_trace(&bell, 3, 2, Keep::Q),
        Err(Error::InvalidFactorization { dim: 4, d_q: 3, d_a: 2 })
    ));
}

#[test]
fn tensor_examples() {
    let id2 = Matrix::<f64>::identity(2);
    assert_eq!(tensor(&id2, &id2), Matrix::identity(4));
    let a = Matrix::<f64>::from_diagonal(&[1.0, 2.0]);
    let b = Matrix::<f64>::from_diagonal(&[3.0, 4.0]);
    assert_eq!(tensor(&a, &b), Matrix::from_diagonal(&[3.0, 4.0, 6.0, 8.0]));
    let x = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let lhs = &tensor(&x, &id2) * &tensor(&id2, &x);
    assert_eq!(lhs, tensor(&x, &x));
}

#[test]
fn purify_examples() {
    let pure = DensityOperator::<f64>::basis(2, 0);
    let p = purify(&pure);
    assert_eq!(p.d_a, 1);
    assert!((p.vector[0].re - 1.0).abs() < 1e-15 && p.vector[1].norm() < 1e-15);

    let mixed = DensityOperator::<f64>::maximally_mixed(2);
    let p = purify(&mixed);
    assert_eq!(p.d_a, 2);
    let marginal = partial_trace(&p.projector(), 2, 2, Keep::Q).unwrap();
    assert!(marginal.max_abs_diff(mixed.matrix()) < 1e-15);

    let rho = DensityOperator::<f64>::diagonal_probs(&[0.75, 0.25]).unwrap();
    let p = purify(&rho);
    let expected = ket::<f64>(&[0.75f64.sqrt(), 0.0, 0.0, 0.25f64.sqrt()]);
    for (a, b) in p.vector.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn entropy_examples() {
    assert!(entropy_vn(&DensityOperator::<f64>::basis(3, 1)).abs() < 1e-15);
    let mm = DensityOperator::<f64>::maximally_mixed(2);
    assert!((entropy_vn(&mm) - 0.693_147_180_559_945_3).abs() < 1e-14);
    let rho = DensityOperator::<f64>::diagonal_probs(&[0.75, 0.25]).unwrap();
    let expected = -0.75f64 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
    assert!((entropy_vn(&rho) - expected).abs() < 1e-14);
    assert!((expected - 0.562335).abs() < 1e-6);

    assert_eq!(entropy_shannon(&[1.0f64, 0.0]).unwrap(), 0.0);
    assert!((entropy_shannon(&[0.5f64, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
    let h = entropy_shannon(&[0.9f64, 0.1]).unwrap();
    assert!((h - (-0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln())).abs() < 1e-15);
    assert!((h - 0.325083).abs() < 1e-6);
    assert!(matches!(entropy_shannon(&[1.1f64, -0.1]), Err(Error::InvalidDistribution(_))));
}

#[test]
fn density_operator_validation() {
    assert!(DensityOperator::new(Matrix::<f64>::identity(2)).is_err());
    assert!(DensityOperator::new(Matrix::<f64>::from_diagonal(&[1.5, -0.5])).is_err());
    let clamped = DensityOperator::new(Matrix::<f64>::from_diagonal(&[1.0 + 1e-11, -1e-11])).unwrap();
    assert!(clamped[(1, 1)].re >= 0.0);
    let mut skew = Matrix::<f64>::identity(2).scale(0.5);
    skew[(0, 1)] = C::new(0.1, 0.0);
    assert!(matches!(DensityOperator::new(skew), Err(Error::InvalidMatrix(_))));
}

#[test]
fn fidelity_and_trace_distance() {
    let a = DensityOperator::<f64>::basis(2, 0);
    let b = DensityOperator::<f64>::basis(2, 1);
    assert!(fidelity(&a, &b).abs() < 1e-14);
    assert!((fidelity(&a, &a) - 1.0).abs() < 1e-12);
    assert!((trace_distance(a.matrix(), b.matrix()) - 2.0).abs() < 1e-14);
}

fn dim_strategy() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3), Just(4), Just(8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), d in dim_strategy()) {
        let mut rng = seeded_rng(seed);
        let rank = 1 + (seed as usize) % d;
        let m = random_density::<f64, _>(&mut rng, d, rank).matrix().scale(3.0);
        let r = psd_sqrt(&m).unwrap();
        prop_assert!((&r * &r).max_abs_diff(&m) < 1e-9);
    }

    #[test]
    fn inv_sqrt_gives_support_projector(seed in any::<u64>(), d in dim_strategy()) {
        let mut rng = seeded_rng(seed);
        let rank = 1 + (seed as usize) % d;
        let m = random_density::<f64, _>(&mut rng, d, rank).into_matrix();
        let r = support_inv_sqrt(&m).unwrap();
        let proj = support_projector(&m).unwrap();
        prop_assert!(r.sandwich(&m).max_abs_diff(&proj) < 1e-9);
        prop_assert!((proj.trace_re() - rank as f64).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_hermitian::<f64, _>(&mut rng, 3);
        let b = random_hermitian::<f64, _>(&mut rng, 2);
        let kept = partial_trace(&tensor(&a, &b), 3, 2, Keep::Q).unwrap();
        prop_assert!(kept.max_abs_diff(&a.scale_c(b.trace())) < 1e-12);
    }

    #[test]
    fn purification_marginal(seed in any::<u64>(), d in dim_strategy()) {
        let mut rng = seeded_rng(seed);
        let rank = 1 + (seed as usize) % d;
        let rho = random_density::<f64, _>(&mut rng, d, rank);
        let p = purify(&rho);
        prop_assert_eq!(p.d_a, rank);
        let marginal = partial_trace(&p.projector(), d, p.d_a, Keep::Q).unwrap();
        prop_assert!(marginal.max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn entropy_unitarily_invariant(seed in any::<u64>(), d in dim_strategy()) {
        let mut rng = seeded_rng(seed);
        let rho = random_density::<f64, _>(&mut rng, d, d);
        let u = random_unitary::<f64, _>(&mut rng, d);
        let rotated = DensityOperator::new(u.sandwich(rho.matrix())).unwrap();
        prop_assert!((entropy_vn(&rho) - entropy_vn(&rotated)).abs() < 1e-10);
        prop_assert!(entropy_vn(&rho) <= (d as f64).ln() + 1e-12);
    }
}
