use super::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn diag(entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(entries))
}

fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

fn subspace_matches(basis: &DMatrix<f64>, dir: &[f64]) -> bool {
    // One-dimensional check: the basis column is parallel to dir.
    if basis.ncols() != 1 {
        return false;
    }
    let d = DVector::from_row_slice(dir).normalize();
    let c = basis.column(0).into_owned().normalize();
    (&c - &d).norm() < 1e-9 || (&c + &d).norm() < 1e-9
}

#[test]
fn saddle_example_splitting() {
    let a = diag(&[2.0, 0.5]);
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    assert_eq!((split.d_s, split.d_c, split.d_u), (1, 0, 1));
    // Unstable subspace is the x-axis, stable subspace the y-axis.
    assert!(subspace_matches(&split.basis_u, &[1.0, 0.0]));
    assert!(subspace_matches(&split.basis_s, &[0.0, 1.0]));
    assert!(split.is_hyperbolic());
}

#[test]
fn contraction_is_all_stable() {
    let a = diag(&[0.5, 0.5, 0.5]);
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    assert_eq!((split.d_s, split.d_c, split.d_u), (3, 0, 0));
    assert_eq!(split.log_unstable_det, 0.0);
}

#[test]
fn rotation_is_center() {
    let split = spectral_split(&rotation(1.0), DEFAULT_TOL_CENTER).unwrap();
    assert_eq!((split.d_s, split.d_c, split.d_u), (0, 2, 0));
    assert!(!split.is_hyperbolic());
}

#[test]
fn unstable_log_det_examples() {
    let s1 = spectral_split(&diag(&[2.0, 0.5]), DEFAULT_TOL_CENTER).unwrap();
    assert!((s1.unstable_log_det() - 2.0f64.ln()).abs() < 1e-12);

    let s2 = spectral_split(&diag(&[3.0, 2.0, 0.1]), DEFAULT_TOL_CENTER).unwrap();
    assert!((s2.unstable_log_det() - 6.0f64.ln()).abs() < 1e-10);

    let s3 = spectral_split(&diag(&[0.5, 0.5]), DEFAULT_TOL_CENTER).unwrap();
    assert_eq!(s3.unstable_log_det(), 0.0);
}

#[test]
fn unstable_log_det_matches_projected_restriction() {
    // log |det A^+| also equals the log-determinant of A restricted to E^u.
    let t = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, -0.2, 1.0, 0.5, 0.0, 0.1, 1.0]);
    let a = &t * diag(&[2.5, 1.7, 0.3]) * t.try_inverse().unwrap();
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    let restricted = split.basis_u.transpose() * &a * &split.basis_u;
    let logdet = restricted.determinant().abs().ln();
    assert!((split.unstable_log_det() - logdet).abs() < 1e-8);
    assert!((split.unstable_log_det() - (2.5f64 * 1.7).ln()).abs() < 1e-8);
}

#[test]
fn hyperbolicity_examples() {
    assert!(spectral_split(&diag(&[2.0, 0.5]), DEFAULT_TOL_CENTER).unwrap().is_hyperbolic());
    assert!(!spectral_split(&rotation(1.0), DEFAULT_TOL_CENTER).unwrap().is_hyperbolic());
    assert!(!spectral_split(&diag(&[1.0, 2.0]), DEFAULT_TOL_CENTER).unwrap().is_hyperbolic());
}

#[test]
fn singular_matrix_rejected() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    match spectral_split(&a, DEFAULT_TOL_CENTER) {
        Err(SpectralError::SingularMatrix(_)) => {}
        other => panic!("expected SingularMatrix, got {other:?}"),
    }
}

#[test]
fn near_band_edge_is_ill_conditioned() {
    // Eigenvalue modulus within tol_center/10 of the band edge.
    let tol = 1e-3;
    let a = diag(&[1.0 + tol + tol / 20.0, 0.5]);
    match spectral_split(&a, tol) {
        Err(SpectralError::IllConditionedSplit { .. }) => {}
        other => panic!("expected IllConditionedSplit, got {other:?}"),
    }
}

#[test]
fn kalman_examples() {
    let a = diag(&[2.0, 0.5]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    assert_eq!(kalman_controllable(&a, &b), KalmanReport { rank: 2, controllable: true });

    let b_bad = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
    assert_eq!(kalman_controllable(&a, &b_bad), KalmanReport { rank: 1, controllable: false });

    let eye = DMatrix::identity(2, 2);
    assert_eq!(kalman_controllable(&eye, &eye), KalmanReport { rank: 2, controllable: true });
}

#[test]
fn global_controllability_classes() {
    let rot = rotation(1.0);
    let eye = DMatrix::identity(2, 2);
    let split = spectral_split(&rot, DEFAULT_TOL_CENTER).unwrap();
    assert_eq!(
        classify_global_controllability(&rot, &eye, &split),
        GlobalControllability::ControllableEverywhere
    );

    let a = diag(&[2.0, 0.5]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    assert_eq!(classify_global_controllability(&a, &b, &split), GlobalControllability::Neither);

    let a = diag(&[2.0, 3.0]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    assert_eq!(classify_global_controllability(&a, &b, &split), GlobalControllability::ReachableAll);
}

#[test]
fn complex_pair_spectrum_and_split() {
    // Block diagonal: expanding spiral (modulus 2) and contracting eigenvalue.
    let mut a = DMatrix::zeros(3, 3);
    let r = 2.0 * rotation(0.7);
    a.view_mut((0, 0), (2, 2)).copy_from(&r);
    a[(2, 2)] = 0.25;
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    assert_eq!((split.d_s, split.d_c, split.d_u), (1, 0, 2));
    assert!((split.unstable_log_det() - 4.0f64.ln()).abs() < 1e-10);
    let pair = split
        .spectrum
        .eigenvalues
        .iter()
        .find(|e| e.conjugate_pair)
        .expect("conjugate pair present");
    assert!((pair.modulus() - 2.0).abs() < 1e-10);
    // Lyapunov groups: moduli 0.25 and 2.0.
    assert_eq!(split.lyapunov_groups.len(), 2);
    assert!((split.lyapunov_groups[0].modulus - 0.25).abs() < 1e-10);
    assert_eq!(split.lyapunov_groups[0].dim, 1);
    assert!((split.lyapunov_groups[1].modulus - 2.0).abs() < 1e-10);
    assert_eq!(split.lyapunov_groups[1].dim, 2);
}

#[test]
fn spectrum_multiplicity_grouping() {
    let a = diag(&[2.0, 2.0, 0.5]);
    let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
    let two = split
        .spectrum
        .eigenvalues
        .iter()
        .find(|e| (e.re - 2.0).abs() < 1e-9)
        .expect("eigenvalue 2 present");
    assert_eq!(two.multiplicity, 2);
    // product of |lambda|^n equals |det A|.
    let prod: f64 = split
        .spectrum
        .eigenvalues
        .iter()
        .map(|e| e.modulus().powi(e.real_dim() as i32))
        .product();
    assert!((prod - a.determinant().abs()).abs() <= 1e-8 * prod);
}

fn random_conjugation(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    loop {
        let t = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let svd = t.clone().svd(false, false);
        let sv = svd.singular_values;
        if sv.min() > 0.15 {
            return t;
        }
    }
}

/// Planted-eigenvalue trials: the computed subspace dimensions must match the
/// planted moduli.
#[test]
fn planted_diagonalizable_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _trial in 0..100 {
        let d = rng.random_range(2..5usize);
        let mut moduli: Vec<f64> = Vec::with_capacity(d);
        let mut expected = (0usize, 0usize, 0usize);
        for _ in 0..d {
            match rng.random_range(0..3) {
                0 => {
                    moduli.push(rng.random_range(0.2..0.75) * [-1.0, 1.0][rng.random_range(0..2)]);
                    expected.0 += 1;
                }
                1 => {
                    moduli.push([-1.0, 1.0][rng.random_range(0..2)]);
                    expected.1 += 1;
                }
                _ => {
                    moduli.push(rng.random_range(1.3..3.0) * [-1.0, 1.0][rng.random_range(0..2)]);
                    expected.2 += 1;
                }
            }
        }
        // Distinct magnitudes keep the planted structure unambiguous.
        moduli.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        let mut ok = true;
        for w in moduli.windows(2) {
            if (w[0].abs() - w[1].abs()).abs() < 1e-3 && (w[0] - w[1]).abs() > 1e-12 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let t = random_conjugation(&mut rng, d);
        let a = &t * diag(&moduli) * t.clone().try_inverse().unwrap();
        let split = spectral_split(&a, 1e-6).unwrap();
        assert_eq!(
            (split.d_s, split.d_c, split.d_u),
            expected,
            "planted {moduli:?} gave ({},{},{})",
            split.d_s,
            split.d_c,
            split.d_u
        );
    }
}

/// Inverting a hyperbolic matrix swaps stable and unstable parts, so the two
/// unstable log-determinants add up to the full log-modulus sum.
#[test]
fn inversion_swaps_stable_and_unstable() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let t = random_conjugation(&mut rng, 3);
        let moduli =
            [rng.random_range(0.2..0.6), rng.random_range(1.5..3.0), rng.random_range(1.5..3.0)];
        let a = &t * diag(&moduli) * t.clone().try_inverse().unwrap();
        let a_inv = a.clone().try_inverse().unwrap();
        let s = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
        let si = spectral_split(&a_inv, DEFAULT_TOL_CENTER).unwrap();
        assert_eq!(s.d_s, si.d_u);
        assert_eq!(s.d_u, si.d_s);
        let total: f64 = moduli.iter().map(|m| m.abs().ln().abs()).sum();
        assert!(
            (s.unstable_log_det() + si.unstable_log_det() - total).abs() < 1e-8,
            "log det mismatch"
        );
    }
}

#[test]
fn projection_commutes_with_a() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let t = random_conjugation(&mut rng, 3);
        let moduli =
            [rng.random_range(0.2..0.6), rng.random_range(0.2..0.7), rng.random_range(1.5..3.0)];
        let a = &t * diag(&moduli) * t.clone().try_inverse().unwrap();
        let split = spectral_split(&a, DEFAULT_TOL_CENTER).unwrap();
        let pi = &split.projection_u;
        assert!((pi * pi - pi).norm() < 1e-9, "projection not idempotent");
        assert!((pi * &a - &a * pi).norm() < 1e-8 * a.norm().max(1.0), "projection not invariant");
        // Kernel contains the stable and center bases.
        for j in 0..split.d_s {
            assert!((pi * split.basis_s.column(j).into_owned()).norm() < 1e-8);
        }
        // A-invariance of each basis block.
        for (basis, dim) in [(&split.basis_s, split.d_s), (&split.basis_u, split.d_u)] {
            if dim == 0 {
                continue;
            }
            let av = &a * basis;
            let reduced = basis.transpose() * &av;
            assert!((&av - basis * reduced).norm() <= 1e-8 * a.norm().max(1.0));
        }
    }
}

#[test]
fn kalman_rank_invariant_under_state_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a = diag(&[2.0, 0.5]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    for _ in 0..20 {
        let t = random_conjugation(&mut rng, 2);
        let t_inv = t.clone().try_inverse().unwrap();
        let a2 = &t * &a * &t_inv;
        let b2 = &t * &b;
        assert_eq!(kalman_controllable(&a2, &b2).rank, kalman_controllable(&a, &b).rank);
    }
}

#[test]
fn schur_reordering_is_orthogonal_and_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let d = rng.random_range(2..6usize);
        let a: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
        if a.determinant().abs() < 1e-6 {
            continue;
        }
        let (q, t) = ordered_real_schur(&a, |m| m).unwrap();
        assert!((&q * q.transpose() - DMatrix::identity(d, d)).norm() < 1e-10);
        assert!((&q * &t * q.transpose() - &a).norm() < 1e-8 * a.norm().max(1.0));
        // Ascending moduli along the diagonal blocks.
        let blocks = schur_blocks(&t);
        for w in blocks.windows(2) {
            assert!(
                w[0].eigenvalue_modulus() <= w[1].eigenvalue_modulus() + 1e-9,
                "blocks out of order"
            );
        }
    }
}
