use faer::Mat;
use kerrq::operators::{
    annihilation, build_hamiltonian, choose_truncation, number_operator, DensityMatrix,
    ModelParams,
};
use kerrq::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn paper(eps: f64, n_scale: f64) -> ModelParams {
    ModelParams::new(-2.0, 0.5, 1.0, eps, n_scale).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn params_reject_unphysical_values() {
    assert!(matches!(
        ModelParams::new(-2.0, 0.0, 1.0, 0.5, 1.0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        ModelParams::new(-2.0, -1.0, 1.0, 0.5, 1.0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        ModelParams::new(-2.0, 0.5, -0.1, 0.5, 1.0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        ModelParams::new(-2.0, 0.5, 1.0, -0.5, 1.0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        ModelParams::new(-2.0, 0.5, 1.0, 0.5, 0.5),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        ModelParams::new(f64::NAN, 0.5, 1.0, 0.5, 1.0),
        Err(Error::InvalidParameter(_))
    ));
    // the linear cavity (u = 0) is a legitimate degenerate case
    assert!(ModelParams::new(-2.0, 0.5, 0.0, 0.5, 1.0).is_ok());
}

#[test]
fn pump_and_interaction_scale_with_n() {
    let p = paper(0.5, 16.0);
    assert!((p.pump() - 4.0 * 0.5).abs() < 1e-15);
    assert!((p.interaction() - 1.0 / 16.0).abs() < 1e-15);
    let q = p.with_epsilon(1.2).unwrap();
    assert!((q.pump() - 4.0 * 1.2).abs() < 1e-14);
    let r = p.with_n_scale(4.0).unwrap();
    assert!((r.pump() - 2.0 * 0.5).abs() < 1e-15);
    assert!((r.interaction() - 0.25).abs() < 1e-15);
}

#[test]
fn ladder_commutator_is_identity_with_truncation_corner() {
    let d = 30;
    let a = annihilation(d).unwrap();
    let comm = &a * a.adjoint() - a.adjoint() * &a;
    for i in 0..d {
        for j in 0..d {
            let expected = if i != j {
                c(0.0, 0.0)
            } else if i == d - 1 {
                // the projected commutator must absorb -(d-1) in the corner
                c(-(d as f64 - 1.0), 0.0)
            } else {
                c(1.0, 0.0)
            };
            assert!(
                (comm[(i, j)] - expected).norm() < 1e-12,
                "commutator defect at ({i},{j}): {}",
                comm[(i, j)]
            );
        }
    }
}

#[test]
fn number_operator_is_a_dag_a() {
    let d = 12;
    let a = annihilation(d).unwrap();
    let n = number_operator(d).unwrap();
    let prod = a.adjoint() * &a;
    for i in 0..d {
        for j in 0..d {
            assert!((n[(i, j)] - prod[(i, j)]).norm() < 1e-14);
        }
    }
}

#[test]
fn hamiltonian_two_level_matrix() {
    let p = paper(0.5, 1.0);
    let h = build_hamiltonian(&p, 2).unwrap();
    // basis {|0>, |1>}: delta + u/2 on |1><1| drops the quartic term at d=2
    assert!((h[(0, 0)] - c(0.0, 0.0)).norm() < 1e-15);
    assert!((h[(1, 1)] - c(-2.0, 0.0)).norm() < 1e-15);
    assert!((h[(1, 0)] - c(0.0, 0.5)).norm() < 1e-15);
    assert!((h[(0, 1)] - c(0.0, -0.5)).norm() < 1e-15);
}

#[test]
fn hamiltonian_is_hermitian_and_quartic_diagonal_grows() {
    let p = paper(0.8, 5.0);
    let d = 20;
    let h = build_hamiltonian(&p, d).unwrap();
    for i in 0..d {
        for j in 0..d {
            assert!((h[(i, j)] - h[(j, i)].conj()).norm() < 1e-12);
        }
    }
    // diagonal: delta*n + (u/2) n(n-1)
    let u = p.interaction();
    for n in 0..d {
        let nf = n as f64;
        let want = -2.0 * nf + 0.5 * u * nf * (nf - 1.0);
        assert!((h[(n, n)].re - want).abs() < 1e-12);
        assert!(h[(n, n)].im.abs() < 1e-15);
    }
}

#[test]
fn truncation_heuristic_matches_reference_points() {
    assert_eq!(choose_truncation(&paper(0.5, 1.0)), 26);
    assert_eq!(choose_truncation(&paper(0.5, 20.0)), 137);
    // monotone in the scale parameter
    let mut prev = 0;
    for n in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let cut = choose_truncation(&paper(0.5, n));
        assert!(cut > prev);
        prev = cut;
    }
}

#[test]
fn vacuum_and_fock_states() {
    let v = DensityMatrix::vacuum(8).unwrap();
    assert!((v.trace() - c(1.0, 0.0)).norm() < 1e-15);
    assert!(v.occupation().abs() < 1e-15);
    assert!(v.mean_a().norm() < 1e-15);

    let f3 = DensityMatrix::fock(8, 3).unwrap();
    assert!((f3.occupation() - 3.0).abs() < 1e-14);
    assert!(f3.mean_a().norm() < 1e-15);
    assert!(f3.herm_defect() < 1e-15);
    assert!(f3.min_eigenvalue() > -1e-14);
}

#[test]
fn fock_index_outside_space_errors() {
    assert!(DensityMatrix::fock(5, 5).is_err());
}

#[test]
fn coherent_state_moments() {
    let alpha = c(0.7, -0.4);
    let rho = DensityMatrix::coherent(25, alpha).unwrap();
    assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
    assert!((rho.mean_a() - alpha).norm() < 1e-10);
    assert!((rho.occupation() - alpha.norm_sqr()).abs() < 1e-10);
    assert!((rho.mean_a2() - alpha * alpha).norm() < 1e-10);
    assert!(rho.min_eigenvalue() > -1e-12);
}

#[test]
fn coherent_state_needs_room_for_its_tail() {
    // |alpha|^2 = 9 in a 12-level space leaves ~20% of the mass outside
    assert!(matches!(
        DensityMatrix::coherent(12, c(3.0, 0.0)),
        Err(Error::Truncation(_))
    ));
}

#[test]
fn thermal_state_moments() {
    let rho = DensityMatrix::thermal(40, 1.3).unwrap();
    assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
    assert!((rho.occupation() - 1.3).abs() < 1e-8);
    assert!(rho.mean_a().norm() < 1e-15);
    // geometric populations: p1/p0 = nbar/(nbar+1)
    let m = rho.matrix();
    let ratio = m[(1, 1)].re / m[(0, 0)].re;
    assert!((ratio - 1.3 / 2.3).abs() < 1e-12);
}

#[test]
fn thermal_state_needs_room_for_its_tail() {
    assert!(matches!(
        DensityMatrix::thermal(12, 8.0),
        Err(Error::Truncation(_))
    ));
}

#[test]
fn from_matrix_rejects_malformed_input() {
    // non-square
    assert!(DensityMatrix::from_matrix(Mat::zeros(3, 4)).is_err());
    // wrong trace
    let mut m = Mat::<Complex64>::zeros(4, 4);
    m[(0, 0)] = c(0.7, 0.0);
    assert!(matches!(
        DensityMatrix::from_matrix(m),
        Err(Error::InvalidState(_))
    ));
    // non-hermitian
    let mut m = Mat::<Complex64>::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(0, 1)] = c(0.3, 0.0);
    assert!(matches!(
        DensityMatrix::from_matrix(m),
        Err(Error::InvalidState(_))
    ));
    // non-finite entry
    let mut m = Mat::<Complex64>::zeros(4, 4);
    m[(0, 0)] = c(f64::NAN, 0.0);
    assert!(DensityMatrix::from_matrix(m).is_err());
}

#[test]
fn from_matrix_rejects_occupied_cutoff_levels() {
    // all mass on the top level of a 12-dim space: clearly truncated
    let d = 12;
    let mut m = Mat::<Complex64>::zeros(d, d);
    m[(d - 1, d - 1)] = c(1.0, 0.0);
    assert!(matches!(
        DensityMatrix::from_matrix(m),
        Err(Error::Truncation(_))
    ));
}

#[test]
fn tiny_spaces_skip_the_tail_check() {
    // a qubit-sized space has no meaningful "tail"; top-level mass is fine
    let mut m = Mat::<Complex64>::zeros(2, 2);
    m[(1, 1)] = c(1.0, 0.0);
    assert!(DensityMatrix::from_matrix(m).is_ok());
}

#[test]
fn trace_distance_of_orthogonal_states_is_one() {
    let f0 = DensityMatrix::fock(6, 0).unwrap();
    let f1 = DensityMatrix::fock(6, 1).unwrap();
    assert!((f0.trace_distance(&f1) - 1.0).abs() < 1e-12);
    assert!(f0.trace_distance(&f0) < 1e-14);
}

#[test]
fn vectorize_uses_column_major_stacking() {
    let rho = DensityMatrix::coherent(5, c(0.4, 0.2)).unwrap();
    let v = rho.vectorize();
    assert_eq!(v.len(), 25);
    let m = rho.matrix();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(v[i + 5 * j], m[(i, j)]);
        }
    }
    let back = kerrq::liouville::unvec(5, &v);
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(back[(i, j)], m[(i, j)]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherent_moments_track_alpha(re in -1.1f64..1.1, im in -1.1f64..1.1) {
        let alpha = c(re, im);
        let rho = DensityMatrix::coherent(25, alpha).unwrap();
        prop_assert!((rho.mean_a() - alpha).norm() < 1e-8);
        prop_assert!((rho.occupation() - alpha.norm_sqr()).abs() < 1e-8);
    }

    #[test]
    fn thermal_occupation_matches_nbar(nbar in 0.0f64..1.5) {
        let rho = DensityMatrix::thermal(45, nbar).unwrap();
        prop_assert!((rho.occupation() - nbar).abs() < 1e-7);
        prop_assert!(rho.min_eigenvalue() > -1e-13);
    }
}
