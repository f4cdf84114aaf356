use kerrq::liouville::{build_liouvillian, solve_ness, spectrum, unvec, Superoperator};
use kerrq::numerics::sparse::TripletBuffer;
use kerrq::operators::{DensityMatrix, ModelParams};
use kerrq::Error;
use num_complex::Complex64;

fn paper(eps: f64, n_scale: f64) -> ModelParams {
    ModelParams::new(-2.0, 0.5, 1.0, eps, n_scale).unwrap()
}

fn linear(eps: f64) -> ModelParams {
    ModelParams::new(-2.0, 0.5, 0.0, eps, 1.0).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn generator_annihilates_trace() {
    let p = paper(0.8, 2.0);
    let l = build_liouvillian(&p, 18).unwrap();
    for rho in [
        DensityMatrix::coherent(18, c(0.6, -0.3)).unwrap(),
        DensityMatrix::thermal(18, 0.4).unwrap(),
        DensityMatrix::fock(18, 4).unwrap(),
    ] {
        let lr = l.apply(rho.matrix().as_ref());
        let tr: Complex64 = (0..18).map(|i| lr[(i, i)]).sum();
        assert!(tr.norm() < 1e-12, "trace leak {tr}");
    }
}

#[test]
fn generator_preserves_hermiticity() {
    let p = paper(0.8, 2.0);
    let l = build_liouvillian(&p, 16).unwrap();
    let rho = DensityMatrix::coherent(16, c(0.5, 0.4)).unwrap();
    let lr = l.apply(rho.matrix().as_ref());
    assert!(kerrq::numerics::herm_defect(lr.as_ref()) < 1e-12);
}

#[test]
fn apply_vec_matches_dense_action() {
    let p = paper(0.6, 1.0);
    let d = 10;
    let l = build_liouvillian(&p, d).unwrap();
    let rho = DensityMatrix::coherent(d, c(0.4, 0.1)).unwrap();
    let dense = l.apply(rho.matrix().as_ref());
    let v = rho.vectorize();
    let mut w = vec![Complex64::ZERO; d * d];
    l.apply_vec(&v, &mut w);
    let back = unvec(d, &w);
    for i in 0..d {
        for j in 0..d {
            assert!((back[(i, j)] - dense[(i, j)]).norm() < 1e-13);
        }
    }
}

#[test]
fn two_level_generator_has_analytic_eigenmodes() {
    // at d = 2 the Kerr generator acts as a damped detuned qubit whose
    // vectorized form has eigenvalues {0, -kappa +- i delta, -2 kappa}
    // in the eps -> 0 limit; verify the action on each analytic eigenmatrix
    let p = ModelParams::new(-2.0, 0.5, 1.0, 0.0, 1.0).unwrap();
    let l = build_liouvillian(&p, 2).unwrap();
    let modes: [(Vec<Complex64>, Complex64); 4] = [
        // steady state |0><0|
        (vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], c(0.0, 0.0)),
        // coherence |1><0|: rate -kappa - i delta
        (vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], c(-0.5, 2.0)),
        // coherence |0><1|
        (vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], c(-0.5, -2.0)),
        // population relaxation |1><1| - |0><0| decays into the trace mode
        (vec![c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], c(-1.0, 0.0)),
    ];
    for (v, z) in modes {
        let mut w = vec![Complex64::ZERO; 4];
        l.apply_vec(&v, &mut w);
        for i in 0..4 {
            assert!(
                (w[i] - z * v[i]).norm() < 1e-12,
                "mode with rate {z} is not an eigenvector"
            );
        }
    }
}

#[test]
fn linear_cavity_spectrum_is_analytic() {
    // for u = 0 the eigenvalues are -i delta (j - k) - kappa (j + k);
    // the four slowest, in the library's order, are:
    let expected = [c(0.0, 0.0), c(-0.5, 2.0), c(-0.5, -2.0), c(-1.0, 4.0)];

    // undriven, the generator is triangular in the number basis and the
    // formula is exact at any truncation
    let l = build_liouvillian(&linear(0.0), 3).unwrap();
    let s = spectrum(&l, 4).unwrap();
    assert_eq!(s.eigenvalues.len(), 4);
    for (got, want) in s.eigenvalues.iter().zip(expected) {
        assert!((got - want).norm() < 1e-8, "eigenvalue {got} should be {want}");
    }
    assert!((s.gap - 0.5).abs() < 1e-8);
    for r in &s.residuals {
        assert!(*r < 1e-7);
    }

    // a drive displaces the eigenmatrices but not the eigenvalues, once the
    // box is large enough that the displaced modes fit; the three slowest
    // are unambiguous, the rest tie in |Re| and may come back in any subset,
    // but every one must sit on the analytic lattice
    let l = build_liouvillian(&linear(0.4), 14).unwrap();
    let s = spectrum(&l, 4).unwrap();
    for (got, want) in s.eigenvalues.iter().take(3).zip(expected) {
        assert!((got - want).norm() < 1e-6, "driven eigenvalue {got} should be {want}");
    }
    assert!((s.gap - 0.5).abs() < 1e-6);
    for got in &s.eigenvalues {
        let off_lattice = (0..14)
            .flat_map(|j| (0..14).map(move |k| (j, k)))
            .map(|(j, k)| {
                let z = c(-0.5 * (j + k) as f64, 2.0 * (j as f64 - k as f64));
                (got - z).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(off_lattice < 1e-6, "eigenvalue {got} is off the analytic lattice");
    }
}

#[test]
fn spectrum_needs_at_least_two_modes() {
    let l = build_liouvillian(&linear(0.4), 3).unwrap();
    assert!(matches!(spectrum(&l, 1), Err(Error::InvalidParameter(_))));
}

#[test]
fn eigenmatrices_satisfy_the_eigenproblem() {
    let p = paper(0.5, 1.0);
    let l = build_liouvillian(&p, 20).unwrap();
    let s = spectrum(&l, 4).unwrap();
    for (z, m) in s.eigenvalues.iter().zip(&s.eigenmatrices) {
        let lm = l.apply(m.as_ref());
        let defect = (&lm - faer::Scale(*z) * m).norm_max();
        assert!(defect < 1e-7, "residual {defect} at eigenvalue {z}");
        // Frobenius normalization
        assert!((m.norm_l2() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn linear_ness_is_the_known_coherent_state() {
    // u = 0, eps = 0.5: alpha_ss = E/(kappa + i delta) = (1 + 4i)/17
    let l = build_liouvillian(&linear(0.5), 22).unwrap();
    let ness = solve_ness(&l).unwrap();
    let alpha = c(1.0 / 17.0, 4.0 / 17.0);
    assert!(ness.residual < 1e-10);
    assert!((ness.rho.mean_a() - alpha).norm() < 1e-9);
    assert!((ness.rho.occupation() - 1.0 / 17.0).abs() < 1e-9);
    let coherent = DensityMatrix::coherent(22, alpha).unwrap();
    assert!(ness.rho.trace_distance(&coherent) < 1e-6);
    // slowest modes of the linear cavity decay no slower than kappa
    assert!(ness.gap_estimate > 0.4);
}

#[test]
fn kerr_ness_matches_dense_reference() {
    // frozen from an independent dense eigendecomposition of the generator
    let p = paper(0.5, 5.0);
    let l = build_liouvillian(&p, 40).unwrap();
    let ness = solve_ness(&l).unwrap();
    assert!(ness.residual < 1e-10);
    let mean_ref = c(0.1403544882733702, 0.5417980670352623);
    assert!(
        (ness.rho.mean_a() - mean_ref).norm() < 1e-9,
        "mean field {} drifted from {mean_ref}",
        ness.rho.mean_a()
    );
    assert!((ness.rho.occupation() - 0.3138421767264558).abs() < 1e-9);
    assert!(ness.rho.min_eigenvalue() > -1e-8);
    assert!((ness.rho.trace() - Complex64::ONE).norm() < 1e-12);
}

#[test]
fn degenerate_kernel_is_flagged_not_averaged() {
    // pure dephasing on a qubit: every diagonal state is stationary, so the
    // kernel is two-dimensional and no single "steady state" exists
    let d = 2;
    let mut buf = TripletBuffer::new(d * d, d * d);
    // L[rho]_{ij} = (s_i s_j - 1) rho_{ij} with s = (+1, -1)
    let s = [1.0, -1.0];
    for i in 0..d {
        for j in 0..d {
            let rate = s[i] * s[j] - 1.0;
            let idx = i + j * d;
            buf.push(idx, idx, c(rate, 0.0));
        }
    }
    let l = Superoperator::from_parts(buf.build(), d, paper(0.5, 1.0));
    match solve_ness(&l) {
        Err(Error::NearDegenerate { splitting, candidates }) => {
            assert!(splitting < 1e-10);
            let (a, b) = *candidates;
            // both candidates are genuine stationary states
            assert!(l.apply(a.matrix().as_ref()).norm_max() < 1e-8);
            assert!(l.apply(b.matrix().as_ref()).norm_max() < 1e-8);
        }
        other => panic!("expected a near-degeneracy error, got {other:?}"),
    }
}

#[test]
fn norm_one_matches_dense_column_sums() {
    let p = paper(0.7, 1.0);
    let l = build_liouvillian(&p, 6).unwrap();
    let n = l.vec_dim();
    let mut best = 0.0f64;
    for col in 0..n {
        let mut e = vec![Complex64::ZERO; n];
        e[col] = Complex64::ONE;
        let mut y = vec![Complex64::ZERO; n];
        l.apply_vec(&e, &mut y);
        best = best.max(y.iter().map(|z| z.norm()).sum());
    }
    assert!((l.norm_one() - best).abs() < 1e-12 * best.max(1.0));
}
