use kerrq::meanfield::{bistability_edges, critical_pump, mf_flow, mf_steady_states};
use kerrq::operators::ModelParams;
use kerrq::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn paper(eps: f64) -> ModelParams {
    ModelParams::new(-2.0, 0.5, 1.0, eps, 1.0).unwrap()
}

/// Cubic residual of the rescaled occupation equation.
fn cubic_residual(n: f64, eps: f64, p: &ModelParams) -> f64 {
    n * (p.kappa * p.kappa + (p.delta + p.u * n).powi(2)) - eps * eps
}

#[test]
fn edges_match_the_closed_form() {
    let edges = bistability_edges(&paper(0.5)).unwrap();
    // frozen from the quartic discriminant evaluated in extended precision
    assert!((edges.eps_lo - 0.7013732127112955).abs() < 1e-9);
    assert!((edges.eps_hi - 1.1661592808629908).abs() < 1e-9);
    assert!((edges.n_at_lo - 1.934258545910665).abs() < 1e-9);
    assert!((edges.n_at_hi - 0.7324081207560017).abs() < 1e-9);
    // each fold occupation solves the cubic exactly at its own edge
    let p = paper(0.5);
    assert!(cubic_residual(edges.n_at_lo, edges.eps_lo, &p).abs() < 1e-10);
    assert!(cubic_residual(edges.n_at_hi, edges.eps_hi, &p).abs() < 1e-10);
    // the larger fold occupation belongs to the lower edge
    assert!(edges.n_at_lo > edges.n_at_hi);
}

#[test]
fn root_counts_by_pump_region() {
    let p = paper(0.5);
    let below = mf_steady_states(0.5, &p);
    assert_eq!(below.roots.len(), 1);
    assert!(below.roots[0].stable);

    let inside = mf_steady_states(0.9, &p);
    assert_eq!(inside.roots.len(), 3);
    let stable: Vec<bool> = inside.roots.iter().map(|r| r.stable).collect();
    // ascending in n: dim stable, middle unstable, bright stable
    assert_eq!(stable, vec![true, false, true]);
    assert!(inside.roots[0].n < inside.roots[1].n);
    assert!(inside.roots[1].n < inside.roots[2].n);

    let above = mf_steady_states(1.3, &p);
    assert_eq!(above.roots.len(), 1);
    assert!(above.roots[0].stable);
}

#[test]
fn root_counts_flip_exactly_at_the_edges() {
    let p = paper(0.5);
    let edges = bistability_edges(&p).unwrap();
    for (eps, want) in [
        (edges.eps_lo - 1e-4, 1),
        (edges.eps_lo + 1e-4, 3),
        (edges.eps_hi - 1e-4, 3),
        (edges.eps_hi + 1e-4, 1),
    ] {
        assert_eq!(
            mf_steady_states(eps, &p).roots.len(),
            want,
            "wrong branch count at eps = {eps}"
        );
    }
}

#[test]
fn fixed_points_annihilate_the_flow() {
    let p = paper(0.5);
    for eps in [0.3, 0.75, 0.9, 1.1, 1.4] {
        let q = p.with_epsilon(eps).unwrap();
        for root in mf_steady_states(eps, &p).roots {
            let v = mf_flow(root.alpha, &q);
            assert!(
                v.norm() < 1e-9,
                "flow {v} does not vanish at root n = {}",
                root.n
            );
        }
    }
}

#[test]
fn flow_decays_toward_the_dim_branch_below_threshold() {
    // crude forward-Euler drop onto the attractor from a nearby point
    let p = paper(0.3);
    let root = mf_steady_states(0.3, &p).roots[0];
    let mut alpha = root.alpha + Complex64::new(0.05, -0.04);
    let dt = 1e-2;
    for _ in 0..20_000 {
        alpha += mf_flow(alpha, &p) * dt;
    }
    assert!((alpha - root.alpha).norm() < 1e-6);
}

#[test]
fn no_bistability_outside_the_detuned_regime() {
    // |delta| below sqrt(3) kappa can never fold
    let shallow = ModelParams::new(-0.5, 0.5, 1.0, 0.5, 1.0).unwrap();
    assert!(matches!(
        bistability_edges(&shallow),
        Err(Error::NoBistability(_))
    ));
    // the linear cavity has no interaction to fold with
    let lin = ModelParams::new(-2.0, 0.5, 0.0, 0.5, 1.0).unwrap();
    assert!(matches!(bistability_edges(&lin), Err(Error::NoBistability(_))));
}

#[test]
fn critical_pump_sits_inside_the_window_and_sharpens() {
    let p = paper(0.5);
    let edges = bistability_edges(&p).unwrap();
    let c2 = critical_pump(&p, 2.0).unwrap();
    let c10 = critical_pump(&p, 10.0).unwrap();
    let c20 = critical_pump(&p, 20.0).unwrap();
    for c in [c2, c10, c20] {
        assert!(c > edges.eps_lo && c < edges.eps_hi);
    }
    // the crossover location converges as the scale parameter grows
    assert!((c20 - c10).abs() < (c10 - c2).abs());
}

#[test]
fn critical_pump_rejects_the_linear_cavity() {
    let lin = ModelParams::new(-2.0, 0.5, 0.0, 0.5, 1.0).unwrap();
    assert!(critical_pump(&lin, 5.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_returned_root_solves_the_cubic(
        delta in -3.0f64..1.0,
        kappa in 0.1f64..2.0,
        u in 0.05f64..3.0,
        eps in 0.0f64..2.0,
    ) {
        let p = ModelParams::new(delta, kappa, u, eps, 1.0).unwrap();
        let res = mf_steady_states(eps, &p);
        prop_assert!(!res.roots.is_empty());
        for root in &res.roots {
            let r = cubic_residual(root.n, eps, &p);
            prop_assert!(r.abs() < 1e-9 * (1.0 + eps * eps), "residual {r} at n = {}", root.n);
            prop_assert!((root.alpha.norm_sqr() - root.n).abs() < 1e-9 * (1.0 + root.n));
        }
        // an odd-degree real polynomial has one or three physical branches
        prop_assert!(res.roots.len() == 1 || res.roots.len() == 3);
    }
}
