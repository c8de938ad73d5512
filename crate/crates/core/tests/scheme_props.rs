mod common;

use hjnet::analysis::error_sup;
use hjnet::hamiltonian::{control_bound, LagrangianSpec, LocalLagrangian};
use hjnet::network::{build_grid, ArcPoint, GridFunction, SampleSite};
use hjnet::scheme::{Branch, CostField, Scheme, SchemeParams};
use hjnet::Scenario;
use proptest::prelude::*;

use common::{junction3_dirichlet, junction3_neumann, setup};

fn local(kind: u8, param: f64) -> LocalLagrangian {
    match kind % 3 {
        0 => LocalLagrangian::Quadratic { c: param },
        1 => LocalLagrangian::Flux { lambda: 0.5 + param.abs() },
        _ => LagrangianSpec::Table { alphas: vec![-2.0, -0.5, 0.0, 1.0, 3.0], values: vec![3.0, 0.8, 0.1 + 0.15 * param.abs(), 1.5, 6.0] }
            .at(0.0)
            .unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn monotone_step(base in prop::collection::vec(-1.0f64..1.0, 31), bump in prop::collection::vec(0.0f64..0.5, 31), dirichlet: bool) {
        let net = if dirichlet { junction3_dirichlet() } else { junction3_neumann() };
        let (grid, costs, params) = setup(&net);
        let scheme = Scheme::new(&net, &grid, costs, params).unwrap();
        let v1 = GridFunction::new(base[..grid.len()].to_vec(), 0.0);
        let v2 = GridFunction::new(v1.values.iter().zip(&bump).map(|(a, b)| a + b).collect(), 0.0);
        let (w1, w2) = (scheme.step(&v1), scheme.step(&v2));
        for i in 0..grid.len() {
            prop_assert!(w1.values[i] <= w2.values[i] + 1e-12, "sample {i}: {} > {}", w1.values[i], w2.values[i]);
        }
    }

    #[test]
    fn commutes_with_constants(base in prop::collection::vec(-1.0f64..1.0, 31), c in -5.0f64..5.0) {
        let net = junction3_neumann();
        let (grid, costs, params) = setup(&net);
        let scheme = Scheme::new(&net, &grid, costs, params).unwrap();
        let v = GridFunction::new(base[..grid.len()].to_vec(), 0.0);
        let shifted = GridFunction::new(v.values.iter().map(|x| x + c).collect(), 0.0);
        let (w, ws) = (scheme.step(&v), scheme.step(&shifted));
        for i in 0..grid.len() {
            prop_assert!((ws.values[i] - w.values[i] - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn witnesses_are_consistent(base in prop::collection::vec(-1.0f64..1.0, 31)) {
        let net = junction3_neumann();
        let (grid, costs, params) = setup(&net);
        let dt = params.dt;
        let scheme = Scheme::new(&net, &grid, costs, params).unwrap();
        let v = GridFunction::new(base[..grid.len()].to_vec(), 0.0);
        let (_, witnesses, _) = scheme.step_with_witness(&v);
        let junction = net.node_by_id("O").unwrap();
        for (i, w) in witnesses.iter().enumerate() {
            let SampleSite::Interior { arc, k } = grid.sites[i] else { continue };
            let g = &grid.arcs[arc];
            let s = k as f64 * g.h;
            let (from, _) = net.endpoints(arc);
            match w.branch {
                Branch::Cross => {
                    let r = if from == junction { s } else { g.h * g.cells as f64 - s };
                    prop_assert!(w.alpha_i >= r / dt * (1.0 - 1e-12), "sample {i}: {w:?}");
                    prop_assert!(w.alpha_j <= 0.0);
                    prop_assert!((0.0..=dt * (1.0 + 1e-12)).contains(&w.s0));
                }
                Branch::Stay => {
                    let foot = s - w.alpha_i * dt;
                    let at_junction = if from == junction { foot <= 0.0 } else { foot >= g.h * g.cells as f64 };
                    prop_assert!(!at_junction, "sample {i}: {w:?}");
                }
                _ => {}
            }
        }
    }

    #[test]
    fn quadratic_duality(p in -50.0f64..50.0, c in -3.0f64..3.0) {
        let h = hjnet::hamiltonian::legendre(&LagrangianSpec::Quadratic { c }, 0.0, p).unwrap();
        prop_assert!((h + c - 0.5 * p * p).abs() <= 1e-12 * (1.0 + p * p));
    }

    #[test]
    fn hamiltonian_split(kind in 0u8..3, param in 0.1f64..2.0, p in -4.0f64..4.0) {
        let l = local(kind, param);
        let h = l.hamiltonian(p);
        prop_assert!((h - l.h_minus(p).max(l.h_plus(p))).abs() <= 1e-10);
        let hat = l.hat_p();
        prop_assert!((l.hamiltonian(hat) + l.value(0.0)).abs() <= 1e-10);
        prop_assert!(h >= l.hamiltonian(hat) - 1e-10);
    }

    #[test]
    fn h_minus_non_increasing(kind in 0u8..3, param in 0.1f64..2.0, p in -4.0f64..4.0, d in 0.0f64..3.0) {
        let l = local(kind, param);
        prop_assert!(l.h_minus(p) >= l.h_minus(p + d) - 1e-12);
        prop_assert!(l.h_plus(p + d) >= l.h_plus(p) - 1e-12);
    }

    #[test]
    fn hamiltonian_lipschitz_on_compacts(kind in 0u8..3, param in 0.1f64..2.0, p in -3.0f64..3.0, q in -3.0f64..3.0) {
        let l = local(kind, param);
        let mu = control_bound(std::slice::from_ref(&l), 3.0, None).unwrap();
        prop_assert!((l.hamiltonian(p) - l.hamiltonian(q)).abs() <= mu * (p - q).abs() * (1.0 + 1e-12) + 1e-14);
        prop_assert!(l.optimal_control(p).abs() <= mu * (1.0 + 1e-12));
    }

    #[test]
    fn geodesic_distance_is_a_metric(a in 0usize..46, b in 0usize..46, c in 0usize..46, fa in 0.0f64..=1.0, fb in 0.0f64..=1.0, fc in 0.0f64..=1.0) {
        let net = Scenario::builtin("rouen").unwrap().network;
        let pt = |arc: usize, f: f64| ArcPoint { arc, s: f * net.length(arc) };
        let (x, y, z) = (pt(a, fa), pt(b, fb), pt(c, fc));
        let d = |u, v| net.geodesic_distance(u, v);
        prop_assert!((d(x, y) - d(y, x)).abs() <= 1e-12);
        prop_assert_eq!(d(x, x), 0.0);
        if (a, fa) != (b, fb) && d(x, y) == 0.0 {
            prop_assert!((net.position(x)[0] - net.position(y)[0]).abs() < 1e-12);
        }
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
    }

    #[test]
    fn error_sup_is_norm_like(a in prop::collection::vec(-2.0f64..2.0, 31), b in prop::collection::vec(-2.0f64..2.0, 31), c in prop::collection::vec(-2.0f64..2.0, 31)) {
        let net = junction3_neumann();
        let grid = build_grid(&net, 0.1).unwrap();
        let n = grid.len();
        let f = |v: &Vec<f64>| GridFunction::new(v[..n].to_vec(), 0.0);
        let (u, v, w) = (f(&a), f(&b), f(&c));
        let e = |x: &GridFunction, y: &GridFunction| error_sup(&grid, x, &grid, y).unwrap();
        prop_assert!(e(&u, &v) >= 0.0);
        prop_assert_eq!(e(&u, &u), 0.0);
        prop_assert!(e(&u, &w) <= e(&u, &v) + e(&v, &w) + 1e-15);
    }
}

#[test]
fn interpolation_reproduces_samples() {
    let net = junction3_neumann();
    let grid = build_grid(&net, 0.1).unwrap();
    let v = GridFunction::sample(&net, &grid, 0.0, |p| (3.0 * p.s).sin() + p.arc as f64);
    for i in 0..grid.len() {
        let p = grid.arc_point(&net, i);
        let got = hjnet::scheme::interpolate(&net, &grid, &v, p.arc, p.s).unwrap();
        assert_eq!(got, v.values[i]);
    }
}

/// Local truncation error of one step on smooth data, away from nodes.
fn interior_defect(dx: f64, dt: f64) -> f64 {
    let net = hjnet::load_network(
        r#"{"nodes": [
            {"id": "W", "kind": "boundary", "position": [0.0, 0.0], "bc": {"kind": "neumann", "value": 0.0}},
            {"id": "E", "kind": "boundary", "position": [2.0, 0.0], "bc": {"kind": "neumann", "value": 0.0}}],
          "arcs": [{"id": "a", "from": "W", "to": "E", "length": 2.0, "lagrangian": {"type": "quadratic", "c": 0.5}}]}"#,
    )
    .unwrap();
    let grid = build_grid(&net, dx).unwrap();
    let phi = |s: f64| 0.3 + 0.4 * s - 0.6 * s * s;
    let dphi = |s: f64| 0.4 - 1.2 * s;
    let v = GridFunction::sample(&net, &grid, 0.0, |p| phi(p.s));
    let costs = CostField::from_network(&net, &grid).unwrap();
    let mu = 1.0;
    let scheme = Scheme::new(&net, &grid, costs, SchemeParams::new(dx, dt, dt, mu).unwrap()).unwrap();
    let g = &grid.arcs[0];
    let mut worst: f64 = 0.0;
    for k in (g.cells / 4)..=(3 * g.cells / 4) {
        let s = k as f64 * g.h;
        let (value, _) = scheme.sl_update_interior(&v, 0, k);
        let p = dphi(s);
        let h = 0.5 * p * p - 0.5;
        worst = worst.max(((phi(s) - value) / dt - h).abs());
    }
    worst
}

#[test]
fn interior_consistency_constant_is_refinement_bounded() {
    let ks: Vec<f64> = [(0.1, 0.05), (0.05, 0.0125), (0.025, 0.003125)]
        .iter()
        .map(|&(dx, dt)| interior_defect(dx, dt) / (dx * dx / dt + dt))
        .collect();
    assert!(ks.iter().all(|k| k.is_finite()), "{ks:?}");
    assert!(ks[1] <= 1.5 * ks[0] && ks[2] <= 1.5 * ks[1], "{ks:?}");
}
