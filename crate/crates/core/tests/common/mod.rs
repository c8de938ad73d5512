#![allow(dead_code)]

use hjnet::hamiltonian::control_bound;
use hjnet::network::{build_grid, Grid, GridFunction, Network};
use hjnet::scheme::{CostField, SchemeParams};
use hjnet::Scenario;

/// Three arcs of lengths 1, 0.8 and 1.2 meeting at `O`, with a quadratic, a
/// flux-type and a space-dependent quadratic cost. `end` is the JSON boundary
/// condition of the outer nodes.
pub fn junction3_with(end: &str, limiter: f64) -> Network {
    let text = format!(
        r#"{{
        "nodes": [
            {{"id": "O", "kind": "junction", "position": [0.0, 0.0], "A": {limiter}}},
            {{"id": "P", "kind": "boundary", "position": [1.0, 0.0], "bc": {end}}},
            {{"id": "Q", "kind": "boundary", "position": [-0.4, 0.6928203230275509], "bc": {end}}},
            {{"id": "R", "kind": "boundary", "position": [-0.6, -1.0392304845413263], "bc": {end}}}
        ],
        "arcs": [
            {{"id": "a", "from": "O", "to": "P", "length": 1.0, "lagrangian": {{"type": "quadratic", "c": 0.5}}}},
            {{"id": "b", "from": "Q", "to": "O", "length": 0.8, "lagrangian": {{"type": "flux", "lambda": 1.0}}}},
            {{"id": "c", "from": "O", "to": "R", "length": 1.2, "lagrangian": {{"type": "quadratic_x", "coeffs": [0.3, 0.5]}}}}
        ]
    }}"#
    );
    hjnet::load_network(&text).expect("fixture network")
}

pub fn junction3_neumann() -> Network {
    junction3_with(r#"{"kind": "neumann", "value": 0.0}"#, -0.3)
}

pub fn junction3_dirichlet() -> Network {
    junction3_with(r#"{"kind": "dirichlet", "value": 0.25}"#, -0.3)
}

/// Grid, costs and parameters with `dx = 0.1`, `dt = 0.15` and a control bound
/// certified for gradients up to 2.
pub fn setup(net: &Network) -> (Grid, CostField, SchemeParams) {
    let grid = build_grid(net, 0.1).unwrap();
    let costs = CostField::from_network(net, &grid).unwrap();
    let all: Vec<_> = costs.all().cloned().collect();
    let mu = control_bound(&all, 2.0, Some(-0.3)).unwrap();
    let params = SchemeParams::new(0.1, 0.15, 0.15, mu).unwrap();
    (grid, costs, params)
}

/// Test-1 scenario with the given flux limiter.
pub fn test1(limiter: f64) -> Scenario {
    let mut s = Scenario::builtin("test1").unwrap();
    s.network = s.network.with_flux_limiter(limiter).unwrap();
    s
}

/// Deterministic pseudo-random layer with values in `[lo, hi]`.
pub fn layer_from(values: &[f64], len: usize) -> GridFunction {
    GridFunction::new((0..len).map(|i| values[i % values.len()]).collect(), 0.0)
}
