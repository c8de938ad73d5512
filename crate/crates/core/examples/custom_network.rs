//! Builds a small network from an inline document, solves it and prints the
//! junction value over time.

use hjnet::scenario::Overrides;
use hjnet::Scenario;

const DOC: &str = r#"{
    "name": "y-junction",
    "nodes": [
        {"id": "in", "kind": "boundary", "position": [0.0, -1.0], "bc": {"kind": "neumann", "value": 0.0}},
        {"id": "O", "kind": "junction", "position": [0.0, 0.0], "A": -0.5},
        {"id": "left", "kind": "boundary", "position": [-0.6, 0.8], "bc": {"kind": "dirichlet", "value": 0.0}},
        {"id": "right", "kind": "boundary", "position": [0.6, 0.8], "bc": {"kind": "dirichlet", "value": {"times": [0.0, 1.0], "values": [0.0, 0.5]}}}
    ],
    "arcs": [
        {"id": "trunk", "from": "in", "to": "O", "length": 1.0, "lagrangian": {"type": "quadratic_x", "coeffs": [1.0, -0.5]}},
        {"id": "l", "from": "O", "to": "left", "length": 1.0, "lagrangian": {"type": "flux", "lambda": 1.0}},
        {"id": "r", "from": "O", "to": "right", "length": 1.0, "lagrangian": {"type": "table", "alphas": [-2.0, 0.0, 2.0], "values": [2.5, 0.5, 1.5]}}
    ],
    "params": {"dx": 0.05, "dt": 0.1, "T": 2.0},
    "initial": {"type": "constant", "value": 1.0}
}"#;

fn main() -> hjnet::Result<()> {
    let scenario = Scenario::from_json(DOC)?;
    let run = scenario.prepare(&Overrides::default())?;
    let o = run.grid.node_sample[run.network.node_by_id("O").expect("junction")];
    println!("{} samples, mu = {:.4}", run.grid.len(), run.params.mu);
    let scheme = run.scheme()?;
    let solution = scheme.solve_with(&run.u0, |n, layer| {
        if n % 4 == 0 {
            println!("t = {:.2}  u(O) = {:.6}", layer.time, layer.values[o]);
        }
    })?;
    println!("{} steps, largest control used {:.4}", solution.steps, solution.stats.max_control);
    Ok(())
}
