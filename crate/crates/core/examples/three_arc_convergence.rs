//! Convergence to the exact steady state on a three-arc junction.

use hjnet::analysis::{convergence_study, exact_test2, Reference};
use hjnet::scenario::Scenario;

fn main() -> hjnet::Result<()> {
    let scenario = Scenario::builtin("test2").expect("bundled scenario");
    let resolutions = [0.04, 0.02, 0.01, 0.005];
    let report = convergence_study(&scenario, &resolutions, 2.5, 2.0, &Reference::Exact(&exact_test2), None)?;
    println!("{:>8} {:>8} {:>12}", "dx", "dt", "E_inf");
    for r in &report.rows {
        println!("{:>8} {:>8} {:>12.3e}", r.dx, r.dt, r.error);
    }
    println!("{}", report.summary());
    Ok(())
}
