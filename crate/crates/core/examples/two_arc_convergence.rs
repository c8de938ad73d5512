//! Convergence against a fine-grid reference on a two-arc junction, for two
//! flux limiters.

use hjnet::analysis::{convergence_study, Reference};
use hjnet::scenario::Scenario;

fn main() -> hjnet::Result<()> {
    let scenario = Scenario::builtin("test1").expect("bundled scenario");
    let resolutions = [0.02, 0.01, 0.005];
    let reference = Reference::FineGrid { dx: 5e-4, dt: 5e-4 };
    for a in [0.0, -0.2] {
        let report = convergence_study(&scenario, &resolutions, 2.5, 0.2, &reference, Some(a))?;
        println!("A = {a}");
        for r in &report.rows {
            println!("  dx = {:<6} E_inf = {:.3e}", r.dx, r.error);
        }
        let ratios: Vec<String> = report.ratios().iter().map(|q| format!("{q:.3}")).collect();
        println!("  {}; halving ratios [{}]", report.summary(), ratios.join(", "));
    }
    Ok(())
}
