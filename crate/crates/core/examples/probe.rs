//! One update next to a junction where staying on the arc and crossing the
//! junction compete. The winner changes at dt/dx = sqrt(3) - 1.

use hjnet::analysis::{consistency_probe, probe_cross_value, probe_stay_value, probe_switch_ratio};

fn main() -> hjnet::Result<()> {
    let dx = 0.01;
    println!("{:>6} {:>10} {:>14} {:>14} {:>8}", "dt/dx", "value", "stay formula", "cross formula", "branch");
    for r in [0.25, 0.5, 0.7, 0.75, 1.0, 1.5] {
        let dt = r * dx;
        let p = consistency_probe(dx, dt)?;
        println!(
            "{r:>6} {:>10.6} {:>14.6} {:>14.6} {:>8?}",
            p.value,
            probe_stay_value(dx, dt),
            probe_cross_value(dx, dt),
            p.branch
        );
    }
    let switch = probe_switch_ratio(dx, 0.5, 1.0, 1e-12)?;
    println!("switch at dt/dx = {switch:.12} (sqrt(3) - 1 = {:.12})", 3f64.sqrt() - 1.0);
    Ok(())
}
