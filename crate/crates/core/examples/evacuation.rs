//! Evacuation of a synthetic city: solve from the weighted distance to the
//! exits and write density snapshots and SVG heat maps.
//!
//! `cargo run --release --example evacuation -- out/evacuation`

use std::fs::File;

use hjnet::output::{snapshot_file_name, write_density_csv, write_node_density_csv, write_svg};
use hjnet::scenario::Overrides;
use hjnet::traffic::run_evacuation;
use hjnet::Scenario;

fn main() -> hjnet::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "evacuation".into()));
    std::fs::create_dir_all(&out)?;
    let scenario = Scenario::builtin("rouen").expect("bundled scenario");
    let evac = run_evacuation(&scenario, &Overrides::default())?;
    let (net, grid) = (&evac.run.network, &evac.run.grid);
    for (layer, rho) in evac.layers.iter().zip(&evac.densities) {
        write_density_csv(File::create(out.join(snapshot_file_name("rho", layer.time)))?, net, grid, rho)?;
        write_node_density_csv(File::create(out.join(snapshot_file_name("rho_nodes", layer.time)))?, net, rho)?;
        let svg = out.join(snapshot_file_name("value", layer.time).replace(".csv", ".svg"));
        write_svg(File::create(svg)?, net, grid, &layer.values, &format!("value t = {:.2}", layer.time))?;
        let (node, peak) = rho.nodes.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &r)| if r > b.1 { (i, r) } else { b });
        println!(
            "t = {:.2}: max arc density {:.4}, max node density {:.4} at {}",
            layer.time,
            rho.max_arc_interior(),
            peak,
            net.node(node).id
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
