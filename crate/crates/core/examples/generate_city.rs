//! Writes the synthetic evacuation city as a scenario file.
//!
//! `cargo run --example generate_city -- scenarios/rouen.json`

fn main() -> hjnet::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "rouen.json".into());
    let scenario = hjnet::traffic::rouen_like();
    std::fs::write(&path, scenario.to_json()?)?;
    println!("{} nodes, {} arcs -> {path}", scenario.network.nodes().len(), scenario.network.arcs().len());
    Ok(())
}
