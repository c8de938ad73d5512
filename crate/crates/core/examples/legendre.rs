//! Hamiltonians obtained from running costs, and from traffic flux functions.

use hjnet::hamiltonian::{legendre, LagrangianSpec};
use hjnet::traffic::{hamiltonian_from_flux, FluxModel, FluxShape};

fn main() -> hjnet::Result<()> {
    let quadratic = LagrangianSpec::Quadratic { c: 0.5 };
    let lwr = hamiltonian_from_flux(&FluxModel { flux: FluxShape::Lwr { capacity: 1.0 }, gamma: 1.0 })?;
    let diagram = FluxModel {
        flux: FluxShape::Table { densities: vec![0.0, 0.2, 0.5, 0.8, 1.0], fluxes: vec![0.0, 0.18, 0.25, 0.12, 0.0] },
        gamma: 1.0,
    };
    let table = hamiltonian_from_flux(&diagram)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "p", "quadratic", "lwr", "diagram");
    for k in -6..=6 {
        let p = 0.25 * k as f64;
        println!(
            "{p:>6} {:>12.6} {:>12.6} {:>12.6}",
            legendre(&quadratic, 0.0, p)?,
            legendre(&lwr, 0.0, p)?,
            legendre(&table, 0.0, p)?
        );
    }
    println!("lwr cost: {lwr:?}");
    println!("diagram cost: {table:?}");
    Ok(())
}
