use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hjnet::analysis::{consistency_probe, convergence_study, exact_test2, Reference};
use hjnet::output;
use hjnet::scenario::{Overrides, Scenario};
use hjnet::scheme::Branch;
use hjnet::traffic::run_evacuation;
use hjnet::Error;

#[derive(Parser)]
#[command(name = "hjnet", version, about = "Semi-Lagrangian Hamilton-Jacobi solver on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write snapshot CSVs.
    Solve(SolveArgs),
    /// Run a convergence study and write a report CSV.
    Converge(ConvergeArgs),
    /// One update next to the junction of the two-arc counterexample.
    Probe(ProbeArgs),
    /// Evacuation run with density snapshots.
    Traffic(SolveArgs),
}

#[derive(Args)]
struct Common {
    /// Bundled scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Flux limiter applied at every junction.
    #[arg(long = "A", allow_hyphen_values = true)]
    flux_limiter: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { dx: self.dx, dt: self.dt, t_final: self.t_final, flux_limiter: self.flux_limiter, control_bound: None }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot times; defaults to the scenario's list.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    /// Also write an SVG heat map per snapshot.
    #[arg(long)]
    svg: bool,
    /// Also write the branch and controls chosen at every sample in the last step.
    #[arg(long)]
    witness: bool,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.02,0.01,0.005")]
    resolutions: Vec<f64>,
    /// dt / dx at every resolution.
    #[arg(long, default_value_t = 2.5)]
    ratio: f64,
    /// `exact` for the three-arc closed form, or the spacing of a fine-grid reference run with dt = dx.
    #[arg(long, default_value = "exact")]
    reference: String,
    /// Fail with exit code 2 when the fitted order is farther than `--tol` from this.
    #[arg(long)]
    assert_order: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    tol: f64,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    dx: f64,
    #[arg(long)]
    dt: f64,
}

enum Failure {
    Error(Error),
    Threshold(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Step indices of the requested times, rounded down and capped at the last step.
fn snapshot_steps(times: &[f64], dt: f64, steps: usize) -> Vec<usize> {
    times.iter().map(|&t| ((t / dt + 1e-9).floor().max(0.0) as usize).min(steps)).collect()
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let scenario = Scenario::resolve(&args.common.scenario)?;
    let run = scenario.prepare(&args.common.overrides())?;
    let scheme = run.scheme()?;
    let steps = run.params.steps();
    let times = args.snapshots.clone().unwrap_or_else(|| run.snapshots.clone());
    let wanted = if times.is_empty() { vec![steps] } else { snapshot_steps(&times, run.params.dt, steps) };
    let mut kept = Vec::new();
    let mut before_last = run.u0.clone();
    let solution = scheme.solve_with(&run.u0, |n, layer| {
        if wanted.contains(&n) {
            kept.push(layer.clone());
        }
        if n + 1 == steps {
            before_last = layer.clone();
        }
    })?;
    for layer in &kept {
        let name = output::snapshot_file_name(&scenario.name, layer.time);
        output::write_snapshot_csv(create(&args.common.out, &name)?, &run.network, &run.grid, &layer.values)?;
        if args.svg {
            let title = format!("{} t = {:.4}", scenario.name, layer.time);
            let svg = create(&args.common.out, &name.replace(".csv", ".svg"))?;
            output::write_svg(svg, &run.network, &run.grid, &layer.values, &title)?;
        }
    }
    if args.witness {
        let (_, witnesses, _) = scheme.step_with_witness(&before_last);
        output::write_witness_csv(create(&args.common.out, "witness.csv")?, &run.network, &run.grid, &witnesses)?;
    }
    println!(
        "{}: {} steps, dx = {}, dt = {}, mu = {:.6}, max |control| = {:.6}, {} snapshot(s) in {}",
        scenario.name,
        solution.steps,
        run.params.dx,
        run.params.dt,
        run.params.mu,
        solution.stats.max_control,
        kept.len(),
        args.common.out.display()
    );
    Ok(())
}

fn converge(args: &ConvergeArgs) -> Result<(), Failure> {
    let scenario = Scenario::resolve(&args.common.scenario)?;
    let t_final = args.common.t_final.or(scenario.params.t_final).ok_or_else(|| Error::InvalidParam("no final time".into()))?;
    let exact = |x: [f64; 2]| exact_test2(x);
    let reference = match args.reference.as_str() {
        "exact" => Reference::Exact(&exact),
        other => {
            let dx: f64 = other
                .parse()
                .map_err(|_| Error::InvalidParam(format!("reference must be `exact` or a spacing, got `{other}`")))?;
            Reference::FineGrid { dx, dt: dx }
        }
    };
    let report = convergence_study(&scenario, &args.resolutions, args.ratio, t_final, &reference, args.common.flux_limiter)?;
    output::write_report_csv(create(&args.common.out, &format!("{}_convergence.csv", scenario.name))?, &report)?;
    for r in &report.rows {
        println!("dx = {:<8} dt = {:<8} E_inf = {:.6e}", r.dx, r.dt, r.error);
    }
    println!("{}", report.summary());
    if let Some(q) = args.assert_order {
        if (report.order - q).abs() > args.tol {
            return Err(Failure::Threshold(format!("fitted order {:.4} is not within {} of {q}", report.order, args.tol)));
        }
    }
    Ok(())
}

fn probe(args: &ProbeArgs) -> Result<(), Failure> {
    let p = consistency_probe(args.dx, args.dt)?;
    let branch = match p.branch {
        Branch::Cross => "cross",
        _ => "stay",
    };
    let value = format!("{:.12}", p.value);
    println!("{}", value.trim_end_matches('0').trim_end_matches('.'));
    println!("branch={branch}");
    Ok(())
}

fn traffic(args: &SolveArgs) -> Result<(), Failure> {
    let mut scenario = Scenario::resolve(&args.common.scenario)?;
    if let Some(times) = &args.snapshots {
        scenario.params.snapshots = times.clone();
    }
    let evac = run_evacuation(&scenario, &args.common.overrides())?;
    let (net, grid) = (&evac.run.network, &evac.run.grid);
    for (layer, rho) in evac.layers.iter().zip(&evac.densities) {
        let name = output::snapshot_file_name(&format!("{}_rho", scenario.name), layer.time);
        output::write_density_csv(create(&args.common.out, &name)?, net, grid, rho)?;
        let nodes = output::snapshot_file_name(&format!("{}_rho_nodes", scenario.name), layer.time);
        output::write_node_density_csv(create(&args.common.out, &nodes)?, net, rho)?;
        let values = output::snapshot_file_name(&scenario.name, layer.time);
        output::write_snapshot_csv(create(&args.common.out, &values)?, net, grid, &layer.values)?;
        if args.svg {
            let per_sample: Vec<f64> = (0..grid.len())
                .map(|i| match grid.sites[i] {
                    hjnet::network::SampleSite::Node(n) => rho.nodes[n],
                    hjnet::network::SampleSite::Interior { arc, k } => rho.arcs[arc][k],
                })
                .collect();
            let title = format!("{} density t = {:.4}", scenario.name, layer.time);
            output::write_svg(create(&args.common.out, &name.replace(".csv", ".svg"))?, net, grid, &per_sample, &title)?;
        }
        println!(
            "t = {:.4}: max rho on arcs = {:.4}, max rho at nodes = {:.4}",
            layer.time,
            rho.max_arc_interior(),
            rho.max_node()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Converge(a) => converge(a),
        Command::Probe(a) => probe(a),
        Command::Traffic(a) => traffic(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(1)
        }
        Err(Failure::Threshold(msg)) => {
            eprintln!("error[threshold]: {msg}");
            ExitCode::from(2)
        }
    }
}
