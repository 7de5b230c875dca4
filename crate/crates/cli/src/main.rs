//! Command-line front end for the scenario pipeline.

use clap::{ArgAction, Parser, Subcommand};
use gsekit_core::allocator::{self, AllocationProblem};
use gsekit_core::bom::{default_bom, write_bom_csv};
use gsekit_core::mrsut::{
    gse_final_demand, load_supply_use, neumann_layers, trace_material_sourcing, Concordance,
    MassFactors,
};
use gsekit_core::scenario::{
    compare_scenarios, dump_problems, run_scenario, RunConfig, ScenarioError, ScenarioSummary,
};
use gsekit_core::survival::{default_lifetimes, write_lifetimes_csv};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "gsekit",
    version,
    about = "Grid-support equipment deployment under material constraints"
)]
struct Cli {
    /// Enable stage logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end and write its result tables.
    Run {
        /// Scenario config JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory for the result tables.
        #[arg(long)]
        out: PathBuf,
        /// Override the configured solve strategy.
        #[arg(long)]
        method: Option<String>,
    },
    /// Diff two finished runs: variant minus reference.
    Compare {
        /// Output directory of the reference run.
        #[arg(long)]
        reference: PathBuf,
        /// Output directory of the variant run.
        #[arg(long)]
        variant: PathBuf,
        /// Restrict the report to a single year.
        #[arg(long)]
        year: Option<i32>,
    },
    /// Trace embodied material sourcing for one final-demand impulse.
    Trace {
        /// Directory with use.csv, supply.csv, axes.json, concordance.csv,
        /// mass_factors.csv.
        #[arg(long)]
        mrsut: PathBuf,
        /// Region receiving the final demand.
        #[arg(long)]
        region: String,
        /// Product receiving the final demand.
        #[arg(long)]
        product: String,
        /// Monetary final-demand value before scaling.
        #[arg(long, default_value_t = 1000.0)]
        value: f64,
        /// Maximum expansion depth.
        #[arg(long, default_value_t = 200)]
        layers: usize,
        /// Early-stop tolerance on the latest layer's max entry.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Share of the parent sector attributed to grid-support equipment.
        #[arg(long, default_value_t = 0.046)]
        phi: f64,
    },
    /// Print the embedded lifetime parameters as CSV.
    DumpLifetimes,
    /// Print the embedded material intensities as CSV.
    DumpBom,
    /// Write each year's allocation problem as JSON, then re-load and
    /// solve each file to prove the dump restores.
    DumpLp {
        /// Scenario config JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Directory for the problem_<year>.json files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match dispatch(cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch(command: Command) -> Result<(), ScenarioError> {
    match command {
        Command::Run {
            scenario,
            out,
            method,
        } => cmd_run(&scenario, &out, method),
        Command::Compare {
            reference,
            variant,
            year,
        } => cmd_compare(&reference, &variant, year),
        Command::Trace {
            mrsut,
            region,
            product,
            value,
            layers,
            tol,
            phi,
        } => cmd_trace(&mrsut, &region, &product, value, layers, tol, phi),
        Command::DumpLifetimes => {
            write_lifetimes_csv(&default_lifetimes(), std::io::stdout().lock())
                .map_err(|e| ScenarioError::Data(e.to_string()))
        }
        Command::DumpBom => write_bom_csv(&default_bom(), std::io::stdout().lock())
            .map_err(|e| ScenarioError::Data(e.to_string())),
        Command::DumpLp { scenario, out } => cmd_dump_lp(&scenario, &out),
    }
}

fn cmd_run(scenario: &Path, out: &Path, method: Option<String>) -> Result<(), ScenarioError> {
    let mut config = RunConfig::load(scenario)?;
    if let Some(method) = method {
        allocator::strategy(&method).map_err(|e| ScenarioError::Config(e.to_string()))?;
        config.params.method = method;
    }
    let output = run_scenario(&config, out)?;
    println!(
        "scenario {} ({}), years {}-{}",
        output.summary.scenario, output.summary.method, config.years.start, config.years.end
    );
    println!("year  demand_gva  produced_gva  unmet_gva  unmet_share");
    for year in &output.summary.years {
        println!(
            "{}  {:>10.3}  {:>12.3}  {:>9.3}  {:>11.4}",
            year.year,
            year.total_demand_gva,
            year.total_produced_gva,
            year.total_unmet_gva,
            year.unmet_share
        );
    }
    println!("wrote 6 files to {}", output.out_dir.display());
    Ok(())
}

fn cmd_compare(reference: &Path, variant: &Path, year: Option<i32>) -> Result<(), ScenarioError> {
    let ref_summary = ScenarioSummary::load(&reference.join("summary.json"))?;
    let var_summary = ScenarioSummary::load(&variant.join("summary.json"))?;
    let deltas = compare_scenarios(&ref_summary, &var_summary)?;
    let deltas: Vec<_> = deltas
        .into_iter()
        .filter(|d| year.is_none_or(|y| d.year == y))
        .collect();
    if deltas.is_empty() {
        return Err(ScenarioError::Data(format!(
            "no overlapping year {:?} in the two runs",
            year
        )));
    }
    println!(
        "delta: {} minus {}",
        var_summary.scenario, ref_summary.scenario
    );
    println!("year  d_total_unmet_gva  d_unmet_share_pp  d_transformer_unmet_gva  d_other_unmet_gva");
    for d in &deltas {
        println!(
            "{}  {:>17.3}  {:>16.4}  {:>23.3}  {:>17.3}",
            d.year, d.total_unmet_gva, d.unmet_share_pp, d.transformer_unmet_gva, d.other_unmet_gva
        );
    }
    println!("material usage-ratio deltas:");
    for d in &deltas {
        for (material, delta) in &d.usage_ratio {
            println!("{}  {}  {:>8.4}", d.year, material.id(), delta);
        }
    }
    Ok(())
}

fn cmd_trace(
    mrsut: &Path,
    region: &str,
    product: &str,
    value: f64,
    layers: usize,
    tol: f64,
    phi: f64,
) -> Result<(), ScenarioError> {
    let data_err = |e: gsekit_core::mrsut::MrsutError| ScenarioError::Data(e.to_string());
    let system = load_supply_use(
        &mrsut.join("use.csv"),
        &mrsut.join("supply.csv"),
        &mrsut.join("axes.json"),
    )
    .map_err(data_err)?;
    let concordance = Concordance::load(&mrsut.join("concordance.csv")).map_err(data_err)?;
    concordance.validate_against(system.axes()).map_err(data_err)?;
    let factors = MassFactors::load(&mrsut.join("mass_factors.csv")).map_err(data_err)?;
    let rows: Vec<usize> = system
        .row_labels()
        .iter()
        .enumerate()
        .filter(|(_, (r, p))| r == region && p == product)
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(ScenarioError::Config(format!(
            "({region}, {product}) does not exist in the supply-use axes"
        )));
    }
    let expansion =
        neumann_layers(&system.ita_coefficients(), layers, tol).map_err(data_err)?;
    let mut final_demand = ndarray::Array1::zeros(system.n_rows());
    for &row in &rows {
        final_demand[row] = value;
    }
    let scaled = gse_final_demand(&final_demand, &rows, phi).map_err(data_err)?;
    let sourcing = trace_material_sourcing(&system, &expansion, &scaled, &concordance, &factors)
        .map_err(data_err)?;
    println!(
        "layers_used={} spectral_radius={:.6} residual_bound={}",
        expansion.layers_used(),
        expansion.spectral_radius(),
        expansion
            .residual_bound()
            .map(|b| format!("{b:.3e}"))
            .unwrap_or_else(|| "n/a".to_string())
    );
    println!("material,region,mass_kg,share");
    for material in sourcing.materials().collect::<Vec<_>>() {
        let shares = sourcing.shares(material);
        if let Some(masses) = sourcing.regional_mass(material) {
            for (reg, mass) in masses {
                println!(
                    "{},{},{:.3},{:.4}",
                    material.id(),
                    reg,
                    mass,
                    shares.get(reg).copied().unwrap_or(0.0)
                );
            }
        }
    }
    Ok(())
}

fn cmd_dump_lp(scenario: &Path, out: &Path) -> Result<(), ScenarioError> {
    let config = RunConfig::load(scenario)?;
    let paths = dump_problems(&config, out)?;
    let strat = allocator::strategy(&config.params.method)
        .map_err(|e| ScenarioError::Config(e.to_string()))?;
    for path in &paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Data(format!("cannot re-read {}: {e}", path.display())))?;
        let problem: AllocationProblem = serde_json::from_str(&text)
            .map_err(|e| ScenarioError::Data(format!("cannot restore {}: {e}", path.display())))?;
        let solution = strat
            .solve(&problem)
            .map_err(|e| ScenarioError::Solver(e.to_string()))?;
        println!(
            "{}: year={} bundle_level={:.4} total_unmet_gva={:.3}",
            path.display(),
            solution.year,
            solution.bundle_level,
            solution.total_unmet()
        );
    }
    Ok(())
}
