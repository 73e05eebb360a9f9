use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skorohod::experiments::{self, ExperimentConfig};
use skorohod::kernel::{KernelSpec, Partition, CATALOGUE};
use skorohod::variation::{self, Method};
use skorohod::{Error, Result};

#[derive(Parser)]
#[command(name = "skorohod", version, about = "Skorohod, Stratonovich and Young sums for Gaussian processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covariance kernel catalogue.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
    /// Sample paths on the configured grid and write them as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate every sum on paths read from CSV.
    Integrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        paths: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the mesh-refinement experiment and write one row per level.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the 2D rho-variation of a kernel on a uniform grid.
    Variation(VariationArgs),
}

#[derive(Subcommand)]
enum KernelsAction {
    List,
}

#[derive(Args)]
struct VariationArgs {
    /// Kernel as `name[:key=value,...]`, e.g. `fbm:hurst=0.35`.
    #[arg(long)]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Number of grid intervals per axis.
    #[arg(long)]
    grid_n: usize,
    /// Variation exponent; defaults to the kernel's declared rho.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, conflicts_with = "heuristic")]
    exact: bool,
    #[arg(long)]
    heuristic: bool,
    #[arg(long, default_value_t = variation::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn kernels_list() {
    println!("{:<16} {:<20} {:<56} {:<16} rho_prime", "name", "params", "covariance", "rho");
    for e in CATALOGUE {
        println!("{:<16} {:<20} {:<56} {:<16} {}", e.name, e.params, e.covariance, e.rho, e.rho_prime);
    }
}

fn simulate(config: &Path, out: &Path) -> Result<()> {
    let exp = ExperimentConfig::from_path(config)?.resolve()?;
    let grid = exp.simulation_grid()?;
    let paths = exp.simulate(&grid)?;
    experiments::write_paths(&paths, create(out)?)?;
    println!("wrote {} paths on {} intervals to {}", paths.len(), grid.n(), out.display());
    Ok(())
}

fn integrate(config: &Path, paths: &Path, out: &Path) -> Result<()> {
    let exp = ExperimentConfig::from_path(config)?.resolve()?;
    let paths = experiments::read_paths(BufReader::new(File::open(paths)?), exp.kernels.clone())?;
    let sums = experiments::integrate_paths(&exp, &paths)?;
    experiments::write_sums(&sums, create(out)?)?;
    println!("wrote sums for {} paths to {}", sums.len(), out.display());
    Ok(())
}

fn converge(config: &Path, out: &Path) -> Result<()> {
    let exp = ExperimentConfig::from_path(config)?.resolve()?;
    let report = exp.run()?;
    experiments::emit_report(&report.rows, create(out)?)?;
    println!(
        "regime={} rho={} rho_prime={} strat_order={} skorohod_order={}",
        report.regime, report.rho, report.rho_prime, report.strat_order, report.skorohod_order
    );
    if !report.regime {
        println!("out of regime: no convergence is claimed for this configuration");
    }
    for r in &report.rows {
        println!("n={} rms_conversion={:.6e} stderr={:.2e}", r.n, r.rms_conversion, r.stderr_conversion);
    }
    Ok(())
}

fn run_variation(a: &VariationArgs) -> Result<()> {
    let kernel = KernelSpec::parse_compact(&a.kernel, a.horizon)?.build()?;
    let grid = Partition::uniform(a.grid_n, a.horizon)?;
    let rho = a.rho.unwrap_or(kernel.rho());
    let heuristic = a.heuristic || (!a.exact && a.grid_n > a.exact_limit);
    let report = if heuristic {
        variation::rho_variation_2d_heuristic(&kernel, &grid, rho)?
    } else {
        variation::rho_variation_2d(&kernel, &grid, rho, a.exact_limit)?
    };
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(["kernel", "n", "rho", "method", "value", "row_points", "col_points"])?;
    w.write_record([
        a.kernel.clone(),
        a.grid_n.to_string(),
        experiments::fmt_real(rho),
        report.method.name().to_string(),
        experiments::fmt_real(report.value),
        join(&report.axes[0]),
        join(&report.axes[1]),
    ])?;
    w.flush()?;
    let label = if report.method == Method::Exact { "exact" } else { "heuristic lower bound" };
    println!("{kernel}: {label} rho-variation^rho = {:.10e}", report.value);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Kernels { action: KernelsAction::List } => {
            kernels_list();
            Ok(())
        }
        Command::Simulate { config, out } => simulate(config, out),
        Command::Integrate { config, paths, out } => integrate(config, paths, out),
        Command::Converge { config, out } => converge(config, out),
        Command::Variation(args) => run_variation(args),
    };
    match result {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
