use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use manp::app::{self, BenchFile, MmsStudyFile, RunConfig};

const OUTPUT_ENV: &str = "MANP_OUTPUT_DIR";

const RUN_HELP: &str = "\
Outputs (in the output directory):
  diagnostics.csv   one row per step, the initial state as step 0:
      step, time            step counter and simulated time
      mass_<l>              total amount of species l (sum of c * cell area)
      energy_fh             discrete free energy
      min_concentration     smallest concentration over all species and nodes
      max_gauss_residual    max |2 kappa^2 div D - rho| over nodes
      max_curl_residual     max cell circulation of D / eps
      max_peclet            largest numerical cell Peclet number
      dt_star               time-step bound of the energy estimate
      dissipation_i1        dissipation rate I1 of the step
      relax_sweeps          curl-free relaxation sweeps of the step
  snapshots/<field>_<step>.csv   fields c1, c2, ..., dx, dy as rows i,j,x,y,value
  error.json        kind, message and step of a failed run";

const STUDY_HELP: &str = "\
Writes convergence.csv with columns h,error_c1,order_c1,error_c2,order_c2:
max-norm errors against the manufactured solution at t_final and the
observed orders log(e_2h / e_h) / log 2.";

const BENCH_HELP: &str = "\
Writes bench.csv with columns n,points,steps,sweeps,seconds: grid size per
direction, node count, time steps, total relaxation sweeps and the best
relaxation wall time over the repeats. Prints the log-log slope of time
against node count.";

#[derive(Parser)]
#[command(
    name = "manp",
    version,
    about = "Structure-preserving Maxwell-Ampere Nernst-Planck solver on periodic 2D grids"
)]
#[command(
    after_help = "Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 other errors.\n\
The output directory comes from --output, then $MANP_OUTPUT_DIR, then [output].dir in the config."
)]
struct Cli {
    /// Output directory, overriding the environment and the config file.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation described by a TOML config.
    #[command(after_help = RUN_HELP)]
    Run { config: PathBuf },
    /// Convergence study against the manufactured solution.
    #[command(after_help = STUDY_HELP)]
    MmsStudy { config: PathBuf },
    /// Time the curl-free relaxation over increasing grid sizes.
    #[command(after_help = BENCH_HELP)]
    RelaxBench { config: PathBuf },
}

fn output_dir(flag: Option<&Path>, configured: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(configured),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<manp::Error>() {
        Some(e) if e.is_config() => 2,
        Some(manp::Error::Io(_)) => 1,
        Some(_) => 3,
        None => 1,
    }
}

// Library errors already carry their cause in the message.
fn message(err: &anyhow::Error) -> String {
    match err.downcast_ref::<manp::Error>() {
        Some(e) => e.to_string(),
        None => format!("{err:#}"),
    }
}

fn write_error_record(dir: &Path, err: &anyhow::Error) {
    let (kind, step) = match err.downcast_ref::<manp::Error>() {
        Some(e) => (e.kind(), e.step()),
        None => ("Other", None),
    };
    let record = serde_json::json!({
        "kind": kind,
        "message": message(err),
        "step": step,
    });
    let _ = fs::create_dir_all(dir);
    if let Err(e) = fs::write(dir.join("error.json"), format!("{record:#}\n")) {
        eprintln!("warning: could not write error.json: {e}");
    }
}

fn run(config: &Path, flag: Option<&Path>, out: &mut Option<PathBuf>) -> Result<()> {
    let cfg: RunConfig = app::read_config_file(config)?;
    cfg.validate()?;
    let dir = output_dir(flag, &cfg.output.dir);
    *out = Some(dir.clone());
    let summary = app::run(&cfg, &dir)?;
    let last = &summary.last;
    println!("steps            {}", summary.steps);
    println!("final time       {}", summary.final_time);
    println!("masses           {:?}", last.mass_per_species);
    println!("energy           {:e}", last.energy_fh);
    println!("min c            {:e}", last.min_concentration);
    println!("gauss residual   {:e}", last.max_gauss_residual);
    println!("curl residual    {:e}", last.max_curl_residual);
    if let Some(errs) = &summary.mms_errors {
        println!("max-norm errors  {errs:?}");
    }
    println!("diagnostics      {}", summary.diagnostics_path.display());
    Ok(())
}

fn mms_study(config: &Path, flag: Option<&Path>, out: &mut Option<PathBuf>) -> Result<()> {
    let file: MmsStudyFile = app::read_config_file(config)?;
    file.options()?;
    let dir = output_dir(flag, &file.output.dir);
    *out = Some(dir.clone());
    let (rows, path) = app::run_mms_study(&file, &dir)?;
    print!("{}", manp::mms::study_csv(&rows));
    println!("written to {}", path.display());
    Ok(())
}

fn relax_bench(config: &Path, flag: Option<&Path>, out: &mut Option<PathBuf>) -> Result<()> {
    let file: BenchFile = app::read_config_file(config)?;
    let dir = output_dir(flag, &file.output.dir);
    *out = Some(dir.clone());
    let rows = app::relax_bench(&file.bench)?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = app::bench_csv(&rows);
    let path = dir.join("bench.csv");
    fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
    print!("{csv}");
    let xs: Vec<f64> = rows.iter().map(|r| r.points as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    println!("log-log slope    {:.3}", app::loglog_slope(&xs, &ys));
    println!("written to {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flag = cli.output.as_deref();
    let mut out = None;
    let result = match &cli.command {
        Command::Run { config } => run(config, flag, &mut out),
        Command::MmsStudy { config } => mms_study(config, flag, &mut out),
        Command::RelaxBench { config } => relax_bench(config, flag, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", message(&err));
            let dir = out.unwrap_or_else(|| output_dir(flag, "output"));
            write_error_record(&dir, &err);
            ExitCode::from(exit_code(&err))
        }
    }
}
