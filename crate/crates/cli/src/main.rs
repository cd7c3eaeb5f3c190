use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holstein_cli::config::parse_truncation;
use holstein_cli::solve::{kinetic_point, solve_point};
use holstein_cli::*;
use holstein_core::fockspace::enumerate_basis;
use holstein_core::lindblad::{ness_csv_rows, NESS_CSV_HEADER};

#[derive(Parser)]
#[command(
    name = "holstein",
    version,
    about = "Steady states of the biased open Holstein chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-exciton spectrum, avoided crossings and eigenstate profiles along Δ
    Spectrum(RunArgs),
    /// Steady state at the template parameters
    Ness(RunArgs),
    /// Kinetic-model steady states along the configured axis
    Kinetic(RunArgs),
    /// Steady states over the configured grid
    Sweep(RunArgs),
    /// Secular against full steady states over `r_grid`
    ValidateSecular(RunArgs),
    /// List the built-in recipes, or print one
    Recipes {
        #[arg(long)]
        recipe: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "recipe", required_unless_present = "recipe")]
    config: Option<PathBuf>,
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads; defaults to all cores
    #[arg(long)]
    threads: Option<usize>,
    /// per_mode[,total]
    #[arg(long)]
    truncation: Option<String>,
    #[arg(long)]
    solver: Option<String>,
}

impl RunArgs {
    fn spec(&self) -> CliResult<SweepSpec> {
        let mut spec = match (&self.config, &self.recipe) {
            (Some(path), _) => parse_config(path)?,
            (None, Some(name)) => recipe_spec(name)?,
            (None, None) => return Err(CliError::config("give --config or --recipe")),
        };
        if let Some(t) = &self.truncation {
            spec = spec.with_truncation(parse_truncation(t).map_err(CliError::config)?)?;
        }
        if let Some(s) = &self.solver {
            spec = spec.with_solver(s.parse().map_err(CliError::config)?)?;
        }
        Ok(spec)
    }

    fn init_threads(&self) -> CliResult<()> {
        if let Some(k) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build_global()
                .map_err(|e| CliError::config(format!("cannot start {k} threads: {e}")))?;
        }
        Ok(())
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn sweep(spec: &SweepSpec, out: &Path) -> CliResult<()> {
    let table = run_sweep(spec)?;
    table.write(out)?;
    for (stem, data) in sweep_plotdata(&table) {
        emit_plotdata(&out.join("plotdata"), &stem, &data)?;
    }
    let failed = table.n_failed();
    eprintln!(
        "{} points, {failed} failed; wrote {}",
        table.points.len(),
        out.join("sweep.csv").display()
    );
    Ok(())
}

fn ness(spec: &SweepSpec, out: &Path) -> CliResult<()> {
    fs::create_dir_all(out)?;
    if spec.solver == Solver::Kinetic {
        let (p, k) = kinetic_point(spec, &spec.rates)?;
        let mut csv = format!("{}\n", holstein_core::kinetics::KINETIC_CSV_HEADER);
        csv.extend(p.csv_rows(&k.rho).into_iter().map(|r| r + "\n"));
        fs::write(out.join("ness.csv"), csv)?;
        write_json(&out.join("ness.json"), &k)?;
    } else {
        let basis = enumerate_basis(spec.chain.n_sites, spec.truncation)?;
        let sol = solve_point(
            &spec.chain,
            &spec.rates,
            &basis,
            spec.solver,
            spec.miniband_threshold,
        )?;
        let mut csv = format!("{NESS_CSV_HEADER}\n");
        csv.extend(
            ness_csv_rows(&sol, &spec.chain, &spec.rates)
                .into_iter()
                .map(|r| r + "\n"),
        );
        fs::write(out.join("ness.csv"), csv)?;
        write_json(&out.join("ness.json"), &sol)?;
    }
    holstein_cli::sweep::write_manifest(spec, out)?;
    eprintln!("wrote {}", out.join("ness.csv").display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Recipes { recipe: Some(name) } => {
            recipe_spec(&name)?;
            print!(
                "{}",
                recipes::find(&name).map(|r| r.text()).unwrap_or_default()
            );
        }
        Command::Recipes { recipe: None } => {
            for r in RECIPES {
                println!("{:<14} {:<17} {}", r.name, r.command, r.summary);
            }
        }
        Command::Spectrum(a) => {
            a.init_threads()?;
            let spec = a.spec()?;
            let run = run_spectrum(&spec)?;
            run.write(&a.out)?;
            eprintln!(
                "{} avoided crossings; wrote {}",
                run.crossings.len(),
                a.out.display()
            );
        }
        Command::Ness(a) => {
            a.init_threads()?;
            ness(&a.spec()?, &a.out)?;
        }
        Command::Kinetic(a) => {
            a.init_threads()?;
            let spec = a.spec()?.with_solver(Solver::Kinetic)?;
            sweep(&spec, &a.out)?;
        }
        Command::Sweep(a) => {
            a.init_threads()?;
            sweep(&a.spec()?, &a.out)?;
        }
        Command::ValidateSecular(a) => {
            a.init_threads()?;
            let spec = a.spec()?;
            let report = validate_secular(&spec)?;
            report.write(&spec, &a.out)?;
            match report.threshold {
                Some(r) => println!("secular and full agree within 1% up to r = {r:e}"),
                None => println!("secular and full differ by more than 1% at every r"),
            }
            if let Some(r) = report.breakdown {
                println!("interpolated breakdown at r = {r:.3e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
