//! `divsel`: generate applicant pools, run selection rules, sweep experiments
//! and export plot tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use divsel_core::algorithms::Algorithm;
use divsel_core::datagen::{gen_instance, SatGenConfig};
use divsel_core::experiment::{emit_plot_data, run_experiment, Case, ExperimentSpec};
use divsel_core::io::{parse_instance, write_instance, write_outcome};
use divsel_core::metrics::{evaluate, Metric};

#[derive(Parser, Debug)]
#[command(
    name = "divsel",
    version,
    about = "Compare selection rules under two-rank diversity reserves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// ψ = 0.65·q_c, q_c = 10..90
    Sat,
    /// ψ ∈ {1.3, 1.5, 1.7}·q_c, q_c ∈ {20, 40, 60, 80}
    Scaled,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one synthetic instance file
    Gen {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        qc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        psi_factor: f64,
        /// Instance file to write; the generator config goes to `<out>.config.toml`
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm on an instance file
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, alias = "algos")]
        algo: String,
        /// Outcome file (default: `<instance>.<algo>.outcome.toml`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate pools for every (ψ factor, q_c) cell, run all algorithms and write results
    Sweep {
        #[arg(long, value_enum, default_value_t = Preset::Sat)]
        preset: Preset,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        qc: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        psi_factor: Option<Vec<f64>>,
        #[arg(long)]
        seeds_per_cell: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        algos: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pivot ratios.csv into one wide table per ψ factor
    Plotdata {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long, default_value = "avg")]
        case: String,
        #[arg(long)]
        psi_factor: Option<f64>,
    },
}

fn parse_algos(tags: &[String]) -> Result<Vec<Algorithm>> {
    tags.iter()
        .map(|t| t.parse::<Algorithm>().map_err(anyhow::Error::from))
        .collect()
}

fn gen(n: usize, qc: usize, seed: u64, psi_factor: f64, out: &Path) -> Result<()> {
    let config = SatGenConfig::new(n, qc, seed, psi_factor);
    let instance = gen_instance(&config)?;
    fs::write(out, write_instance(&instance)?)
        .with_context(|| format!("writing {}", out.display()))?;
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".config.toml");
    fs::write(&sidecar, toml::to_string(&config)?)?;
    eprintln!(
        "wrote {} (psi = {})",
        out.display(),
        instance.total_reserves()
    );
    Ok(())
}

fn run(instance_path: &Path, algorithm: Algorithm, out: Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(instance_path)
        .with_context(|| format!("reading {}", instance_path.display()))?;
    let instance =
        parse_instance(&text).with_context(|| format!("parsing {}", instance_path.display()))?;
    let outcome = algorithm.run(&instance);
    let metrics = evaluate(&instance, &outcome)?;
    let out = out.unwrap_or_else(|| {
        let mut p = instance_path.as_os_str().to_owned();
        p.push(format!(".{}.outcome.toml", algorithm.tag()));
        PathBuf::from(p)
    });
    fs::write(&out, write_outcome(&outcome, Some(&metrics))?)?;
    let selected: Vec<String> = outcome.selected.iter().map(|s| s.to_string()).collect();
    println!("algorithm: {}", algorithm.label());
    println!("selected: {}", selected.join(" "));
    println!("signature: {}", outcome.signature());
    println!(
        "p1: {}  p2: {}  p3: {:.4}",
        metrics.p1, metrics.p2, metrics.p3
    );
    eprintln!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    preset: Preset,
    n: Option<usize>,
    qc: Option<Vec<usize>>,
    psi_factor: Option<Vec<f64>>,
    seeds_per_cell: Option<usize>,
    seed: Option<u64>,
    algos: Option<Vec<String>>,
    out: &Path,
) -> Result<()> {
    let mut spec = match preset {
        Preset::Sat => ExperimentSpec::sat_sweep(),
        Preset::Scaled => ExperimentSpec::scaled_sweep(),
    };
    if let Some(n) = n {
        spec.n_students = n;
    }
    if let Some(q) = qc {
        spec.capacities = q;
    }
    if let Some(f) = psi_factor {
        spec.psi_factors = f;
    }
    if let Some(k) = seeds_per_cell {
        spec.seeds_per_cell = k;
    }
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    if let Some(a) = algos {
        spec.algorithms = parse_algos(&a)?;
    }
    let cells = spec.capacities.len() * spec.psi_factors.len();
    let mut done = 0;
    run_experiment(&spec, out, |cell| {
        done += 1;
        eprintln!(
            "[{done}/{cells}] psi factor {} q_c {}: {} pools",
            cell.psi_factor,
            cell.capacity,
            cell.runs.len()
        );
    })?;
    eprintln!("results in {}", out.display());
    Ok(())
}

fn plotdata(dir: &Path, metric: Metric, case: Case, psi_factor: Option<f64>) -> Result<()> {
    for p in emit_plot_data(dir, metric, case, psi_factor)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn dispatch(cli: Cli) -> std::result::Result<(), Failure> {
    use Failure::{Runtime, Usage};
    match cli.command {
        Command::Gen {
            n,
            qc,
            seed,
            psi_factor,
            out,
        } => {
            let config = SatGenConfig::new(n, qc, seed, psi_factor);
            config.validate().map_err(|e| Usage(e.into()))?;
            gen(n, qc, seed, psi_factor, &out).map_err(Runtime)
        }
        Command::Run {
            instance,
            algo,
            out,
        } => {
            let algorithm: Algorithm = algo
                .parse()
                .map_err(|e: divsel_core::algorithms::UnknownAlgorithm| Usage(e.into()))?;
            run(&instance, algorithm, out).map_err(Runtime)
        }
        Command::Sweep {
            preset,
            n,
            qc,
            psi_factor,
            seeds_per_cell,
            seed,
            algos,
            out,
        } => {
            if let Some(a) = &algos {
                parse_algos(a).map_err(Usage)?;
            }
            sweep(preset, n, qc, psi_factor, seeds_per_cell, seed, algos, &out).map_err(|e| {
                if matches!(
                    e.downcast_ref::<divsel_core::experiment::ExperimentError>(),
                    Some(divsel_core::experiment::ExperimentError::InvalidSpec(_))
                ) {
                    Usage(e)
                } else {
                    Runtime(e)
                }
            })
        }
        Command::Plotdata {
            dir,
            metric,
            case,
            psi_factor,
        } => {
            let metric: Metric = metric
                .parse()
                .map_err(|e: String| Usage(anyhow::anyhow!(e)))?;
            let case: Case = case
                .parse()
                .map_err(|e: String| Usage(anyhow::anyhow!(e)))?;
            plotdata(&dir, metric, case, psi_factor).map_err(Runtime)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn algos_parse() {
        assert_eq!(
            parse_algos(&["as".into(), "POS".into()]).unwrap(),
            vec![Algorithm::As, Algorithm::Pos]
        );
        assert!(parse_algos(&["bogus".into()]).is_err());
    }
}
