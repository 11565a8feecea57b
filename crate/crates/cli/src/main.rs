use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qbenders::mes::{build_instance, default_dataset, write_dataset};
use qbenders::model::model_stats;
use qbenders_cli::report::{read_report, write_log};
use qbenders_cli::{compare, extrapolate, ConfigLayer, Instance, InstanceSource, RunConfig, SolverKind};

#[derive(Parser)]
#[command(name = "qbenders", version, about = "Benders decomposition with annealing-sampled masters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Source {
    /// Model file or MES dataset sidecar (`*.mes.json`); repeatable for compare.
    #[arg(long = "instance")]
    instances: Vec<PathBuf>,
    /// Generate MES instances with these step counts, e.g. `2,3,4,5`.
    #[arg(long = "mes", value_delimiter = ',')]
    mes: Vec<usize>,
    /// Seed of the generated MES data.
    #[arg(long, default_value_t = 0)]
    dataset_seed: u64,
}

impl Source {
    fn sources(&self) -> Vec<InstanceSource> {
        let mut out: Vec<InstanceSource> = self.instances.iter().cloned().map(InstanceSource::File).collect();
        out.extend(self.mes.iter().map(|&steps| InstanceSource::Mes { steps, seed: self.dataset_seed }));
        out
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print its report.
    Solve {
        #[command(flatten)]
        source: Source,
        /// TOML config file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigLayer,
        /// Write the report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the per-iteration log as JSON lines here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run several solvers over several instances.
    Compare {
        #[command(flatten)]
        source: Source,
        /// Solvers to run, default all of them.
        #[arg(long = "solvers", value_enum, value_delimiter = ',')]
        solvers: Vec<SolverKind>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigLayer,
        #[arg(long, default_value = "compare-out")]
        out_dir: PathBuf,
    },
    /// Best-case runtime of a mock-annealer run on real hardware.
    Extrapolate {
        /// Report or run log of a `benders-mock` run.
        report: PathBuf,
        /// Write the extrapolation as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write MES datasets (model file plus sidecar).
    Generate {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        steps: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
    },
    /// Print variable and constraint counts.
    Stats {
        #[command(flatten)]
        source: Source,
    },
}

fn resolve(config: &Option<PathBuf>, flags: &ConfigLayer) -> Result<RunConfig> {
    let file = config.as_deref().map(ConfigLayer::load).transpose()?;
    RunConfig::resolve(file.as_ref(), flags)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    let mut stdout = std::io::stdout().lock();
    match cmd {
        Command::Solve { source, config, flags, report, log } => {
            let sources = source.sources();
            let [src] = sources.as_slice() else {
                eprintln!("error: solve takes exactly one of --instance or --mes");
                return Ok(2);
            };
            let cfg = resolve(&config, &flags)?;
            let inst = Instance::load(src)?;
            let out = qbenders_cli::run(&inst, &cfg)?;
            let text = serde_json::to_string_pretty(&out.report)?;
            writeln!(stdout, "{text}")?;
            if let Some(p) = report {
                std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = log {
                let mut f = std::fs::File::create(&p).with_context(|| format!("writing {}", p.display()))?;
                write_log(&mut f, &out.report, &out.records)?;
            }
            Ok(out.report.exit_code())
        }
        Command::Compare { source, solvers, config, flags, out_dir } => {
            let sources = source.sources();
            if sources.is_empty() {
                eprintln!("error: compare needs --instance or --mes");
                return Ok(2);
            }
            let solvers = if solvers.is_empty() { SolverKind::ALL.to_vec() } else { solvers };
            let cfg = resolve(&config, &flags)?;
            let cmp = compare(&sources, &solvers, &cfg);
            cmp.write_all(&out_dir)?;
            cmp.write_summary(&mut stdout)?;
            for f in &cmp.ordering_flags {
                writeln!(stdout, "flag: {f}")?;
            }
            let failed = cmp.cells.iter().filter(|c| c.outcome.is_err()).count();
            Ok(if failed > 0 { 3 } else { 0 })
        }
        Command::Extrapolate { report, out } => {
            let r = read_report(&report)?;
            let e = extrapolate(&r)?;
            let text = serde_json::to_string_pretty(&e)?;
            writeln!(stdout, "{text}")?;
            if let Some(p) = out {
                std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(0)
        }
        Command::Generate { steps, seed, out_dir } => {
            std::fs::create_dir_all(&out_dir)?;
            for t in steps {
                let inst = build_instance(&default_dataset(seed, t))?;
                let (model, sidecar) = write_dataset(&inst, &out_dir, &format!("mes_t{t}_s{seed}"))?;
                writeln!(stdout, "{} {}", model.display(), sidecar.display())?;
            }
            Ok(0)
        }
        Command::Stats { source } => {
            let sources = source.sources();
            if sources.is_empty() {
                eprintln!("error: stats needs --instance or --mes");
                return Ok(2);
            }
            writeln!(stdout, "instance,variables,continuous,integer,binary_after_encoding,constraints,pure_integer_rows")?;
            for src in &sources {
                let inst = Instance::load(src)?;
                let s = model_stats(&inst.milp);
                writeln!(
                    stdout,
                    "{},{},{},{},{},{},{}",
                    inst.id,
                    s.variables,
                    s.continuous,
                    s.variables - s.continuous,
                    s.binary_after_encoding,
                    s.constraints,
                    s.pure_integer_rows
                )?;
            }
            Ok(0)
        }
    }
}
