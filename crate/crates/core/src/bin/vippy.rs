use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vippy::bench::{answer, run_experiment, Experiment, ExperimentConfig, ViewDir};
use vippy::catalog::Strategy;

#[derive(Parser)]
#[command(name = "vippy", version, about = "XML views over a simulated DHT")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Set {
    Sample,
    Conf,
    Camera,
}

#[derive(Subcommand)]
enum Cmd {
    /// Writes a view directory (views.toml and docs/).
    Gen {
        #[arg(long, value_enum, default_value = "sample")]
        set: Set,
        #[arg(long)]
        out: PathBuf,
        /// Camera documents to generate.
        #[arg(long, default_value_t = 20)]
        docs: usize,
        /// Approximate bytes per camera document.
        #[arg(long, default_value_t = 32 << 10)]
        bytes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Runs one experiment and writes its CSV report.
    Run {
        #[arg(long)]
        exp: Experiment,
        /// Overrides `seed` in the config file; 1 when neither is given.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// key = value overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Answers a query against a view directory.
    Query {
        #[arg(long)]
        view_dir: PathBuf,
        /// Pattern literal, or a for/where/return query.
        #[arg(long)]
        q: String,
        #[arg(long, default_value = "lpi")]
        strategy: Strategy,
        /// Also print candidates, plans and timings.
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vippy: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Box<dyn std::error::Error>> {
    match cmd {
        Cmd::Gen { set, out, docs, bytes, seed } => {
            let vd = match set {
                Set::Sample => ViewDir::sample(),
                Set::Conf => ViewDir::conf(),
                Set::Camera => ViewDir::camera(docs, bytes, seed),
            };
            vd.write(&out)?;
            eprintln!("wrote {} views and {} documents to {}", vd.views.len(), vd.docs.len(), out.display());
        }
        Cmd::Run { exp, seed, out, config } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::parse(&std::fs::read_to_string(&p)?, Some(exp))?,
                None => ExperimentConfig::new(exp, 1),
            };
            cfg.exp = exp;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_experiment(&cfg)?;
            std::fs::write(&out, report.to_csv())?;
            eprintln!("{} rows over {} runs to {}", report.rows.len(), report.runs().len(), out.display());
        }
        Cmd::Query { view_dir, q, strategy, verbose } => {
            let vd = ViewDir::load(&view_dir)?;
            let cost = vippy::materialize::CostModel::default();
            let o = answer(&vd, &q, strategy, &cost, 1)?;
            if verbose {
                eprintln!("{} lookups, candidates: {}", o.lookups, o.candidates.join(" "));
            }
            let Some(r) = &o.rewriting else {
                return Err("no rewriting of the query over the retrieved views".into());
            };
            if verbose {
                eprintln!("plan: {}", r.plan);
                if let Some(pp) = &o.physical {
                    eprint!("{}", pp.to_text());
                }
                if let Some(ex) = &o.exec {
                    eprintln!("response {} us, first result {:?} us, {} bytes shipped", ex.response_time, ex.first_result, ex.bytes_shipped);
                }
            }
            print!("{}", o.output);
            if !o.output.is_empty() && !o.output.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}
