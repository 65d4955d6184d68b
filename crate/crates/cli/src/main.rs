use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cyclecert::{cmd_certify, cmd_find_cycle, cmd_portrait, cmd_sweep, cmd_transform, exit, Outcome, RunConfig};

/// Certify and locate the unique limit cycle of ẍ + ẋ·φ(x, ẋ) + g(x) = 0.
#[derive(Parser)]
#[command(name = "cyclecert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the uniqueness and attraction hypotheses; writes report.json.
    Certify(Common),
    /// Locate the cycle on the positive x-axis; writes cycle.csv and cycle.json.
    FindCycle(Common),
    /// Orbits, cycle and A₀ curve; writes portrait.svg, A0.csv, orbits.csv.
    Portrait(Common),
    /// Tabulate the reduction to g = x; writes transform.csv.
    Transform(Common),
    /// Certify and locate the cycle for each value of one parameter; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep.
        #[arg(long)]
        sweep_param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Print the effective configuration in canonical form.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    config: Option<PathBuf>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    g: Option<String>,
    /// Parameter value, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    y_max: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let value = value.trim().parse().map_err(|e| format!("{name}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(phi) = &self.phi {
            cfg.phi = phi.clone();
        }
        if let Some(g) = &self.g {
            cfg.g = g.clone();
        }
        for (name, value) in &self.params {
            cfg.params.insert(name.clone(), *value);
        }
        if let Some(x) = self.x_max {
            cfg.window.x_max = x;
        }
        if let Some(y) = self.y_max {
            cfg.window.y_max = y;
        }
        if let Some(t) = self.t_max {
            cfg.dynamics.t_max = t;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Certify(c) => cmd_certify(&c.resolve()?),
        Command::FindCycle(c) => cmd_find_cycle(&c.resolve()?),
        Command::Portrait(c) => cmd_portrait(&c.resolve()?),
        Command::Transform(c) => cmd_transform(&c.resolve()?),
        Command::Sweep {
            common,
            sweep_param,
            values,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(p) = sweep_param {
                cfg.sweep.param = p;
            }
            if let Some(v) = values {
                cfg.sweep.values = v;
            }
            cmd_sweep(&cfg)
        }
        Command::Config(c) => {
            let cfg = c.resolve()?;
            Ok(Outcome {
                code: exit::OK,
                message: cfg.to_canonical_json().trim_end().to_string(),
                files: Vec::new(),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(out) => {
            if out.code == exit::USAGE {
                eprintln!("{}", out.message);
            } else {
                println!("{}", out.message);
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::USAGE)
        }
    }
}
