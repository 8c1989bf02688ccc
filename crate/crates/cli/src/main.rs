//! `hs`: run Hele-Shaw experiments, validate configs and print closed-form
//! reference values.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hs_core::analytic::{self, LimitProfileParams, RadialParams};
use hs_core::experiments::{self, format_g9, ExperimentConfig, Ladder};
use hs_core::Error;

#[derive(Parser, Debug)]
#[command(name = "hs", version = hs_core::experiments::output::VERSION, about = "Hele-Shaw flow in random media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write results.csv and run.json.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. --set grid.nodes=65.
        #[arg(long = "set", value_name = "KEY=VAL")]
        overrides: Vec<String>,
        /// Print the CSV to stdout as well.
        #[arg(long)]
        print: bool,
    },
    /// Validate a config and its geometry without solving.
    Check {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Print reference values as CSV.
    #[command(subcommand)]
    Analytic(Analytic),
}

#[derive(Subcommand, Debug)]
enum Analytic {
    /// Free-boundary radius of the point-source profile.
    Rho {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        latent_heat: f64,
        /// Times: list or geom:a:b:n / lin:a:b:n.
        #[arg(long, default_value = "1")]
        t: String,
    },
    /// Radius of the radial solution with a ball core.
    Radius {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        inner: f64,
        #[arg(long, default_value_t = 1.5)]
        initial: f64,
        #[arg(long, default_value_t = 1.0)]
        latent_heat: f64,
        #[arg(long, default_value = "0,1,10,100")]
        t: String,
    },
    /// Two-dimensional spatial scale: the root of R² log R = λ.
    Rescale2d {
        #[arg(long, default_value = "7.38905609893065")]
        lambda: String,
    },
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("HS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HS_THREADS must be a positive integer, got '{raw}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn ladder(s: &str) -> Result<Vec<f64>, Error> {
    Ok(Ladder::parse(s)?.0)
}

fn analytic_csv(cmd: &Analytic) -> Result<String, Error> {
    let mut out = String::new();
    match cmd {
        Analytic::Rho {
            dim,
            amplitude,
            latent_heat,
            t,
        } => {
            let p = LimitProfileParams::new(*amplitude, *latent_heat, *dim)?;
            out.push_str("t,rho\n");
            for t in ladder(t)? {
                out.push_str(&format!("{},{}\n", format_g9(t), format_g9(analytic::rho(&p, t))));
            }
        }
        Analytic::Radius {
            dim,
            amplitude,
            inner,
            initial,
            latent_heat,
            t,
        } => {
            let p = RadialParams {
                amplitude: *amplitude,
                inner_radius: *inner,
                initial_radius: *initial,
                latent_heat: *latent_heat,
                dim: *dim,
            };
            let times = ladder(t)?;
            let radii = analytic::radius_evolution(&p, &times)?;
            out.push_str("t,radius\n");
            for (t, r) in times.iter().zip(radii) {
                out.push_str(&format!("{},{}\n", format_g9(*t), format_g9(r)));
            }
        }
        Analytic::Rescale2d { lambda } => {
            out.push_str("lambda,scale\n");
            for l in ladder(lambda)? {
                out.push_str(&format!("{},{}\n", format_g9(l), format_g9(analytic::rescale_radius_2d(l)?)));
            }
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            overrides,
            print,
        } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let out = experiments::run_scenario(&cfg)?;
            let written = out.write_artifacts(&cfg.output_dir)?;
            if print {
                print!("{}", out.csv());
            }
            for c in &out.checks {
                eprintln!(
                    "{} {}: {} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    format_g9(c.value),
                    c.bound
                );
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Check { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            experiments::dry_run(&cfg)?;
            for (k, v) in cfg.to_pairs() {
                println!("{k} = {v}");
            }
        }
        Command::Analytic(cmd) => {
            let csv = analytic_csv(&cmd)?;
            std::io::stdout().write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are config errors; clap's own code 2 is reserved.
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
