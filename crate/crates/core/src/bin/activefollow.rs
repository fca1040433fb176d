use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use activefollow::predict::{predict_with, PredictConfig, Regressor, TrackHistory};
use activefollow::simkit::service::{serve, ServiceOptions};
use activefollow::simkit::{load_scenario, run, Scenario};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Person-following simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless; exits 0 on success, 2 on failure.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ticks: Option<u64>,
        /// JSON-lines event log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Extrapolate a `t,x,y` CSV history.
    Predict {
        history: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        horizon: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Add cubic-polynomial columns for comparison.
        #[arg(long)]
        compare_poly: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a scenario live over a WebSocket.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn read_scenario(path: &PathBuf) -> Result<Scenario, Box<dyn std::error::Error>> {
    Ok(load_scenario(&std::fs::read_to_string(path)?)?)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Cmd::Run { scenario, seed, ticks, log } => {
            let mut sc = read_scenario(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            let mut sink: Box<dyn Write> = match log {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(io::sink()),
            };
            let summary = run(&sc, ticks, &mut sink)?;
            println!("{}", serde_json::to_string(&summary)?);
            Ok(if summary.success { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Predict { history, horizon, step, compare_poly, output } => {
            let mut rows = Vec::new();
            let mut reader = csv::Reader::from_path(history)?;
            for r in reader.deserialize() {
                let (t, x, y): (f64, f64, f64) = r?;
                rows.push((t, x, y));
            }
            let cfg = PredictConfig::default();
            let h = TrackHistory::from_samples(rows, cfg.tau_w)?;
            let svr = predict_with(&h, horizon, step, &cfg, Regressor::Svr)?;
            let poly = if compare_poly { Some(predict_with(&h, horizon, step, &cfg, Regressor::Cubic)?) } else { None };
            let mut w = csv::Writer::from_path(output)?;
            if poly.is_some() {
                w.write_record(["t", "x", "y", "valid", "poly_x", "poly_y"])?;
            } else {
                w.write_record(["t", "x", "y", "valid"])?;
            }
            for (i, p) in svr.iter().enumerate() {
                let mut rec = vec![p.t.to_string(), p.x.to_string(), p.y.to_string(), p.valid.to_string()];
                if let Some(q) = &poly {
                    rec.push(q[i].x.to_string());
                    rec.push(q[i].y.to_string());
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Serve { scenario, port, host } => {
            let sc = read_scenario(&scenario)?;
            let handle = serve(sc, (host.as_str(), port), ServiceOptions::default())?;
            eprintln!("serving on ws://{}", handle.local_addr());
            handle.join();
            Ok(ExitCode::SUCCESS)
        }
    }
}
