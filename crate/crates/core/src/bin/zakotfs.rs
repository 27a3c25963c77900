//! Command-line front end: pulse inspection, effective channels, PSDs,
//! Monte-Carlo BER sweeps and the spreading demo, all written as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zak_otfs::lattice::DdIndex;
use zak_otfs::pulse::{build_family, family_windows, PulseFamily};
use zak_otfs::sim::config::parse_range;
use zak_otfs::sim::csv::{emit_grid, emit_report, table_csv, write_text};
use zak_otfs::sim::demo::{spreading_demo, toy_params};
use zak_otfs::sim::psd::{bandwidth_99, compute_psd};
use zak_otfs::sim::{run_sweep, sequential_kernels, single_trial, PulseCache, SimConfig};
use zak_otfs::transceiver::effective_channel_matrix;
use zak_otfs::window::ambiguity_grid;
use zak_otfs::{Error, Result};

#[derive(Parser)]
#[command(name = "zakotfs", version, about = "Zak-OTFS delay-Doppler waveform lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV file (a directory for spreading-demo).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte-Carlo trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Sweep points as start:step:stop.
    #[arg(long, global = true)]
    sweep: Option<String>,
    /// Transmit and receive window: rect, rrc, pswf or iota-pswf.
    #[arg(long, global = true)]
    window: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Centre pulsone of the configured pulse set.
    Pulse,
    /// Continuous ambiguity magnitude of the frequency or time window.
    Ambiguity {
        /// `frequency` or `time`.
        #[arg(long, default_value = "frequency")]
        axis: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 33)]
        points: usize,
    },
    /// Effective channel of one random channel draw, centered.
    Heff,
    /// One estimated-CSI trial; writes the estimate and prints its NMSE.
    Estimate,
    /// Average PSD of the pulse set and its 99% bandwidth.
    Psd,
    /// Monte-Carlo BER / NMSE sweep.
    Ber,
    /// Single-path spreading grids for all four windows.
    SpreadingDemo,
}

fn load_config(c: &Common) -> Result<SimConfig> {
    let mut cfg = match &c.config {
        Some(p) => SimConfig::from_file(p)?,
        None => SimConfig::new(PulseFamily::IotaPswf),
    };
    if let Some(w) = &c.window {
        cfg.window = PulseFamily::parse(w)?;
        cfg.rx_window = None;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(s) = &c.sweep {
        cfg.sweep.points = parse_range(s)?;
    }
    if let Some(o) = &c.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cfg: &SimConfig, fallback: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let params = cfg.lattice.params()?;
    match cli.command {
        Command::Pulse => {
            let p = build_family(cfg.window, &params, &cfg.design)?;
            let col = p.column(params.index(params.m / 2, params.n / 2));
            let fs = params.sample_rate();
            let rows = col
                .iter()
                .enumerate()
                .map(|(i, v)| vec![i as f64, i as f64 / fs, v.re, v.im]);
            let path = out_path(&cfg, "pulse.csv");
            write_text(&path, &table_csv(&["n", "t_seconds", "re", "im"], rows))?;
            println!(
                "{}",
                json(&serde_json::json!({
                    "window": cfg.window,
                    "rows": p.rows(),
                    "cols": p.cols(),
                    "state": p.state(),
                    "orthogonality_defect": p.recorded_defect(),
                    "out": path,
                }))
            );
        }
        Command::Ambiguity { axis, points } => {
            let (a, b) = family_windows(cfg.window, &params, &cfg.design)?;
            let (w, tau_unit, nu_unit) = match axis.as_str() {
                "frequency" => (a, params.tau_res(), params.delta_f),
                "time" => (b, params.t, params.nu_res()),
                other => return Err(Error::Config(format!("unknown axis '{other}'"))),
            };
            let half = (points / 2) as f64;
            let grid: Vec<f64> = (0..points).map(|i| i as f64 - half).collect();
            let taus: Vec<f64> = grid.iter().map(|g| g * tau_unit).collect();
            let nus: Vec<f64> = grid.iter().map(|g| g * nu_unit).collect();
            let vals = ambiguity_grid(&w, &taus, &nus)?;
            let rows = vals
                .into_iter()
                .map(|(t, n, v)| vec![t, n, v.re, v.im, v.norm()]);
            let path = out_path(&cfg, "ambiguity.csv");
            write_text(&path, &table_csv(&["tau", "nu", "re", "im", "abs"], rows))?;
        }
        Command::Heff => {
            let cache = PulseCache::new();
            let detail = single_trial(&cfg, 0, &cache)?;
            let tx = cache.get(cfg.window, &params, &cfg.design)?;
            let rx = cache.get(cfg.rx_window(), &params, &cfg.design)?;
            let eff = effective_channel_matrix(&tx.pulses, &rx.pulses, &detail.paths, &params)?;
            let path = out_path(&cfg, "heff.csv");
            emit_grid(eff.fundamental.entries(), &path)?;
            println!(
                "{}",
                json(&serde_json::json!({
                    "paths": detail.paths.len(),
                    "energy": eff.fundamental.energy(),
                    "out": path,
                }))
            );
        }
        Command::Estimate => {
            let detail = single_trial(&cfg, 0, &PulseCache::new())?;
            let path = out_path(&cfg, "estimate.csv");
            emit_grid(detail.estimate.h_hat.entries(), &path)?;
            println!(
                "{}",
                json(&serde_json::json!({
                    "nmse": detail.estimate.nmse,
                    "samples_used": detail.estimate.samples_used,
                    "ber": detail.ber,
                    "out": path,
                }))
            );
        }
        Command::Psd => {
            let p = build_family(cfg.window, &params, &cfg.design)?;
            let psd = compute_psd(&p, 4 * params.samples(), params.sample_rate())?;
            let bw = bandwidth_99(&psd);
            let rows = psd
                .freqs
                .iter()
                .zip(&psd.power)
                .map(|(f, pw)| vec![*f, f / params.delta_f, *pw]);
            let path = out_path(&cfg, "psd.csv");
            write_text(&path, &table_csv(&["freq_hz", "freq_df", "power"], rows))?;
            println!(
                "{}",
                json(&serde_json::json!({
                    "window": cfg.window,
                    "bandwidth_99_hz": bw,
                    "bandwidth_99_df": bw / params.delta_f,
                    "out": path,
                }))
            );
        }
        Command::Ber => {
            let report = run_sweep(&cfg)?;
            let path = out_path(&cfg, "ber.csv");
            emit_report(&report, &path)?;
            println!("{}", json(&report));
            report.check()?;
        }
        Command::SpreadingDemo => {
            let dir = out_path(&cfg, "spreading");
            let toy = toy_params();
            let mut summary = String::from("grid,window,spread,local_fraction,energy\n");
            for family in PulseFamily::ALL {
                let cases = [
                    ("toy", toy, DdIndex::new(16, 16)),
                    ("reference", params, DdIndex::new(15, 7)),
                ];
                for (name, lattice, pilot) in cases {
                    let g = spreading_demo(family, &lattice, &cfg.design, pilot)?;
                    let file = dir.join(format!("{name}_{family}.csv"));
                    emit_grid(g.cells.iter().copied(), &file)?;
                    let s = &g.summary;
                    summary.push_str(&format!(
                        "{name},{family},{},{:.16e},{:.16e}\n",
                        s.spread, s.local_fraction, s.energy
                    ));
                }
            }
            write_text(&dir.join("summary.csv"), &summary)?;
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    sequential_kernels();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
