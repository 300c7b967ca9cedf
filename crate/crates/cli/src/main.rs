//! Command-line experiment runner for the OpenVLC1.3 link simulator.
//!
//! Subcommands mirror the evaluation experiments: `link` runs a single
//! point-to-point experiment, `sweep-distance` reproduces the throughput
//! vs distance curves for the three scenarios, `sweep-payload` the
//! throughput vs payload curve, and `sweep-drift` the bit-slip sweep over
//! clock offsets. All results are CSV on stdout or to `--output`.

use clap::{Args, Parser, Subcommand};
use openvlc_sim::channel::Scenario;
use openvlc_sim::experiment::{
    self, distance_csv, drift_csv, packet_error_rate, payload_csv, run_link_full, DistanceRow,
    ExperimentConfig, LinkConfig, RunOptions,
};
use openvlc_sim::pipeline;
use openvlc_sim::settings::Settings;
use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "openvlc-sim", version, about = "OpenVLC1.3 link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Simulated traffic seconds per run.
    #[arg(long, default_value_t = 0.25)]
    duration: f64,
    /// Payload bytes per frame.
    #[arg(long, default_value_t = 800)]
    payload: usize,
    /// Idle-carrier symbols between frames (0 = throughput ceiling;
    /// 1792 matches the calibrated system-overhead figure).
    #[arg(long, default_value_t = 0)]
    gap: u32,
    /// Simulation grid rate in Hz.
    #[arg(long, default_value_t = 16e6)]
    sim_rate: f64,
    /// Channel / front-end / slicer overrides file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single link experiment and print its statistics as CSV.
    Link {
        #[command(flatten)]
        common: CommonArgs,
        /// Channel scenario: w_open, w_closed or interference.
        #[arg(long, default_value = "w_closed")]
        scenario: String,
        /// Transmitter-receiver distance in meters.
        #[arg(long, default_value_t = 1.0)]
        distance: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Transmit clock offset in ppm.
        #[arg(long, default_value_t = 0.0)]
        tx_ppm: f64,
        /// Receive clock offset in ppm.
        #[arg(long, default_value_t = 0.0)]
        rx_ppm: f64,
        /// Write receiver events as line-delimited records.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Write the transmit handshake trace.
        #[arg(long)]
        tx_trace: Option<PathBuf>,
        /// Dump the first 5 ms of the transmitted waveform as CSV.
        #[arg(long)]
        dump_waveform: Option<PathBuf>,
        /// Dump the first 5 ms of the front-end probe points as CSV.
        #[arg(long)]
        dump_afe: Option<PathBuf>,
    },
    /// Goodput and packet error rate over a distance grid, per scenario.
    SweepDistance {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated scenarios, or `all`.
        #[arg(long, default_value = "all")]
        scenarios: String,
        /// Distance grid `start:stop:step` in meters, or a comma list.
        #[arg(long, default_value = "0.5:7.0:0.5")]
        distances: String,
        /// Comma-separated seeds.
        #[arg(long, default_value = "1")]
        seeds: String,
    },
    /// Goodput over payload sizes on a short clean link.
    SweepPayload {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "w_closed")]
        scenario: String,
        #[arg(long, default_value_t = 0.5)]
        distance: f64,
        /// Comma-separated payload sizes in bytes.
        #[arg(long, default_value = "50,200,800,1500")]
        payloads: String,
        #[arg(long, default_value = "1")]
        seeds: String,
    },
    /// Symbol errors and frame losses over TX/RX clock-offset pairs on a
    /// noiseless link.
    SweepDrift {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated `tx:rx` ppm pairs.
        #[arg(long, default_value = "-200:200,-150:150,-100:100,-50:50,0:0,50:-50,100:-100,150:-150,200:-200")]
        drift_pairs: String,
        /// Sampling ratio (receiver rate / symbol rate).
        #[arg(long, default_value_t = 2.1)]
        ratio: f64,
        /// Symbols compared per drift point.
        #[arg(long, default_value_t = 1_000_000)]
        symbols: u64,
        /// Simulation grid for drift runs (finer than the default so edge
        /// quantization stays below the sampling-ratio margin).
        #[arg(long, default_value_t = 64e6)]
        drift_sim_rate: f64,
        #[arg(long, default_value = "1")]
        seeds: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Link {
            common,
            scenario,
            distance,
            seed,
            tx_ppm,
            rx_ppm,
            events,
            tx_trace,
            dump_waveform,
            dump_afe,
        } => {
            let overrides = load_overrides(&common)?;
            let cfg = LinkConfig {
                scenario: scenario.parse::<Scenario>()?,
                distance,
                payload_size: common.payload,
                duration: common.duration,
                gap_symbols: common.gap,
                seed,
                sim_rate: common.sim_rate,
                tx_ppm,
                rx_ppm,
                overrides,
                ..LinkConfig::default()
            };
            let dump_len = (common.sim_rate * 5e-3) as usize;
            let options = RunOptions {
                collect_events: events.is_some(),
                collect_tx_trace: tx_trace.is_some(),
                waveform_head: if dump_waveform.is_some() { dump_len } else { 0 },
                probes_head: if dump_afe.is_some() { dump_len } else { 0 },
            };
            let out = run_link_full(&cfg, options)?;

            if let Some(path) = events {
                let mut file = fs::File::create(path)?;
                for event in &out.events {
                    writeln!(file, "{}", event.log_line())?;
                }
            }
            if let Some(path) = tx_trace {
                pipeline::write_trace(&out.tx_trace, fs::File::create(path)?)?;
            }
            if let Some(path) = dump_waveform {
                out.tx_waveform_head.write_csv(fs::File::create(path)?)?;
            }
            if let Some(path) = dump_afe {
                out.afe_probes_head
                    .write_csv(fs::File::create(path)?, common.sim_rate)?;
            }

            let row = DistanceRow {
                scenario: cfg.scenario,
                distance,
                seed,
                stats: out.stats.clone(),
            };
            let mut csv = distance_csv(std::slice::from_ref(&row));
            csv.push_str(&format!(
                "# sent={} received={} corrected={} discarded={} in_flight={} sync_losses={} ber_pre_rs={:.3e} per={:.6}\n",
                out.stats.frames_sent,
                out.stats.frames_received,
                out.stats.frames_corrected,
                out.stats.frames_discarded,
                out.stats.frames_in_flight,
                out.stats.sync_losses,
                out.stats.ber_pre_rs,
                packet_error_rate(&out.stats),
            ));
            emit(&common.output, &csv)
        }
        Command::SweepDistance {
            common,
            scenarios,
            distances,
            seeds,
        } => {
            let cfg = ExperimentConfig {
                scenarios: parse_scenarios(&scenarios)?,
                distances: parse_grid(&distances)?,
                payload_size: common.payload,
                duration: common.duration,
                gap_symbols: common.gap,
                seeds: parse_list(&seeds)?,
                sim_rate: common.sim_rate,
                overrides: load_overrides(&common)?,
                ..ExperimentConfig::default()
            };
            let rows = experiment::sweep_distance(&cfg)?;
            emit(&common.output, &distance_csv(&rows))
        }
        Command::SweepPayload {
            common,
            scenario,
            distance,
            payloads,
            seeds,
        } => {
            let cfg = ExperimentConfig {
                scenarios: vec![scenario.parse::<Scenario>()?],
                distances: vec![distance],
                payloads: parse_list(&payloads)?,
                duration: common.duration,
                gap_symbols: common.gap,
                seeds: parse_list(&seeds)?,
                sim_rate: common.sim_rate,
                overrides: load_overrides(&common)?,
                ..ExperimentConfig::default()
            };
            let rows = experiment::sweep_payload(&cfg)?;
            emit(&common.output, &payload_csv(&rows))
        }
        Command::SweepDrift {
            common,
            drift_pairs,
            ratio,
            symbols,
            drift_sim_rate,
            seeds,
        } => {
            let cfg = ExperimentConfig {
                drift_pairs: parse_pairs(&drift_pairs)?,
                drift_ratio: ratio,
                drift_symbols: symbols,
                drift_sim_rate,
                payload_size: common.payload,
                seeds: parse_list(&seeds)?,
                overrides: load_overrides(&common)?,
                ..ExperimentConfig::default()
            };
            let rows = experiment::sweep_drift(&cfg)?;
            emit(&common.output, &drift_csv(&rows))
        }
    }
}

fn load_overrides(common: &CommonArgs) -> Result<Settings, Box<dyn Error>> {
    match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            Ok(Settings::parse(&text)?)
        }
        None => Ok(Settings::default()),
    }
}

fn emit(output: &Option<PathBuf>, csv: &str) -> Result<(), Box<dyn Error>> {
    match output {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_scenarios(text: &str) -> Result<Vec<Scenario>, Box<dyn Error>> {
    if text == "all" {
        return Ok(Scenario::ALL.to_vec());
    }
    text.split(',')
        .map(|s| s.trim().parse::<Scenario>().map_err(Into::into))
        .collect()
}

/// Parses `start:stop:step` or a comma-separated list.
fn parse_grid(text: &str) -> Result<Vec<f64>, Box<dyn Error>> {
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("expected start:stop:step, got `{text}`"))?;
        let (start, stop, step): (f64, f64, f64) = (start.parse()?, stop.parse()?, step.parse()?);
        if !(step > 0.0 && stop >= start) {
            return Err(format!("bad grid `{text}`").into());
        }
        let count = ((stop - start) / step).round() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    parse_list(text)
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, Box<dyn Error>>
where
    T::Err: Error + 'static,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| Box::new(e) as Box<dyn Error>))
        .collect()
}

/// Parses comma-separated `tx:rx` ppm pairs.
fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>, Box<dyn Error>> {
    text.split(',')
        .map(|pair| {
            let (tx, rx) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("expected tx:rx, got `{pair}`"))?;
            Ok((tx.trim().parse()?, rx.trim().parse()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.5:2.0:0.5").unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1.0,3.5").unwrap(), vec![1.0, 3.5]);
        assert!(parse_grid("2.0:1.0:0.5").is_err());
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(
            parse_pairs("0:0, 100:-100").unwrap(),
            vec![(0.0, 0.0), (100.0, -100.0)]
        );
        assert!(parse_pairs("5").is_err());
    }

    #[test]
    fn cli_parses_subcommands() {
        Cli::try_parse_from(["openvlc-sim", "link", "--distance", "2.5", "--seed", "7"]).unwrap();
        Cli::try_parse_from(["openvlc-sim", "sweep-distance", "--scenarios", "w_open"]).unwrap();
        Cli::try_parse_from(["openvlc-sim", "sweep-payload", "--payloads", "10,20"]).unwrap();
        Cli::try_parse_from(["openvlc-sim", "sweep-drift", "--ratio", "2.0"]).unwrap();
        assert!(Cli::try_parse_from(["openvlc-sim", "bogus"]).is_err());
    }
}
