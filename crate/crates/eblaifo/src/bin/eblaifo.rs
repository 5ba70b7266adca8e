//! Command-line front end for the event-based imitation pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eblaifo::ail_engine::ObsMode;
use eblaifo::event_core::EventCodecConfig;
use eblaifo::frame_io::{read_frame_sequence, write_events};
use eblaifo::harness::{
    ablate_noise, evaluate_expert, record_demos, run_imitation, run_table, train_expert,
    ExperimentConfig,
};
use eblaifo::nn_core::{load_params, save_params};
use eblaifo::toy_world::DomainPreset;
use eblaifo::{ail_engine, event_core, rng, Error};

#[derive(Parser)]
#[command(name = "eblaifo", about = "Event-based visual imitation pipeline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment config JSON; defaults apply for omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> eblaifo::Result<ExperimentConfig> {
        match &self.config {
            Some(path) => ExperimentConfig::load(path),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a directory of PPM frames into an event file.
    Convert {
        /// Directory of .ppm frames, processed in sorted order.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output .evb event file.
        #[arg(long)]
        out: PathBuf,
        /// Contrast threshold C in log-intensity units.
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        /// Camera-shift offset applied to the previous frame, as "du,dv".
        #[arg(long, default_value = "1,1")]
        shift: String,
        /// Std of Gaussian noise added to the log-intensity difference.
        #[arg(long = "noise-sigma", default_value_t = 0.0)]
        noise_sigma: f64,
        /// Noise stream seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the fully observable expert policy.
    TrainExpert {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output checkpoint path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Roll out an expert checkpoint and store demo videos + events.
    RecordDemos {
        #[command(flatten)]
        config: ConfigArg,
        /// Expert actor checkpoint.
        #[arg(long)]
        expert: PathBuf,
        /// Domain preset to render in.
        #[arg(long, default_value = "source")]
        domain: String,
        #[arg(long, default_value_t = 100)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (one subdirectory per episode).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run adversarial imitation from recorded demos.
    Imitate {
        #[command(flatten)]
        config: ConfigArg,
        /// Demo directory produced by record-demos.
        #[arg(long)]
        demos: PathBuf,
        /// Target-domain preset the agent acts in.
        #[arg(long)]
        preset: Option<String>,
        /// Observation mode: events or raw-rgb.
        #[arg(long)]
        obs: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep presets x observation modes x seeds and emit table + curves.
    Table {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        demos: PathBuf,
        /// Comma-separated preset list.
        #[arg(long, default_value = "light,body,floor,background,full")]
        presets: String,
        /// Seeds as "a..b" (inclusive) or a comma list.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated observation modes.
        #[arg(long, default_value = "events,raw-rgb")]
        modes: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noise-robustness ablation over event-noise sigmas.
    Ablate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        demos: PathBuf,
        /// Comma-separated sigma list.
        #[arg(long, default_value = "0.01,0.1,0.2,0.5")]
        sigmas: String,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_shift(s: &str) -> eblaifo::Result<(i32, i32)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::validation("shift must be \"du,dv\""));
    }
    let du = parts[0].trim().parse().map_err(|_| Error::validation("bad shift du"))?;
    let dv = parts[1].trim().parse().map_err(|_| Error::validation("bad shift dv"))?;
    Ok((du, dv))
}

fn parse_seeds(s: &str) -> eblaifo::Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| Error::validation("bad seed range"))?;
        let b: u64 = b.trim().parse().map_err(|_| Error::validation("bad seed range"))?;
        if b < a {
            return Err(Error::validation("seed range end before start"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| Error::validation("bad seed list")))
        .collect()
}

fn parse_list<T, F: Fn(&str) -> eblaifo::Result<T>>(s: &str, f: F) -> eblaifo::Result<Vec<T>> {
    s.split(',').map(|p| f(p.trim())).collect()
}

fn run(cli: Cli) -> eblaifo::Result<()> {
    match cli.command {
        Command::Convert {
            input,
            out,
            threshold,
            shift,
            noise_sigma,
            seed,
        } => {
            let codec = EventCodecConfig {
                threshold_c: threshold,
                shift: parse_shift(&shift)?,
                noise_sigma,
                ..EventCodecConfig::default()
            };
            codec.validate()?;
            let frames = read_frame_sequence(&input)?;
            let events = event_core::convert_sequence(&frames, &codec, seed)?;
            write_events(&events, &out)?;
            println!(
                "converted {} frames -> {} event frames ({} events total)",
                frames.len(),
                events.len(),
                events.iter().map(|e| e.active_count()).sum::<usize>()
            );
        }
        Command::TrainExpert { config, seed, out } => {
            let cfg = config.load()?;
            let actor = train_expert(&cfg, seed)?;
            let stats = evaluate_expert(&cfg, &actor, seed, 20)?;
            save_params(&actor, &out)?;
            println!(
                "expert trained: mean dense return {:.3}, goal-touch rate {:.0}% -> {}",
                stats.mean_dense_return,
                stats.success_rate * 100.0,
                out.display()
            );
        }
        Command::RecordDemos {
            config,
            expert,
            domain,
            episodes,
            seed,
            out,
        } => {
            let mut cfg = config.load()?;
            cfg.source_preset = DomainPreset::parse(&domain)?;
            cfg.demo_episodes = episodes;
            let mut actor = ail_engine::actor_net::<f64, _>(4, 2, &mut rng::stream(0, "load", 0));
            load_params(&mut actor, &expert)?;
            let dirs = record_demos(&cfg, &actor, seed, &out)?;
            println!("recorded {} episodes under {}", dirs.len(), out.display());
        }
        Command::Imitate {
            config,
            demos,
            preset,
            obs,
            seed,
            out,
        } => {
            let mut cfg = config.load()?;
            if let Some(p) = preset {
                cfg.target_preset = DomainPreset::parse(&p)?;
            }
            if let Some(o) = obs {
                cfg.obs_mode = ObsMode::parse(&o)?;
            }
            let outcome = run_imitation(&cfg, seed, &demos, &out)?;
            println!(
                "final return {:.3} (mean of last {} evals) -> {}",
                outcome.final_return,
                outcome.evals.len().min(5),
                outcome.metrics_csv.display()
            );
        }
        Command::Table {
            config,
            demos,
            presets,
            seeds,
            modes,
            out,
        } => {
            let mut cfg = config.load()?;
            if let Some(s) = seeds {
                cfg.seeds = parse_seeds(&s)?;
            }
            let presets = parse_list(&presets, DomainPreset::parse)?;
            let modes = parse_list(&modes, ObsMode::parse)?;
            run_table(&cfg, &presets, &modes, &demos, &out)?;
        }
        Command::Ablate {
            config,
            demos,
            sigmas,
            seeds,
            out,
        } => {
            let mut cfg = config.load()?;
            if let Some(s) = seeds {
                cfg.seeds = parse_seeds(&s)?;
            }
            let sigmas = parse_list(&sigmas, |p| {
                p.parse::<f64>().map_err(|_| Error::validation("bad sigma list"))
            })?;
            ablate_noise(&cfg, &sigmas, &demos, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Validation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
