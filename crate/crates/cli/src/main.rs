use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fusetrack::harness::{ablation_table, generate, track_frames, AblationPlan, Scenario};
use fusetrack::io::{self, LoadedConfig, Profile};
use fusetrack::{evaluate, Result};

#[derive(Debug, Parser)]
#[command(name = "fusetrack", version, about = "3D multi-object tracking with fused motion and appearance cues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track a detection file and write the emitted states.
    Track {
        detections: PathBuf,
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Embedding sidecar referenced by the detection rows.
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Evaluate a track file against ground truth.
    Eval {
        tracks: PathBuf,
        gt: PathBuf,
        /// Sets the category table and matching criterion.
        #[arg(long, default_value = "kitti")]
        profile: String,
        /// Take categories and matching from a config file instead.
        #[arg(long, conflicts_with = "profile")]
        config: Option<PathBuf>,
        /// Also print a column-aligned table.
        #[arg(long)]
        table: bool,
        /// Write the key=value report here as well.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a scenario into detections, embeddings and ground truth.
    Synth {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the ablation grid over every scenario in a directory.
    Ablate {
        dir: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn track(detections: &Path, config: &Path, output: &Path, embeddings: Option<&Path>) -> Result<()> {
    let cfg = io::load_config(config)?;
    let sidecar = embeddings.map(io::load_embeddings).transpose()?;
    let frames = io::load_detections(detections, &cfg.categories, sidecar.as_deref())?;
    let results = track_frames(&frames, &cfg.tracker)?;
    io::write_tracks(output, &results, &cfg.categories)
}

fn eval(
    tracks: &Path,
    gt: &Path,
    profile: &str,
    config: Option<&Path>,
    table: bool,
    output: Option<&Path>,
) -> Result<String> {
    let loaded = match config {
        Some(p) => io::load_config(p)?,
        None => LoadedConfig::from_profile(Profile::parse(profile)?),
    };
    let records = io::load_tracks(tracks, &loaded.categories)?;
    let gts = io::load_ground_truth(gt, &loaded.categories)?;
    let report = evaluate(&gts, &io::tracks_to_predictions(&records), &loaded.eval)?;
    let mut text = io::format_report(&report, &loaded.categories)?;
    if let Some(p) = output {
        fs::write(p, &text)?;
    }
    if table {
        text.push('\n');
        text.push_str(&io::format_table(&report, &loaded.categories)?);
    }
    Ok(text)
}

fn synth(scenario: &Path, seed: u64, output: &Path) -> Result<String> {
    let s = Scenario::load(scenario)?;
    let data = generate(&s, seed)?;
    data.write(output)?;
    let count: usize = data.detections.iter().map(Vec::len).sum();
    Ok(format!(
        "frames={}\ndetections={count}\nidentities={}\n",
        data.detections.len(),
        data.identities
    ))
}

fn ablate(dir: &Path, output: Option<&Path>) -> Result<String> {
    let plan = AblationPlan::load(dir)?;
    let text = ablation_table(&plan.run()?);
    if let Some(p) = output {
        fs::write(p, &text)?;
    }
    Ok(text)
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Track {
            detections,
            config,
            output,
            embeddings,
        } => track(&detections, &config, &output, embeddings.as_deref()).map(|()| String::new()),
        Command::Eval {
            tracks,
            gt,
            profile,
            config,
            table,
            output,
        } => eval(&tracks, &gt, &profile, config.as_deref(), table, output.as_deref()),
        Command::Synth {
            scenario,
            seed,
            output,
        } => synth(&scenario, seed, &output),
        Command::Ablate { dir, output } => ablate(&dir, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
