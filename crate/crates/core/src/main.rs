use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spkid::config::{ConfigLayer, CONFIG_ENV};
use spkid::eval::{
    evaluate, make_synthetic_corpus, render_csv, render_curve, render_markdown, sweep, Corpus, EvalError, SweepParam,
    SynthSpec,
};
use spkid::features::io::write_features;
use spkid::model::{train, TrainedSystem};
use spkid::preprocess::clean_audio;
use spkid::signal_io::{read_wav, write_wav};

/// Noise-robust closed-set speaker identification.
///
/// Config keys can come from a JSON file (--config, or the file named by
/// SPKID_CONFIG) and from flags of the same name; flags win.
#[derive(Parser)]
#[command(name = "spkid", version)]
struct Cli {
    /// JSON config file with the same keys as the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise and strip silence from a recording.
    Preprocess {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: ConfigLayer,
    },
    /// Write the feature vectors of a recording to a feature file.
    Extract {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: ConfigLayer,
    },
    /// Enroll the manifest's speakers and save the model directory.
    Train {
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: ConfigLayer,
    },
    /// Identify the speaker of a recording.
    Identify {
        input: PathBuf,
        /// Model directory written by `train`.
        #[arg(long)]
        models: PathBuf,
        #[command(flatten)]
        cfg: ConfigLayer,
    },
    /// Score the manifest's test utterances under every noise and SNR.
    Evaluate {
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: ConfigLayer,
    },
    /// Re-run the evaluation for each value of one GA parameter.
    Sweep {
        /// crossover | generations
        #[arg(long)]
        param: SweepArg,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// Curve file (CSV).
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: ConfigLayer,
    },
    /// Generate a synthetic corpus and its manifest.
    SynthCorpus {
        #[arg(long, default_value_t = 5)]
        speakers: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        enroll_per_speaker: usize,
        #[arg(long, default_value_t = 2)]
        test_per_speaker: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepArg {
    Crossover,
    Generations,
}

enum Failure {
    Usage(String),
    Pipeline(spkid::Error),
}

impl<E: Into<spkid::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Pipeline(e.into())
    }
}

fn layered(file: Option<&Path>, flags: &ConfigLayer) -> Result<ConfigLayer, Failure> {
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let base = match file.map(Path::to_path_buf).or(env_path) {
        Some(p) => ConfigLayer::load(p)?,
        None => ConfigLayer::default(),
    };
    let layer = base.overlay(flags);
    if let Some(jobs) = layer.jobs {
        // Only the first call can configure the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(layer)
}

fn manifest_corpus(layer: &ConfigLayer) -> Result<Corpus, Failure> {
    let path = layer
        .manifest
        .as_ref()
        .ok_or_else(|| Failure::Usage("--manifest is required (flag or config key)".into()))?;
    Ok(Corpus::load(path)?)
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Pipeline(EvalError::Io(format!("{}: {e}", path.display())).into())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Preprocess { input, output, cfg } => {
            let sys = layered(file, &cfg)?.resolve()?;
            let audio = read_wav(&input)?;
            let cleaned = clean_audio(&audio, &sys.pipeline.preprocess)?;
            write_wav(&output, &cleaned)?;
            println!("samples_in={} samples_out={}", audio.len(), cleaned.len());
        }
        Command::Extract { input, output, cfg } => {
            let sys = layered(file, &cfg)?.resolve()?;
            let audio = read_wav(&input)?;
            let fs = spkid::features::extract(&audio, sys.method, &sys.pipeline)?;
            write_features(&output, &fs).map_err(spkid::Error::from)?;
            println!("method={} frames={} dim={}", fs.method(), fs.len(), fs.dim());
        }
        Command::Train { output, cfg } => {
            let layer = layered(file, &cfg)?;
            let sys = layer.resolve()?;
            let corpus = manifest_corpus(&layer)?;
            let trained = train(&corpus.enroll, &corpus.noise_buffers(), sys.method, &sys)?;
            trained.save(&output)?;
            println!(
                "speakers={} codebook={} groups={}",
                trained.models.len(),
                trained.symbol_codebook.len(),
                trained.group_codebook.groups().len()
            );
        }
        Command::Identify { input, models, cfg } => {
            let layer = layered(file, &cfg)?;
            let trained = TrainedSystem::load(&models)?;
            let mode = layer.identify_mode.unwrap_or(trained.config.identify_mode);
            let audio = read_wav(&input)?;
            let r = trained.identify_audio(&audio, mode)?;
            println!("speaker={}", r.speaker_id);
            if let Some(g) = r.group {
                println!("group={g}");
            }
            for (spk, ll) in &r.scores {
                println!("score {spk} {ll}");
            }
        }
        Command::Evaluate { output, cfg } => {
            let layer = layered(file, &cfg)?;
            let sys = layer.resolve()?;
            let corpus = manifest_corpus(&layer)?;
            let report = evaluate(&corpus, &sys)?;
            write_file(&output.join("report.csv"), &render_csv(&report))?;
            write_file(&output.join("report.md"), &render_markdown(&report).map_err(spkid::Error::from)?)?;
            let meta = serde_json::to_string_pretty(&report.run_meta).expect("metadata serializes") + "\n";
            write_file(&output.join("run_meta.json"), &meta)?;
            print!("{}", render_markdown(&report).map_err(spkid::Error::from)?);
        }
        Command::Sweep {
            param,
            values,
            output,
            cfg,
        } => {
            let layer = layered(file, &cfg)?;
            let sys = layer.resolve()?;
            let corpus = manifest_corpus(&layer)?;
            let param = match param {
                SweepArg::Crossover => SweepParam::CrossoverPoints,
                SweepArg::Generations => SweepParam::Generations,
            };
            let curve = sweep(&corpus, sys.method, &sys, param, &values)?;
            let csv = render_curve(param.as_str(), &curve);
            write_file(&output, &csv)?;
            print!("{csv}");
        }
        Command::SynthCorpus {
            speakers,
            out,
            seed,
            enroll_per_speaker,
            test_per_speaker,
        } => {
            let spec = SynthSpec {
                speakers,
                enroll_per_speaker,
                test_per_speaker,
                seed,
                ..SynthSpec::default()
            };
            let manifest = make_synthetic_corpus(&out, &spec)?;
            println!("manifest={}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: usage: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.name());
            ExitCode::from(1)
        }
    }
}
