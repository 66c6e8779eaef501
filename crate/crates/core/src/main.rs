use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};

use plategeo::report::{
    load_corpus_metadata, run_corpus, AnalysisConfig, EmitFlags, InstrumentRecord,
};
use plategeo::size_class::{InstrumentSize, SizeClass};
use plategeo::synthetic::write_demo_corpus;
use plategeo::Result;

#[derive(Parser)]
#[command(name = "plategeo", version, about = "Contour lines and channel of minima of violin-family plates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse every instrument of a corpus table.
    Analyze {
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the config's output_dir, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated inventory ids to restrict the run to.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Comma-separated subset of svg,csv,json,raster.
        #[arg(long)]
        emit: Option<String>,
        /// Record per-stage wall-clock timings in the reports.
        #[arg(long)]
        timings: bool,
    },
    /// Analyse a single instrument given its plate meshes.
    AnalyzeOne {
        #[arg(long)]
        sound_board: Option<PathBuf>,
        #[arg(long)]
        back: Option<PathBuf>,
        #[arg(long)]
        body: Option<PathBuf>,
        #[arg(long, value_parser = parse_size_class)]
        size_class: SizeClass,
        #[arg(long, default_value = "instrument")]
        id: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        emit: Option<String>,
    },
    /// Write a small synthetic corpus for trying the pipeline out.
    SynthCorpus {
        #[arg(long, default_value = "synthetic")]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Number of instruments written without a sound board.
        #[arg(long, default_value_t = 0)]
        back_only: usize,
    },
}

fn parse_size_class(s: &str) -> std::result::Result<SizeClass, String> {
    s.parse().map_err(|e: plategeo::Error| e.to_string())
}

fn load_config(path: Option<&PathBuf>, emit: Option<&str>) -> Result<AnalysisConfig> {
    let mut cfg = match path {
        Some(p) => AnalysisConfig::load(p)?,
        None => AnalysisConfig::default(),
    };
    if let Some(e) = emit {
        cfg.emit = e.parse::<EmitFlags>()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Analyze {
            corpus,
            config,
            out,
            only,
            jobs,
            emit,
            timings,
        } => {
            let mut cfg = load_config(config.as_ref(), emit.as_deref())?;
            cfg.record_timings |= timings;
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let mut records = load_corpus_metadata(&corpus)?;
            if !only.is_empty() {
                for id in &only {
                    if !records.iter().any(|r| &r.inventory_id == id) {
                        warn!("--only: no instrument {id:?} in corpus");
                    }
                }
                records.retain(|r| only.contains(&r.inventory_id));
            }
            let report = run_corpus(&records, &cfg, jobs, Some(&out))?;
            for r in &report.instruments {
                info!("{}: {}", r.instrument_id, r.status.label());
            }
            Ok(report.all_succeeded())
        }
        Command::AnalyzeOne {
            sound_board,
            back,
            body,
            size_class,
            id,
            config,
            out,
            emit,
        } => {
            let cfg = load_config(config.as_ref(), emit.as_deref())?;
            let size = match size_class {
                SizeClass::ViolinViola => InstrumentSize::Violin,
                SizeClass::Cello => InstrumentSize::Cello,
            };
            let mut record = InstrumentRecord::new(id, size);
            record.size_class = size_class;
            record.sound_board_path = sound_board;
            record.back_path = back;
            record.body_path = body;
            let report = run_corpus(&[record], &cfg, 1, Some(&out))?;
            Ok(report.all_succeeded())
        }
        Command::SynthCorpus {
            out,
            count,
            back_only,
        } => {
            let path = write_demo_corpus(&out, count, back_only)?;
            println!("{}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}
