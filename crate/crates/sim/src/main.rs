use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use assocpin_core::attack::{sessions_to_break, BreakConfig};
use assocpin_core::credential::pin_tokens;
use assocpin_core::transcript::SessionTranscript;
use assocpin_sim::{analyze, board_spec, record_session, write_outcomes_csv, Error};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(version, about = "Observer attacks on two-layer torus PIN entry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sessions an observer needs before one credential pair remains.
    Break {
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Visible cursor symbols per step (default: all).
        #[arg(long)]
        l: Option<usize>,
        /// Give up on a trial after this many sessions.
        #[arg(long, default_value_t = 1000)]
        sessions: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV of per-trial results; the summary goes next to it as .json.
        /// Without it only the summary is printed.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write the transcript of a correctly entered session.
    Record {
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
        /// ID password, one character per symbol or comma separated.
        #[arg(long)]
        id: String,
        #[arg(long)]
        ui: String,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Candidate counts left after the given transcripts.
    Analyze { transcripts: Vec<PathBuf> },
}

fn symbols(text: &str) -> Vec<String> {
    if text.contains(',') {
        text.split(',').map(|s| s.trim().to_owned()).collect()
    } else {
        pin_tokens(text)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Break {
            rows,
            cols,
            k,
            l,
            sessions,
            trials,
            seed,
            output,
        } => {
            let mut cfg = BreakConfig::new(Arc::new(board_spec(rows, cols)?), k, trials, seed);
            cfg.display_l = l;
            cfg.max_sessions = sessions;
            let report = sessions_to_break(&cfg)?;
            let summary = serde_json::to_string_pretty(&report.summary)?;
            match output {
                Some(path) => {
                    write_outcomes_csv(BufWriter::new(File::create(&path)?), &report)?;
                    std::fs::write(path.with_extension("json"), summary + "\n")?;
                }
                None => println!("{summary}"),
            }
        }
        Command::Record {
            rows,
            cols,
            id,
            ui,
            l,
            seed,
            output,
        } => {
            let spec = Arc::new(board_spec(rows, cols)?);
            let t = record_session(spec, &symbols(&id), &symbols(&ui), l, seed)?;
            let json = t.to_json();
            match output {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => writeln!(io::stdout(), "{json}")?,
            }
        }
        Command::Analyze { transcripts } => {
            let ts = transcripts
                .iter()
                .map(|p| Ok(SessionTranscript::from_json(&std::fs::read_to_string(p)?)?))
                .collect::<Result<Vec<_>, Error>>()?;
            println!("{}", serde_json::to_string_pretty(&analyze(&ts)?)?);
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
