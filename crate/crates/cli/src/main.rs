use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sigsem_core::data::{DataSet, DATA_DIR_ENV};
use sigsem_core::harness::{compute_metrics, parse_corpus, randomize_order, render_table, LogWriter, SessionLog, Task};
use sigsem_core::pipeline::DecodeResult;
use sigsem_core::{Decoder, Severity};

/// Usage and parse failures (EX_USAGE).
const EXIT_PARSE: u8 = 64;
/// Invalid corpus or log data (EX_DATAERR).
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "sigsem", version, about = "Semantic decoding and risk tiering for wallet signing requests")]
struct Cli {
    /// Knowledge-base file replacing the bundled one.
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    /// Directory holding selectors.json, kb.json, templates.json, corpus.json.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a signing request; exit status 0/1/2 for Low/Medium/High.
    Decode {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Unix time used for relative deadlines (default: now).
        #[arg(long)]
        now: Option<i64>,
    },
    /// Study corpus tools.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Run the HTTP gateway on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = 8787)]
        port: u16,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// NDJSON decision log (appended; created if missing).
        #[arg(long, default_value = "decisions.ndjson")]
        log: PathBuf,
    },
    /// Summarize an NDJSON decision log.
    Metrics {
        log: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Check the corpus and that every task decodes to its ground-truth tier.
    Validate {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Print the task order for a seed.
    Order {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn tier_exit(tier: Severity) -> u8 {
    match tier {
        Severity::Low => 0,
        Severity::Medium => 1,
        Severity::High => 2,
    }
}

fn dataset(cli: &Cli) -> Result<DataSet> {
    let mut set = match &cli.data_dir {
        Some(dir) => DataSet::from_dir(dir).with_context(|| format!("reading {}", dir.display()))?,
        None => DataSet::bundled(),
    };
    if let Some(kb) = &cli.kb {
        set.kb = std::fs::read_to_string(kb).with_context(|| format!("reading {}", kb.display()))?;
    }
    Ok(set)
}

fn load_corpus(set: &DataSet, decoder: &Decoder, path: Option<&Path>) -> Result<Vec<Task>> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => set.corpus.clone(),
    };
    Ok(parse_corpus(&text, decoder.knowledge_base().contracts())?)
}

fn render_text(out: &DecodeResult) -> String {
    let a = &out.assessment;
    let mut s = format!(
        "{:?}/{} risk — {} ({})\n\n{}\n\n",
        a.color(),
        a.tier(),
        out.frame.action,
        out.request.rpc_method,
        out.explanation.summary
    );
    let width = out.explanation.detail_rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    for row in &out.explanation.detail_rows {
        let mark = if row.highlight { "!" } else { " " };
        s.push_str(&format!("{mark} {:<width$}  {}\n", row.label, row.value));
    }
    if !a.signals().is_empty() {
        s.push_str("\nSignals:\n");
        for sig in a.signals() {
            s.push_str(&format!("  [{}] {}: {}\n", sig.severity, sig.code, sig.rationale));
        }
    }
    if !out.validation.issues.is_empty() {
        s.push_str("\nValidation:\n");
        for i in &out.validation.issues {
            s.push_str(&format!("  {}: {}\n", i.path, i.message));
        }
    }
    s
}

fn run(cli: Cli) -> Result<u8> {
    let set = dataset(&cli)?;
    let decoder = Decoder::from_data(&set)?;
    match cli.command {
        Command::Decode { ref file, format, now } => {
            let raw = match std::fs::read_to_string(file) {
                Ok(raw) => raw,
                Err(e) => {
                    eprintln!("sigsem: {}: {e}", file.display());
                    return Ok(EXIT_PARSE);
                }
            };
            let now = now.unwrap_or_else(|| chrono::Utc::now().timestamp());
            match decoder.decode_json(&raw, now) {
                Ok(out) => {
                    match format {
                        Format::Json => println!("{}", serde_json::to_string_pretty(&out)?),
                        Format::Text => print!("{}", render_text(&out)),
                    }
                    Ok(tier_exit(out.assessment.tier()))
                }
                Err(e) => {
                    match e.path() {
                        Some(p) => eprintln!("sigsem: {} at {p}: {e}", e.code()),
                        None => eprintln!("sigsem: {}: {e}", e.code()),
                    }
                    Ok(EXIT_PARSE)
                }
            }
        }
        Command::Corpus { ref command } => match command {
            CorpusCommand::Validate { corpus } => {
                let tasks = match load_corpus(&set, &decoder, corpus.as_deref()) {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("sigsem: {e}");
                        return Ok(EXIT_DATA);
                    }
                };
                let mut ok = true;
                for t in &tasks {
                    let tier = decoder.decode(&t.request, 0)?.assessment.tier();
                    let verdict = if tier == t.ground_truth_tier { "ok" } else { "MISMATCH" };
                    ok &= tier == t.ground_truth_tier;
                    println!("{}  {:<21} expected {:<6} decoded {:<6} {verdict}", t.id, t.request.method().rpc_name(), t.ground_truth_tier, tier);
                }
                Ok(if ok { 0 } else { EXIT_DATA })
            }
            CorpusCommand::Order { seed, corpus } => {
                let tasks = load_corpus(&set, &decoder, corpus.as_deref())?;
                println!("{}", randomize_order(&tasks, *seed).join(" "));
                Ok(0)
            }
        },
        Command::Serve { port, ref corpus, ref log } => {
            let tasks = load_corpus(&set, &decoder, corpus.as_deref())?;
            let writer = LogWriter::open(log).with_context(|| format!("opening {}", log.display()))?;
            let state = Arc::new(sigsem_gateway::AppState::new(decoder, tasks, writer));
            tokio::runtime::Runtime::new()?.block_on(sigsem_gateway::serve(state, port))?;
            Ok(0)
        }
        Command::Metrics { ref log, ref corpus, format } => {
            let tasks = load_corpus(&set, &decoder, corpus.as_deref())?;
            let log = match SessionLog::read(log) {
                Ok(l) => l,
                Err(e) => {
                    eprintln!("sigsem: {e}");
                    return Ok(EXIT_DATA);
                }
            };
            let report = match compute_metrics(&log, &tasks) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("sigsem: {e}");
                    return Ok(EXIT_DATA);
                }
            };
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Text => print!("{}", render_table(&report)),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sigsem: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
