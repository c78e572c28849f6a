//! Thin command-line front end over the library pipeline.
//!
//! Exit codes: 0 success, 1 usage/config, 2 input format, 3 external
//! service.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bacnet_explain::pipeline::{
    run_decode, run_eval, run_explain, run_kb_build, stub_chat_client, PipelineConfig,
    PipelineError,
};
use bacnet_explain::summarize::PromptMode;

#[derive(Parser)]
#[command(name = "bacnet-explain", version, about = "Decode BACnet/IP captures and explain them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// BACnet/IP UDP port.
    #[arg(long, value_name = "N")]
    port: Option<u16>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig, PipelineError> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(port) = self.port {
            config.bacnet_port = port;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decode a capture to the canonical packet text on stdout.
    Decode {
        /// Classic pcap file.
        pcap: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Include per-frame src/dst addressing lines.
        #[arg(long)]
        link_header: bool,
    },
    /// Chunk and embed a corpus directory into an index file.
    KbBuild {
        /// Directory of .md/.txt documents.
        corpus_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Index file to write; defaults to the config's index_path.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline and print the packet-file summary.
    Explain {
        /// Classic pcap file.
        pcap: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Pipeline mode: m1 (no context), m2 (retrieval only),
        /// m3 (service KB only), m4 (full).
        #[arg(long, value_name = "MODE")]
        mode: Option<String>,
        /// Context token budget override.
        #[arg(long, value_name = "N")]
        budget: Option<usize>,
        /// Write the summary here instead of stdout; the audit record goes
        /// beside it.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Replace the chat endpoint with the deterministic echo stub.
        #[arg(long)]
        stub_llm: bool,
    },
    /// Aggregate a ratings CSV into the per-method score table.
    Eval {
        /// Ratings CSV with header packet_file_id,method,rater_id,ca,ci.
        ratings: PathBuf,
        /// Emit JSON instead of the plain-text table.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            let mut source = std::error::Error::source(&error);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Decode { pcap, config, link_header } => {
            let mut config = config.load()?;
            config.include_link_header |= link_header;
            let text = run_decode(&pcap, &config)?;
            print!("{text}");
            Ok(())
        }
        Command::KbBuild { corpus_dir, config, out } => {
            let config = config.load()?;
            let out_path = out
                .or_else(|| config.index_path.clone())
                .ok_or_else(|| {
                    PipelineError::Config("kb-build needs --out or index_path".to_string())
                })?;
            let report = run_kb_build(&corpus_dir, &out_path, &config)?;
            println!(
                "indexed {} chunks from {} documents (dimension {}, {} skipped empty) -> {}",
                report.embedded,
                report.documents,
                report.dimension,
                report.skipped_empty,
                report.index_path
            );
            Ok(())
        }
        Command::Explain { pcap, config, mode, budget, out, stub_llm } => {
            let mut config = config.load()?;
            if let Some(mode_text) = mode {
                config.mode = PromptMode::parse(&mode_text).ok_or_else(|| {
                    PipelineError::Config(format!("unknown mode {mode_text:?}"))
                })?;
            }
            if let Some(budget) = budget {
                config.context_budget_tokens = Some(budget);
            }
            let stub = stub_chat_client();
            let outcome = run_explain(
                &pcap,
                &config,
                stub_llm.then_some(&stub as &dyn bacnet_explain::summarize::ChatClient),
            );

            let audit_path = match &out {
                Some(path) => path.with_extension("audit.json"),
                None => {
                    let mut os = pcap.as_os_str().to_owned();
                    os.push(".audit.json");
                    PathBuf::from(os)
                }
            };
            let audit_json =
                serde_json::to_string_pretty(&outcome.audit).expect("audit serializes");
            std::fs::write(&audit_path, audit_json).map_err(|source| PipelineError::Io {
                action: "write audit record",
                path: audit_path.display().to_string(),
                source,
            })?;
            eprintln!("audit record: {}", audit_path.display());

            match (outcome.summary, outcome.error) {
                (Some(summary), None) => {
                    match &out {
                        Some(path) => {
                            std::fs::write(path, &summary).map_err(|source| {
                                PipelineError::Io {
                                    action: "write summary",
                                    path: path.display().to_string(),
                                    source,
                                }
                            })?;
                            eprintln!("summary: {}", path.display());
                        }
                        None => println!("{summary}"),
                    }
                    Ok(())
                }
                (_, Some(error)) => Err(error),
                (None, None) => unreachable!("outcome has either summary or error"),
            }
        }
        Command::Eval { ratings, json } => {
            let (table, scores) = run_eval(&ratings)?;
            if json {
                println!("{}", bacnet_explain::eval::scores_to_json(&scores));
            } else {
                print!("{table}");
            }
            Ok(())
        }
    }
}
