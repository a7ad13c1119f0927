//! `graphmal`: recover control-flow and call graphs from 32-bit ARM ELF
//! binaries, tag and serialize them, and train, evaluate, or apply a
//! mean-field graph classifier.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphmal::commands::{
    cmd_evaluate, cmd_extract, cmd_predict, cmd_prepare, cmd_stats, cmd_train, ExtractOutcome,
};
use graphmal::config::{Overrides, RunConfig};
use graphmal::report;

#[derive(Parser)]
#[command(
    name = "graphmal",
    version,
    about = "Graph-based malware classification for 32-bit ARM ELF binaries"
)]
struct Cli {
    /// Line-oriented `key = value` configuration file; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Log verbosity on standard error (error, warn, info, debug, trace)
    #[arg(long, global = true, value_name = "LEVEL")]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ExtractionFlags {
    /// Directory searched for DT_NEEDED libraries (repeatable)
    #[arg(long = "lib-path", value_name = "DIR")]
    lib_path: Vec<PathBuf>,

    /// Fail a sample when one of its libraries cannot be found
    #[arg(long)]
    strict_libs: bool,

    /// Worker threads for batch extraction (default: all cores)
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Args, Default)]
struct ModelFlags {
    /// Message-passing scheme (mean_field; loopy_bp is not implemented)
    #[arg(long, value_name = "NAME")]
    gm: Option<String>,

    /// Execution hint (cpu or gpu); a single CPU backend exists
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,

    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,

    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Node feature dimension; 0 infers the maximum tag from the data
    #[arg(long, value_name = "N")]
    feat_dim: Option<usize>,

    /// Number of classes; 0 infers the label universe from the data
    #[arg(long, value_name = "N")]
    num_class: Option<usize>,

    #[arg(long, value_name = "N")]
    num_epochs: Option<usize>,

    #[arg(long, value_name = "N")]
    latent_dim: Option<usize>,

    #[arg(long, value_name = "N")]
    out_dim: Option<usize>,

    #[arg(long, value_name = "N")]
    hidden: Option<usize>,

    #[arg(long, value_name = "N")]
    max_lv: Option<usize>,

    #[arg(long, value_name = "RATE")]
    learning_rate: Option<f64>,

    #[arg(long, value_name = "FRACTION")]
    train_fraction: Option<f64>,

    /// Parameter update rule: adam (default) or sgd
    #[arg(long, value_name = "NAME")]
    optimizer: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Recover graphs from binaries and write edge lists plus statistics
    Extract {
        /// Input ELF binaries
        #[arg(required = true, value_name = "BINARY")]
        binaries: Vec<PathBuf>,

        #[arg(long, value_name = "DIR")]
        output_dir: PathBuf,

        #[command(flatten)]
        extraction: ExtractionFlags,
    },
    /// Print per-sample graph statistics without writing graph files
    Stats {
        #[arg(required = true, value_name = "BINARY")]
        binaries: Vec<PathBuf>,

        #[command(flatten)]
        extraction: ExtractionFlags,
    },
    /// Tag, serialize, balance, and split a corpus into train/test datasets
    Prepare {
        /// Manifest file: `<id>\t<path>\t<label>\t<sha256>` per line
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,

        #[arg(long, value_name = "DIR")]
        output_dir: PathBuf,

        /// Serialize call graphs (default) or full control-flow graphs
        #[arg(long, value_name = "SOURCE")]
        graph_source: Option<String>,

        /// Keep library and stub functions in the serialized graphs
        #[arg(long)]
        include_library_nodes: bool,

        /// Check each sample's SHA-256 against the manifest before use
        #[arg(long)]
        verify_hashes: bool,

        #[arg(long, value_name = "N")]
        seed: Option<u64>,

        #[arg(long, value_name = "FRACTION")]
        train_fraction: Option<f64>,

        #[command(flatten)]
        extraction: ExtractionFlags,
    },
    /// Train a model on a dataset file and write a checkpoint
    Train {
        /// Dataset text file produced by `prepare`
        #[arg(long, value_name = "FILE")]
        data: PathBuf,

        /// Checkpoint output path
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,

        /// Per-epoch report path (default: `<checkpoint>.report.tsv`)
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,

        #[command(flatten)]
        model: ModelFlags,
    },
    /// Evaluate a checkpoint against a labeled dataset file
    Evaluate {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,

        #[arg(long, value_name = "FILE")]
        data: PathBuf,
    },
    /// Classify graphs from a dataset file with a trained checkpoint
    Predict {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,

        #[arg(long, value_name = "FILE")]
        data: PathBuf,
    },
}

impl ExtractionFlags {
    fn into_overrides(self) -> Overrides {
        Overrides {
            lib_path: self.lib_path,
            strict_libs: self.strict_libs.then_some(true),
            jobs: self.jobs,
            ..Overrides::default()
        }
    }
}

impl ModelFlags {
    fn into_overrides(self) -> Overrides {
        Overrides {
            gm: self.gm,
            mode: self.mode,
            batch_size: self.batch_size,
            seed: self.seed,
            feat_dim: self.feat_dim,
            num_class: self.num_class,
            num_epochs: self.num_epochs,
            latent_dim: self.latent_dim,
            out_dim: self.out_dim,
            hidden: self.hidden,
            max_lv: self.max_lv,
            learning_rate: self.learning_rate,
            train_fraction: self.train_fraction,
            optimizer: self.optimizer,
            ..Overrides::default()
        }
    }
}

fn print_stats_table(outcome: &ExtractOutcome) {
    println!(
        "{:<32} {:>8} {:>8} {:>11} {:>9}",
        "sample", "nodes", "edges", "components", "syscalls"
    );
    for row in &outcome.stats {
        println!(
            "{:<32} {:>8} {:>8} {:>11} {:>9}",
            row.sample, row.nodes, row.edges, row.components, row.syscalls
        );
    }
}

fn run(cli: Cli) -> Result<(), graphmal::CliError> {
    let file_overrides = cli
        .config
        .as_deref()
        .map(Overrides::from_file)
        .transpose()?;

    let build_config = |mut flags: Overrides| -> Result<RunConfig, graphmal::CliError> {
        flags.log_level = cli.log_level.clone().or(flags.log_level);
        let config = RunConfig::resolve(file_overrides.clone(), flags)?;
        env_logger::Builder::new()
            .parse_filters(&config.log_level)
            .try_init()
            .ok();
        Ok(config)
    };

    match cli.command {
        Command::Extract {
            binaries,
            output_dir,
            extraction,
        } => {
            let config = build_config(extraction.into_overrides())?;
            let outcome = cmd_extract(&binaries, &config, &output_dir)?;
            print_stats_table(&outcome);
            eprintln!(
                "extracted {} of {} samples into {}",
                outcome.stats.len(),
                outcome.stats.len() + outcome.failures.len(),
                output_dir.display()
            );
            Ok(())
        }
        Command::Stats {
            binaries,
            extraction,
        } => {
            let config = build_config(extraction.into_overrides())?;
            let outcome = cmd_stats(&binaries, &config)?;
            print_stats_table(&outcome);
            Ok(())
        }
        Command::Prepare {
            manifest,
            output_dir,
            graph_source,
            include_library_nodes,
            verify_hashes,
            seed,
            train_fraction,
            extraction,
        } => {
            let mut flags = extraction.into_overrides();
            flags.graph_source = graph_source;
            flags.include_library_nodes = include_library_nodes.then_some(true);
            flags.verify_hashes = verify_hashes.then_some(true);
            flags.seed = seed;
            flags.train_fraction = train_fraction;
            let config = build_config(flags)?;
            let outcome = cmd_prepare(&manifest, &config, &output_dir)?;
            println!(
                "train: {} graphs -> {}",
                outcome.train_count,
                outcome.train_path.display()
            );
            println!(
                "test:  {} graphs -> {}",
                outcome.test_count,
                outcome.test_path.display()
            );
            println!(
                "tags:  {} entries -> {}",
                outcome.dict_entries,
                outcome.dict_path.display()
            );
            Ok(())
        }
        Command::Train {
            data,
            checkpoint,
            report,
            model,
        } => {
            let config = build_config(model.into_overrides())?;
            let summary = cmd_train(&data, &checkpoint, report.as_deref(), &config)?;
            let epochs = summary.report.epoch_loss.len();
            if let (Some(loss), Some(accuracy)) = (
                summary.report.epoch_loss.last(),
                summary.report.epoch_accuracy.last(),
            ) {
                println!(
                    "trained {epochs} epochs (feat_dim {}, num_class {}): \
                     final loss {loss:.6}, training accuracy {accuracy:.4}",
                    summary.resolved.feat_dim, summary.resolved.num_class
                );
            } else {
                println!("trained 0 epochs: checkpoint holds the initialization");
            }
            println!("checkpoint -> {}", summary.checkpoint_path.display());
            println!("report     -> {}", summary.report_path.display());
            Ok(())
        }
        Command::Evaluate { checkpoint, data } => {
            build_config(Overrides::default())?;
            let (cm, metrics) = cmd_evaluate(&checkpoint, &data)?;
            println!("{}", report::render_text(&cm, &metrics));
            println!("{}", report::render_kv(&cm, &metrics));
            Ok(())
        }
        Command::Predict { checkpoint, data } => {
            build_config(Overrides::default())?;
            for row in cmd_predict(&checkpoint, &data)? {
                let name = match row.class {
                    0 => "malware",
                    1 => "benign",
                    _ => "class",
                };
                let probs: Vec<String> = row
                    .probabilities
                    .iter()
                    .map(|p| format!("{p:.6}"))
                    .collect();
                println!(
                    "graph {}: {} {} p=[{}]",
                    row.index,
                    row.class,
                    name,
                    probs.join(", ")
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
