//! Implementations of the CLI subcommands, kept as library functions so the
//! integration tests can drive them directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use graphmal_core::cfg::{compute_stats, recover_cfg, Recovery};
use graphmal_core::elf::BinaryImage;
use graphmal_core::eval::{confusion, metrics, Class, ConfusionMatrix, MetricsReport};
use graphmal_core::format::{read_dataset, write_dataset};
use graphmal_core::model::{predict, train_with, Hyperparams, TrainReport};
use graphmal_core::prep::{
    balance_and_split, extend_tag_dictionary, filter_call_graph, filter_cfg,
    select_call_graph_nodes, select_cfg_nodes, to_undirected, LabeledGraph, TagDictionary,
};
use rayon::prelude::*;

use crate::checkpoint;
use crate::config::{GraphSource, RunConfig};
use crate::corpus::{compute_sha256, read_manifest, record_path};
use crate::dictfile::write_dictionary;
use crate::error::CliError;
use crate::fsio::{load_binary, resolve_dependencies};

/// Per-sample graph measurements, one table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleStats {
    pub sample: String,
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub syscalls: usize,
}

#[derive(Debug)]
pub struct ExtractOutcome {
    pub stats: Vec<SampleStats>,
    /// (input path, error message) for samples that failed; failures never
    /// abort the batch.
    pub failures: Vec<(PathBuf, String)>,
}

fn analyze_one(path: &Path, config: &RunConfig) -> Result<(BinaryImage, Recovery), CliError> {
    let image = load_binary(path)?;
    let libraries = if image.needed_libraries.is_empty() {
        Vec::new()
    } else {
        resolve_dependencies(&image, &config.lib_paths, config.strict_libs)?
    };
    let recovery = recover_cfg(&image, &libraries).map_err(|source| CliError::Recovery {
        path: path.to_path_buf(),
        source,
    })?;
    for note in &recovery.diagnostics {
        log::debug!("{}: {note}", path.display());
    }
    Ok((image, recovery))
}

fn sample_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run_extraction(
    binaries: &[PathBuf],
    config: &RunConfig,
    out_dir: Option<&Path>,
) -> Result<ExtractOutcome, CliError> {
    config.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }

    let process = |path: &PathBuf| -> Result<SampleStats, (PathBuf, String)> {
        let (_, recovery) = analyze_one(path, config).map_err(|e| (path.clone(), e.to_string()))?;
        if let Some(dir) = out_dir {
            let name = sample_name(path);
            let write = |suffix: &str, contents: String| {
                let target = dir.join(format!("{name}.{suffix}"));
                fs::write(&target, contents).map_err(|e| (target, e.to_string()))
            };
            write("cfg.txt", recovery.cfg.edge_list())?;
            write("cg.txt", recovery.call_graph.edge_list())?;
        }
        let stats = compute_stats(&recovery.cfg);
        Ok(SampleStats {
            sample: sample_name(path),
            nodes: stats.node_count,
            edges: stats.edge_count,
            components: stats.weak_component_count,
            syscalls: stats.syscall_node_count,
        })
    };

    let results: Vec<Result<SampleStats, (PathBuf, String)>> = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| binaries.par_iter().map(process).collect()),
        None => binaries.par_iter().map(process).collect(),
    };

    let mut outcome = ExtractOutcome {
        stats: Vec::new(),
        failures: Vec::new(),
    };
    for result in results {
        match result {
            Ok(row) => outcome.stats.push(row),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    for (path, message) in &outcome.failures {
        log::warn!("skipped {}: {message}", path.display());
    }
    if outcome.stats.is_empty() {
        return Err(CliError::AllSamplesFailed);
    }
    if let Some(dir) = out_dir {
        let mut table = String::from("sample\tnodes\tedges\tcomponents\tsyscalls\n");
        for row in &outcome.stats {
            table.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                row.sample, row.nodes, row.edges, row.components, row.syscalls
            ));
        }
        let target = dir.join("stats.tsv");
        fs::write(&target, table).map_err(|source| CliError::Io {
            path: target,
            source,
        })?;
    }
    Ok(outcome)
}

/// Recovers each binary in parallel, writes `<name>.cfg.txt` and
/// `<name>.cg.txt` edge lists plus a `stats.tsv` table into `out_dir`.
pub fn cmd_extract(
    binaries: &[PathBuf],
    config: &RunConfig,
    out_dir: &Path,
) -> Result<ExtractOutcome, CliError> {
    run_extraction(binaries, config, Some(out_dir))
}

/// Like `extract` but only computes the statistics table.
pub fn cmd_stats(binaries: &[PathBuf], config: &RunConfig) -> Result<ExtractOutcome, CliError> {
    run_extraction(binaries, config, None)
}

#[derive(Debug)]
pub struct PrepareOutcome {
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    pub dict_path: PathBuf,
    pub train_count: usize,
    pub test_count: usize,
    pub dict_entries: usize,
}

/// Builds the global tag dictionary over the manifest in ascending sample-id
/// order, serializes one graph per sample, balances and splits the corpus,
/// and writes `train.txt`, `test.txt`, and `tags.tsv`.
pub fn cmd_prepare(
    manifest_path: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<PrepareOutcome, CliError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut manifest = read_manifest(manifest_path)?;
    manifest.records.sort_by(|a, b| a.id.cmp(&b.id));

    let mut dict = TagDictionary::new();
    let mut graphs: BTreeMap<String, LabeledGraph> = BTreeMap::new();
    for record in &manifest.records {
        let sample_err = |message: String| CliError::Sample {
            id: record.id.clone(),
            message,
        };
        let path = record_path(manifest_path, record);
        if config.verify_hashes {
            let digest = compute_sha256(&path)?;
            if digest != record.sha256 {
                return Err(sample_err(format!(
                    "digest mismatch: manifest {} vs file {digest}",
                    record.sha256
                )));
            }
        }
        let (image, recovery) =
            analyze_one(&path, config).map_err(|e| sample_err(e.to_string()))?;

        let blocks: Vec<_> = recovery.cfg.nodes.values().cloned().collect();
        extend_tag_dictionary(&blocks, &mut dict);

        // Nodes outside the main image (libraries, stubs) are excluded
        // unless explicitly requested, so membership of library code never
        // becomes a classification shortcut.
        let ranges: Vec<(u64, u64)> = image
            .sections
            .iter()
            .map(|s| (s.vaddr, s.vaddr + s.size))
            .collect();
        let keep = |addr: u64| {
            config.include_library_nodes || ranges.iter().any(|&(lo, hi)| addr >= lo && addr < hi)
        };
        let selected = match config.graph_source {
            GraphSource::CallGraph => {
                let cg = filter_call_graph(&recovery.call_graph, keep);
                select_call_graph_nodes(&recovery.cfg, &cg, &dict)
            }
            GraphSource::Cfg => {
                let cfg = filter_cfg(&recovery.cfg, keep);
                select_cfg_nodes(&cfg, &dict)
            }
        }
        .map_err(|e| sample_err(e.to_string()))?;
        let mut graph = to_undirected(&selected);
        graph.label = record.label;
        graphs.insert(record.id.clone(), graph);
    }

    let hp = &config.hyperparams;
    let (train_manifest, test_manifest) = balance_and_split(&manifest, hp.seed, hp.train_fraction)?;
    let collect = |m: &graphmal_core::prep::DatasetManifest| -> Vec<LabeledGraph> {
        m.records.iter().map(|r| graphs[&r.id].clone()).collect()
    };
    let train_graphs = collect(&train_manifest);
    let test_graphs = collect(&test_manifest);

    let write = |name: &str, graphs: &[LabeledGraph]| -> Result<PathBuf, CliError> {
        let path = out_dir.join(name);
        let text = write_dataset(graphs).map_err(|source| CliError::Dataset {
            path: path.clone(),
            source,
        })?;
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    };
    let train_path = write("train.txt", &train_graphs)?;
    let test_path = write("test.txt", &test_graphs)?;
    let dict_path = out_dir.join("tags.tsv");
    write_dictionary(&dict, &dict_path)?;

    Ok(PrepareOutcome {
        train_path,
        test_path,
        dict_path,
        train_count: train_graphs.len(),
        test_count: test_graphs.len(),
        dict_entries: dict.len(),
    })
}

#[derive(Debug)]
pub struct TrainSummary {
    pub resolved: Hyperparams,
    pub report: TrainReport,
    pub checkpoint_path: PathBuf,
    pub report_path: PathBuf,
}

fn read_graphs(path: &Path) -> Result<Vec<LabeledGraph>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(&text).map_err(|source| CliError::Dataset {
        path: path.to_path_buf(),
        source,
    })
}

/// Trains on a dataset file and writes the checkpoint plus a per-epoch
/// report (`epoch\tloss\taccuracy` lines).
pub fn cmd_train(
    data: &Path,
    checkpoint_path: &Path,
    report_path: Option<&Path>,
    config: &RunConfig,
) -> Result<TrainSummary, CliError> {
    let graphs = read_graphs(data)?;
    let outcome = train_with(&graphs, &config.hyperparams, config.optimizer)?;

    checkpoint::save(&outcome.params, &outcome.resolved, checkpoint_path)?;
    let report_path = report_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.tsv", checkpoint_path.display())));
    let mut text = String::from("epoch\tloss\taccuracy\n");
    for (i, (loss, accuracy)) in outcome
        .report
        .epoch_loss
        .iter()
        .zip(&outcome.report.epoch_accuracy)
        .enumerate()
    {
        text.push_str(&format!("{}\t{loss:.12}\t{accuracy:.6}\n", i + 1));
    }
    text.push_str(&format!(
        "# wall_time_secs={:.3}\n",
        outcome.report.wall_time_secs
    ));
    fs::write(&report_path, text).map_err(|source| CliError::Io {
        path: report_path.clone(),
        source,
    })?;

    Ok(TrainSummary {
        resolved: outcome.resolved,
        report: outcome.report,
        checkpoint_path: checkpoint_path.to_path_buf(),
        report_path,
    })
}

fn check_compatible(graphs: &[LabeledGraph], hp: &Hyperparams) -> Result<(), CliError> {
    let max_tag = graphs
        .iter()
        .flat_map(|g| g.node_tags.iter().copied())
        .max()
        .unwrap_or(0) as usize;
    if max_tag > hp.feat_dim {
        return Err(CliError::Mismatch(format!(
            "dataset max tag {max_tag} exceeds checkpoint feat_dim {}",
            hp.feat_dim
        )));
    }
    if let Some(bad) = graphs.iter().find(|g| g.label as usize >= hp.num_class) {
        return Err(CliError::Mismatch(format!(
            "dataset label {} exceeds checkpoint num_class {}",
            bad.label, hp.num_class
        )));
    }
    Ok(())
}

/// Evaluates a checkpoint against a labeled dataset file.
pub fn cmd_evaluate(
    checkpoint_path: &Path,
    data: &Path,
) -> Result<(ConfusionMatrix, MetricsReport), CliError> {
    let (params, hp) = checkpoint::load(checkpoint_path)?;
    if hp.num_class != 2 {
        return Err(CliError::Mismatch(format!(
            "binary evaluation needs a 2-class checkpoint, found {}",
            hp.num_class
        )));
    }
    let graphs = read_graphs(data)?;
    check_compatible(&graphs, &hp)?;

    let mut predictions = Vec::with_capacity(graphs.len());
    let mut truth = Vec::with_capacity(graphs.len());
    for graph in &graphs {
        let (class, _) = predict(graph, &params, &hp)?;
        predictions.push(Class::from_label(class as u32)?);
        truth.push(Class::from_label(graph.label)?);
    }
    let cm = confusion(&predictions, &truth)?;
    let report = metrics(&cm)?;
    Ok((cm, report))
}

/// One prediction row: graph index, class index, probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub class: usize,
    pub probabilities: Vec<f64>,
}

/// Classifies every graph in a dataset file. Unknown tags are mapped to the
/// reserved unknown bucket rather than rejected.
pub fn cmd_predict(checkpoint_path: &Path, data: &Path) -> Result<Vec<Prediction>, CliError> {
    let (params, hp) = checkpoint::load(checkpoint_path)?;
    let graphs = read_graphs(data)?;
    let mut rows = Vec::with_capacity(graphs.len());
    for (index, graph) in graphs.iter().enumerate() {
        let (class, probabilities) = predict(graph, &params, &hp)?;
        rows.push(Prediction {
            index,
            class,
            probabilities,
        });
    }
    Ok(rows)
}
