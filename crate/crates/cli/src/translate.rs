use std::fs;
use std::path::Path;
use std::sync::Arc;

use log::warn;
use serde::Serialize;
use transproj_core::backend::{
    Backend, CachedBackend, DictionaryBackend, HttpBackend, HttpConfig, IdentityBackend, ScramblerBackend,
    TranslationCache,
};
use transproj_core::conll::{normalize_split_iob1_to_iob2, parse_conll_with_info, serialize_conll, ColumnPolicy};
use transproj_core::error::{CacheError, PipelineError};
use transproj_core::pipeline::{exclusion_records, project_split, ExclusionRecord, Languages, PipelineConfig};
use transproj_core::{DatasetSplit, RunReport, SplitName};

use crate::config::{BackendSpec, RunConfig, TranslateArgs};
use crate::CliError;

#[derive(Serialize)]
struct ReportFile<'a> {
    config: &'a RunConfig,
    report: &'a RunReport,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Reads one input split; parse failures name the file and line.
pub fn read_split(path: &Path, name: &str, iob1: bool) -> Result<(DatasetSplit, usize), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let (split, info) = parse_conll_with_info(&text, SplitName::from(name), ColumnPolicy::default())
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let split = if iob1 {
        normalize_split_iob1_to_iob2(&split)
    } else {
        split
    };
    Ok((split, info.dropped_empty))
}

fn build_backend(config: &RunConfig) -> Result<Box<dyn Backend>, CliError> {
    Ok(match &config.backend {
        BackendSpec::Identity => Box::new(IdentityBackend),
        BackendSpec::Dictionary(path) => Box::new(
            DictionaryBackend::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        ),
        BackendSpec::Scramble(mode) => Box::new(ScramblerBackend::new(*mode)),
        BackendSpec::Http(url) => {
            let mut http = HttpConfig::new(url.clone()).with_env_api_key();
            http.max_texts_per_request = config.batch;
            http.max_in_flight = config.parallel;
            http.requests_per_second = Some(config.rate);
            Box::new(HttpBackend::new(http))
        }
    })
}

fn open_cache(config: &RunConfig) -> Result<TranslationCache, CliError> {
    let Some(path) = &config.cache else {
        return Ok(TranslationCache::in_memory());
    };
    match TranslationCache::open(path) {
        Ok((cache, problems)) => {
            for problem in problems {
                warn!("{}: skipping {problem}", path.display());
            }
            Ok(cache)
        }
        Err(e @ CacheError::Locked { .. }) => Err(CliError::Io(e.to_string())),
        Err(e) => Err(io_error(path, e)),
    }
}

pub fn run(args: TranslateArgs) -> Result<(), CliError> {
    let config = RunConfig::from_args(args)?;

    let mut inputs = Vec::new();
    for (name, path) in &config.inputs {
        inputs.push(read_split(path, name, config.iob1)?);
    }

    let cache = Arc::new(open_cache(&config)?);
    let backend = CachedBackend::new(build_backend(&config)?, cache);
    let pipeline = PipelineConfig {
        languages: Languages::new(&config.source_lang, &config.target_lang),
        batch_size: config.batch,
        parallelism: config.parallel,
        failure_policy: config.on_backend_error,
    };

    // project everything before writing anything, so an aborted run leaves no partial output
    let mut report = RunReport::default();
    let mut projected = Vec::new();
    let mut exclusions: Vec<ExclusionRecord> = Vec::new();
    for (split, dropped_empty) in &inputs {
        let (target, outcomes, mut split_report) = project_split(split, &backend, &pipeline).map_err(|e| match e {
            PipelineError::AbortedRun { .. } => CliError::Aborted(format!("{} split: {e}", split.name)),
            other => CliError::Config(other.to_string()),
        })?;
        split_report.splits[0].dropped_empty = *dropped_empty;
        exclusions.extend(exclusion_records(split.name.as_str(), &outcomes));
        report.merge(split_report);
        projected.push(target);
    }

    fs::create_dir_all(&config.out).map_err(|e| io_error(&config.out, e))?;
    for split in &projected {
        let path = config.out.join(format!("{}.conll", split.name));
        fs::write(&path, serialize_conll(split)).map_err(|e| io_error(&path, e))?;
    }
    let mut lines = String::new();
    for record in &exclusions {
        lines.push_str(&serde_json::to_string(record).expect("records serialize"));
        lines.push('\n');
    }
    let path = config.out.join("exclusions.jsonl");
    fs::write(&path, lines).map_err(|e| io_error(&path, e))?;

    if let Some(path) = &config.report {
        let json = serde_json::to_string_pretty(&ReportFile {
            config: &config,
            report: &report,
        })
        .expect("report serializes");
        fs::write(path, json + "\n").map_err(|e| io_error(path, e))?;
    }

    print!("{}", config.describe());
    println!();
    print!("{}", report.render());
    Ok(())
}
