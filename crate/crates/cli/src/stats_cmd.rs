use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use transproj_core::stats::{corpus_delta, render_table, split_stats, CorpusDelta, CorpusStats};

use crate::translate::read_split;
use crate::CliError;

const SPLITS: [&str; 3] = ["train", "dev", "test"];

#[derive(Serialize)]
struct StatsFile<'a> {
    corpora: &'a [CorpusStats],
    deltas: Vec<CorpusDelta>,
}

/// The split files of a corpus: `train/dev/test.conll` inside a directory,
/// or the path itself, named after its file stem.
fn split_files(path: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    if path.is_file() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![(stem, path.to_path_buf())]);
    }
    if !path.is_dir() {
        return Err(CliError::Config(format!("corpus {} does not exist", path.display())));
    }
    let files: Vec<_> = SPLITS
        .iter()
        .map(|s| (s.to_string(), path.join(format!("{s}.conll"))))
        .filter(|(_, p)| p.is_file())
        .collect();
    if files.is_empty() {
        return Err(CliError::Config(format!(
            "{} holds none of train.conll, dev.conll, test.conll",
            path.display()
        )));
    }
    Ok(files)
}

fn default_name(path: &Path) -> String {
    let path = if path.is_file() {
        path.parent().unwrap_or(path)
    } else {
        path
    };
    path.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string())
}

pub fn run(corpora: &[PathBuf], names: &[String], json: Option<&Path>) -> Result<(), CliError> {
    if names.len() > corpora.len() {
        return Err(CliError::Config(format!(
            "{} names for {} corpora",
            names.len(),
            corpora.len()
        )));
    }
    let mut stats = Vec::new();
    for (i, path) in corpora.iter().enumerate() {
        let mut splits = Vec::new();
        for (split, file) in split_files(path)? {
            let (parsed, _) = read_split(&file, &split, false)?;
            splits.push(split_stats(&parsed));
        }
        let name = names.get(i).cloned().unwrap_or_else(|| default_name(path));
        stats.push(CorpusStats::new(name, splits));
    }

    let (source, targets) = stats.split_first().expect("clap requires one corpus");
    print!("{}", render_table(source, targets));

    if let Some(path) = json {
        let file = StatsFile {
            corpora: &stats,
            deltas: targets.iter().map(|t| corpus_delta(source, t)).collect(),
        };
        let text = serde_json::to_string_pretty(&file).expect("stats serialize");
        fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
