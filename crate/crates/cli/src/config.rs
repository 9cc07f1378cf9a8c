//! Effective run configuration: flags override the config file, which
//! overrides built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use transproj_core::backend::ScrambleMode;
use transproj_core::pipeline::FailurePolicy;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Generic,
    Conll2003,
    Wnut,
    Ontonotes,
    Ncbi,
}

impl Profile {
    /// Whether input tags are read as IOB1 and rewritten to IOB2 by default.
    pub fn normalizes_iob1(self) -> bool {
        matches!(self, Profile::Conll2003)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub enum BackendSpec {
    Identity,
    Dictionary(PathBuf),
    Scramble(ScrambleMode),
    Http(String),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = || {
            format!("unrecognized backend {spec:?} (expected identity, dict:<path>, scramble:<seed>, scramble:reverse, scramble:rotate:<k> or http:<url>)")
        };
        if spec == "identity" {
            return Ok(BackendSpec::Identity);
        }
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(BackendSpec::Http(spec.to_string()));
        }
        let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
        match kind {
            "dict" if !arg.is_empty() => Ok(BackendSpec::Dictionary(PathBuf::from(arg))),
            "http" if !arg.is_empty() => Ok(BackendSpec::Http(arg.to_string())),
            "scramble" => {
                let mode = match arg.split_once(':') {
                    None if arg == "reverse" => ScrambleMode::Reverse,
                    None => ScrambleMode::Shuffle(arg.parse().map_err(|_| bad())?),
                    Some(("rotate", k)) => ScrambleMode::Rotate(k.parse().map_err(|_| bad())?),
                    Some(_) => return Err(bad()),
                };
                Ok(BackendSpec::Scramble(mode))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Identity => f.write_str("identity"),
            BackendSpec::Dictionary(path) => write!(f, "dict:{}", path.display()),
            BackendSpec::Scramble(ScrambleMode::Reverse) => f.write_str("scramble:reverse"),
            BackendSpec::Scramble(ScrambleMode::Rotate(k)) => write!(f, "scramble:rotate:{k}"),
            BackendSpec::Scramble(ScrambleMode::Shuffle(seed)) => write!(f, "scramble:{seed}"),
            BackendSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

impl From<BackendSpec> for String {
    fn from(spec: BackendSpec) -> Self {
        spec.to_string()
    }
}

/// Flags of `translate`. Every flag has a config-file key of the same name
/// with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateArgs {
    /// Flat TOML file whose keys mirror these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input_train: Option<PathBuf>,
    #[arg(long)]
    pub input_dev: Option<PathBuf>,
    #[arg(long)]
    pub input_test: Option<PathBuf>,
    /// Output directory for projected corpora and the exclusion report
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Source language code
    #[arg(long)]
    pub src: Option<String>,
    /// Target language code
    #[arg(long)]
    pub tgt: Option<String>,
    /// identity | dict:<path> | scramble:<seed> | scramble:reverse | scramble:rotate:<k> | http:<url>
    #[arg(long)]
    pub backend: Option<String>,
    /// Append-only translation cache file
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Distinct texts per backend call
    #[arg(long)]
    pub batch: Option<usize>,
    /// Concurrent backend calls
    #[arg(long)]
    pub parallel: Option<usize>,
    /// lenient | strict
    #[arg(long)]
    pub on_backend_error: Option<String>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Rewrite IOB1 input to IOB2 (defaults from --profile)
    #[arg(long)]
    pub iob1: Option<bool>,
    /// Requests per second for the HTTP backend
    #[arg(long)]
    pub rate: Option<f64>,
    /// Write the run report as JSON to this path
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl TranslateArgs {
    fn or(self, file: TranslateArgs) -> TranslateArgs {
        TranslateArgs {
            config: self.config,
            input_train: self.input_train.or(file.input_train),
            input_dev: self.input_dev.or(file.input_dev),
            input_test: self.input_test.or(file.input_test),
            out: self.out.or(file.out),
            src: self.src.or(file.src),
            tgt: self.tgt.or(file.tgt),
            backend: self.backend.or(file.backend),
            cache: self.cache.or(file.cache),
            batch: self.batch.or(file.batch),
            parallel: self.parallel.or(file.parallel),
            on_backend_error: self.on_backend_error.or(file.on_backend_error),
            profile: self.profile.or(file.profile),
            iob1: self.iob1.or(file.iob1),
            rate: self.rate.or(file.rate),
            report: self.report.or(file.report),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub inputs: Vec<(String, PathBuf)>,
    pub out: PathBuf,
    pub source_lang: String,
    pub target_lang: String,
    pub backend: BackendSpec,
    pub cache: Option<PathBuf>,
    pub batch: usize,
    pub parallel: usize,
    pub on_backend_error: FailurePolicy,
    pub profile: Profile,
    pub iob1: bool,
    pub rate: f64,
    pub report: Option<PathBuf>,
}

fn resolve(base: Option<&Path>, path: PathBuf) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    }
}

impl RunConfig {
    pub fn from_args(args: TranslateArgs) -> Result<RunConfig, CliError> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
                let file: TranslateArgs = toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf))
            }
            None => (TranslateArgs::default(), None),
        };
        // paths from the config file are relative to the file itself
        let base = base.as_deref();
        let file = TranslateArgs {
            input_train: file.input_train.map(|p| resolve(base, p)),
            input_dev: file.input_dev.map(|p| resolve(base, p)),
            input_test: file.input_test.map(|p| resolve(base, p)),
            out: file.out.map(|p| resolve(base, p)),
            cache: file.cache.map(|p| resolve(base, p)),
            report: file.report.map(|p| resolve(base, p)),
            backend: file.backend.map(|b| match b.strip_prefix("dict:") {
                Some(path) => format!("dict:{}", resolve(base, PathBuf::from(path)).display()),
                None => b,
            }),
            ..file
        };
        let args = args.or(file);

        let mut inputs = Vec::new();
        for (split, path) in [
            ("train", &args.input_train),
            ("dev", &args.input_dev),
            ("test", &args.input_test),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(CliError::Config(format!(
                        "input file {} does not exist",
                        path.display()
                    )));
                }
                inputs.push((split.to_string(), path.clone()));
            }
        }
        if inputs.is_empty() {
            return Err(CliError::Config(
                "no input given (use --input-train, --input-dev or --input-test)".into(),
            ));
        }
        let out = args.out.ok_or_else(|| CliError::Config("--out is required".into()))?;
        let source_lang = args.src.unwrap_or_default();
        let target_lang = args.tgt.unwrap_or_default();
        if source_lang.is_empty() || target_lang.is_empty() {
            return Err(CliError::Config("--src and --tgt are required".into()));
        }
        if source_lang == target_lang {
            return Err(CliError::Config(format!(
                "source and target language are both {source_lang:?}"
            )));
        }
        let backend: BackendSpec = args
            .backend
            .as_deref()
            .unwrap_or("identity")
            .parse()
            .map_err(CliError::Config)?;
        if let BackendSpec::Dictionary(path) = &backend {
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "dictionary file {} does not exist",
                    path.display()
                )));
            }
        }
        let batch = args.batch.unwrap_or(32);
        let parallel = args.parallel.unwrap_or(4);
        if batch == 0 || parallel == 0 {
            return Err(CliError::Config("--batch and --parallel must be at least 1".into()));
        }
        let on_backend_error = match args.on_backend_error.as_deref() {
            None => FailurePolicy::Lenient,
            Some(s) => s.parse().map_err(CliError::Config)?,
        };
        let rate = args.rate.unwrap_or(5.0);
        if rate.is_nan() || rate <= 0.0 {
            return Err(CliError::Config("--rate must be positive".into()));
        }
        let profile = args.profile.unwrap_or(Profile::Generic);

        Ok(RunConfig {
            inputs,
            out,
            source_lang,
            target_lang,
            backend,
            cache: args.cache,
            batch,
            parallel,
            on_backend_error,
            profile,
            iob1: args.iob1.unwrap_or(profile.normalizes_iob1()),
            rate,
            report: args.report,
        })
    }

    /// `key = value` lines, as echoed in the run summary.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (split, path) in &self.inputs {
            out.push_str(&format!("input_{split} = {}\n", path.display()));
        }
        out.push_str(&format!("out = {}\n", self.out.display()));
        out.push_str(&format!("src = {}\ntgt = {}\n", self.source_lang, self.target_lang));
        out.push_str(&format!("backend = {}\n", self.backend));
        if let Some(cache) = &self.cache {
            out.push_str(&format!("cache = {}\n", cache.display()));
        }
        out.push_str(&format!(
            "batch = {}\nparallel = {}\non_backend_error = {}\n",
            self.batch,
            self.parallel,
            match self.on_backend_error {
                FailurePolicy::Lenient => "lenient",
                FailurePolicy::Strict => "strict",
            }
        ));
        out.push_str(&format!("profile = {:?}\niob1 = {}\n", self.profile, self.iob1).to_lowercase());
        out
    }
}
