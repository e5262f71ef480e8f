//! The `semlint` run: input discovery, cached pass one, pass two, report.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;

use crate::builtins::{BuiltinConfig, BuiltinRegistry, HttpProbe, UreqProbe};
use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::digest::Digest;
use crate::dsl::{parse_rule_sources, RuleSet};
use crate::engine::cache::{read_pass_one, write_pass_one};
use crate::engine::{evaluate_bytes, pass_two, PassOneResult};
use crate::report::{emit_report, Format, Message};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rule_files: Vec<PathBuf>,
    /// Files, directories (searched for `*.xml`) or glob patterns.
    pub inputs: Vec<String>,
    pub cache_dir: PathBuf,
    pub format: Format,
    pub offline: bool,
    pub url_timeout_secs: f64,
    pub max_probes: usize,
    pub normalize_names: bool,
    pub fail_on_warnings: bool,
    pub jobs: usize,
    /// Write the report here instead of returning it for stdout.
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(
        rule_files: Vec<PathBuf>,
        inputs: Vec<String>,
        cache_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            rule_files,
            inputs,
            cache_dir: cache_dir.into(),
            format: Format::Text,
            offline: false,
            url_timeout_secs: 10.0,
            max_probes: 8,
            normalize_names: false,
            fail_on_warnings: false,
            jobs: 1,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkState {
    Cached,
    Stale,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub inputs: usize,
    /// Pass-one evaluations actually executed.
    pub evaluated: usize,
    /// Pass-one results loaded from the cache.
    pub cached: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// The rendered report (also written to `output` when set).
    pub report: String,
    pub messages: Vec<Message>,
    pub diagnostics: Vec<Diagnostic>,
    pub stats: RunStats,
}

fn io_diag(path: &Path, e: &io::Error) -> Diagnostic {
    Diagnostic::new(DiagnosticCode::Io, format!("{}: {e}", path.display()))
}

/// Reads and parses the rule files, in order, as one rule set.
pub fn load_rules(paths: &[PathBuf]) -> Result<RuleSet, Diagnostic> {
    let texts = read_rule_texts(paths)?;
    parse_rule_sources(texts.iter().map(|(n, t)| (n.as_str(), t.as_str())))
        .map_err(|e| Diagnostic::new(DiagnosticCode::RuleSyntax, e.detail()).at(e.pos().clone()))
}

fn read_rule_texts(paths: &[PathBuf]) -> Result<Vec<(String, String)>, Diagnostic> {
    paths
        .iter()
        .map(|p| {
            fs::read_to_string(p)
                .map(|t| (p.display().to_string(), t))
                .map_err(|e| io_diag(p, &e))
        })
        .collect()
}

/// Expands the input arguments into a sorted, duplicate-free file list.
pub fn discover_inputs(inputs: &[String]) -> Result<Vec<PathBuf>, Diagnostic> {
    let mut out = BTreeSet::new();
    for arg in inputs {
        let path = Path::new(arg);
        if path.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry
                    .map_err(|e| Diagnostic::new(DiagnosticCode::Io, format!("{arg}: {e}")))?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|x| x == "xml")
                {
                    out.insert(entry.into_path());
                }
            }
        } else if path.exists() {
            out.insert(path.to_path_buf());
        } else if arg.contains(['*', '?', '[']) {
            let matches = glob::glob(arg)
                .map_err(|e| Diagnostic::new(DiagnosticCode::Io, format!("{arg}: {e}")))?;
            let before = out.len();
            for m in matches {
                let p = m.map_err(|e| io_diag(e.path(), e.error()))?;
                if p.is_file() {
                    out.insert(p);
                }
            }
            if out.len() == before {
                log::warn!("{arg}: pattern matched no files");
            }
        } else {
            return Err(Diagnostic::new(
                DiagnosticCode::Io,
                format!("{arg}: no such file or directory"),
            ));
        }
    }
    Ok(out.into_iter().collect())
}

fn cache_path(cache_dir: &Path, file: &str) -> PathBuf {
    cache_dir.join(format!("{}.p1", Digest::of(file.as_bytes())))
}

struct Planned {
    name: String,
    bytes: Vec<u8>,
    cached: Option<PassOneResult>,
}

fn plan(files: &[PathBuf], cache_dir: &Path, rules: Digest) -> Result<Vec<Planned>, Diagnostic> {
    files
        .iter()
        .map(|path| {
            let bytes = fs::read(path).map_err(|e| io_diag(path, &e))?;
            let name = path.display().to_string();
            let input = Digest::of(&bytes);
            let cached = fs::read_to_string(cache_path(cache_dir, &name))
                .ok()
                .and_then(|text| match read_pass_one(&text) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        log::warn!("{name}: ignoring unreadable cache entry ({e})");
                        None
                    }
                })
                .filter(|r| {
                    r.input_digest == input && r.rules_digest == rules && r.source_file == name
                });
            Ok(Planned {
                name,
                bytes,
                cached,
            })
        })
        .collect()
}

/// Which inputs can reuse their cached pass-one result.
pub fn plan_work(cfg: &RunConfig) -> Result<Vec<(PathBuf, WorkState)>, Diagnostic> {
    let texts = read_rule_texts(&cfg.rule_files)?;
    let rules = Digest::of_parts(texts.iter().map(|(_, t)| t.as_bytes()));
    let files = discover_inputs(&cfg.inputs)?;
    let planned = plan(&files, &cfg.cache_dir, rules)?;
    Ok(files
        .into_iter()
        .zip(planned)
        .map(|(f, p)| {
            let state = if p.cached.is_some() {
                WorkState::Cached
            } else {
                WorkState::Stale
            };
            (f, state)
        })
        .collect())
}

fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "tmp{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn run(cfg: &RunConfig) -> RunOutcome {
    run_with(cfg, Arc::new(UreqProbe))
}

/// Full run with a caller-supplied HTTP prober.
pub fn run_with(cfg: &RunConfig, prober: Arc<dyn HttpProbe>) -> RunOutcome {
    let mut stats = RunStats::default();
    let (messages, diagnostics) = match check(cfg, prober, &mut stats) {
        Ok(found) => found,
        Err(d) => (Vec::new(), vec![d]),
    };
    let report = emit_report(&messages, &diagnostics, cfg.format);
    let mut diagnostics = diagnostics;
    if let Some(out) = &cfg.output {
        if let Err(e) = fs::write(out, &report) {
            diagnostics.push(io_diag(out, &e));
        }
    }
    let exit_code = if !diagnostics.is_empty() {
        2
    } else if !messages.is_empty() && cfg.fail_on_warnings {
        1
    } else {
        0
    };
    RunOutcome {
        exit_code,
        report,
        messages,
        diagnostics,
        stats,
    }
}

fn check(
    cfg: &RunConfig,
    prober: Arc<dyn HttpProbe>,
    stats: &mut RunStats,
) -> Result<(Vec<Message>, Vec<Diagnostic>), Diagnostic> {
    if cfg.rule_files.is_empty() {
        return Err(Diagnostic::new(DiagnosticCode::Io, "no rule files given"));
    }
    let rules = load_rules(&cfg.rule_files)?;
    let files = discover_inputs(&cfg.inputs)?;
    fs::create_dir_all(&cfg.cache_dir).map_err(|e| io_diag(&cfg.cache_dir, &e))?;
    let planned = plan(&files, &cfg.cache_dir, rules.source_hash)?;
    stats.inputs = planned.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Diagnostic::new(DiagnosticCode::Io, format!("thread pool: {e}")))?;
    let results: Vec<Result<(PassOneResult, bool), Diagnostic>> = pool.install(|| {
        planned
            .into_par_iter()
            .map(|p| match p.cached {
                Some(r) => Ok((r, false)),
                None => {
                    let r = evaluate_bytes(&p.bytes, &rules, &p.name);
                    let path = cache_path(&cfg.cache_dir, &p.name);
                    write_atomic(&path, &write_pass_one(&r)).map_err(|e| io_diag(&path, &e))?;
                    Ok((r, true))
                }
            })
            .collect()
    });
    let mut pass_one = Vec::with_capacity(results.len());
    for r in results {
        let (r, evaluated) = r?;
        if evaluated {
            stats.evaluated += 1;
        } else {
            stats.cached += 1;
        }
        pass_one.push(r);
    }
    log::info!(
        "pass one: {} evaluated, {} from cache",
        stats.evaluated,
        stats.cached
    );

    let builtins = BuiltinRegistry::standard(BuiltinConfig {
        normalize_names: cfg.normalize_names,
        offline: cfg.offline,
        url_timeout: Duration::from_secs_f64(cfg.url_timeout_secs.max(0.001)),
        max_probes: cfg.max_probes.max(1),
        prober,
    });
    let checked = pass_two(&pass_one, &rules, &builtins);
    Ok((checked.messages, checked.diagnostics))
}
