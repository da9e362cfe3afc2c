use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use cegsyn::backend::{Backend, HttpBackend, ReasoningLevel, ScriptedBackend};
use cegsyn::engine::{Checker, FixtureTranslator, Pipeline, Status, ToolchainTranslator, Translator};
use cegsyn::harness::{
    report_audit, report_table, report_token_csv, run_benchmark, RunConfig, RunLedger, Workflow,
};
use cegsyn::toolchain::{ToolLimits, ToolPaths};
use cegsyn_core::aiger::FalsifyLimits;

#[derive(Parser)]
#[command(name = "cegsyn", about = "Counterexample-guided reactive synthesis with LRM backends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WorkflowArg {
    Synthesis,
    Parameterized,
    NaturalAuto,
    NaturalDirect,
}

impl From<WorkflowArg> for Workflow {
    fn from(w: WorkflowArg) -> Workflow {
        match w {
            WorkflowArg::Synthesis => Workflow::Synthesis,
            WorkflowArg::Parameterized => Workflow::Parameterized,
            WorkflowArg::NaturalAuto => Workflow::NaturalAuto,
            WorkflowArg::NaturalDirect => Workflow::NaturalDirect,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    None,
    Low,
    Medium,
    High,
    Xhigh,
}

impl From<LevelArg> for ReasoningLevel {
    fn from(l: LevelArg) -> ReasoningLevel {
        match l {
            LevelArg::None => ReasoningLevel::None,
            LevelArg::Low => ReasoningLevel::Low,
            LevelArg::Medium => ReasoningLevel::Medium,
            LevelArg::High => ReasoningLevel::High,
            LevelArg::Xhigh => ReasoningLevel::XHigh,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a workflow over a dataset directory.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        workflow: Option<WorkflowArg>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Backend id from the config file's [backends] table.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, value_enum)]
        level: Option<LevelArg>,
        /// Counterexample repair iterations per instance.
        #[arg(long)]
        cex_iters: Option<u32>,
        /// Comma-separated ascending parameter values for the
        /// parameterized workflow.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<i64>>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Per-property model-checking timeout in seconds.
        #[arg(long)]
        check_timeout: Option<u64>,
        /// Keep per-instance temp artifacts instead of deleting them.
        #[arg(long)]
        keep_artifacts: bool,
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Realizability metadata manifest (TOML).
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Summarize a run ledger.
    Report {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
    },
}

// ----------------------------------------------------------------------
// Config file
// ----------------------------------------------------------------------

#[derive(Debug, Default, serde::Deserialize)]
struct FileConfig {
    #[serde(default)]
    run: FileRun,
    #[serde(default)]
    backends: BTreeMap<String, BackendConfig>,
    #[serde(default)]
    tools: FileTools,
    #[serde(default)]
    fixtures: FileFixtures,
}

#[derive(Debug, Default, serde::Deserialize)]
struct FileRun {
    workflow: Option<String>,
    dataset: Option<PathBuf>,
    metadata: Option<PathBuf>,
    ledger: Option<PathBuf>,
    backend: Option<String>,
    level: Option<String>,
    cex_iters: Option<u32>,
    values: Option<Vec<i64>>,
    max_value: Option<i64>,
    jobs: Option<usize>,
    check_timeout: Option<u64>,
}

#[derive(Debug, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum BackendConfig {
    Scripted {
        dir: PathBuf,
    },
    Http {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the credential.
        credential_var: Option<String>,
    },
}

#[derive(Debug, Default, serde::Deserialize)]
struct FileTools {
    yosys: Option<PathBuf>,
    aigtosmv: Option<PathBuf>,
    nuxmv: Option<PathBuf>,
    ltlfilt: Option<PathBuf>,
}

#[derive(Debug, Default, serde::Deserialize)]
struct FileFixtures {
    /// Directory of pre-translated `.aag` circuits for offline runs.
    circuits: Option<PathBuf>,
}

fn parse_workflow(s: &str) -> Result<Workflow, String> {
    match s {
        "synthesis" => Ok(Workflow::Synthesis),
        "parameterized" => Ok(Workflow::Parameterized),
        "natural-auto" => Ok(Workflow::NaturalAuto),
        "natural-direct" => Ok(Workflow::NaturalDirect),
        other => Err(format!("unknown workflow `{other}`")),
    }
}

fn run_command(
    config_path: Option<PathBuf>,
    workflow: Option<WorkflowArg>,
    dataset: Option<PathBuf>,
    backend: Option<String>,
    level: Option<LevelArg>,
    cex_iters: Option<u32>,
    values: Option<Vec<i64>>,
    jobs: Option<usize>,
    check_timeout: Option<u64>,
    keep_artifacts: bool,
    ledger: Option<PathBuf>,
    metadata: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let file: FileConfig = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };

    // Precedence: CLI > config file > defaults.
    let defaults = RunConfig::default();
    let workflow = match workflow {
        Some(w) => Workflow::from(w),
        None => match &file.run.workflow {
            Some(s) => parse_workflow(s)?,
            None => defaults.workflow,
        },
    };
    let level: ReasoningLevel = match level {
        Some(l) => l.into(),
        None => file
            .run
            .level
            .as_deref()
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(ReasoningLevel::None),
    };
    let backend_id = backend
        .or(file.run.backend.clone())
        .ok_or("no backend selected (use --backend or the config file)")?;

    let config = RunConfig {
        workflow,
        dataset_dir: dataset
            .or(file.run.dataset.clone())
            .ok_or("no dataset directory (use --dataset or the config file)")?,
        metadata: metadata.or(file.run.metadata.clone()),
        ledger_path: ledger
            .or(file.run.ledger.clone())
            .unwrap_or(defaults.ledger_path),
        backend_id: backend_id.clone(),
        level: level.to_string(),
        cex_budget: cex_iters.or(file.run.cex_iters).unwrap_or(defaults.cex_budget),
        values: values.or(file.run.values.clone()).unwrap_or_default(),
        max_value: file.run.max_value.unwrap_or(defaults.max_value),
        jobs: jobs.or(file.run.jobs).unwrap_or(defaults.jobs),
    };

    let backend: Box<dyn Backend> = match file.backends.get(&backend_id) {
        Some(BackendConfig::Scripted { dir }) => {
            Box::new(ScriptedBackend::new(&backend_id, dir.clone()))
        }
        Some(BackendConfig::Http {
            endpoint,
            model,
            credential_var,
        }) => Box::new(HttpBackend::new(
            &backend_id,
            endpoint.clone(),
            model.clone(),
            credential_var.as_deref(),
        )),
        None => return Err(format!("backend `{backend_id}` is not defined in the config")),
    };

    let paths = ToolPaths {
        yosys: file.tools.yosys.clone(),
        aigtosmv: file.tools.aigtosmv.clone(),
        nuxmv: file.tools.nuxmv.clone(),
        ltlfilt: file.tools.ltlfilt.clone(),
    };
    let mut limits = ToolLimits::checking();
    if let Some(secs) = check_timeout.or(file.run.check_timeout) {
        limits.wall_timeout = Duration::from_secs(secs);
    }
    let workdir = if keep_artifacts {
        let dir = std::env::temp_dir().join(format!("cegsyn-artifacts-{}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        eprintln!("keeping artifacts in {}", dir.display());
        dir
    } else {
        std::env::temp_dir().join(format!("cegsyn-{}", std::process::id()))
    };
    std::fs::create_dir_all(&workdir).map_err(|e| e.to_string())?;

    let translator: Box<dyn Translator> = if paths.checking_available() {
        Box::new(ToolchainTranslator {
            paths: paths.clone(),
            limits,
            workdir: workdir.clone(),
        })
    } else {
        let dir = file
            .fixtures
            .circuits
            .clone()
            .ok_or("external tools not found and no [fixtures] circuits directory configured")?;
        Box::new(FixtureTranslator { dir })
    };
    let checker = if paths.checking_available() {
        Checker::External {
            paths: paths.clone(),
            limits,
            workdir: workdir.clone(),
        }
    } else {
        Checker::BuiltIn {
            limits: FalsifyLimits::default(),
        }
    };

    let mut pipeline = Pipeline::new(backend.as_ref(), translator.as_ref(), checker, level);
    pipeline.tools = paths;

    let ledger = run_benchmark(&config, &pipeline).map_err(|e| e.to_string())?;
    if !keep_artifacts {
        let _ = std::fs::remove_dir_all(&workdir);
    }

    print!("{}", report_table(ledger.records()));
    let errors = ledger
        .records()
        .iter()
        .filter(|r| r.status == Status::Error)
        .count();
    if errors > 0 {
        eprintln!("{errors} instance(s) ended in an error outcome");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            workflow,
            dataset,
            backend,
            level,
            cex_iters,
            values,
            jobs,
            check_timeout,
            keep_artifacts,
            ledger,
            metadata,
        } => run_command(
            config,
            workflow,
            dataset,
            backend,
            level,
            cex_iters,
            values,
            jobs,
            check_timeout,
            keep_artifacts,
            ledger,
            metadata,
        ),
        Command::Report { ledger, format } => RunLedger::open(&ledger)
            .map_err(|e| e.to_string())
            .map(|ledger| {
                match format {
                    ReportFormat::Table => {
                        print!("{}", report_table(ledger.records()));
                        print!("{}", report_audit(ledger.records()));
                    }
                    ReportFormat::Csv => print!("{}", report_token_csv(ledger.records())),
                }
                ExitCode::SUCCESS
            }),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
