//! Dataset loading, the run ledger, benchmark execution, and reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use cegsyn_core::tlsf::{parse_tlsf, render_tlsf, strip_metadata};

use crate::backend::spec_hash;
use crate::engine::{NaturalRoute, Outcome, Pipeline, Status, TargetVerdict};
use crate::toolchain::CheckVerdict;

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realizability {
    Realizable,
    Unrealizable,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct DatasetInstance {
    pub id: String,
    pub spec_path: PathBuf,
    pub realizability: Realizability,
    /// Structural family: hash of the spec with parameter defaults
    /// normalized away, so sibling instantiations group together.
    pub family: String,
    /// Default value of the first declared parameter, if any.
    pub parameter_value: Option<i64>,
    pub nl_path: Option<PathBuf>,
    pub ground_truth_path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Quarantined {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Default, serde::Deserialize)]
struct Manifest {
    #[serde(default)]
    realizability: BTreeMap<String, Realizability>,
}

/// Scan `dir` for `.tlsf` files. Files that fail stripping + parsing are
/// quarantined with the diagnostic instead of aborting the load. An optional
/// TOML manifest supplies realizability labels keyed by file stem.
pub fn load_dataset(
    dir: &Path,
    metadata: Option<&Path>,
) -> io::Result<(Vec<DatasetInstance>, Vec<Quarantined>)> {
    let manifest: Manifest = match metadata {
        Some(path) => toml::from_str(&fs::read_to_string(path)?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?,
        None => Manifest::default(),
    };

    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "tlsf"))
        .collect();
    paths.sort();

    let mut instances = Vec::new();
    let mut quarantine = Vec::new();
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                quarantine.push(Quarantined {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let spec = match parse_tlsf(&strip_metadata(&text)) {
            Ok(spec) => spec,
            Err(e) => {
                quarantine.push(Quarantined {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };

        let mut normalized = spec.clone();
        for (_, default) in &mut normalized.parameters {
            *default = 0;
        }
        let family = spec_hash(&render_tlsf(&normalized));
        let parameter_value = spec.parameters.first().map(|(_, v)| *v);

        let nl_path = path.with_extension("nl");
        let nl_path = nl_path.exists().then_some(nl_path);
        let realizability = manifest
            .realizability
            .get(&id)
            .copied()
            .unwrap_or(Realizability::Unknown);
        instances.push(DatasetInstance {
            id,
            ground_truth_path: Some(path.clone()),
            spec_path: path,
            realizability,
            family,
            parameter_value,
            nl_path,
        });
    }
    Ok((instances, quarantine))
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workflow {
    Synthesis,
    Parameterized,
    NaturalAuto,
    NaturalDirect,
}

impl Workflow {
    pub fn name(self) -> &'static str {
        match self {
            Workflow::Synthesis => "synthesis",
            Workflow::Parameterized => "parameterized",
            Workflow::NaturalAuto => "natural-auto",
            Workflow::NaturalDirect => "natural-direct",
        }
    }
}

/// One immutable ledger line. All wall-clock information lives in
/// `wall_time_ms` so the rest of a record is deterministic.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LedgerRecord {
    pub instance: String,
    pub workflow: Workflow,
    pub backend: String,
    pub level: String,
    pub cex_budget: u32,
    pub realizability: Realizability,
    pub status: Status,
    pub role: Option<String>,
    pub iterations_used: u32,
    /// One summary string per subproperty per checked module.
    pub verdicts: Vec<Vec<String>>,
    pub reasoning_tokens: u64,
    pub output_tokens: u64,
    pub wall_time_ms: u64,
    #[serde(default)]
    pub semantics_declared: Option<bool>,
    #[serde(default)]
    pub first_failing_value: Option<i64>,
    #[serde(default)]
    pub soundness: Option<String>,
    #[serde(default)]
    pub autoformalized_verdict: Option<TargetVerdict>,
    #[serde(default)]
    pub equivalence: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn verdict_summary(v: &CheckVerdict) -> String {
    match v {
        CheckVerdict::Pass => "pass".to_string(),
        CheckVerdict::Fail(t) => format!("fail(stem={},loop={})", t.stem.len(), t.looped.len()),
        CheckVerdict::Timeout => "timeout".to_string(),
        CheckVerdict::ToolError(e) => format!("tool-error({e})"),
    }
}

pub fn summarize_outcome(o: &Outcome) -> (Vec<Vec<String>>, Option<String>) {
    let verdicts = o
        .verdict_history
        .iter()
        .map(|vs| vs.iter().map(verdict_summary).collect())
        .collect();
    let role = o.role.map(|r| format!("{r:?}"));
    (verdicts, role)
}

/// Append-only JSON-lines ledger. Reopening reads all prior records so
/// interrupted runs resume where they left off.
pub struct RunLedger {
    path: PathBuf,
    records: Vec<LedgerRecord>,
}

impl RunLedger {
    pub fn open(path: &Path) -> io::Result<RunLedger> {
        let mut records = Vec::new();
        if path.exists() {
            let file = fs::File::open(path)?;
            for line in io::BufReader::new(file).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: LedgerRecord = serde_json::from_str(&line)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                records.push(record);
            }
        }
        Ok(RunLedger {
            path: path.to_path_buf(),
            records,
        })
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    /// True when this (instance, workflow, backend, level, budget) tuple is
    /// already recorded.
    pub fn contains(
        &self,
        instance: &str,
        workflow: Workflow,
        backend: &str,
        level: &str,
        cex_budget: u32,
    ) -> bool {
        self.records.iter().any(|r| {
            r.instance == instance
                && r.workflow == workflow
                && r.backend == backend
                && r.level == level
                && r.cex_budget == cex_budget
        })
    }

    pub fn append(&mut self, record: LedgerRecord) -> io::Result<()> {
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let line = serde_json::to_string(&record)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        writeln!(file, "{line}")?;
        file.flush()?;
        self.records.push(record);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Benchmark driver
// ---------------------------------------------------------------------------

pub struct RunConfig {
    pub workflow: Workflow,
    pub dataset_dir: PathBuf,
    pub metadata: Option<PathBuf>,
    pub ledger_path: PathBuf,
    pub backend_id: String,
    pub level: String,
    pub cex_budget: u32,
    /// Parameter ladder; empty means "use the values observed in the
    /// instance's family, falling back to {2, 3, max}".
    pub values: Vec<i64>,
    pub max_value: i64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workflow: Workflow::Synthesis,
            dataset_dir: PathBuf::from("."),
            metadata: None,
            ledger_path: PathBuf::from("ledger.jsonl"),
            backend_id: String::new(),
            level: "none".to_string(),
            cex_budget: 2,
            values: Vec::new(),
            max_value: 3,
            jobs: 1,
        }
    }
}

fn ladder_for(
    instance: &DatasetInstance,
    all: &[DatasetInstance],
    config: &RunConfig,
) -> Vec<i64> {
    if !config.values.is_empty() {
        return config.values.clone();
    }
    let mut observed: Vec<i64> = all
        .iter()
        .filter(|i| i.family == instance.family)
        .filter_map(|i| i.parameter_value)
        .collect();
    observed.sort_unstable();
    observed.dedup();
    if observed.len() > 1 {
        return observed;
    }
    let mut fallback = vec![2, 3, config.max_value];
    fallback.sort_unstable();
    fallback.dedup();
    fallback
}

fn run_one(
    instance: &DatasetInstance,
    all: &[DatasetInstance],
    config: &RunConfig,
    pipeline: &Pipeline,
) -> io::Result<LedgerRecord> {
    let started = Instant::now();
    let spec_text = fs::read_to_string(&instance.spec_path)?;
    let stripped = strip_metadata(&spec_text);
    let semantics_declared = parse_tlsf(&stripped).ok().map(|s| s.semantics_declared);

    let mut record = LedgerRecord {
        instance: instance.id.clone(),
        workflow: config.workflow,
        backend: config.backend_id.clone(),
        level: config.level.clone(),
        cex_budget: config.cex_budget,
        realizability: instance.realizability,
        status: Status::Unsolved,
        role: None,
        iterations_used: 0,
        verdicts: Vec::new(),
        reasoning_tokens: 0,
        output_tokens: 0,
        wall_time_ms: 0,
        semantics_declared,
        first_failing_value: None,
        soundness: None,
        autoformalized_verdict: None,
        equivalence: None,
        error: None,
        notes: Vec::new(),
    };

    let fill = |record: &mut LedgerRecord, outcome: &Outcome| {
        let (verdicts, role) = summarize_outcome(outcome);
        record.status = outcome.status;
        record.role = role;
        record.iterations_used = outcome.iterations_used;
        record.verdicts = verdicts;
        record.reasoning_tokens = outcome.reasoning_tokens;
        record.output_tokens = outcome.output_tokens;
        record.error = outcome.error.clone();
        record.notes = outcome.notes.clone();
    };

    match config.workflow {
        Workflow::Synthesis => {
            let outcome = pipeline.run_instance(&spec_text, config.cex_budget);
            fill(&mut record, &outcome);
        }
        Workflow::Parameterized => {
            let values = ladder_for(instance, all, config);
            let param = pipeline.run_parameterized(&spec_text, &values, config.cex_budget);
            fill(&mut record, &param.outcome);
            record.first_failing_value = param.first_failing_value;
            record.soundness = Some(param.soundness.to_string());
        }
        Workflow::NaturalAuto | Workflow::NaturalDirect => {
            let Some(nl_path) = &instance.nl_path else {
                record.status = Status::Error;
                record.error = Some("dataset: no natural-language description".to_string());
                record.wall_time_ms = started.elapsed().as_millis() as u64;
                return Ok(record);
            };
            let nl_text = fs::read_to_string(nl_path)?;
            let truth_path = instance
                .ground_truth_path
                .as_ref()
                .unwrap_or(&instance.spec_path);
            let truth = fs::read_to_string(truth_path)?;
            let route = if config.workflow == Workflow::NaturalAuto {
                NaturalRoute::ViaAutoformalization
            } else {
                NaturalRoute::Direct
            };
            let natural = pipeline.run_natural(&nl_text, &truth, route, config.cex_budget);
            fill(&mut record, &natural.outcome);
            record.reasoning_tokens += natural.autoformalization.reasoning_tokens;
            record.output_tokens += natural.autoformalization.output_tokens;
            record.autoformalized_verdict = Some(natural.autoformalized_verdict);
            record.equivalence = natural.equivalence.map(|e| format!("{e:?}"));
        }
    }
    record.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(record)
}

/// Run the configured workflow over every dataset instance not yet in the
/// ledger. Instances execute on a bounded worker pool; appends are
/// serialized through one writer.
pub fn run_benchmark(config: &RunConfig, pipeline: &Pipeline) -> io::Result<RunLedger> {
    let (instances, _quarantine) = load_dataset(&config.dataset_dir, config.metadata.as_deref())?;
    let mut ledger = RunLedger::open(&config.ledger_path)?;

    let pending: Vec<&DatasetInstance> = instances
        .iter()
        .filter(|i| {
            !ledger.contains(
                &i.id,
                config.workflow,
                &config.backend_id,
                &config.level,
                config.cex_budget,
            )
        })
        .collect();

    let jobs = config.jobs.max(1);
    if jobs == 1 || pending.len() <= 1 {
        for instance in pending {
            let record = run_one(instance, &instances, config, pipeline)?;
            ledger.append(record)?;
        }
        return Ok(ledger);
    }

    let ledger_cell = Mutex::new(&mut ledger);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let errors: Mutex<Vec<io::Error>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(pending.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let Some(instance) = pending.get(k) else { break };
                match run_one(instance, &instances, config, pipeline) {
                    Ok(record) => {
                        let mut guard = ledger_cell.lock().unwrap();
                        if let Err(e) = guard.append(record) {
                            errors.lock().unwrap().push(e);
                            break;
                        }
                    }
                    Err(e) => {
                        errors.lock().unwrap().push(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(e) = errors.into_inner().unwrap().into_iter().next() {
        return Err(e);
    }
    drop(ledger_cell);
    Ok(ledger)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

fn split_counts(records: &[&LedgerRecord]) -> (usize, usize, usize, usize, usize, usize) {
    let mut counts = [(0usize, 0usize); 3];
    for r in records {
        let slot = match r.realizability {
            Realizability::Realizable => 0,
            Realizability::Unrealizable => 1,
            Realizability::Unknown => 2,
        };
        counts[slot].1 += 1;
        if r.status == Status::Solved {
            counts[slot].0 += 1;
        }
    }
    (
        counts[0].0, counts[0].1, counts[1].0, counts[1].1, counts[2].0, counts[2].1,
    )
}

/// Solved/total rows per (backend, level, budget), split by realizability.
pub fn report_table(records: &[LedgerRecord]) -> String {
    let mut groups: BTreeMap<(String, String, u32), Vec<&LedgerRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.backend.clone(), r.level.clone(), r.cex_budget))
            .or_default()
            .push(r);
    }
    let mut out = String::from(
        "backend  level  budget  realizable  unrealizable  unknown  total\n",
    );
    for ((backend, level, budget), rs) in &groups {
        let (sr, tr, su, tu, sk, tk) = split_counts(rs);
        out.push_str(&format!(
            "{backend}  {level}  {budget}  {sr}/{tr}  {su}/{tu}  {sk}/{tk}  {}/{}\n",
            sr + su + sk,
            tr + tu + tk,
        ));
    }
    out
}

/// CSV of (level, average reasoning tokens, solved) per reasoning level.
pub fn report_token_csv(records: &[LedgerRecord]) -> String {
    let mut groups: BTreeMap<String, Vec<&LedgerRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.level.clone()).or_default().push(r);
    }
    let mut out = String::from("level,avg_reasoning_tokens,solved\n");
    for (level, rs) in &groups {
        let total: u64 = rs.iter().map(|r| r.reasoning_tokens).sum();
        let avg = total as f64 / rs.len() as f64;
        let solved = rs.iter().filter(|r| r.status == Status::Solved).count();
        out.push_str(&format!("{level},{avg},{solved}\n"));
    }
    out
}

/// One audit line per record.
pub fn report_audit(records: &[LedgerRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{}  {}  {}  {}  budget={}  iterations={}  status={:?}  tokens={}+{}{}\n",
            r.instance,
            r.workflow.name(),
            r.backend,
            r.level,
            r.cex_budget,
            r.iterations_used,
            r.status,
            r.reasoning_tokens,
            r.output_tokens,
            r.error
                .as_deref()
                .map(|e| format!("  error={e}"))
                .unwrap_or_default(),
        ));
    }
    out
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

/// Mean ± standard deviation of solved counts over repeated runs (one
/// ledger slice per run).
pub fn report_repeats(runs: &[Vec<LedgerRecord>]) -> String {
    let solved: Vec<f64> = runs
        .iter()
        .map(|r| r.iter().filter(|x| x.status == Status::Solved).count() as f64)
        .collect();
    let tokens: Vec<f64> = runs
        .iter()
        .map(|r| r.iter().map(|x| x.reasoning_tokens as f64).sum::<f64>())
        .collect();
    let (sm, ss) = mean_std(&solved);
    let (tm, ts) = mean_std(&tokens);
    format!(
        "runs: {}\nsolved: {sm:.2} ± {ss:.2}\nreasoning tokens: {tm:.2} ± {ts:.2}\n",
        runs.len()
    )
}

/// Solved counts keyed by counterexample budget, for monotonicity audits.
pub fn solved_by_budget(records: &[LedgerRecord]) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        let slot = out.entry(r.cex_budget).or_insert(0);
        if r.status == Status::Solved {
            *slot += 1;
        }
    }
    out
}
