//! Study harness: task corpus, randomized ordering, decision log and metrics.
//!
//! A decision is correct when it matches the task's safe action: Sign for
//! Low and Medium tasks, Reject for High ones.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::HarnessError;
use crate::model::{ContractRegistry, Severity, SigningRequest};
use crate::normalize::normalize_request;

pub const TASK_IDS: [&str; 6] = ["T1", "T2", "T3", "T4", "T5", "T6"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Sign,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyCondition {
    Baseline,
    Semantic,
}

impl std::str::FromStr for StudyCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(StudyCondition::Baseline),
            "semantic" => Ok(StudyCondition::Semantic),
            other => Err(format!("invalid condition {other:?} (expected baseline or semantic)")),
        }
    }
}

impl std::fmt::Display for StudyCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StudyCondition::Baseline => "baseline",
            StudyCondition::Semantic => "semantic",
        })
    }
}

/// The decided correctness rule.
pub fn safe_action(tier: Severity) -> Decision {
    match tier {
        Severity::Low | Severity::Medium => Decision::Sign,
        Severity::High => Decision::Reject,
    }
}

pub fn is_correct(tier: Severity, decision: Decision) -> bool {
    safe_action(tier) == decision
}

/// A corpus entry as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub title: String,
    pub scenario_text: String,
    pub ground_truth_tier: Severity,
    pub safe_action: Decision,
    pub request: Value,
}

#[derive(Debug, Clone)]
pub struct Task {
    pub id: String,
    pub title: String,
    pub scenario_text: String,
    pub ground_truth_tier: Severity,
    pub safe_action: Decision,
    /// Wire form of the request, as shipped.
    pub request_json: Value,
    pub request: SigningRequest,
}

/// Parses and validates a corpus: exactly the tasks T1–T6, each with a
/// parseable request and a safe action consistent with its tier.
pub fn parse_corpus(text: &str, contracts: Arc<ContractRegistry>) -> Result<Vec<Task>, HarnessError> {
    let specs: Vec<TaskSpec> =
        serde_json::from_str(text).map_err(|e| HarnessError::CorpusInvalid(vec![format!("corpus json: {e}")]))?;
    let mut problems = Vec::new();
    let ids: BTreeSet<&str> = specs.iter().map(|t| t.id.as_str()).collect();
    for expected in TASK_IDS {
        if !ids.contains(expected) {
            problems.push(format!("missing task {expected}"));
        }
    }
    let mut seen = BTreeSet::new();
    for spec in &specs {
        if !seen.insert(spec.id.as_str()) {
            problems.push(format!("duplicate task {}", spec.id));
        }
    }
    let mut tasks = Vec::new();
    for spec in specs {
        if !TASK_IDS.contains(&spec.id.as_str()) {
            problems.push(format!("{}: unexpected task id", spec.id));
        }
        if spec.safe_action != safe_action(spec.ground_truth_tier) {
            problems.push(format!(
                "{}: safe_action {:?} contradicts tier {:?}",
                spec.id, spec.safe_action, spec.ground_truth_tier
            ));
        }
        if spec.scenario_text.trim().is_empty() {
            problems.push(format!("{}: empty scenario_text", spec.id));
        }
        match normalize_request(&spec.request.to_string(), Arc::clone(&contracts)) {
            Ok(request) => tasks.push(Task {
                id: spec.id,
                title: spec.title,
                scenario_text: spec.scenario_text,
                ground_truth_tier: spec.ground_truth_tier,
                safe_action: spec.safe_action,
                request_json: spec.request,
                request,
            }),
            Err(e) => problems.push(format!("{}: request: {e}", spec.id)),
        }
    }
    if !problems.is_empty() {
        return Err(HarnessError::CorpusInvalid(problems));
    }
    tasks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(tasks)
}

pub fn load_corpus(path: &Path, contracts: Arc<ContractRegistry>) -> Result<Vec<Task>, HarnessError> {
    parse_corpus(&std::fs::read_to_string(path)?, contracts)
}

/// Deterministic shuffle of the task ids for `seed`.
pub fn randomize_order(tasks: &[Task], seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub session: String,
    pub task: String,
    pub condition: StudyCondition,
    pub decision: Decision,
    pub risk_rating: u8,
    pub clarity_rating: u8,
    pub confidence_rating: u8,
    /// UTC milliseconds since the epoch.
    pub started_at: i64,
    pub decided_at: i64,
}

impl DecisionRecord {
    pub fn validate(&self) -> Result<(), HarnessError> {
        for (field, value) in [
            ("risk_rating", self.risk_rating),
            ("clarity_rating", self.clarity_rating),
            ("confidence_rating", self.confidence_rating),
        ] {
            if !(1..=5).contains(&value) {
                return Err(HarnessError::InvalidRating { field, value });
            }
        }
        if self.decided_at < self.started_at {
            return Err(HarnessError::InvalidRecord("decided_at precedes started_at".into()));
        }
        if self.session.is_empty() || self.task.is_empty() {
            return Err(HarnessError::InvalidRecord("session and task are required".into()));
        }
        Ok(())
    }

    pub fn deliberation_seconds(&self) -> f64 {
        (self.decided_at - self.started_at) as f64 / 1000.0
    }
}

/// Append-only decision log; one record per (session, task).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLog {
    records: Vec<DecisionRecord>,
    seen: HashSet<(String, String)>,
}

impl SessionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[DecisionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, session: &str, task: &str) -> bool {
        self.seen.contains(&(session.to_string(), task.to_string()))
    }

    /// Records belonging to one session.
    pub fn for_session(&self, session: &str) -> SessionLog {
        let mut out = SessionLog::new();
        for r in self.records.iter().filter(|r| r.session == session) {
            record_decision(&mut out, r.clone()).expect("source log is valid");
        }
        out
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(reader: impl BufRead) -> Result<SessionLog, HarnessError> {
        let mut log = SessionLog::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DecisionRecord = serde_json::from_str(&line).map_err(|e| HarnessError::LogFormat {
                line: i + 1,
                message: e.to_string(),
            })?;
            record_decision(&mut log, rec).map_err(|e| HarnessError::LogFormat {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(log)
    }

    pub fn read(path: &Path) -> Result<SessionLog, HarnessError> {
        SessionLog::from_ndjson(BufReader::new(File::open(path)?))
    }
}

/// Validates and appends; a second record for the same (session, task) is rejected.
pub fn record_decision(log: &mut SessionLog, rec: DecisionRecord) -> Result<(), HarnessError> {
    rec.validate()?;
    let key = (rec.session.clone(), rec.task.clone());
    if log.seen.contains(&key) {
        return Err(HarnessError::DuplicateDecision {
            session: rec.session,
            task: rec.task,
        });
    }
    log.seen.insert(key);
    log.records.push(rec);
    Ok(())
}

/// A session log mirrored to an NDJSON file, one line per accepted record.
#[derive(Debug)]
pub struct LogWriter {
    log: SessionLog,
    file: Option<File>,
}

impl LogWriter {
    pub fn in_memory() -> Self {
        LogWriter {
            log: SessionLog::new(),
            file: None,
        }
    }

    /// Opens `path` for appending, loading existing records first so that
    /// duplicates across restarts are still rejected.
    pub fn open(path: &Path) -> Result<Self, HarnessError> {
        let log = if path.exists() { SessionLog::read(path)? } else { SessionLog::new() };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(LogWriter { log, file: Some(file) })
    }

    pub fn append(&mut self, rec: DecisionRecord) -> Result<(), HarnessError> {
        let line = serde_json::to_string(&rec).expect("records serialize");
        record_decision(&mut self.log, rec)?;
        if let Some(file) = &mut self.file {
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        Ok(())
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl RatingStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> RatingStats {
        let n = values.clone().count();
        if n == 0 {
            return RatingStats { mean: 0.0, sd: 0.0 };
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        RatingStats { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: String,
    pub method: String,
    pub tier: Severity,
    pub responses: usize,
    pub signed: usize,
    /// Percentage of responses that signed.
    pub sign_rate: f64,
    pub accuracy: f64,
    pub risk: RatingStats,
    pub clarity: RatingStats,
    pub confidence: RatingStats,
    pub mean_deliberation_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierAccuracy {
    pub tier: Severity,
    pub responses: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub responses: usize,
    pub sessions: usize,
    pub accuracy: f64,
    pub per_tier: Vec<TierAccuracy>,
    pub tasks: Vec<TaskMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: GroupMetrics,
    pub by_condition: BTreeMap<StudyCondition, GroupMetrics>,
}

fn group(records: &[&DecisionRecord], corpus: &[Task]) -> GroupMetrics {
    let tier_of = |id: &str| corpus.iter().find(|t| t.id == id).map(|t| t.ground_truth_tier);
    let correct = |r: &DecisionRecord| tier_of(&r.task).is_some_and(|t| is_correct(t, r.decision));
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };

    let tasks = corpus
        .iter()
        .filter_map(|task| {
            let rs: Vec<&DecisionRecord> = records.iter().copied().filter(|r| r.task == task.id).collect();
            if rs.is_empty() {
                return None;
            }
            let signed = rs.iter().filter(|r| r.decision == Decision::Sign).count();
            let hits = rs.iter().filter(|r| correct(r)).count();
            Some(TaskMetrics {
                task: task.id.clone(),
                method: task.request.method().code().to_string(),
                tier: task.ground_truth_tier,
                responses: rs.len(),
                signed,
                sign_rate: 100.0 * ratio(signed, rs.len()),
                accuracy: ratio(hits, rs.len()),
                risk: RatingStats::of(rs.iter().map(|r| r.risk_rating as f64)),
                clarity: RatingStats::of(rs.iter().map(|r| r.clarity_rating as f64)),
                confidence: RatingStats::of(rs.iter().map(|r| r.confidence_rating as f64)),
                mean_deliberation_s: RatingStats::of(rs.iter().map(|r| r.deliberation_seconds())).mean,
            })
        })
        .collect();

    let per_tier = [Severity::Low, Severity::Medium, Severity::High]
        .into_iter()
        .filter_map(|tier| {
            let rs: Vec<&&DecisionRecord> = records.iter().filter(|r| tier_of(&r.task) == Some(tier)).collect();
            if rs.is_empty() {
                return None;
            }
            let hits = rs.iter().filter(|r| correct(r)).count();
            Some(TierAccuracy {
                tier,
                responses: rs.len(),
                correct: hits,
                accuracy: ratio(hits, rs.len()),
            })
        })
        .collect();

    let sessions: BTreeSet<&str> = records.iter().map(|r| r.session.as_str()).collect();
    GroupMetrics {
        responses: records.len(),
        sessions: sessions.len(),
        accuracy: ratio(records.iter().filter(|r| correct(r)).count(), records.len()),
        per_tier,
        tasks,
    }
}

/// Descriptive statistics over the log, overall and per condition.
pub fn compute_metrics(log: &SessionLog, corpus: &[Task]) -> Result<MetricsReport, HarnessError> {
    if log.is_empty() {
        return Err(HarnessError::EmptyLog);
    }
    if let Some(r) = log.records().iter().find(|r| !corpus.iter().any(|t| t.id == r.task)) {
        return Err(HarnessError::UnknownTask(r.task.clone()));
    }
    let all: Vec<&DecisionRecord> = log.records().iter().collect();
    let mut by_condition = BTreeMap::new();
    for condition in [StudyCondition::Baseline, StudyCondition::Semantic] {
        let rs: Vec<&DecisionRecord> = all.iter().copied().filter(|r| r.condition == condition).collect();
        if !rs.is_empty() {
            by_condition.insert(condition, group(&rs, corpus));
        }
    }
    Ok(MetricsReport {
        overall: group(&all, corpus),
        by_condition,
    })
}

fn stat(s: &RatingStats) -> String {
    format!("{:.2} ({:.2})", s.mean, s.sd)
}

/// Plain-text table: one row per task and condition.
pub fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<4} {:<6} {:<4} {:<9} {:>5} {:>7} {:>12} {:>12} {:>12} {:>8}",
        "Task", "Method", "Risk", "Condition", "N", "Sign %", "Risk", "Clarity", "Confidence", "Time s"
    );
    for (condition, g) in &report.by_condition {
        for t in &g.tasks {
            let _ = writeln!(
                out,
                "{:<4} {:<6} {:<4} {:<9} {:>5} {:>7.1} {:>12} {:>12} {:>12} {:>8.1}",
                t.task,
                t.method,
                t.tier.letter(),
                condition.to_string(),
                t.responses,
                t.sign_rate,
                stat(&t.risk),
                stat(&t.clarity),
                stat(&t.confidence),
                t.mean_deliberation_s
            );
        }
    }
    let _ = writeln!(out);
    for (condition, g) in &report.by_condition {
        let _ = writeln!(
            out,
            "{condition}: accuracy {:.1}% over {} responses from {} sessions",
            100.0 * g.accuracy,
            g.responses,
            g.sessions
        );
    }
    let _ = writeln!(
        out,
        "overall: accuracy {:.1}% over {} responses",
        100.0 * report.overall.accuracy,
        report.overall.responses
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(session: &str, task: &str, decision: Decision) -> DecisionRecord {
        DecisionRecord {
            session: session.into(),
            task: task.into(),
            condition: StudyCondition::Semantic,
            decision,
            risk_rating: 3,
            clarity_rating: 4,
            confidence_rating: 5,
            started_at: 1_000,
            decided_at: 4_500,
        }
    }

    #[test]
    fn duplicates_and_bad_ratings_rejected() {
        let mut log = SessionLog::new();
        record_decision(&mut log, rec("s1", "T1", Decision::Sign)).unwrap();
        assert!(matches!(
            record_decision(&mut log, rec("s1", "T1", Decision::Reject)),
            Err(HarnessError::DuplicateDecision { .. })
        ));
        let mut bad = rec("s1", "T2", Decision::Sign);
        bad.risk_rating = 6;
        assert!(matches!(
            record_decision(&mut log, bad),
            Err(HarnessError::InvalidRating { field: "risk_rating", value: 6 })
        ));
        let mut early = rec("s1", "T2", Decision::Sign);
        early.decided_at = 0;
        assert!(record_decision(&mut log, early).is_err());
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn ndjson_round_trip() {
        let mut log = SessionLog::new();
        record_decision(&mut log, rec("s1", "T1", Decision::Sign)).unwrap();
        record_decision(&mut log, rec("s2", "T1", Decision::Reject)).unwrap();
        let text = log.to_ndjson();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(SessionLog::from_ndjson(text.as_bytes()).unwrap(), log);
        assert!(matches!(
            SessionLog::from_ndjson("{nope}\n".as_bytes()),
            Err(HarnessError::LogFormat { line: 1, .. })
        ));
    }

    #[test]
    fn correctness_rule() {
        assert!(is_correct(Severity::Low, Decision::Sign));
        assert!(is_correct(Severity::Medium, Decision::Sign));
        assert!(is_correct(Severity::High, Decision::Reject));
        assert!(!is_correct(Severity::High, Decision::Sign));
        assert!(!is_correct(Severity::Low, Decision::Reject));
    }

    #[test]
    fn population_sd() {
        let s = RatingStats::of([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0].into_iter());
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.sd, 2.0);
    }
}
