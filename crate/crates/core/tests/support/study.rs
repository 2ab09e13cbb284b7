//! Synthetic study logs.

use sigsem_core::harness::{Decision, DecisionRecord, StudyCondition, Task, TASK_IDS};

/// Risk ratings 1..=5 with these counts: mean 149/52, population SD ≈ 1.455.
pub const CONTROL_T1_RISK_COUNTS: [usize; 5] = [9, 19, 7, 4, 13];
pub const CONTROL_SESSIONS: usize = 52;
pub const CONTROL_T1_SIGNED: usize = 32;
pub const SEMANTIC_SESSIONS: usize = 12;

fn record(session: &str, task: &str, condition: StudyCondition, decision: Decision, risk: u8, t0: i64) -> DecisionRecord {
    DecisionRecord {
        session: session.into(),
        task: task.into(),
        condition,
        decision,
        risk_rating: risk,
        clarity_rating: 3,
        confidence_rating: 4,
        started_at: t0,
        decided_at: t0 + 12_000,
    }
}

/// 64 sessions × 6 tasks; only the baseline T1 row is shaped deliberately.
pub fn synthetic_log(corpus: &[Task]) -> Vec<DecisionRecord> {
    let risks: Vec<u8> = CONTROL_T1_RISK_COUNTS
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| vec![i as u8 + 1; n])
        .collect();
    let mut out = Vec::new();
    let mut t0 = 1_700_000_000_000i64;
    #[allow(clippy::needless_range_loop)]
    for s in 0..CONTROL_SESSIONS + SEMANTIC_SESSIONS {
        let control = s < CONTROL_SESSIONS;
        let condition = if control { StudyCondition::Baseline } else { StudyCondition::Semantic };
        let session = format!("s{s:02}");
        for task in corpus {
            t0 += 60_000;
            let (decision, risk) = if task.id == TASK_IDS[0] && control {
                let d = if s < CONTROL_T1_SIGNED { Decision::Sign } else { Decision::Reject };
                (d, risks.get(s).copied().unwrap_or(3))
            } else {
                (task.safe_action, 3)
            };
            out.push(record(&session, &task.id, condition, decision, risk, t0));
        }
    }
    out
}
