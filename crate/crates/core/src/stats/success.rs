//! Task success measures: score, duration, efficiency, and the proportion of
//! smooth turn transitions.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{IngestError, StatsError};
use crate::ingest::{DialogAnnotation, Gender};
use crate::util;

/// Success measures of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSuccess {
    pub session: String,
    pub task_id: String,
    pub describer_gender: Gender,
    pub follower_gender: Gender,
    pub score: f64,
    /// Task end minus task start, seconds.
    pub duration: f64,
    /// Score divided by duration.
    pub efficiency: f64,
    /// Fraction of speaker-change latencies inside the smooth interval;
    /// `None` when the task has no speaker change.
    pub smooth: Option<f64>,
}

/// Computes per-task success measures.
///
/// A transition is the latency `next.start - prev.end` at a speaker change
/// between consecutive turns of the same task; it counts as smooth inside
/// `[-smooth_half, smooth_half]` seconds. Latencies below the interval are
/// interruptions, above it vacillations.
pub fn task_success(
    ann: &DialogAnnotation,
    smooth_half: f64,
) -> Result<Vec<TaskSuccess>, StatsError> {
    let mut out = Vec::new();
    for task in &ann.tasks {
        let duration = task.end - task.start;
        if duration <= 0.0 {
            return Err(StatsError::ZeroDuration {
                task_id: task.task_id.clone(),
            });
        }
        let turns: Vec<&crate::ingest::Turn> = ann
            .turns
            .iter()
            .filter(|t| t.task == task.task_id)
            .collect();
        let mut smooth_hits = 0usize;
        let mut transitions = 0usize;
        for w in turns.windows(2) {
            if w[0].speaker != w[1].speaker {
                transitions += 1;
                let latency = w[1].start - w[0].end;
                if latency >= -smooth_half && latency <= smooth_half {
                    smooth_hits += 1;
                }
            }
        }
        let follower_gender = ann
            .speakers
            .iter()
            .find(|s| s.id != task.describer)
            .map(|s| s.gender)
            .unwrap_or(Gender::Female);
        out.push(TaskSuccess {
            session: ann.session_id.clone(),
            task_id: task.task_id.clone(),
            describer_gender: ann.gender_of(&task.describer).unwrap_or(Gender::Female),
            follower_gender,
            score: task.score,
            duration,
            efficiency: task.score / duration,
            smooth: (transitions > 0).then(|| smooth_hits as f64 / transitions as f64),
        });
    }
    Ok(out)
}

/// Classifies a single latency against the smooth interval.
pub fn transition_kind(latency: f64, smooth_half: f64) -> &'static str {
    if latency < -smooth_half {
        "interruption"
    } else if latency > smooth_half {
        "vacillation"
    } else {
        "smooth"
    }
}

fn z_scores(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let (Some(m), Some(sd)) = (util::mean(&present), util::pop_std(&present)) else {
        return vec![None; values.len()];
    };
    values
        .iter()
        .map(|v| v.map(|v| if sd > 0.0 { (v - m) / sd } else { 0.0 }))
        .collect()
}

/// Renders the task success table as CSV, including corpus-wide z-scored
/// columns of each measure.
pub fn success_to_csv(rows: &[TaskSuccess]) -> String {
    let score: Vec<Option<f64>> = rows.iter().map(|r| Some(r.score)).collect();
    let duration: Vec<Option<f64>> = rows.iter().map(|r| Some(r.duration)).collect();
    let efficiency: Vec<Option<f64>> = rows.iter().map(|r| Some(r.efficiency)).collect();
    let smooth: Vec<Option<f64>> = rows.iter().map(|r| r.smooth).collect();
    let zs = [
        z_scores(&score),
        z_scores(&duration),
        z_scores(&efficiency),
        z_scores(&smooth),
    ];
    let mut out = String::from(
        "session,task,describer_gender,follower_gender,score,duration,efficiency,smooth,\
         score_z,duration_z,efficiency_z,smooth_z\n",
    );
    for (i, r) in rows.iter().enumerate() {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.session,
            r.task_id,
            r.describer_gender.code(),
            r.follower_gender.code(),
            r.score,
            r.duration,
            r.efficiency,
            opt(r.smooth),
            opt(zs[0][i]),
            opt(zs[1][i]),
            opt(zs[2][i]),
            opt(zs[3][i]),
        );
    }
    out
}

/// Writes the success CSV to a file.
pub fn write_success_csv(path: impl AsRef<Path>, rows: &[TaskSuccess]) -> Result<(), IngestError> {
    std::fs::write(path.as_ref(), success_to_csv(rows)).map_err(|e| IngestError::Io {
        path: path.as_ref().to_path_buf(),
        source: e,
    })
}
