use serde::{Deserialize, Serialize};

use super::validate::Verdict;
use crate::grid::CellIndex;
use crate::planner::PlanResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StageVerdict {
    Accepted,
    Rejected { reason: String },
    TransportError { message: String },
    /// The stage output was replaced by a geometric default.
    Fallback { reason: String },
}

/// One model exchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<usize>,
    pub attempt: u32,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    /// Verbatim reply, absent when the client failed.
    pub reply: Option<String>,
    pub parsed: Option<serde_json::Value>,
    pub verdict: StageVerdict,
    pub duration_s: f64,
}

/// Validation of one stitched stage-3 candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub stitched: Vec<CellIndex>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub records: Vec<StageRecord>,
    pub rounds: Vec<RoundRecord>,
    pub notes: Vec<String>,
    pub result: Option<PlanResult>,
    pub failure: Option<String>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    /// Copy with every wall-clock field zeroed, for determinism checks.
    pub fn without_timings(&self) -> Transcript {
        let mut t = self.clone();
        for r in &mut t.records {
            r.duration_s = 0.0;
        }
        if let Some(res) = &mut t.result {
            res.runtime_s = 0.0;
        }
        t
    }

    pub fn attempts(&self, stage: u8) -> usize {
        self.records.iter().filter(|r| r.stage == stage).count()
    }
}
