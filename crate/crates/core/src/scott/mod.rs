//! Three-stage model orchestration: coarse path from the heatmap image,
//! focus-area selection, then per-area refinement on sliced gain data.
//!
//! Every model reply is parsed from its last fenced JSON block and checked
//! before it is used. A rejected reply is retried with the same prompt plus a
//! one-line summary of what was wrong, at most `max_retries` times. Stage 2
//! falls back to arc-length centers instead of failing. The final path is
//! returned only if it passes [`validate_candidate`].

mod client;
mod parse;
mod prompt;
mod reference;
mod transcript;
mod validate;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::focus::{build_focus_areas, fit_max_distance, focus_areas_from_centers, AreaSource, FocusAreaSet};
use crate::grid::{encode_png, render_heatmap, CellIndex, GridMap, RenderOptions};
use crate::planner::{Algorithm, PlanRequest, PlanResult};

pub use client::{
    ClientError, HttpClient, HttpConfig, MockClient, MockScript, ModelClient, ModelRequest, ScriptedReply, SCRIPT_VERSION,
};
pub use parse::{last_fenced_block, parse_centers_reply, parse_points, parse_waypoint_reply, ParseError};
pub use prompt::{prompt_data, render_subtask_prompt, RenderedPrompt, Subtask, IMAGE_MARKER};
pub use reference::reference_script;
pub use transcript::{RoundRecord, StageRecord, StageVerdict, Transcript};
pub use validate::{validate_candidate, Verdict, Violation, MAX_BRIDGED_GAP};

fn default_n_areas() -> usize {
    6
}

fn default_target_reduction() -> f64 {
    0.48
}

fn default_retries() -> u32 {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScottConfig {
    /// Number of focus areas N requested in stage 2.
    #[serde(default = "default_n_areas")]
    pub n_areas: usize,
    /// Focus-area radius in meters. When absent it is fitted to the coarse
    /// path so the mask cuts `target_reduction` of the traversable cells.
    #[serde(default)]
    pub max_distance: Option<f64>,
    #[serde(default = "default_target_reduction")]
    pub target_reduction: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Passed to the client; 0 asks a live model for its most deterministic
    /// output.
    #[serde(default)]
    pub temperature: f64,
}

impl Default for ScottConfig {
    fn default() -> Self {
        Self {
            n_areas: default_n_areas(),
            max_distance: None,
            target_reduction: default_target_reduction(),
            max_retries: default_retries(),
            temperature: 0.0,
        }
    }
}

impl ScottConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_areas == 0 {
            return Err(Error::Config("n_areas must be at least 1".into()));
        }
        if let Some(d) = self.max_distance {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("max_distance {d} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.target_reduction) {
            return Err(Error::Config(format!("target_reduction {} outside [0, 1)", self.target_reduction)));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScottError {
    #[error(transparent)]
    Input(#[from] Error),
    #[error("subtask {stage}: {source}")]
    Transport {
        stage: u8,
        #[source]
        source: ClientError,
    },
    #[error("subtask {stage} failed after {attempts} attempts: {reason}")]
    SubtaskFailed { stage: u8, attempts: u32, reason: String },
    #[error("no valid path after {rounds} refinement rounds; best candidate: {}", .best.summary())]
    ValidationFailed { rounds: u32, best: Box<Verdict> },
}

#[derive(Debug)]
pub struct ScottOutcome {
    pub result: PlanResult,
    pub transcript: Transcript,
    pub coarse_path: Vec<CellIndex>,
    /// Focus areas from stage 2, reusable for masked DP.
    pub mask: FocusAreaSet,
}

#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct ScottFailure {
    pub error: ScottError,
    pub transcript: Transcript,
    pub mask: Option<FocusAreaSet>,
}

impl ScottFailure {
    pub fn is_transport(&self) -> bool {
        matches!(self.error, ScottError::Transport { .. })
    }
}

struct Pipeline<'a, C: ModelClient + ?Sized> {
    map: &'a GridMap,
    request: &'a PlanRequest,
    config: &'a ScottConfig,
    client: &'a C,
    image_png: Vec<u8>,
    image_ref: String,
    transcript: Transcript,
}

/// Either a parsed stage output or the reason it was rejected.
type Checked<T> = Result<(T, serde_json::Value), String>;

impl<C: ModelClient + ?Sized> Pipeline<'_, C> {
    /// Sends one prompt and records the exchange. `check` turns the reply
    /// into the stage output or a rejection reason.
    fn exchange<T>(
        &mut self,
        prompt: &RenderedPrompt,
        attempt: u32,
        area: Option<usize>,
        check: impl FnOnce(&str) -> Checked<T>,
    ) -> Result<Result<T, String>, ScottError> {
        let request = ModelRequest {
            stage: prompt.stage,
            attempt,
            area,
            prompt: &prompt.text,
            image_png: prompt.attach_image.then_some(self.image_png.as_slice()),
            temperature: self.config.temperature,
        };
        let t0 = Instant::now();
        let reply = self.client.complete(&request);
        let duration_s = t0.elapsed().as_secs_f64();
        let mut record = StageRecord {
            stage: prompt.stage,
            area,
            attempt,
            prompt: prompt.text.clone(),
            image: prompt.attach_image.then(|| self.image_ref.clone()),
            data: area.map(|k| format!("focus area {k}: {} cells", prompt.data_cells.len())),
            reply: None,
            parsed: None,
            verdict: StageVerdict::Accepted,
            duration_s,
        };
        let reply = match reply {
            Ok(r) => r,
            Err(source) => {
                record.verdict = StageVerdict::TransportError { message: source.to_string() };
                self.transcript.records.push(record);
                return Err(ScottError::Transport { stage: prompt.stage, source });
            }
        };
        let outcome = check(&reply);
        record.reply = Some(reply);
        let outcome = match outcome {
            Ok((value, parsed)) => {
                record.parsed = Some(parsed);
                Ok(value)
            }
            Err(reason) => {
                record.verdict = StageVerdict::Rejected { reason: reason.clone() };
                Err(reason)
            }
        };
        self.transcript.records.push(record);
        Ok(outcome)
    }

    /// Asks until a reply passes `check` or the retry budget is spent.
    fn ask<T>(
        &mut self,
        base: &RenderedPrompt,
        feedback: Option<&str>,
        attempt: &mut u32,
        area: Option<usize>,
        check: impl Fn(&str) -> Checked<T>,
    ) -> Result<Result<T, String>, ScottError> {
        let mut last = String::new();
        for i in 0..=self.config.max_retries {
            let prompt = match (i, feedback) {
                (0, None) => base.clone(),
                (0, Some(f)) => base.with_feedback(f),
                _ => base.with_feedback(&last),
            };
            let outcome = self.exchange(&prompt, *attempt, area, &check)?;
            *attempt += 1;
            match outcome {
                Ok(v) => return Ok(Ok(v)),
                Err(reason) => last = reason,
            }
        }
        Ok(Err(last))
    }

    fn coarse_path(&mut self) -> Result<Vec<CellIndex>, ScottError> {
        let map = self.map;
        let base = render_subtask_prompt(map, self.request, &Subtask::CoarsePath);
        let mut attempt = 0;
        let cells = self
            .ask(&base, None, &mut attempt, None, |raw| {
                let cells = parse_waypoint_reply(map, raw).map_err(|e| e.to_string())?;
                let value = serde_json::to_value(&cells).expect("cells serialize");
                Ok((cells, value))
            })?
            .map_err(|reason| ScottError::SubtaskFailed { stage: 1, attempts: attempt, reason })?;
        let mut path = Vec::with_capacity(cells.len() + 2);
        if cells.first() != Some(&self.request.start) {
            path.push(self.request.start);
        }
        path.extend(cells);
        if path.last() != Some(&self.request.goal) {
            path.push(self.request.goal);
        }
        path.dedup();
        Ok(path)
    }

    fn focus_areas(&mut self, coarse: &[CellIndex]) -> Result<FocusAreaSet, ScottError> {
        let (map, request) = (self.map, self.request);
        let n = self.config.n_areas;
        let max_distance = match self.config.max_distance {
            Some(d) => d,
            None => fit_max_distance(map, coarse, n, self.config.target_reduction)?,
        };
        let base = render_subtask_prompt(map, request, &Subtask::FocusAreas { coarse_path: coarse, n_areas: n, max_distance });
        let mut attempt = 0;
        let outcome = self.ask(&base, None, &mut attempt, None, |raw| {
            let centers = parse_centers_reply(map, raw).map_err(|e| e.to_string())?;
            let set = focus_areas_from_centers(map, &centers, max_distance, AreaSource::ModelProposed)
                .map_err(|e| e.to_string())?;
            for (name, cell) in [("start", request.start), ("goal", request.goal)] {
                if !set.contains(cell) {
                    return Err(format!("no focus area contains the {name} {cell}"));
                }
            }
            Ok((set, serde_json::to_value(&centers).expect("centers serialize")))
        })?;
        match outcome {
            Ok(set) => Ok(set),
            Err(reason) => {
                self.transcript
                    .notes
                    .push(format!("stage 2 fell back to arc-length centers after {attempt} attempts: {reason}"));
                if let Some(last) = self.transcript.records.last_mut() {
                    last.verdict = StageVerdict::Fallback { reason };
                }
                Ok(build_focus_areas(map, coarse, n, max_distance)?)
            }
        }
    }

    fn refine(&mut self, mask: &FocusAreaSet) -> Result<Verdict, ScottError> {
        let (map, request) = (self.map, self.request);
        let areas = mask.areas();
        let count = areas.len();
        let mut attempts = vec![0u32; count];
        let mut feedback: Option<String> = None;
        let mut best: Option<Verdict> = None;
        for round in 0..=self.config.max_retries {
            let mut stitched: Vec<CellIndex> = vec![request.start];
            for (k, area) in areas.iter().enumerate() {
                let from = if k == 0 { map.cell_center(request.start) } else { areas[k - 1].center() };
                let to = if k + 1 == count { map.cell_center(request.goal) } else { areas[k + 1].center() };
                let base = render_subtask_prompt(map, request, &Subtask::Refine { index: k, count, area, from, to });
                let segment = self
                    .ask(&base, feedback.as_deref(), &mut attempts[k], Some(k), |raw| {
                        let cells = parse_waypoint_reply(map, raw).map_err(|e| e.to_string())?;
                        let value = serde_json::to_value(&cells).expect("cells serialize");
                        Ok((cells, value))
                    })?
                    .map_err(|reason| ScottError::SubtaskFailed { stage: 3, attempts: attempts[k], reason })?;
                stitched.extend(segment);
            }
            stitched.push(request.goal);
            stitched.dedup();
            let verdict = validate_candidate(map, &stitched, request.threshold);
            self.transcript.rounds.push(RoundRecord { round, stitched, verdict: verdict.clone() });
            if verdict.is_valid() {
                return Ok(verdict);
            }
            feedback = Some(format!("the stitched path is invalid: {}", verdict.summary()));
            let better = best.as_ref().is_none_or(|b| {
                (verdict.violations.len(), -verdict.avg_gain) < (b.violations.len(), -b.avg_gain)
            });
            if better {
                best = Some(verdict);
            }
        }
        Err(ScottError::ValidationFailed {
            rounds: self.config.max_retries + 1,
            best: Box::new(best.expect("at least one round ran")),
        })
    }
}

fn image_attachment(map: &GridMap) -> Result<(Vec<u8>, String), Error> {
    let img = render_heatmap(map, &[], &RenderOptions::default())?;
    let png = encode_png(&img)?;
    let digest = Sha256::digest(&png);
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let reference = format!("heatmap.png ({} bytes, sha256 {hex})", png.len());
    Ok((png, reference))
}

/// Runs the three subtasks against `client` and validates the result.
#[allow(clippy::result_large_err)]
pub fn run_scott<C: ModelClient + ?Sized>(
    map: &GridMap,
    request: &PlanRequest,
    config: &ScottConfig,
    client: &C,
) -> Result<ScottOutcome, ScottFailure> {
    let fail = |error: ScottError, transcript: Transcript, mask: Option<FocusAreaSet>| {
        let mut transcript = transcript;
        transcript.failure = Some(error.to_string());
        ScottFailure { error, transcript, mask }
    };
    let setup = request
        .validate(map)
        .and_then(|()| config.validate())
        .and_then(|()| image_attachment(map));
    let (image_png, image_ref) = match setup {
        Ok(v) => v,
        Err(e) => return Err(fail(e.into(), Transcript::default(), None)),
    };
    let t0 = Instant::now();
    let mut run = Pipeline {
        map,
        request,
        config,
        client,
        image_png,
        image_ref,
        transcript: Transcript::default(),
    };
    let coarse = match run.coarse_path() {
        Ok(c) => c,
        Err(e) => return Err(fail(e, run.transcript, None)),
    };
    let mask = match run.focus_areas(&coarse) {
        Ok(m) => m,
        Err(e) => return Err(fail(e, run.transcript, None)),
    };
    for w in mask.warnings() {
        run.transcript.notes.push(w.clone());
    }
    let verdict = match run.refine(&mask) {
        Ok(v) => v,
        Err(e) => return Err(fail(e, run.transcript, Some(mask))),
    };
    let mut result = PlanResult::from_path(Algorithm::Scott, map, verdict.path, request.threshold, 0);
    result.runtime_s = t0.elapsed().as_secs_f64();
    let mut transcript = run.transcript;
    transcript.result = Some(result.clone());
    Ok(ScottOutcome { result, transcript, coarse_path: coarse, mask })
}
