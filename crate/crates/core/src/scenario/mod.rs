//! Benchmark scenarios: a map, a start/goal pair and a threshold, run
//! repeatedly through a set of planners and aggregated into metric rows.

mod figure;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dpwa::{plan_dpwa, plan_dpwa_masked, DpOptions, Horizon};
use crate::error::{Error, Result};
use crate::focus::{mask_stats, MaskCache, MaskKey, MaskStats};
use crate::grid::{synthesize_map, CellIndex, GridMap, SyntheticSpec};
use crate::planner::{plan_astar, plan_nwa, Algorithm, PlanRequest, PlanResult};
use crate::scott::{reference_script, run_scott, validate_candidate, MockClient, MockScript, ModelClient, ScottConfig, Transcript};

pub use figure::{algorithm_style, emit_figure, render_figure, FigureSeries};
pub use table::{emit_table, format_csv, format_markdown, TABLE_COLUMNS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    /// Radio-map JSON, relative to the scenario file.
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

fn default_runs() -> usize {
    10
}

fn default_algorithms() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.slug().to_owned()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub title: Option<String>,
    pub map: MapSource,
    /// World coordinates, snapped to the nearest traversable cell.
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub threshold: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    /// Fixed DP horizon; absent means automatic.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub scott: ScottConfig,
    /// Scripted model replies. Without one, SCoTT is scripted from the
    /// DP-WA* path of the same run.
    #[serde(default)]
    pub mock_script: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.base_dir = base_dir.into();
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, dir).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.algorithms()?.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        self.scott.validate()
    }

    /// Selected algorithms in canonical table order.
    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        let chosen = self.algorithms.iter().map(|s| s.parse()).collect::<Result<Vec<Algorithm>>>()?;
        Ok(Algorithm::ALL.into_iter().filter(|a| chosen.contains(a)).collect())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() { path.to_path_buf() } else { self.base_dir.join(path) }
    }

    pub fn load_map(&self) -> Result<GridMap> {
        match &self.map {
            MapSource::File(p) => GridMap::from_json(&crate::io::read_to_string(&self.resolve(p))?),
            MapSource::Synthetic(spec) => synthesize_map(spec),
        }
    }

    pub fn request(&self, map: &GridMap) -> Result<PlanRequest> {
        let snap = |name: &str, p: [f64; 2]| {
            map.snap(p)
                .ok_or_else(|| Error::Input(format!("{name} ({}, {}) has no traversable cell within snapping range", p[0], p[1])))
        };
        let req = PlanRequest::new(snap("start", self.start)?, snap("goal", self.goal)?, self.threshold);
        req.validate(map)?;
        Ok(req)
    }

    /// Mock client for SCoTT: the given script (normally the scenario's
    /// `mock_script`), else replies replaying the DP-WA* path, computed here
    /// when `dp_path` is absent.
    pub fn scripted_client(
        &self,
        map: &GridMap,
        req: &PlanRequest,
        seed: u64,
        script: Option<&MockScript>,
        dp_path: Option<&[CellIndex]>,
    ) -> Result<MockClient> {
        if let Some(script) = script {
            return Ok(MockClient::new(script.clone()));
        }
        let computed;
        let path = match dp_path {
            Some(p) => p,
            None => {
                let r = plan_dpwa(map, req, &self.dp_options())?;
                if !r.feasible {
                    return Err(Error::Input("no feasible DP-WA* path to script SCoTT from".into()));
                }
                computed = r.waypoints;
                &computed
            }
        };
        Ok(MockClient::new(reference_script(map, req, &self.scott, path, seed)?))
    }

    /// The scenario's mock script, if it names one.
    pub fn load_mock_script(&self) -> Result<Option<MockScript>> {
        self.mock_script.as_ref().map(|p| MockScript::load(&self.resolve(p))).transpose()
    }

    pub fn dp_options(&self) -> DpOptions {
        DpOptions::with_horizon(self.horizon.map_or(Horizon::Auto, Horizon::Fixed))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    /// Obstacle-free, connected and meeting the threshold.
    Valid,
    /// A path was produced but violates a constraint.
    Invalid,
    /// No path, or the planner errored.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub outcome: RunOutcome,
    /// Wall-clock time of the whole invocation, including failures.
    pub runtime_s: f64,
    pub result: Option<PlanResult>,
    #[serde(default)]
    pub violations: Vec<String>,
    #[serde(default)]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn from_result(algorithm: Algorithm, run: usize, seed: u64, map: &GridMap, req: &PlanRequest, result: PlanResult, runtime_s: f64) -> Self {
        let (outcome, violations) = if result.found() {
            let verdict = validate_candidate(map, &result.waypoints, req.threshold);
            let outcome = if verdict.is_valid() { RunOutcome::Valid } else { RunOutcome::Invalid };
            (outcome, verdict.violations.iter().map(ToString::to_string).collect())
        } else {
            (RunOutcome::Failed, Vec::new())
        };
        Self { algorithm, run, seed, outcome, runtime_s, result: Some(result), violations, error: None }
    }

    fn failure(algorithm: Algorithm, run: usize, seed: u64, error: String, runtime_s: f64) -> Self {
        Self { algorithm, run, seed, outcome: RunOutcome::Failed, runtime_s, result: None, violations: Vec::new(), error: Some(error) }
    }

    /// The planned path, when one was produced.
    pub fn path(&self) -> Option<&PlanResult> {
        self.result.as_ref().filter(|r| r.found())
    }
}

/// Aggregate over the runs of one algorithm. Gain, length and expanded
/// states are averaged over runs that produced a path; runtime over all runs.
/// SCoTT rows carry no expanded states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub avg_path_gain: Option<f64>,
    pub path_length_m: Option<f64>,
    pub runtime_s: f64,
    pub success_rate_percent: f64,
    pub expanded_states: Option<f64>,
    /// DP-WA* expanded states divided by this row's, for the DP family.
    pub speedup_vs_reference: Option<f64>,
    pub gain_stddev: Option<f64>,
    pub length_stddev: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population standard deviation; exactly zero for identical samples.
fn stddev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.iter().all(|&x| x == xs[0]) {
        return Some(0.0);
    }
    Some((xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt())
}

/// Per-algorithm aggregates of `records`, in canonical algorithm order.
pub fn aggregate(records: &[RunRecord]) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = Algorithm::ALL
        .into_iter()
        .filter_map(|alg| {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == alg).collect();
            if runs.is_empty() {
                return None;
            }
            let paths: Vec<&PlanResult> = runs.iter().filter_map(|r| r.path()).collect();
            let gains: Vec<f64> = paths.iter().map(|p| p.avg_gain).collect();
            let lengths: Vec<f64> = paths.iter().map(|p| p.path_length).collect();
            let expanded: Vec<f64> = paths.iter().map(|p| p.expanded_states as f64).collect();
            let runtimes: Vec<f64> = runs.iter().map(|r| r.runtime_s).collect();
            let valid = runs.iter().filter(|r| r.outcome == RunOutcome::Valid).count();
            Some(MetricsRow {
                algorithm: alg,
                runs: runs.len(),
                avg_path_gain: mean(&gains),
                path_length_m: mean(&lengths),
                runtime_s: mean(&runtimes).unwrap_or(0.0),
                success_rate_percent: 100.0 * valid as f64 / runs.len() as f64,
                expanded_states: if alg == Algorithm::Scott { None } else { mean(&expanded) },
                speedup_vs_reference: None,
                gain_stddev: stddev(&gains),
                length_stddev: stddev(&lengths),
            })
        })
        .collect();
    let reference = rows
        .iter()
        .find(|r| r.algorithm == Algorithm::DpWa)
        .and_then(|r| r.expanded_states)
        .filter(|&e| e > 0.0);
    if let Some(reference) = reference {
        for row in &mut rows {
            if matches!(row.algorithm, Algorithm::DpWa | Algorithm::ScottDpWa) {
                row.speedup_vs_reference = row.expanded_states.filter(|&e| e > 0.0).map(|e| reference / e);
            }
        }
    }
    rows
}

#[derive(Debug)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub map: GridMap,
    pub request: PlanRequest,
    pub records: Vec<RunRecord>,
    pub rows: Vec<MetricsRow>,
    /// SCoTT transcripts by run index.
    pub transcripts: Vec<(usize, Transcript)>,
    /// Statistics of the mask used by SCoTT-DP-WA*.
    pub mask_stats: Option<MaskStats>,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    name: &'a str,
    threshold: f64,
    start: CellIndex,
    goal: CellIndex,
    seed: u64,
    runs: usize,
    rows: &'a [MetricsRow],
    records: &'a [RunRecord],
    mask_stats: Option<MaskStats>,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        let doc = ReportDocument {
            name: &self.scenario.name,
            threshold: self.request.threshold,
            start: self.request.start,
            goal: self.request.goal,
            seed: self.scenario.seed,
            runs: self.scenario.runs,
            rows: &self.rows,
            records: &self.records,
            mask_stats: self.mask_stats,
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    /// First path of each algorithm, in table order.
    pub fn figure_series(&self) -> Vec<FigureSeries> {
        self.rows
            .iter()
            .filter_map(|row| {
                let rec = self.records.iter().find(|r| r.algorithm == row.algorithm && r.path().is_some())?;
                Some(FigureSeries { label: row.algorithm.label().to_owned(), waypoints: rec.path()?.waypoints.clone() })
            })
            .collect()
    }
}

/// Where SCoTT gets its replies from.
pub enum ScottSource<'a> {
    /// The scenario's mock script, or a script replaying the DP-WA* path.
    Scripted,
    Client(&'a dyn ModelClient),
}

fn elapsed(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64()
}

/// Runs every selected algorithm `runs` times. Planner errors become failed
/// runs of that algorithm; only scenario-level problems (map, endpoints,
/// mock script) are returned as errors.
pub fn run_scenario(scenario: &Scenario, source: ScottSource<'_>) -> Result<ScenarioReport> {
    scenario.validate()?;
    let map = scenario.load_map()?;
    let req = scenario.request(&map)?;
    let algorithms = scenario.algorithms()?;
    let dp_opts = scenario.dp_options();
    let file_script = scenario.load_mock_script()?;
    let wants_scott = algorithms.iter().any(|a| matches!(a, Algorithm::Scott | Algorithm::ScottDpWa));
    let cache = MaskCache::in_memory();
    let key = MaskKey::new(&map, req.start, req.goal, req.threshold);

    let mut records = Vec::new();
    let mut transcripts = Vec::new();
    let mut stats = None;
    for run in 0..scenario.runs {
        let seed = scenario.seed.wrapping_add(run as u64);
        let mut dp_path: Option<Vec<CellIndex>> = None;
        for &alg in &algorithms {
            let t0 = Instant::now();
            let planned = match alg {
                Algorithm::AStar => plan_astar(&map, &req),
                Algorithm::NWa => plan_nwa(&map, &req),
                Algorithm::DpWa => plan_dpwa(&map, &req, &dp_opts),
                Algorithm::Scott | Algorithm::ScottDpWa => continue,
            };
            let rec = match planned {
                Ok(r) => {
                    if alg == Algorithm::DpWa && r.feasible {
                        dp_path = Some(r.waypoints.clone());
                    }
                    RunRecord::from_result(alg, run, seed, &map, &req, r, elapsed(t0))
                }
                Err(e) => RunRecord::failure(alg, run, seed, e.to_string(), elapsed(t0)),
            };
            records.push(rec);
        }
        if !wants_scott {
            continue;
        }

        let t0 = Instant::now();
        let scripted;
        let client: std::result::Result<&dyn ModelClient, String> = match &source {
            ScottSource::Client(c) => Ok(*c),
            ScottSource::Scripted => match scenario.scripted_client(&map, &req, seed, file_script.as_ref(), dp_path.as_deref()) {
                Ok(c) => {
                    scripted = c;
                    Ok(&scripted)
                }
                Err(e) => Err(e.to_string()),
            },
        };
        let (scott_record, mask) = match client {
            Err(msg) => (RunRecord::failure(Algorithm::Scott, run, seed, msg, elapsed(t0)), None),
            Ok(client) => match run_scott(&map, &req, &scenario.scott, client) {
                Ok(out) => {
                    transcripts.push((run, out.transcript));
                    let rec = RunRecord::from_result(Algorithm::Scott, run, seed, &map, &req, out.result, elapsed(t0));
                    (rec, Some(out.mask))
                }
                Err(fail) => {
                    transcripts.push((run, fail.transcript));
                    let rec = RunRecord::failure(Algorithm::Scott, run, seed, fail.error.to_string(), elapsed(t0));
                    (rec, fail.mask)
                }
            },
        };
        if algorithms.contains(&Algorithm::Scott) {
            records.push(scott_record);
        }
        if algorithms.contains(&Algorithm::ScottDpWa) {
            let t0 = Instant::now();
            let masked = cache
                .get_or_build(&map, key.clone(), || {
                    mask.clone().ok_or_else(|| Error::Input("SCoTT produced no focus areas".into()))
                })
                .and_then(|m| {
                    stats = Some(mask_stats(&map, &m));
                    plan_dpwa_masked(&map, &req, &m, &dp_opts)
                });
            records.push(match masked {
                Ok(r) => RunRecord::from_result(Algorithm::ScottDpWa, run, seed, &map, &req, r, elapsed(t0)),
                Err(e) => RunRecord::failure(Algorithm::ScottDpWa, run, seed, e.to_string(), elapsed(t0)),
            });
        }
    }
    let rows = aggregate(&records);
    Ok(ScenarioReport { scenario: scenario.clone(), map, request: req, records, rows, transcripts, mask_stats: stats })
}
