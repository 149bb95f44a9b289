use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wanav_core::grid::{encode_png, render_heatmap, synthesize_map, RenderOptions, SyntheticSpec};
use wanav_core::io::write_atomic;
use wanav_core::planner::{plan_astar, plan_nwa};
use wanav_core::scenario::{aggregate, format_csv, format_markdown, render_figure, run_scenario, FigureSeries, MapSource, RunRecord, ScottSource};
use wanav_core::scott::{run_scott, HttpClient, HttpConfig, MockClient, MockScript, ModelClient, ScottError};
use wanav_core::{plan_dpwa, plan_dpwa_masked, Algorithm, Error, GridMap, PlanResult, Scenario};

#[derive(Parser)]
#[command(name = "wanav", version, about = "Wireless-aware path planning on radio-map grids")]
struct Cli {
    /// Seed overriding the scenario (or generator spec) seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Md,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one path and print the result.
    Plan(PlanArgs),
    /// Run scenario files and write tables, figures and transcripts.
    Bench(BenchArgs),
    /// Render a radio map as a heatmap PNG.
    Render(RenderArgs),
    /// Generate a synthetic radio map from a spec file.
    GenMap(GenMapArgs),
    /// Run the SCoTT pipeline once and write its transcript.
    Scott(ScottArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Scenario file (TOML).
    #[arg(long, required_unless_present = "map")]
    scenario: Option<PathBuf>,
    /// Radio-map JSON, used instead of a scenario.
    #[arg(long, conflicts_with = "scenario", requires_all = ["start", "goal", "threshold"])]
    map: Option<PathBuf>,
    /// Start in world coordinates, `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    start: Option<[f64; 2]>,
    /// Goal in world coordinates, `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    goal: Option<[f64; 2]>,
    /// Average path gain threshold G.
    #[arg(long)]
    threshold: Option<f64>,
    /// Fixed DP horizon instead of the automatic one.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct ClientArgs {
    /// Scripted model replies (JSON).
    #[arg(long, conflicts_with = "client_config")]
    mock_script: Option<PathBuf>,
    /// Chat-completions client settings (TOML).
    #[arg(long)]
    client_config: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// astar, nwa, dpwa, scott or scott-dpwa.
    #[arg(long, short)]
    algorithm: String,
    #[command(flatten)]
    client: ClientArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,
    /// Repetitions per algorithm, overriding the scenario.
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    client: ClientArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, required_unless_present = "scenario")]
    map: Option<PathBuf>,
    #[arg(long, conflicts_with = "map")]
    scenario: Option<PathBuf>,
    /// PlanResult JSON files to overlay.
    #[arg(long = "path")]
    paths: Vec<PathBuf>,
    /// Output file; defaults to `<out-dir>/heatmap.png`.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Pixels per cell of a heatmap without overlays.
    #[arg(long, default_value_t = 12)]
    px_per_cell: u32,
}

#[derive(Args)]
struct GenMapArgs {
    /// Generator spec, TOML or JSON (by extension).
    spec: PathBuf,
    /// Output file; defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScottArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    client: ClientArgs,
}

/// A command failure and its exit code.
enum Failure {
    Infeasible(String),
    Input(String),
    Client(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Infeasible(_) => 1,
            Failure::Input(_) => 2,
            Failure::Client(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Infeasible(m) | Failure::Input(m) | Failure::Client(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => {
            let x = x.parse::<f64>().map_err(|e| format!("bad x `{x}`: {e}"))?;
            let y = y.parse::<f64>().map_err(|e| format!("bad y `{y}`: {e}"))?;
            Ok([x, y])
        }
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Plan(args) => plan(&cli, args),
        Command::Bench(args) => bench(&cli, args),
        Command::Render(args) => render(&cli, args),
        Command::GenMap(args) => gen_map(&cli, args),
        Command::Scott(args) => scott(&cli, args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_problem(cli: &Cli, args: &ProblemArgs) -> Result<Scenario, Failure> {
    let mut scenario = match (&args.scenario, &args.map) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Some(map)) => Scenario {
            name: map.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned()),
            title: None,
            map: MapSource::File(map.clone()),
            start: args.start.expect("clap requires start"),
            goal: args.goal.expect("clap requires goal"),
            threshold: args.threshold.expect("clap requires threshold"),
            runs: 1,
            seed: 0,
            algorithms: Algorithm::ALL.iter().map(|a| a.slug().to_owned()).collect(),
            horizon: None,
            scott: Default::default(),
            mock_script: None,
            base_dir: PathBuf::new(),
        },
        (None, None) => return Err(Failure::Input("either --scenario or --map is required".into())),
    };
    if let Some(s) = args.start {
        scenario.start = s;
    }
    if let Some(g) = args.goal {
        scenario.goal = g;
    }
    if let Some(t) = args.threshold {
        scenario.threshold = t;
    }
    if args.horizon.is_some() {
        scenario.horizon = args.horizon;
    }
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    Ok(scenario)
}

/// Live client from `--client-config`, if given.
fn live_client(args: &ClientArgs) -> Result<Option<HttpClient>, Failure> {
    let Some(path) = &args.client_config else { return Ok(None) };
    let text = wanav_core::io::read_to_string(path)?;
    Ok(Some(HttpClient::new(HttpConfig::from_toml(&text)?)))
}

fn mock_override(args: &ClientArgs) -> Result<Option<MockScript>, Failure> {
    Ok(args.mock_script.as_deref().map(MockScript::load).transpose()?)
}

/// Writes to stdout; a closed pipe on the reading side is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            log::warn!("stdout: {e}");
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    }
    write_atomic(path, bytes)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn print_result(cli: &Cli, map: &GridMap, scenario: &Scenario, result: &PlanResult) -> CmdResult {
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => emit(&format!("{}\n", result.to_json())),
        fmt => {
            let req = scenario.request(map)?;
            let rec = RunRecord::from_result(result.algorithm, 0, scenario.seed, map, &req, result.clone(), result.runtime_s);
            let rows = aggregate(&[rec]);
            emit(&if fmt == Format::Csv { format_csv(&rows) } else { format_markdown(&rows) });
        }
    }
    if result.feasible {
        Ok(())
    } else if result.found() {
        Err(Failure::Infeasible(format!("{} path misses the threshold G = {}", result.algorithm, scenario.threshold)))
    } else {
        Err(Failure::Infeasible(format!("{} found no feasible path", result.algorithm)))
    }
}

/// Runs SCoTT with the client chosen by the flags: live, `--mock-script`,
/// the scenario's script, or the DP-WA* replay.
fn scott_once(
    cli: &Cli,
    scenario: &Scenario,
    map: &GridMap,
    client_args: &ClientArgs,
) -> Result<wanav_core::scott::ScottOutcome, Failure> {
    let req = scenario.request(map)?;
    let live = live_client(client_args)?;
    let mock: Option<MockClient> = match &live {
        Some(_) => None,
        None => {
            let script = match mock_override(client_args)? {
                Some(s) => Some(s),
                None => scenario.load_mock_script()?,
            };
            Some(scenario.scripted_client(map, &req, scenario.seed, script.as_ref(), None)?)
        }
    };
    let client: &dyn ModelClient = match (&live, &mock) {
        (Some(l), _) => l,
        (None, Some(m)) => m,
        (None, None) => unreachable!("one client is always built"),
    };
    let outcome = run_scott(map, &req, &scenario.scott, client);
    let transcript = match &outcome {
        Ok(o) => &o.transcript,
        Err(f) => &f.transcript,
    };
    let path = cli.out_dir.join(format!("{}-transcript.json", scenario.name));
    write_file(&path, transcript.to_json().as_bytes())?;
    outcome.map_err(|f| match f.error {
        ScottError::Transport { .. } => Failure::Client(f.error.to_string()),
        ScottError::Input(e) => Failure::Input(e.to_string()),
        other => Failure::Infeasible(other.to_string()),
    })
}

fn plan(cli: &Cli, args: &PlanArgs) -> CmdResult {
    let scenario = load_problem(cli, &args.problem)?;
    let algorithm: Algorithm = args.algorithm.parse()?;
    let map = scenario.load_map()?;
    let req = scenario.request(&map)?;
    let opts = scenario.dp_options();
    let result = match algorithm {
        Algorithm::AStar => plan_astar(&map, &req)?,
        Algorithm::NWa => plan_nwa(&map, &req)?,
        Algorithm::DpWa => plan_dpwa(&map, &req, &opts)?,
        Algorithm::Scott => scott_once(cli, &scenario, &map, &args.client)?.result,
        Algorithm::ScottDpWa => {
            let out = scott_once(cli, &scenario, &map, &args.client)?;
            plan_dpwa_masked(&map, &req, &out.mask, &opts)?
        }
    };
    print_result(cli, &map, &scenario, &result)
}

fn scott(cli: &Cli, args: &ScottArgs) -> CmdResult {
    let scenario = load_problem(cli, &args.problem)?;
    let map = scenario.load_map()?;
    let out = scott_once(cli, &scenario, &map, &args.client)?;
    print_result(cli, &map, &scenario, &out.result)
}

fn bench(cli: &Cli, args: &BenchArgs) -> CmdResult {
    let live = live_client(&args.client)?;
    let mock = mock_override(&args.client)?;
    for path in &args.scenarios {
        let mut scenario = Scenario::load(path)?;
        if let Some(seed) = cli.seed {
            scenario.seed = seed;
        }
        if let Some(runs) = args.runs {
            scenario.runs = runs;
        }
        let mock_client = mock.clone().map(MockClient::new);
        let source = match (&live, &mock_client) {
            (Some(l), _) => ScottSource::Client(l),
            (None, Some(m)) => ScottSource::Client(m),
            (None, None) => ScottSource::Scripted,
        };
        let report = run_scenario(&scenario, source)?;
        let dir = &cli.out_dir;
        let name = &scenario.name;
        write_file(&dir.join(format!("{name}.md")), format_markdown(&report.rows).as_bytes())?;
        write_file(&dir.join(format!("{name}.csv")), format_csv(&report.rows).as_bytes())?;
        write_file(&dir.join(format!("{name}.json")), report.to_json().as_bytes())?;
        let figure = render_figure(&report.map, &report.figure_series())?;
        write_file(&dir.join(format!("{name}.png")), &encode_png(&figure)?)?;
        for (run, transcript) in &report.transcripts {
            write_file(&dir.join(name).join(format!("scott-run-{run}.json")), transcript.to_json().as_bytes())?;
        }
        match cli.format.unwrap_or(Format::Md) {
            Format::Md => {
                let title = scenario.title.as_deref().unwrap_or(name);
                emit(&format!("## {title} (G = {}, {} runs)\n\n{}\n", scenario.threshold, scenario.runs, format_markdown(&report.rows)));
            }
            Format::Csv => emit(&format_csv(&report.rows)),
            Format::Json => emit(&format!("{}\n", report.to_json())),
        }
    }
    Ok(())
}

fn render(cli: &Cli, args: &RenderArgs) -> CmdResult {
    let map = match (&args.map, &args.scenario) {
        (Some(m), _) => GridMap::from_json(&wanav_core::io::read_to_string(m)?)?,
        (None, Some(s)) => Scenario::load(s)?.load_map()?,
        (None, None) => return Err(Failure::Input("either --map or --scenario is required".into())),
    };
    let png = if args.paths.is_empty() {
        let opts = RenderOptions { px_per_cell: args.px_per_cell, ..RenderOptions::default() };
        encode_png(&render_heatmap(&map, &[], &opts)?)?
    } else {
        let series = args
            .paths
            .iter()
            .map(|p| {
                let text = wanav_core::io::read_to_string(p)?;
                let r: PlanResult = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
                Ok(FigureSeries { label: r.algorithm.label().to_owned(), waypoints: r.waypoints })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        encode_png(&render_figure(&map, &series)?)?
    };
    let output = args.output.clone().unwrap_or_else(|| cli.out_dir.join("heatmap.png"));
    write_file(&output, &png)
}

fn gen_map(cli: &Cli, args: &GenMapArgs) -> CmdResult {
    let text = wanav_core::io::read_to_string(&args.spec)?;
    let mut spec: SyntheticSpec = if args.spec.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.spec.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.spec.display())))?
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let json = format!("{}\n", synthesize_map(&spec)?.to_json());
    match &args.output {
        Some(path) => write_file(path, json.as_bytes()),
        None => {
            emit(&json);
            Ok(())
        }
    }
}
