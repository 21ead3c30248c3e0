//! Command-line interface. Each command returns the text it prints so that
//! it can be driven from tests without spawning a process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wstlpref_core::baselines::{accuracy, cross_validate, make_splits, Method, Protocol, WstlPredictor};
use wstlpref_core::formula::parse;
use wstlpref_core::learn::{
    normalize_to_domain, random_sampling_solve, GradientSolver, LearnConfig, LearnResult, PreferenceDataset,
    RestartOutcome,
};
use wstlpref_core::scenarios::{build_pairs, generate_dataset, Scenario, ScoredPair};
use wstlpref_core::{ComputationGraph, Formula, SlotTable, WeightValuation};

use crate::config::{Config, LearnSection, PedestrianSection, StopSection};
use crate::config::{DEFAULT_PAIR_CHANNELS, DEFAULT_PAIR_THRESHOLD};
use crate::error::{Error, Result};
use crate::format::{
    load_weights, DatasetFile, LoadedDataset, Manifest, PairRecord, PairsFile, PreferenceFile,
    PreferenceRecord, ResultFile, SignalRecord, WeightsFile,
};
use crate::serve::{Elicitation, Service};
use crate::session::LoadedSession;
use crate::store::{self, Area, Document, ProjectStore, FORMAT_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "wstlpref",
    version,
    about = "Learn weighted STL specifications from pairwise preferences"
)]
pub struct Cli {
    /// Project directory used for outputs when --out is not given
    #[arg(long, global = true, default_value = ".")]
    pub project: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate scenario trajectories that satisfy (or violate) the rule
    Simulate(SimulateArgs),
    /// Draw comparison pairs of sufficiently different signals
    Pairs(PairsArgs),
    /// Order pairs by the robustness under a (possibly hidden) valuation
    Label(LabelArgs),
    /// Learn a weight valuation from preferences
    Learn(LearnArgs),
    /// Cross-validate methods on a preference file
    Eval(EvalArgs),
    /// Serve an elicitation session over HTTP
    Elicit(ElicitArgs),
    /// Print weighted robustness, optionally with a per-subformula trace
    Robustness(RobustnessArgs),
    /// Rescale a valuation into (0, 1] without changing preferences
    Normalize(NormalizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Stop,
    Pedestrian,
}

impl ScenarioArg {
    fn as_str(self) -> &'static str {
        match self {
            ScenarioArg::Stop => "stop",
            ScenarioArg::Pedestrian => "pedestrian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Random sampling in the unit box
    Rs,
    /// Gradient descent on the smoothed surrogate loss
    Gb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethodArg {
    Stl,
    Rs,
    Gb,
    Bt,
}

impl From<EvalMethodArg> for Method {
    fn from(m: EvalMethodArg) -> Self {
        match m {
            EvalMethodArg::Stl => Method::Stl,
            EvalMethodArg::Rs => Method::RandomSampling,
            EvalMethodArg::Gb => Method::Gradient,
            EvalMethodArg::Bt => Method::BradleyTerry,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Number of signals to keep
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Keep violating instead of satisfying signals
    #[arg(long)]
    pub violating: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Configuration file; its `stop`/`pedestrian` section sets the ranges
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenario section on its own, overriding the configuration file
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long = "n-pairs", value_parser = clap::value_parser!(u64).range(1..))]
    pub n_pairs: u64,
    /// Minimum Euclidean distance between paired signals (exclusive)
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Channels the distance is computed over
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// Formula file; defaults to the dataset's rule
    #[arg(long)]
    pub formula: Option<PathBuf>,
    /// Result or weights file; a valuation is drawn from --seed otherwise
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Drop pairs whose robustness gap is at most this fraction of the range
    #[arg(long, default_value_t = 0.0)]
    pub min_gap: f64,
    /// Where to write the drawn valuation
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["preferences", "session"])))]
pub struct LearnArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Preference file
    #[arg(long)]
    pub preferences: Option<PathBuf>,
    /// Completed elicitation session
    #[arg(long)]
    pub session: Option<PathBuf>,
    /// Formula file; defaults to the dataset's rule
    #[arg(long)]
    pub formula: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: LearnSection,
    /// Threads for gradient restarts (0: all cores)
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub preferences: PathBuf,
    /// Formula file; defaults to the dataset's rule
    #[arg(long)]
    pub formula: Option<PathBuf>,
    /// Methods to fit on each split
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EvalMethodArg::Stl, EvalMethodArg::Rs, EvalMethodArg::Gb, EvalMethodArg::Bt])]
    pub methods: Vec<EvalMethodArg>,
    /// Learned valuations to score on the same splits
    #[arg(long = "result")]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: LearnSection,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the scores as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ElicitArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// Session file; created when missing, resumed otherwise
    #[arg(long)]
    pub session: Option<PathBuf>,
    /// Session id for a new session
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Directory with the built UI
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Seed of the left/right placement of a new session
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Only this signal
    #[arg(long)]
    pub signal: Option<String>,
    /// Formula file; defaults to the dataset's rule, or the weights file's
    #[arg(long)]
    pub formula: Option<PathBuf>,
    /// Result or weights file; unit weights otherwise
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Print every subformula's value at every time (requires --signal)
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Result or weights file
    #[arg(long)]
    pub weights: PathBuf,
    /// Trace horizon, needed for unbounded formulas without a stored one
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<String> {
    let store = ProjectStore::new(&cli.project);
    match cli.command {
        Command::Simulate(a) => simulate(&store, a),
        Command::Pairs(a) => pairs(&store, a),
        Command::Label(a) => label(&store, a),
        Command::Learn(a) => learn(&store, a),
        Command::Eval(a) => eval(a),
        Command::Elicit(a) => elicit(&store, a),
        Command::Robustness(a) => robustness(a),
        Command::Normalize(a) => normalize(&store, a),
    }
}

fn output(store: &ProjectStore, out: Option<PathBuf>, area: Area, name: &str) -> Result<PathBuf> {
    match out {
        Some(p) => Ok(p),
        None => {
            store.init()?;
            store.path(area, name)
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out")
        .to_owned()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

fn read_formula(path: &Path) -> Result<Formula> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(text.trim()).map_err(|e| Error::format(path, e.to_string()))
}

struct Dataset {
    path: PathBuf,
    file: DatasetFile,
    data: LoadedDataset,
}

impl Dataset {
    fn load(path: &Path) -> Result<Self> {
        let file: DatasetFile = store::load(path)?;
        let data = file.decode(path)?;
        Ok(Dataset {
            path: path.to_owned(),
            file,
            data,
        })
    }

    fn formula(&self, explicit: Option<&Path>) -> Result<Formula> {
        match explicit {
            Some(p) => read_formula(p),
            None => self.file.formula(&self.path),
        }
    }

    /// Horizon for the slot layout of `phi`.
    fn horizon_for(&self, phi: &Formula) -> Result<Option<usize>> {
        if phi.has_unbounded() {
            Ok(Some(self.data.horizon()?))
        } else {
            Ok(None)
        }
    }

    fn same_file(&self, other: &Path) -> Result<bool> {
        let a = std::fs::canonicalize(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let b = std::fs::canonicalize(other).map_err(|e| Error::io(other, e))?;
        Ok(a == b)
    }
}

/// Ordered pairs plus the dataset they index.
struct Labelled {
    source: PathBuf,
    dataset: Dataset,
    pairs: Vec<(usize, usize)>,
}

impl Labelled {
    fn from_preferences(path: &Path) -> Result<Self> {
        let prefs: PreferenceFile = store::load(path)?;
        let dataset = Dataset::load(&store::resolve(path, &prefs.dataset)?)?;
        let pairs = prefs.index_pairs(&dataset.data)?;
        Ok(Labelled {
            source: path.to_owned(),
            dataset,
            pairs,
        })
    }

    fn from_session(path: &Path) -> Result<Self> {
        let s = LoadedSession::open(path)?;
        let prefs = s.export()?;
        let pairs = prefs.index_pairs(&s.data)?;
        Ok(Labelled {
            source: path.to_owned(),
            dataset: Dataset {
                path: s.dataset_path,
                file: s.dataset,
                data: s.data,
            },
            pairs,
        })
    }

    fn preference_dataset(&self) -> Result<PreferenceDataset<'_>> {
        Ok(PreferenceDataset::new(
            &self.dataset.data.signals,
            self.pairs.clone(),
        )?)
    }
}

pub fn simulate(store: &ProjectStore, a: SimulateArgs) -> Result<String> {
    let cfg = Config::load_or_default(a.config.as_deref())?;
    let n = a.n as usize;
    let satisfying = !a.violating;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (generated, formula, marker, spec_value) = match a.scenario {
        ScenarioArg::Stop => {
            let sec: StopSection = match &a.spec {
                Some(p) => read_json(p)?,
                None => cfg.stop.clone(),
            };
            let spec = sec.resolve();
            let g = generate_dataset(&spec, n, satisfying, &mut rng)?;
            let v = serde_json::to_value(StopSection::describe(&spec)).expect("spec serializes");
            (g, spec.formula(), spec.x_stop, v)
        }
        ScenarioArg::Pedestrian => {
            let sec: PedestrianSection = match &a.spec {
                Some(p) => read_json(p)?,
                None => cfg.pedestrian.clone(),
            };
            let spec = sec.resolve();
            let g = generate_dataset(&spec, n, satisfying, &mut rng)?;
            let v = serde_json::to_value(PedestrianSection::describe(&spec)).expect("spec serializes");
            (g, spec.formula(), spec.x_cross, v)
        }
    };
    let width = n.to_string().len().max(4);
    let mut file = DatasetFile::new(
        generated
            .signals
            .iter()
            .enumerate()
            .map(|(i, s)| SignalRecord::from_signal(format!("s{i:0width$}"), s))
            .collect(),
    );
    file.scenario = Some(a.scenario.as_str().to_owned());
    file.marker = Some(marker);
    file.formula = Some(formula.to_string());
    let tag = if satisfying { "sat" } else { "viol" };
    let out = output(
        store,
        a.out,
        Area::Datasets,
        &format!("{}-{tag}-{}", a.scenario.as_str(), a.seed),
    )?;
    store::save(&out, &file)?;
    let manifest_path = out.with_file_name(format!("{}.manifest.json", stem(&out)));
    let manifest = Manifest {
        kind: Manifest::KIND.to_owned(),
        version: FORMAT_VERSION,
        scenario: a.scenario.as_str().to_owned(),
        dataset: store::reference(&manifest_path, &out)?,
        spec: spec_value,
        seed: a.seed,
        n,
        satisfying,
        draws: generated.draws,
        acceptance_rate: generated.acceptance_rate(),
    };
    store::save(&manifest_path, &manifest)?;
    Ok(format!(
        "wrote {n} {} signals to {} ({} draws, acceptance rate {:.3})\n",
        if satisfying { "satisfying" } else { "violating" },
        out.display(),
        generated.draws,
        generated.acceptance_rate()
    ))
}

pub fn pairs(store: &ProjectStore, a: PairsArgs) -> Result<String> {
    let cfg = Config::load_or_default(a.config.as_deref())?;
    let ds = Dataset::load(&a.dataset)?;
    let threshold = a
        .threshold
        .or(cfg.pairs.threshold)
        .unwrap_or(DEFAULT_PAIR_THRESHOLD);
    let channels = a
        .channels
        .or(cfg.pairs.channels)
        .unwrap_or_else(|| DEFAULT_PAIR_CHANNELS.iter().map(|c| (*c).to_owned()).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let set = build_pairs(
        &ds.data.signals,
        a.n_pairs as usize,
        threshold,
        &channels,
        &mut rng,
    )?;
    let out = output(
        store,
        a.out,
        Area::Pairs,
        &format!("{}-pairs-{}", stem(&a.dataset), a.seed),
    )?;
    let record = |p: &ScoredPair| PairRecord {
        first: ds.data.ids[p.a].clone(),
        second: ds.data.ids[p.b].clone(),
        distance: p.distance,
    };
    let file = PairsFile {
        kind: PairsFile::KIND.to_owned(),
        version: FORMAT_VERSION,
        dataset: store::reference(&out, &a.dataset)?,
        threshold,
        channels: set.channels.clone(),
        pairs: set.pairs.iter().map(record).collect(),
    };
    store::save(&out, &file)?;
    Ok(format!(
        "wrote {} pairs (distance > {threshold} over {}) to {}\n",
        file.pairs.len(),
        file.channels.join(","),
        out.display()
    ))
}

/// Weighted robustness at `t = 0` of every signal, through one slot table.
fn robustness_all(
    phi: &Formula,
    w: &WeightValuation,
    data: &LoadedDataset,
    horizon: Option<usize>,
) -> Result<Vec<f64>> {
    let table = SlotTable::new(phi, horizon)?;
    let flat = table.flatten(w)?;
    data.signals
        .iter()
        .map(|s| Ok(ComputationGraph::build(phi, &table, s, 0)?.robustness(&flat, 0)?))
        .collect()
}

pub fn label(store: &ProjectStore, a: LabelArgs) -> Result<String> {
    let pairs: PairsFile = store::load(&a.pairs)?;
    let ds = Dataset::load(&store::resolve(&a.pairs, &pairs.dataset)?)?;
    let (phi, w) = match &a.weights {
        Some(p) => {
            let (phi_w, w) = load_weights(p)?;
            let phi = match &a.formula {
                Some(f) => read_formula(f)?,
                None => phi_w,
            };
            (phi, w)
        }
        None => {
            let phi = ds.formula(a.formula.as_deref())?;
            let table = SlotTable::new(&phi, ds.horizon_for(&phi)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let params: Vec<f64> = (0..table.num_parameters())
                .map(|_| 1.0 - rng.gen::<f64>())
                .collect();
            (phi, WeightValuation::from_values(&table, &params)?)
        }
    };
    if !(0.0..1.0).contains(&a.min_gap) {
        return Err(Error::Invalid(format!(
            "--min-gap must lie in [0, 1), got {}",
            a.min_gap
        )));
    }
    let horizon = ds.horizon_for(&phi)?;
    let r = robustness_all(&phi, &w, &ds.data, horizon)?;
    let involved: Vec<f64> = pairs
        .pairs
        .iter()
        .flat_map(|p| [&p.first, &p.second])
        .map(|id| ds.data.position(id).map(|i| r[i]))
        .collect::<Result<_>>()?;
    let finite = involved.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let range = if hi >= lo { hi - lo } else { 0.0 };
    let min_gap = a.min_gap * range;
    let mut records = Vec::new();
    for p in &pairs.pairs {
        let (ra, rb) = (r[ds.data.position(&p.first)?], r[ds.data.position(&p.second)?]);
        let gap = if ra == rb { 0.0 } else { (ra - rb).abs() };
        if gap > min_gap {
            let (preferred, rejected) = if ra > rb {
                (&p.first, &p.second)
            } else {
                (&p.second, &p.first)
            };
            records.push(PreferenceRecord {
                preferred: preferred.clone(),
                rejected: rejected.clone(),
            });
        }
    }
    let out = output(
        store,
        a.out,
        Area::Pairs,
        &format!("{}-labels-{}", stem(&a.pairs), a.seed),
    )?;
    let kept = records.len();
    store::save(
        &out,
        &PreferenceFile::new(store::reference(&out, &ds.path)?, records),
    )?;
    let mut msg = format!(
        "labelled {kept} of {} pairs (dropped {}) to {}\n",
        pairs.pairs.len(),
        pairs.pairs.len() - kept,
        out.display()
    );
    if let Some(p) = &a.weights_out {
        store::save(p, &WeightsFile::new(&phi, horizon, &w))?;
        let _ = writeln!(msg, "wrote labelling valuation to {}", p.display());
    }
    Ok(msg)
}

/// Runs the gradient restarts on up to `threads` threads. The result does
/// not depend on the thread count.
pub fn gradient_parallel(
    ds: &PreferenceDataset<'_>,
    phi: &Formula,
    cfg: &LearnConfig,
    seed: u64,
    threads: usize,
) -> Result<LearnResult> {
    let solver = GradientSolver::new(ds, phi, cfg)?;
    let seeds = solver.restart_seeds(&mut ChaCha8Rng::seed_from_u64(seed));
    let threads = match threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(seeds.len())
    .max(1);
    let jobs: Vec<(usize, u64)> = seeds.into_iter().enumerate().collect();
    let chunk = jobs.len().div_ceil(threads);
    let mut outcomes: Vec<RestartOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                let solver = &solver;
                scope.spawn(move || {
                    part.iter()
                        .map(|&(i, s)| solver.run_restart(i, s))
                        .collect::<wstlpref_core::Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("restart thread panicked"))
            .collect::<wstlpref_core::Result<Vec<Vec<_>>>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    outcomes.sort_by_key(|o| o.index);
    Ok(solver.finish(&outcomes)?)
}

pub fn learn(store: &ProjectStore, a: LearnArgs) -> Result<String> {
    let cfg_file = Config::load_or_default(a.config.as_deref())?;
    let cfg = cfg_file.learn.resolve(&a.overrides)?;
    let labelled = match (&a.preferences, &a.session) {
        (Some(p), None) => Labelled::from_preferences(p)?,
        (None, Some(s)) => Labelled::from_session(s)?,
        _ => {
            return Err(Error::Invalid(
                "pass exactly one of --preferences and --session".to_owned(),
            ))
        }
    };
    let phi = labelled.dataset.formula(a.formula.as_deref())?;
    let horizon = labelled.dataset.horizon_for(&phi)?;
    let ds = labelled.preference_dataset()?;
    let result = match a.method {
        MethodArg::Rs => random_sampling_solve(&ds, &phi, &cfg, &mut ChaCha8Rng::seed_from_u64(a.seed))?,
        MethodArg::Gb => gradient_parallel(&ds, &phi, &cfg, a.seed, a.threads)?,
    };
    let name = match a.method {
        MethodArg::Rs => "rs",
        MethodArg::Gb => "gb",
    };
    let out = output(
        store,
        a.out,
        Area::Results,
        &format!("{}-{name}-{}", stem(&labelled.source), a.seed),
    )?;
    let file = ResultFile::from_result(
        &result,
        &phi,
        horizon,
        store::reference(&out, &labelled.dataset.path)?,
        store::reference(&out, &labelled.source)?,
        a.seed,
    );
    store::save(&out, &file)?;
    let mut msg = format!(
        "satisfied {}/{} pairs ({:.1}%), {} by the margin, mean margin {}\n",
        result.satisfied_pairs,
        result.total_pairs,
        100.0 * result.accuracy(),
        result.margin_satisfied_pairs,
        result.mean_margin
    );
    let d = &result.diagnostics;
    if let (Some(i), Some(f)) = (d.initial_loss, d.final_loss) {
        let _ = writeln!(
            msg,
            "restart {} loss {i} -> {f} after {} steps",
            d.restart.unwrap_or(0),
            d.iterations
        );
    }
    let _ = writeln!(msg, "wrote {}", out.display());
    Ok(msg)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, serde::Serialize)]
struct ScoreRow {
    method: String,
    train: Vec<f64>,
    test: Vec<f64>,
}

#[derive(Debug, serde::Serialize)]
struct EvalReport {
    kind: &'static str,
    version: u32,
    preferences: String,
    seed: u64,
    splits: usize,
    ratio: f64,
    rows: Vec<ScoreRow>,
}

pub fn eval(a: EvalArgs) -> Result<String> {
    let cfg_file = Config::load_or_default(a.config.as_deref())?;
    let learn = cfg_file.learn.resolve(&a.overrides)?;
    let labelled = Labelled::from_preferences(&a.preferences)?;
    let phi = labelled.dataset.formula(a.formula.as_deref())?;
    let ds = labelled.preference_dataset()?;
    let mut methods: Vec<Method> = Vec::new();
    for m in &a.methods {
        let m = Method::from(*m);
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if !methods.contains(&Method::Stl) {
        methods.insert(0, Method::Stl);
    }
    let protocol = Protocol {
        methods,
        n_splits: a.splits.or(cfg_file.eval.splits).unwrap_or(10),
        ratio: a.ratio.or(cfg_file.eval.ratio).unwrap_or(0.7),
        learn,
        bt: cfg_file.bt.resolve(),
    };
    let mut fixed = Vec::new();
    for path in &a.results {
        let r: ResultFile = store::load(path)?;
        if !labelled.dataset.same_file(&store::resolve(path, &r.dataset)?)? {
            return Err(Error::Mismatch(format!(
                "{} was learned on {}, not on {}",
                path.display(),
                r.dataset,
                labelled.dataset.path.display()
            )));
        }
        let phi_r = parse(&r.formula)?;
        if phi_r != phi {
            return Err(Error::Mismatch(format!(
                "{} uses formula {}, not {phi}",
                path.display(),
                r.formula
            )));
        }
        fixed.push((
            stem(path),
            WstlPredictor::new(phi_r, r.to_result(path)?.valuation),
        ));
    }
    let scores = cross_validate(&ds, &phi, &protocol, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let mut rows: Vec<ScoreRow> = scores
        .iter()
        .map(|s| ScoreRow {
            method: s.method.as_str().to_owned(),
            train: s.train.clone(),
            test: s.test.clone(),
        })
        .collect();
    if !fixed.is_empty() {
        // Same splits as cross_validate: it draws them first from the same seed.
        let splits = make_splits(
            ds.len(),
            protocol.n_splits,
            protocol.ratio,
            &mut ChaCha8Rng::seed_from_u64(a.seed),
        )?;
        for (name, p) in &fixed {
            let mut row = ScoreRow {
                method: name.clone(),
                train: Vec::new(),
                test: Vec::new(),
            };
            for split in &splits {
                row.train.push(accuracy(p, &ds.subset(&split.train))?);
                row.test.push(accuracy(p, &ds.subset(&split.test))?);
            }
            rows.push(row);
        }
    }
    let width = rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut table = format!(
        "{} pairs, {} splits of {:.0}%/{:.0}%, seed {}\n{:<width$}  {:>16}  {:>16}\n",
        ds.len(),
        protocol.n_splits,
        100.0 * protocol.ratio,
        100.0 * (1.0 - protocol.ratio),
        a.seed,
        "method",
        "train accuracy",
        "test accuracy",
    );
    for r in &rows {
        let (tm, ts) = mean_std(&r.train);
        let (vm, vs) = mean_std(&r.test);
        let _ = writeln!(
            table,
            "{:<width$}  {:>7.1}% ± {:>5.1}  {:>7.1}% ± {:>5.1}",
            r.method,
            100.0 * tm,
            100.0 * ts,
            100.0 * vm,
            100.0 * vs
        );
    }
    if let Some(out) = &a.out {
        let report = EvalReport {
            kind: "eval",
            version: FORMAT_VERSION,
            preferences: store::reference(out, &a.preferences)?,
            seed: a.seed,
            splits: protocol.n_splits,
            ratio: protocol.ratio,
            rows,
        };
        store::write_atomic(out, &store::to_bytes(&report))?;
    }
    Ok(table)
}

pub fn elicit(store: &ProjectStore, a: ElicitArgs) -> Result<String> {
    let id =
        a.id.clone()
            .unwrap_or_else(|| format!("{}-{}", stem(&a.pairs), a.seed));
    let path = match a.session {
        Some(p) => p,
        None => {
            store.init()?;
            store.path(Area::Sessions, &id)?
        }
    };
    let session = LoadedSession::open_or_create(&path, &a.pairs, id, a.seed)?;
    let (sid, answered, total) = (
        session.session.id.clone(),
        session.session.answered(),
        session.session.total(),
    );
    let service = Service::bind(&a.bind, Elicitation::new(session, a.ui_dir))?;
    eprintln!(
        "session {sid} ({answered}/{total} answered) at http://{}/ — saved to {}",
        service.local_addr(),
        path.display()
    );
    service.run(a.workers);
    Ok(String::new())
}

/// Subformulas in pre-order with their paths (`r`, `r.0`, `r.0.1`, ...).
fn subformulas(phi: &Formula) -> Vec<(String, &Formula)> {
    fn walk<'a>(f: &'a Formula, path: String, out: &mut Vec<(String, &'a Formula)>) {
        out.push((path.clone(), f));
        for (i, c) in f.children().into_iter().enumerate() {
            walk(c, format!("{path}.{i}"), out);
        }
    }
    let mut out = Vec::new();
    walk(phi, "r".to_owned(), &mut out);
    out
}

pub fn robustness(a: RobustnessArgs) -> Result<String> {
    let ds = Dataset::load(&a.dataset)?;
    let (phi, w) = match (&a.weights, &a.formula) {
        (Some(p), f) => {
            let (phi_w, w) = load_weights(p)?;
            (
                f.as_deref().map(read_formula).transpose()?.unwrap_or(phi_w),
                Some(w),
            )
        }
        (None, f) => (ds.formula(f.as_deref())?, None),
    };
    let horizon = ds.horizon_for(&phi)?;
    let table = SlotTable::new(&phi, horizon)?;
    let w = w.unwrap_or_else(|| table.unit_valuation());
    let flat = table.flatten(&w)?;
    let selected: Vec<usize> = match &a.signal {
        Some(id) => vec![ds.data.position(id)?],
        None if a.trace => return Err(Error::Invalid("--trace needs --signal".to_owned())),
        None => (0..ds.data.signals.len()).collect(),
    };
    let mut out = String::new();
    if a.trace {
        let i = selected[0];
        let g = ComputationGraph::build_trace(&phi, &table, &ds.data.signals[i])?;
        let values = g.subformula_values(&flat);
        let _ = writeln!(out, "signal {}", ds.data.ids[i]);
        let _ = writeln!(out, "formula {phi}");
        for ((path, sub), row) in subformulas(&phi).iter().zip(&values) {
            let cells: Vec<String> = row
                .iter()
                .map(|v| v.map_or_else(|| "-".to_owned(), |v| v.to_string()))
                .collect();
            let _ = writeln!(out, "{path}\t{sub}\t{}", cells.join(" "));
        }
    } else {
        for i in selected {
            let r = ComputationGraph::build(&phi, &table, &ds.data.signals[i], 0)?.robustness(&flat, 0)?;
            let _ = writeln!(out, "{}\t{r}", ds.data.ids[i]);
        }
    }
    Ok(out)
}

pub fn normalize(store: &ProjectStore, a: NormalizeArgs) -> Result<String> {
    let bytes = std::fs::read(&a.weights).map_err(|e| Error::io(&a.weights, e))?;
    let stored_horizon = serde_json::from_slice::<serde_json::Value>(&bytes)
        .ok()
        .and_then(|v| v.get("horizon").and_then(|h| h.as_u64()))
        .map(|h| h as usize);
    let (phi, w) = load_weights(&a.weights)?;
    let horizon = a.horizon.or(stored_horizon);
    let wn = normalize_to_domain(&phi, &w, horizon)?;
    let out = output(
        store,
        a.out,
        Area::Results,
        &format!("{}-normalized", stem(&a.weights)),
    )?;
    store::save(&out, &WeightsFile::new(&phi, horizon, &wn))?;
    let mut msg = String::new();
    for (id, v) in wn.iter() {
        let _ = writeln!(msg, "{id}\t{v}");
    }
    let _ = writeln!(msg, "wrote {}", out.display());
    Ok(msg)
}
