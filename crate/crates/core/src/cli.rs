//! Command implementations behind the `qnlp` binary: dataset generation,
//! inspection, training runs and evaluation of saved parameters.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::circuit::{self, AnsatzConfig, Circuit};
use crate::dataset::{self, Dataset, Split};
use crate::diagram::{build_diagram, count_resources, remove_cups, RenderFormat, StringDiagram};
use crate::exec::Exec;
use crate::pregroup::{assign_types, concat_types, reduce, Lexicon, Reduction, TypedWord};
use crate::simulator::NoiseModel;
use crate::tensor::TensorStore;
use crate::trainer::{self, Backend, ClassicalConfig, QuantumModel, SpsaConfig, TrainReport};
use crate::{Error, Result};

/// Built-in lexicon: 7 nouns, 3 adjectives, 5 polarity-tagged verbs.
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");
/// Device width every rewritten corpus circuit must fit.
pub const MAX_QUBITS: usize = 5;
pub const DEFAULT_COUNT: usize = 130;
/// Seed of the dataset used when `run` gets no `--data`.
pub const DEFAULT_DATA_SEED: u64 = 0;
pub const DATASET_FILE: &str = "dataset.tsv";
pub const SPLIT_FILE: &str = "split.txt";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    let text = match path {
        Some(p) => read(p)?,
        None => DEFAULT_LEXICON.to_string(),
    };
    Ok(Lexicon::parse(&text)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Classical,
    QuantumExact,
    QuantumExactFast,
    QuantumNoisy,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Classical, Profile::QuantumExact, Profile::QuantumExactFast, Profile::QuantumNoisy];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Classical => "classical",
            Profile::QuantumExact => "quantum-exact",
            Profile::QuantumExactFast => "quantum-exact-fast",
            Profile::QuantumNoisy => "quantum-noisy",
        }
    }

    /// Epochs (classical) or SPSA iterations (quantum).
    pub fn default_budget(self) -> usize {
        match self {
            Profile::Classical => 500,
            Profile::QuantumExact | Profile::QuantumNoisy => 200,
            Profile::QuantumExactFast => 800,
        }
    }

    pub fn is_quantum(self) -> bool {
        self != Profile::Classical
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown profile {s:?}")))
    }
}

/// One parsed sentence in both diagram forms.
#[derive(Clone, Debug)]
pub struct Parsed {
    pub typed: Vec<TypedWord>,
    pub diagram: StringDiagram,
    pub rewritten: StringDiagram,
}

pub fn parse_sentence<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Result<Parsed> {
    let typed = assign_types(tokens, lexicon)?;
    let types = concat_types(&typed);
    match reduce(&types) {
        Reduction::Grammatical(w) => {
            let diagram = build_diagram(&typed, &w)?;
            let rewritten = remove_cups(&diagram);
            Ok(Parsed { typed, diagram, rewritten })
        }
        Reduction::NotGrammatical { residual } => {
            let residual: Vec<String> = residual.iter().map(|&i| types[i].to_string()).collect();
            let sentence: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
            Err(Error::Ungrammatical { sentence: sentence.join(" "), residual: residual.join(" ") })
        }
    }
}

/// Every example of a dataset, parsed and compiled.
pub struct Corpus {
    pub parsed: Vec<Parsed>,
    pub ansatz: AnsatzConfig,
}

impl Corpus {
    /// Fails on the first sentence that does not parse, or whose rewritten
    /// circuit exceeds [`MAX_QUBITS`].
    pub fn build(ds: &Dataset, lexicon: &Lexicon, ansatz: AnsatzConfig) -> Result<Self> {
        let mut parsed = Vec::with_capacity(ds.len());
        for e in &ds.examples {
            let p = parse_sentence(&e.tokens, lexicon)?;
            let used = count_resources(&p.rewritten, &ansatz.qubit_map()).qubits_total;
            if used > MAX_QUBITS {
                return Err(Error::TooWide { sentence: e.sentence(), qubits: used, limit: MAX_QUBITS });
            }
            parsed.push(p);
        }
        Ok(Self { parsed, ansatz })
    }

    pub fn diagrams(&self) -> Vec<StringDiagram> {
        self.parsed.iter().map(|p| p.diagram.clone()).collect()
    }

    pub fn circuits(&self, rewritten: bool) -> Result<Vec<Circuit>> {
        self.parsed
            .iter()
            .map(|p| Ok(circuit::compile(if rewritten { &p.rewritten } else { &p.diagram }, &self.ansatz)?))
            .collect()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        circuit::parameter_names(self.parsed.iter().map(|p| &p.diagram), &self.ansatz)
    }
}

/// Writes `dataset.tsv` and `split.txt` into `out`.
pub fn gen_data(lexicon: &Lexicon, count: usize, sizes: [usize; 3], seed: u64, out: &Path) -> Result<Dataset> {
    let ds = dataset::gen_data(lexicon, count, sizes, seed)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write(&out.join(DATASET_FILE), &ds.to_text())?;
    write(&out.join(SPLIT_FILE), &ds.split.to_text())?;
    Ok(ds)
}

/// Reads a dataset from a directory holding `dataset.tsv` and `split.txt`,
/// or from a dataset file with `split.txt` beside it.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let (data, split) = if path.is_dir() {
        (path.join(DATASET_FILE), path.join(SPLIT_FILE))
    } else {
        (path.to_path_buf(), path.with_file_name(SPLIT_FILE))
    };
    let examples = dataset::parse_examples(&read(&data)?)?;
    let split = Split::from_text(&read(&split)?)?;
    Ok(Dataset::new(examples, split)?)
}

/// The dataset `run` uses when none is given.
pub fn default_dataset(lexicon: &Lexicon) -> Result<Dataset> {
    Ok(dataset::gen_data(lexicon, DEFAULT_COUNT, dataset::default_split_sizes(DEFAULT_COUNT), DEFAULT_DATA_SEED)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Types,
    Diagram,
    Rewritten,
    Circuit,
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "types" => Ok(Stage::Types),
            "diagram" => Ok(Stage::Diagram),
            "rewritten" => Ok(Stage::Rewritten),
            "circuit" => Ok(Stage::Circuit),
            other => Err(Error::Usage(format!("unknown stage {other:?}"))),
        }
    }
}

/// Renders the requested stages in order. `circuit` compiles the
/// rewritten diagram if `rewritten` came earlier, else the original.
pub fn inspect(sentence: &str, lexicon: &Lexicon, stages: &[Stage], format: RenderFormat, ansatz: &AnsatzConfig) -> Result<String> {
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    let typed = assign_types(&tokens, lexicon)?;
    let mut out = String::new();
    let parsed = match stages.iter().any(|&s| s != Stage::Types) {
        true => Some(parse_sentence(&tokens, lexicon)?),
        false => None,
    };
    let mut rewritten = false;
    for &stage in stages {
        let Some(p) = parsed.as_ref().filter(|_| stage != Stage::Types) else {
            for (w, t) in &typed {
                let _ = writeln!(out, "{w}\t{t}");
            }
            continue;
        };
        match stage {
            Stage::Types => unreachable!(),
            Stage::Diagram => {
                out.push_str(&p.diagram.render(format));
                rewritten = false;
            }
            Stage::Rewritten => {
                out.push_str(&p.rewritten.render(format));
                rewritten = true;
            }
            Stage::Circuit => {
                let c = circuit::compile(if rewritten { &p.rewritten } else { &p.diagram }, ansatz)?;
                out.push_str(&c.to_text());
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseOverrides {
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub readout: Option<f64>,
    pub shots: Option<usize>,
}

impl NoiseOverrides {
    pub fn none() -> Self {
        Self { p1: None, p2: None, readout: None, shots: None }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::none()
    }

    pub fn model(&self, seed: u64) -> Result<NoiseModel> {
        let d = NoiseModel::default();
        Ok(NoiseModel::new(
            self.p1.unwrap_or(d.p1()),
            self.p2.unwrap_or(d.p2()),
            self.readout.unwrap_or(d.readout_flip()),
            self.shots.unwrap_or(d.shots()),
            seed,
        )?)
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub profile: Profile,
    pub data: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub seed: u64,
    pub iterations: Option<usize>,
    pub noise: NoiseOverrides,
    pub out: PathBuf,
    pub exec: Exec,
}

impl RunConfig {
    pub fn new(profile: Profile, out: impl Into<PathBuf>) -> Self {
        Self {
            profile,
            data: None,
            lexicon: None,
            seed: 0,
            iterations: None,
            noise: NoiseOverrides::none(),
            out: out.into(),
            exec: Exec::default(),
        }
    }

    pub fn budget(&self) -> usize {
        self.iterations.unwrap_or(self.profile.default_budget())
    }

    fn validate(&self) -> Result<()> {
        if !self.noise.is_empty() && self.profile != Profile::QuantumNoisy {
            return Err(Error::Usage(format!("noise flags only apply to the quantum-noisy profile, not {}", self.profile.name())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: TrainReport,
    pub summary: String,
}

/// Trains the configured profile and writes `metrics.csv`, `params.txt`
/// and `summary.txt` into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let lexicon = load_lexicon(cfg.lexicon.as_deref())?;
    let ds = match &cfg.data {
        Some(p) => load_dataset(p)?,
        None => default_dataset(&lexicon)?,
    };
    let corpus = Corpus::build(&ds, &lexicon, AnsatzConfig::default())?;
    let budget = cfg.budget();
    let (report, params) = match cfg.profile {
        Profile::Classical => {
            let store = TensorStore::random(&lexicon, cfg.seed);
            let tc = ClassicalConfig { epochs: budget, seed: cfg.seed, ..ClassicalConfig::default() };
            let out = trainer::train_classical(&ds, &corpus.diagrams(), store, &tc, cfg.exec)?;
            (out.report, format!("profile {}\n{}", cfg.profile.name(), out.store.to_text()))
        }
        profile => {
            let backend = if profile == Profile::QuantumNoisy {
                Backend::Noisy(cfg.noise.model(cfg.seed)?)
            } else {
                Backend::Exact
            };
            let sc = SpsaConfig { iterations: budget, seed: cfg.seed, ..SpsaConfig::default() };
            let out = trainer::train_quantum(&ds, &corpus.circuits(true)?, corpus.parameter_names(), &sc, backend, cfg.exec)?;
            (out.report, format!("profile {}\n{}", profile.name(), quantum_params_text(&out.names, &out.theta)))
        }
    };
    let summary = summary_text(cfg, &report);
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    write(&cfg.out.join("metrics.csv"), &report.to_csv())?;
    write(&cfg.out.join("params.txt"), &params)?;
    write(&cfg.out.join("summary.txt"), &summary)?;
    Ok(RunOutcome { report, summary })
}

fn summary_text(cfg: &RunConfig, report: &TrainReport) -> String {
    let last = report.final_record();
    let mut s = format!(
        "profile={} seed={} budget={} test_acc={:.3} dev_acc={:.3} train_acc={:.3} seconds={:.2}\n",
        cfg.profile.name(),
        cfg.seed,
        cfg.budget(),
        report.test_acc,
        last.dev_acc,
        last.train_acc,
        report.wall_seconds
    );
    if cfg.profile == Profile::QuantumNoisy {
        if let Ok(nm) = cfg.noise.model(cfg.seed) {
            let _ = writeln!(s, "noise p1={} p2={} readout={} shots={}", nm.p1(), nm.p2(), nm.readout_flip(), nm.shots());
        }
    }
    let data = cfg.data.as_ref().map_or("generated".to_string(), |p| p.display().to_string());
    let lexicon = cfg.lexicon.as_ref().map_or("built-in".to_string(), |p| p.display().to_string());
    let _ = writeln!(s, "data={data} lexicon={lexicon}");
    s
}

/// `name value` lines; values print in shortest round-trip form.
pub fn quantum_params_text(names: &[String], theta: &[f64]) -> String {
    let mut out = String::new();
    for (n, v) in names.iter().zip(theta) {
        let _ = writeln!(out, "{n} {v:?}");
    }
    out
}

pub fn parse_quantum_params(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut names = Vec::new();
    let mut theta = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Usage(format!("params line {}: expected `name value`", i + 1));
        let (n, v) = line.split_once(' ').ok_or_else(bad)?;
        names.push(n.to_string());
        theta.push(v.trim().parse::<f64>().map_err(|_| bad())?);
    }
    Ok((names, theta))
}

/// Accuracy of saved parameters on every split of a dataset.
pub fn eval(params: &Path, data: Option<&Path>, lexicon: Option<&Path>, noise: &NoiseOverrides, seed: u64) -> Result<String> {
    let text = read(params)?;
    let (header, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let profile: Profile = header
        .strip_prefix("profile ")
        .ok_or_else(|| Error::Usage(format!("{} does not start with a profile line", params.display())))?
        .parse()?;
    let lexicon = load_lexicon(lexicon)?;
    let ds = match data {
        Some(p) => load_dataset(p)?,
        None => default_dataset(&lexicon)?,
    };
    let corpus = Corpus::build(&ds, &lexicon, AnsatzConfig::default())?;
    let mut out = format!("profile={}\n", profile.name());
    for (name, idx) in ds.split.parts() {
        let preds = if profile.is_quantum() {
            let (names, theta) = parse_quantum_params(body)?;
            let model = QuantumModel::new(&corpus.circuits(true)?, names)?;
            let backend = if profile == Profile::QuantumNoisy || !noise.is_empty() {
                Backend::Noisy(noise.model(seed)?)
            } else {
                Backend::Exact
            };
            idx.iter()
                .map(|&i| Ok(model.predict(i, &theta, &backend, seed.wrapping_add(i as u64))?.unwrap_or((0.0, 0.0))))
                .collect::<Result<Vec<_>>>()?
        } else {
            let store = TensorStore::from_text(body)?;
            idx.iter()
                .map(|&i| Ok(crate::tensor::predict_classical(crate::tensor::evaluate(&corpus.parsed[i].diagram, &store)?)))
                .collect::<Result<Vec<_>>>()?
        };
        let acc = trainer::accuracy(&preds, &ds.labels(idx))?;
        let _ = writeln!(out, "{name}_acc={acc:.3}");
    }
    Ok(out)
}
