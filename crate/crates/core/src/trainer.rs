//! Training loops: SPSA for the quantum circuits, full-batch gradient
//! descent for the classical tensors.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::dataset::Dataset;
use crate::diagram::StringDiagram;
use crate::exec::Exec;
use crate::simulator::{NoiseModel, OutcomePair, Program, SimError};
use crate::tensor::{self, TensorError, TensorStore};

/// Probability floor used by [`loss_bce`].
pub const PROB_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("accuracy of an empty prediction set")]
    Empty,
    #[error("{preds} predictions for {labels} labels")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("objective is not finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid SPSA configuration: {0}")]
    Config(String),
    #[error("{circuits} circuits for {examples} examples")]
    CircuitCount { circuits: usize, examples: usize },
    #[error("circuit {index} uses parameter {name:?} outside the parameter list")]
    UnknownParameter { index: usize, name: String },
    #[error("{found} initial parameters, expected {expected}")]
    ParameterCount { expected: usize, found: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Binary cross-entropy `-ln p_label`, with `p_label` clamped to `[1e-9, 1]`.
pub fn loss_bce(p: (f64, f64), label: usize) -> f64 {
    let pl = if label == 0 { p.0 } else { p.1 };
    -pl.clamp(PROB_FLOOR, 1.0).ln()
}

/// Predicted label, or `None` on a tie.
pub fn argmax(p: (f64, f64)) -> Option<usize> {
    if p.0 > p.1 {
        Some(0)
    } else if p.1 > p.0 {
        Some(1)
    } else {
        None
    }
}

/// Fraction of correct argmax predictions; ties are wrong.
pub fn accuracy(preds: &[(f64, f64)], labels: &[usize]) -> Result<f64, TrainError> {
    if preds.len() != labels.len() {
        return Err(TrainError::LengthMismatch { preds: preds.len(), labels: labels.len() });
    }
    if preds.is_empty() {
        return Err(TrainError::Empty);
    }
    let hits = preds.iter().zip(labels).filter(|(p, &l)| argmax(**p) == Some(l)).count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self { a: 24.0, c: 0.7, big_a: 20.0, alpha: 0.602, gamma: 0.101, iterations: 200, seed: 0 }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.into()));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c must be positive");
        }
        if !(self.big_a >= 0.0 && self.big_a.is_finite()) {
            return bad("A must be non-negative");
        }
        if !(self.alpha >= 0.0 && self.gamma >= 0.0) {
            return bad("alpha and gamma must be non-negative");
        }
        Ok(())
    }

    /// `a_k = a / (A + k + 1)^alpha`.
    pub fn step_size(&self, k: usize) -> f64 {
        self.a / (self.big_a + k as f64 + 1.0).powf(self.alpha)
    }

    /// `c_k = c / (k + 1)^gamma`.
    pub fn perturbation(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }

    /// Rademacher direction for iteration `k`, drawn from stream `k`.
    pub fn direction(&self, k: usize, dim: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
    }
}

/// One SPSA update. Calls `objective` exactly twice.
pub fn spsa_step<F>(theta: &[f64], k: usize, mut objective: F, cfg: &SpsaConfig) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(&[f64]) -> f64,
{
    let delta = cfg.direction(k, theta.len());
    let ck = cfg.perturbation(k);
    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
    let (fp, fm) = (objective(&plus), objective(&minus));
    if !fp.is_finite() || !fm.is_finite() {
        return Err(TrainError::NonFinite { iteration: k });
    }
    let ak = cfg.step_size(k);
    Ok(theta.iter().zip(&delta).map(|(t, d)| t - ak * (fp - fm) / (2.0 * ck * d)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub iteration: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub dev_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// The initial evaluation, then one record per iteration or epoch.
    pub records: Vec<Record>,
    pub test_acc: f64,
    pub wall_seconds: f64,
    pub seed: u64,
}

impl TrainReport {
    pub fn final_record(&self) -> &Record {
        self.records.last().expect("a report always has the initial record")
    }

    /// Deterministic CSV; wall-clock time is left out.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,train_loss,train_acc,dev_acc\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:.9},{:.6},{:.6}", r.iteration, r.train_loss, r.train_acc, r.dev_acc);
        }
        let _ = writeln!(out, "# test_acc={:.6}", self.test_acc);
        let _ = writeln!(out, "# seed={}", self.seed);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Backend {
    Exact,
    Noisy(NoiseModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOutcome {
    pub report: TrainReport,
    pub names: Vec<String>,
    pub theta: Vec<f64>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Shot-noise seed for one circuit evaluation.
fn eval_seed(seed: u64, iteration: usize, phase: u64, example: usize) -> u64 {
    [iteration as u64, phase, example as u64].iter().fold(splitmix(seed), |h, &v| splitmix(h ^ v))
}

const PHASE_OBJECTIVE: u64 = 1;
const PHASE_METRICS: u64 = 2;

/// Compiled per-sentence programs over one shared parameter vector.
pub struct QuantumModel {
    names: Vec<String>,
    programs: Vec<Program>,
}

impl QuantumModel {
    /// `names` is the global parameter order; every circuit parameter must
    /// appear in it.
    pub fn new(circuits: &[Circuit], names: Vec<String>) -> Result<Self, TrainError> {
        for (index, c) in circuits.iter().enumerate() {
            if let Some(name) = c.parameter_names().into_iter().find(|n| !names.iter().any(|m| m == n)) {
                return Err(TrainError::UnknownParameter { index, name: name.to_string() });
            }
        }
        let programs = circuits.iter().map(|c| Program::new(c, &names)).collect::<Result<_, _>>()?;
        Ok(Self { names, programs })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    /// Normalized `(p0, p1)`; `None` when post-selection has no mass.
    pub fn predict(&self, idx: usize, theta: &[f64], backend: &Backend, seed: u64) -> Result<Option<(f64, f64)>, TrainError> {
        let r = match backend {
            Backend::Exact => self.programs[idx].run_exact(theta),
            Backend::Noisy(nm) => self.programs[idx].run_noisy(theta, &nm.with_seed(seed), Exec::Sequential),
        };
        match r {
            Ok(OutcomePair { p0, p1, .. }) => Ok(Some((p0, p1))),
            Err(SimError::DegeneratePostselection) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

struct Evaluation {
    preds: Vec<(f64, f64)>,
    losses: Vec<f64>,
}

fn max_loss() -> f64 {
    -PROB_FLOOR.ln()
}

struct QuantumRun<'a> {
    model: &'a QuantumModel,
    ds: &'a Dataset,
    backend: Backend,
    exec: Exec,
    seed: u64,
}

impl QuantumRun<'_> {
    fn evaluate(&self, idx: &[usize], theta: &[f64], iteration: usize, phase: u64) -> Result<Evaluation, TrainError> {
        let results = self.exec.map(idx, |&i| {
            let seed = eval_seed(self.seed, iteration, phase, i);
            self.model.predict(i, theta, &self.backend, seed)
        });
        let mut ev = Evaluation { preds: Vec::with_capacity(idx.len()), losses: Vec::with_capacity(idx.len()) };
        for (r, &i) in results.into_iter().zip(idx) {
            match r? {
                Some(p) => {
                    ev.losses.push(loss_bce(p, self.ds.examples[i].label));
                    ev.preds.push(p);
                }
                None => {
                    ev.losses.push(max_loss());
                    ev.preds.push((0.0, 0.0));
                }
            }
        }
        Ok(ev)
    }

    fn objective(&self, theta: &[f64], iteration: usize) -> Result<f64, TrainError> {
        let ev = self.evaluate(&self.ds.split.train, theta, iteration, PHASE_OBJECTIVE)?;
        Ok(mean(&ev.losses))
    }

    fn record(&self, theta: &[f64], iteration: usize) -> Result<Record, TrainError> {
        let train = self.evaluate(&self.ds.split.train, theta, iteration, PHASE_METRICS)?;
        let dev = self.evaluate(&self.ds.split.dev, theta, iteration, PHASE_METRICS)?;
        Ok(Record {
            iteration,
            train_loss: mean(&train.losses),
            train_acc: accuracy(&train.preds, &self.ds.labels(&self.ds.split.train))?,
            dev_acc: accuracy(&dev.preds, &self.ds.labels(&self.ds.split.dev))?,
        })
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Uniform `[0, 2pi)` starting point for `dim` parameters.
pub fn initial_theta(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

/// SPSA on the mean training loss. Both objective evaluations of one
/// step share their shot-noise seeds.
pub fn train_quantum(
    ds: &Dataset,
    circuits: &[Circuit],
    names: Vec<String>,
    cfg: &SpsaConfig,
    backend: Backend,
    exec: Exec,
) -> Result<QuantumOutcome, TrainError> {
    cfg.validate()?;
    if circuits.len() != ds.len() {
        return Err(TrainError::CircuitCount { circuits: circuits.len(), examples: ds.len() });
    }
    let model = QuantumModel::new(circuits, names)?;
    let theta = initial_theta(model.names().len(), cfg.seed);
    train_quantum_from(ds, &model, theta, cfg, backend, exec)
}

/// As [`train_quantum`], from a given starting point.
pub fn train_quantum_from(
    ds: &Dataset,
    model: &QuantumModel,
    mut theta: Vec<f64>,
    cfg: &SpsaConfig,
    backend: Backend,
    exec: Exec,
) -> Result<QuantumOutcome, TrainError> {
    cfg.validate()?;
    if model.len() != ds.len() {
        return Err(TrainError::CircuitCount { circuits: model.len(), examples: ds.len() });
    }
    if theta.len() != model.names().len() {
        return Err(TrainError::ParameterCount { expected: model.names().len(), found: theta.len() });
    }
    let start = Instant::now();
    let run = QuantumRun { model, ds, backend, exec, seed: cfg.seed };
    let mut records = vec![run.record(&theta, 0)?];
    for k in 0..cfg.iterations {
        let mut failure = None;
        let next = spsa_step(
            &theta,
            k,
            |t| match run.objective(t, k) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            cfg,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        theta = next?;
        records.push(run.record(&theta, k + 1)?);
    }
    let test = run.evaluate(&ds.split.test, &theta, cfg.iterations + 1, PHASE_METRICS)?;
    let test_acc = accuracy(&test.preds, &ds.labels(&ds.split.test))?;
    Ok(QuantumOutcome {
        report: TrainReport { records, test_acc, wall_seconds: start.elapsed().as_secs_f64(), seed: cfg.seed },
        names: model.names().to_vec(),
        theta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalConfig {
    pub epochs: usize,
    pub step: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self { epochs: 500, step: 0.05, momentum: 0.9, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalOutcome {
    pub report: TrainReport,
    pub store: TensorStore,
    /// Set when training stopped early on a non-finite loss.
    pub aborted: bool,
}

fn classical_eval(diagrams: &[StringDiagram], idx: &[usize], ds: &Dataset, store: &TensorStore, exec: Exec) -> Result<Evaluation, TrainError> {
    let results = exec.map(idx, |&i| tensor::evaluate(&diagrams[i], store));
    let mut ev = Evaluation { preds: Vec::new(), losses: Vec::new() };
    for (r, &i) in results.into_iter().zip(idx) {
        let v = r?;
        let m = v[0].max(v[1]);
        let lse = m + ((v[0] - m).exp() + (v[1] - m).exp()).ln();
        ev.losses.push(lse - v[ds.examples[i].label]);
        ev.preds.push(tensor::predict_classical(v));
    }
    Ok(ev)
}

fn classical_record(diagrams: &[StringDiagram], ds: &Dataset, store: &TensorStore, exec: Exec, iteration: usize) -> Result<Record, TrainError> {
    let train = classical_eval(diagrams, &ds.split.train, ds, store, exec)?;
    let dev = classical_eval(diagrams, &ds.split.dev, ds, store, exec)?;
    Ok(Record {
        iteration,
        train_loss: mean(&train.losses),
        train_acc: accuracy(&train.preds, &ds.labels(&ds.split.train))?,
        dev_acc: accuracy(&dev.preds, &ds.labels(&ds.split.dev))?,
    })
}

/// Full-batch gradient descent on the mean cross-entropy, starting from
/// `store`. `diagrams[i]` is the (un-rewritten) diagram of example `i`.
pub fn train_classical(
    ds: &Dataset,
    diagrams: &[StringDiagram],
    mut store: TensorStore,
    cfg: &ClassicalConfig,
    exec: Exec,
) -> Result<ClassicalOutcome, TrainError> {
    if diagrams.len() != ds.len() {
        return Err(TrainError::CircuitCount { circuits: diagrams.len(), examples: ds.len() });
    }
    let start = Instant::now();
    let mut records = vec![classical_record(diagrams, ds, &store, exec, 0)?];
    let mut velocity = store.zeros_like();
    let scale = 1.0 / ds.split.train.len().max(1) as f64;
    let mut aborted = !records[0].train_loss.is_finite();
    for epoch in 0..cfg.epochs {
        if aborted {
            break;
        }
        let grads = exec.map(&ds.split.train, |&i| tensor::gradient(&diagrams[i], &store, ds.examples[i].label));
        let mut total = store.zeros_like();
        for g in grads {
            total.add_scaled(&g?, scale);
        }
        if cfg.momentum != 0.0 {
            let mut v = velocity.zeros_like();
            v.add_scaled(&velocity, cfg.momentum);
            v.add_scaled(&total, -cfg.step);
            velocity = v;
            store.add_scaled(&velocity, 1.0);
        } else {
            store.add_scaled(&total, -cfg.step);
        }
        let r = classical_record(diagrams, ds, &store, exec, epoch + 1)?;
        aborted = !r.train_loss.is_finite();
        records.push(r);
    }
    let test = classical_eval(diagrams, &ds.split.test, ds, &store, exec)?;
    let test_acc = accuracy(&test.preds, &ds.labels(&ds.split.test))?;
    Ok(ClassicalOutcome {
        report: TrainReport { records, test_acc, wall_seconds: start.elapsed().as_secs_f64(), seed: cfg.seed },
        store,
        aborted,
    })
}
