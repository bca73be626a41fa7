//! Dense statevector simulation with post-selection, and a Monte Carlo
//! depolarizing + readout noise model.
//!
//! Qubit `q` is bit `q` of the basis index (little-endian).

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Angle, Circuit, CircuitError, Gate, GateKind};
use crate::exec::Exec;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("gate has an unbound parameter {0:?}")]
    Unbound(String),
    #[error("post-selection has zero probability")]
    DegeneratePostselection,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("invalid noise model: {0}")]
    Noise(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli operators used by the noise channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_index(i: u8) -> Self {
        match i & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }
}

impl StateVector {
    /// `|0…0>`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        assert!(amps.len().is_power_of_two(), "length must be a power of two");
        Self { n_qubits: amps.len().trailing_zeros() as usize, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies a bound gate.
    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        let angle = match g.angle() {
            None => 0.0,
            Some(Angle::Const(v)) => *v,
            Some(Angle::Param(p)) => return Err(SimError::Unbound(p.name.clone())),
        };
        let qs = g.qubits();
        self.apply(g.kind(), qs[0], *qs.last().unwrap(), angle);
        Ok(())
    }

    fn apply(&mut self, kind: GateKind, q0: usize, q1: usize, angle: f64) {
        match kind {
            GateKind::H => self.h(q0),
            GateKind::Rx => self.rx(q0, angle),
            GateKind::Rz => self.rz(q0, angle, 0),
            GateKind::Crz => self.rz(q1, angle, 1 << q0),
            GateKind::Cx => self.cx(q0, q1),
        }
    }

    fn pairs(&self, q: usize) -> impl Iterator<Item = (usize, usize)> {
        let bit = 1 << q;
        (0..self.amps.len()).filter(move |i| i & bit == 0).map(move |i| (i, i | bit))
    }

    fn h(&mut self, q: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (i, j) in self.pairs(q) {
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = (a + b) * s;
            self.amps[j] = (a - b) * s;
        }
    }

    fn rx(&mut self, q: usize, t: f64) {
        let (s, c) = (t / 2.0).sin_cos();
        let ms = -I * s;
        for (i, j) in self.pairs(q) {
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = a * c + b * ms;
            self.amps[j] = a * ms + b * c;
        }
    }

    /// RZ on `q`, restricted to basis states where all `control` bits are set.
    fn rz(&mut self, q: usize, t: f64, control: usize) {
        let lo = Complex64::from_polar(1.0, -t / 2.0);
        let hi = Complex64::from_polar(1.0, t / 2.0);
        let bit = 1 << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & control == control {
                *a *= if i & bit == 0 { lo } else { hi };
            }
        }
    }

    fn cx(&mut self, control: usize, target: usize) {
        let (c, t) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::I => {}
            Pauli::X => {
                for (i, j) in self.pairs(q) {
                    self.amps.swap(i, j);
                }
            }
            Pauli::Y => {
                for (i, j) in self.pairs(q) {
                    let (a, b) = (self.amps[i], self.amps[j]);
                    self.amps[i] = -I * b;
                    self.amps[j] = I * a;
                }
            }
            Pauli::Z => {
                for (_, j) in self.pairs(q) {
                    self.amps[j] = -self.amps[j];
                }
            }
        }
    }

    /// Zeroes amplitudes inconsistent with the required outcomes.
    pub fn project(&mut self, outcomes: impl IntoIterator<Item = (usize, u8)>) {
        let (mask, want) = outcomes
            .into_iter()
            .fold((0usize, 0usize), |(m, w), (q, v)| (m | 1 << q, w | usize::from(v) << q));
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != want {
                *a = ZERO;
            }
        }
    }
}

/// Measured-qubit statistics after post-selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomePair {
    pub p0_raw: f64,
    pub p1_raw: f64,
    pub p0: f64,
    pub p1: f64,
    pub postselect_mass: f64,
}

impl OutcomePair {
    pub fn from_raw(p0_raw: f64, p1_raw: f64) -> Result<Self, SimError> {
        let mass = p0_raw + p1_raw;
        if mass <= 0.0 || !mass.is_finite() {
            return Err(SimError::DegeneratePostselection);
        }
        Ok(Self { p0_raw, p1_raw, p0: p0_raw / mass, p1: p1_raw / mass, postselect_mass: mass })
    }

    pub fn normalized(&self) -> (f64, f64) {
        (self.p0, self.p1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    p1: f64,
    p2: f64,
    readout_flip: f64,
    shots: usize,
    seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { p1: 0.001, p2: 0.01, readout_flip: 0.02, shots: 1024, seed: 0 }
    }
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, readout_flip: f64, shots: usize, seed: u64) -> Result<Self, SimError> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(p1) || !unit(p2) {
            return Err(SimError::Noise("gate error probabilities must lie in [0, 1]".into()));
        }
        if !(0.0..=0.5).contains(&readout_flip) {
            return Err(SimError::Noise("readout flip probability must lie in [0, 0.5]".into()));
        }
        if shots == 0 {
            return Err(SimError::Noise("shots must be at least 1".into()));
        }
        Ok(Self { p1, p2, readout_flip, shots, seed })
    }

    pub fn noiseless(shots: usize, seed: u64) -> Self {
        Self { p1: 0.0, p2: 0.0, readout_flip: 0.0, shots: shots.max(1), seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn readout_flip(&self) -> f64 {
        self.readout_flip
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Clone, Copy, Debug)]
enum Operand {
    None,
    Const(f64),
    Param { index: usize, negated: bool },
}

#[derive(Clone, Copy, Debug)]
struct Op {
    kind: GateKind,
    q0: usize,
    q1: usize,
    angle: Operand,
}

/// A circuit with parameter names resolved to positions in a vector.
#[derive(Clone, Debug)]
pub struct Program {
    n_qubits: usize,
    ops: Vec<Op>,
    post_mask: usize,
    post_want: usize,
    measured: usize,
}

const SHOT_CHUNK: usize = 128;

impl Program {
    /// Resolves `circuit` against the ordered parameter list `names`.
    pub fn new(circuit: &Circuit, names: &[String]) -> Result<Self, SimError> {
        let index: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut missing = Vec::new();
        let ops = circuit
            .gates()
            .iter()
            .map(|g| {
                let qs = g.qubits();
                let angle = match g.angle() {
                    None => Operand::None,
                    Some(Angle::Const(v)) => Operand::Const(*v),
                    Some(Angle::Param(p)) => match index.get(p.name.as_str()) {
                        Some(&i) => Operand::Param { index: i, negated: p.negated },
                        None => {
                            missing.push(p.name.clone());
                            Operand::None
                        }
                    },
                };
                Op { kind: g.kind(), q0: qs[0], q1: *qs.last().unwrap(), angle }
            })
            .collect();
        if !missing.is_empty() {
            missing.sort();
            missing.dedup();
            return Err(CircuitError::MissingParameters(missing).into());
        }
        let (post_mask, post_want) = circuit
            .postselect()
            .iter()
            .fold((0, 0), |(m, w), (&q, &v)| (m | 1 << q, w | usize::from(v) << q));
        Ok(Self { n_qubits: circuit.n_qubits(), ops, post_mask, post_want, measured: circuit.measured() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn angle(op: &Op, theta: &[f64]) -> f64 {
        match op.angle {
            Operand::None => 0.0,
            Operand::Const(v) => v,
            Operand::Param { index, negated } => {
                if negated {
                    -theta[index]
                } else {
                    theta[index]
                }
            }
        }
    }

    /// Final state before post-selection.
    pub fn statevector(&self, theta: &[f64]) -> StateVector {
        let mut psi = StateVector::zero(self.n_qubits);
        for op in &self.ops {
            psi.apply(op.kind, op.q0, op.q1, Self::angle(op, theta));
        }
        psi
    }

    fn raw_from_probs(&self, probs: &[f64]) -> (f64, f64) {
        let bit = 1 << self.measured;
        let mut raw = [0.0; 2];
        for (i, p) in probs.iter().enumerate() {
            if i & self.post_mask == self.post_want {
                raw[usize::from(i & bit != 0)] += p;
            }
        }
        (raw[0], raw[1])
    }

    pub fn run_exact(&self, theta: &[f64]) -> Result<OutcomePair, SimError> {
        let probs = self.statevector(theta).probabilities();
        let (p0, p1) = self.raw_from_probs(&probs);
        OutcomePair::from_raw(p0, p1)
    }

    /// Trajectory sampling. Shot `k` draws from its own stream
    /// `(nm.seed, k)`, so results do not depend on `exec`.
    pub fn run_noisy(&self, theta: &[f64], nm: &NoiseModel, exec: Exec) -> Result<OutcomePair, SimError> {
        let ideal = self.statevector(theta).probabilities();
        let mut cumulative = ideal;
        let mut acc = 0.0;
        for p in cumulative.iter_mut() {
            acc += *p;
            *p = acc;
        }
        let chunks = nm.shots.div_ceil(SHOT_CHUNK);
        let counts = exec.map_range(chunks, |c| {
            let mut counts = [0usize; 2];
            for shot in c * SHOT_CHUNK..((c + 1) * SHOT_CHUNK).min(nm.shots) {
                if let Some(b) = self.shot(theta, nm, shot as u64, &cumulative) {
                    counts[b] += 1;
                }
            }
            counts
        });
        let (c0, c1) = counts.iter().fold((0, 0), |(a, b), c| (a + c[0], b + c[1]));
        let shots = nm.shots as f64;
        OutcomePair::from_raw(c0 as f64 / shots, c1 as f64 / shots)
    }

    /// One trajectory; `None` when post-selection rejects the shot.
    fn shot(&self, theta: &[f64], nm: &NoiseModel, shot: u64, cumulative: &[f64]) -> Option<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(nm.seed);
        rng.set_stream(shot);
        let mut faults: Vec<(usize, u8)> = Vec::new();
        for (i, op) in self.ops.iter().enumerate() {
            let two = op.kind.arity() == 2;
            let p = if two { nm.p2 } else { nm.p1 };
            if p > 0.0 && rng.random::<f64>() < p {
                let pauli = if two { rng.random_range(1..16u8) } else { rng.random_range(1..4u8) };
                faults.push((i, pauli));
            }
        }
        let basis = if faults.is_empty() {
            sample(cumulative, rng.random::<f64>())
        } else {
            let mut psi = StateVector::zero(self.n_qubits);
            let mut next = faults.iter().peekable();
            for (i, op) in self.ops.iter().enumerate() {
                psi.apply(op.kind, op.q0, op.q1, Self::angle(op, theta));
                while let Some(&&(at, pauli)) = next.peek() {
                    if at != i {
                        break;
                    }
                    psi.apply_pauli(op.q0, Pauli::from_index(pauli));
                    if op.kind.arity() == 2 {
                        psi.apply_pauli(op.q1, Pauli::from_index(pauli >> 2));
                    }
                    next.next();
                }
            }
            let probs = psi.probabilities();
            let mut acc = 0.0;
            let cum: Vec<f64> = probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            sample(&cum, rng.random::<f64>())
        };
        let mut read = basis;
        if nm.readout_flip > 0.0 {
            for q in 0..self.n_qubits {
                if rng.random::<f64>() < nm.readout_flip {
                    read ^= 1 << q;
                }
            }
        }
        (read & self.post_mask == self.post_want).then_some((read >> self.measured) & 1)
    }
}

fn sample(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().unwrap_or(&1.0);
    let target = u * total;
    cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1)
}

/// Exact post-selected statistics of `c` under `values`.
pub fn run_exact(c: &Circuit, values: &HashMap<String, f64>) -> Result<OutcomePair, SimError> {
    let bound = c.bind(values)?;
    let mut psi = StateVector::zero(bound.n_qubits());
    for g in bound.gates() {
        psi.apply_gate(g)?;
    }
    psi.project(bound.postselect().iter().map(|(&q, &v)| (q, v)));
    let bit = 1 << bound.measured();
    let mut raw = [0.0; 2];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        raw[usize::from(i & bit != 0)] += a.norm_sqr();
    }
    OutcomePair::from_raw(raw[0], raw[1])
}

/// Monte Carlo estimate of the post-selected statistics under `nm`.
pub fn run_noisy(
    c: &Circuit,
    values: &HashMap<String, f64>,
    nm: &NoiseModel,
    exec: Exec,
) -> Result<OutcomePair, SimError> {
    let names: Vec<String> = c.parameter_names().into_iter().map(str::to_string).collect();
    let missing: Vec<String> = names.iter().filter(|n| !values.contains_key(*n)).cloned().collect();
    if !missing.is_empty() {
        return Err(CircuitError::MissingParameters(missing).into());
    }
    let theta: Vec<f64> = names.iter().map(|n| values[n]).collect();
    Program::new(c, &names)?.run_noisy(&theta, nm, exec)
}
