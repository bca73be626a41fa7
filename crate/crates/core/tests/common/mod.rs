//! Independent reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnlp::circuit::{AnsatzConfig, Circuit, Gate, GateKind};
use qnlp::cli::{default_dataset, load_lexicon, Corpus};
use qnlp::dataset::Dataset;
use qnlp::diagram::StringDiagram;
use qnlp::pregroup::{AtomicType, Lexicon, SimpleType};
use qnlp::tensor::{TensorStore, WordTensor};

/// The six simple types with winding in {-1, 0, 1}.
pub fn alphabet() -> Vec<SimpleType> {
    let mut out = Vec::new();
    for base in [AtomicType::N, AtomicType::S] {
        for z in -1..=1 {
            out.push(SimpleType::new(base, z).unwrap());
        }
    }
    out
}

/// Every sequence over `alphabet()` of length `<= max_len` that reduces to a
/// single plain `s`, built generatively: start from `[s]` and repeatedly
/// insert an adjacent contracting pair `x^z x^(z+1)` at any position.
/// Any planar matching arises this way, so the set is exact.
pub fn reducible_sequences(max_len: usize) -> HashSet<Vec<SimpleType>> {
    let pairs: Vec<[SimpleType; 2]> = alphabet()
        .into_iter()
        .flat_map(|a| alphabet().into_iter().filter(move |&b| a.contracts_with(b)).map(move |b| [a, b]))
        .collect();
    assert_eq!(pairs.len(), 4);
    let start = vec![SimpleType::plain(AtomicType::S)];
    let mut all: HashSet<Vec<SimpleType>> = HashSet::from([start.clone()]);
    let mut frontier = vec![start];
    while let Some(seq) = frontier.pop() {
        if seq.len() + 2 > max_len {
            continue;
        }
        for pos in 0..=seq.len() {
            for pair in &pairs {
                let mut next = seq[..pos].to_vec();
                next.extend_from_slice(pair);
                next.extend_from_slice(&seq[pos..]);
                if all.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
    }
    all
}

/// Calls `f` on every sequence over `alphabet()` of length `0..=max_len`.
pub fn for_each_sequence(max_len: usize, mut f: impl FnMut(&[SimpleType])) {
    let alpha = alphabet();
    let mut idx: Vec<usize> = Vec::with_capacity(max_len);
    let mut seq: Vec<SimpleType> = Vec::with_capacity(max_len);
    for len in 0..=max_len {
        idx.clear();
        idx.resize(len, 0);
        seq.clear();
        seq.extend(idx.iter().map(|&i| alpha[i]));
        loop {
            f(&seq);
            let mut done = true;
            let mut k = len;
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                if idx[k] < alpha.len() {
                    seq[k] = alpha[idx[k]];
                    done = false;
                    break;
                }
                idx[k] = 0;
                seq[k] = alpha[0];
            }
            if done {
                break;
            }
        }
    }
}

/// Sums over every assignment of the cup indices with explicit loops.
pub fn loop_contract(d: &StringDiagram, store: &TensorStore) -> [f64; 2] {
    let cups = d.cups();
    let open = d.open_wires()[0];
    let mut cup_of = HashMap::new();
    for (k, c) in cups.iter().enumerate() {
        cup_of.insert(c.left, k);
        cup_of.insert(c.right, k);
    }
    let mut out = [0.0; 2];
    for b_out in 0..2usize {
        for assign in 0..(1usize << cups.len()) {
            let value = |w: usize| -> usize {
                if w == open {
                    b_out
                } else {
                    (assign >> cup_of[&w]) & 1
                }
            };
            let mut prod = 1.0;
            for bx in d.boxes() {
                let t = store.get(&bx.word).unwrap();
                let mut flat = 0;
                for w in bx.wires() {
                    flat = flat * 2 + value(w);
                }
                prod *= t.entries()[flat];
            }
            out[b_out] += prod;
        }
    }
    out
}

/// Dense matrix of `g` on `n` qubits (little-endian basis).
pub fn gate_matrix(g: &Gate, n: usize, theta: f64) -> Vec<Vec<Complex64>> {
    let dim = 1 << n;
    let i = Complex64::i();
    let one_qubit = |m: [[Complex64; 2]; 2], q: usize| {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for col in 0..dim {
            let b = (col >> q) & 1;
            for r in 0..2 {
                let row = (col & !(1 << q)) | (r << q);
                out[row][col] += m[r][b];
            }
        }
        out
    };
    let q = g.qubits();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let re = |x: f64| Complex64::new(x, 0.0);
    match g.kind() {
        GateKind::H => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            one_qubit([[re(h), re(h)], [re(h), re(-h)]], q[0])
        }
        GateKind::Rx => one_qubit([[re(c), -i * s], [-i * s, re(c)]], q[0]),
        GateKind::Rz => one_qubit([[(-i * theta / 2.0).exp(), re(0.0)], [re(0.0), (i * theta / 2.0).exp()]], q[0]),
        GateKind::Crz | GateKind::Cx => {
            let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
            let target = if g.kind() == GateKind::Cx {
                [[re(0.0), re(1.0)], [re(1.0), re(0.0)]]
            } else {
                [[(-i * theta / 2.0).exp(), re(0.0)], [re(0.0), (i * theta / 2.0).exp()]]
            };
            for col in 0..dim {
                if (col >> q[0]) & 1 == 0 {
                    out[col][col] += re(1.0);
                    continue;
                }
                let b = (col >> q[1]) & 1;
                for r in 0..2 {
                    let row = (col & !(1 << q[1])) | (r << q[1]);
                    out[row][col] += target[r][b];
                }
            }
            out
        }
    }
}

pub fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Post-selected `(p0_raw, p1_raw)` of a circuit, by dense matrices.
pub fn dense_outcome(c: &Circuit, values: &HashMap<String, f64>) -> (f64, f64) {
    let n = c.n_qubits();
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
    psi[0] = Complex64::new(1.0, 0.0);
    for g in c.gates() {
        let theta = g.angle().map_or(0.0, |a| match a {
            qnlp::circuit::Angle::Const(v) => *v,
            qnlp::circuit::Angle::Param(p) => {
                let v = values[&p.name];
                if p.negated {
                    -v
                } else {
                    v
                }
            }
        });
        psi = mat_vec(&gate_matrix(g, n, theta), &psi);
    }
    let mut raw = [0.0; 2];
    for (idx, a) in psi.iter().enumerate() {
        if c.postselect().iter().all(|(&q, &v)| ((idx >> q) & 1) as u8 == v) {
            raw[(idx >> c.measured()) & 1] += a.norm_sqr();
        }
    }
    (raw[0], raw[1])
}

pub struct Fixture {
    pub lexicon: Lexicon,
    pub dataset: Dataset,
    pub corpus: Corpus,
}

pub fn fixture() -> Fixture {
    let lexicon = load_lexicon(None).unwrap();
    let dataset = default_dataset(&lexicon).unwrap();
    let corpus = Corpus::build(&dataset, &lexicon, AnsatzConfig::default()).unwrap();
    Fixture { lexicon, dataset, corpus }
}

/// Entries uniform on `[-1, 1]`.
pub fn random_store(lexicon: &Lexicon, seed: u64) -> TensorStore {
    TensorStore::random_in(lexicon, seed, -1.0, 1.0)
}

pub fn random_values(names: &[String], rng: &mut ChaCha8Rng) -> HashMap<String, f64> {
    names.iter().map(|n| (n.clone(), rng.random_range(0.0..std::f64::consts::TAU))).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite difference of `f` with respect to one store entry.
pub fn finite_difference(
    store: &TensorStore,
    word: &str,
    entry: usize,
    h: f64,
    f: impl Fn(&TensorStore) -> f64,
) -> f64 {
    let shifted = |delta: f64| {
        let mut s = store.clone();
        let t = s.get_mut(word).unwrap();
        t.entries_mut()[entry] += delta;
        f(&s)
    };
    (shifted(h) - shifted(-h)) / (2.0 * h)
}

pub fn word_tensor(rank: usize, entries: Vec<f64>) -> WordTensor {
    WordTensor::new(rank, entries).unwrap()
}
