//! Classical tensor-network pipeline: every wire is a 2-dimensional real
//! index, every word a real tensor, every cup an index contraction.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diagram::StringDiagram;
use crate::pregroup::Lexicon;

pub const WIRE_DIM: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("no tensor for word {0:?}")]
    MissingWord(String),
    #[error("tensor for {word:?} has {found} entries, expected {expected}")]
    Shape { word: String, expected: usize, found: usize },
    #[error("diagram must have exactly one open wire")]
    OpenWires,
    #[error("checkpoint line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Real tensor of shape `(2,)^rank`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WordTensor {
    rank: usize,
    entries: Vec<f64>,
}

impl WordTensor {
    pub fn new(rank: usize, entries: Vec<f64>) -> Option<Self> {
        (entries.len() == WIRE_DIM.pow(rank as u32)).then_some(Self { rank, entries })
    }

    pub fn zeros(rank: usize) -> Self {
        Self { rank, entries: vec![0.0; WIRE_DIM.pow(rank as u32)] }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }
}

/// Word tensors keyed by word.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorStore {
    tensors: BTreeMap<String, WordTensor>,
}

impl TensorStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Training start point: entries uniform on `[0, 0.5]`. With mixed
    /// signs, nouns often start on opposite sides of a verb's decision
    /// boundary and gradient descent stalls before separating the classes.
    pub fn random(lexicon: &Lexicon, seed: u64) -> Self {
        Self::random_in(lexicon, seed, 0.0, 0.5)
    }

    /// Entries uniform on `[lo, hi]`, drawn in lexicon order.
    pub fn random_in(lexicon: &Lexicon, seed: u64, lo: f64, hi: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = lexicon
            .iter()
            .map(|(w, e)| {
                let rank = e.ty.len();
                let entries = (0..WIRE_DIM.pow(rank as u32)).map(|_| rng.random_range(lo..=hi)).collect();
                (w.to_string(), WordTensor { rank, entries })
            })
            .collect();
        Self { tensors }
    }

    pub fn insert(&mut self, word: impl Into<String>, t: WordTensor) {
        self.tensors.insert(word.into(), t);
    }

    pub fn get(&self, word: &str) -> Option<&WordTensor> {
        self.tensors.get(word)
    }

    pub fn get_mut(&mut self, word: &str) -> Option<&mut WordTensor> {
        self.tensors.get_mut(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WordTensor)> {
        self.tensors.iter().map(|(w, t)| (w.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// `self += scale * other` entrywise over words present in both.
    pub fn add_scaled(&mut self, other: &TensorStore, scale: f64) {
        for (w, t) in &mut self.tensors {
            if let Some(o) = other.tensors.get(w) {
                for (a, b) in t.entries.iter_mut().zip(&o.entries) {
                    *a += scale * b;
                }
            }
        }
    }

    /// Zero tensors with the same shapes.
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self.tensors.iter().map(|(w, t)| (w.clone(), WordTensor::zeros(t.rank))).collect(),
        }
    }

    /// Checkpoint text: a word line, then its row-major entries.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, t) in &self.tensors {
            let entries: Vec<String> = t.entries.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{w}\n{}", entries.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TensorError> {
        let mut store = TensorStore::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        while let Some((_, word)) = lines.next() {
            let (idx, row) = lines.next().ok_or(TensorError::Parse {
                line: 0,
                message: format!("missing entries for {word:?}"),
            })?;
            let entries = row
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| TensorError::Parse { line: idx + 1, message: e.to_string() })?;
            let rank = entries.len().trailing_zeros() as usize;
            let t = WordTensor::new(rank, entries).ok_or(TensorError::Parse {
                line: idx + 1,
                message: "entry count is not a power of two".into(),
            })?;
            store.insert(word.trim(), t);
        }
        Ok(store)
    }
}

/// A tensor whose axes are named by wire labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Labeled {
    pub labels: Vec<usize>,
    pub data: Vec<f64>,
}

impl Labeled {
    pub fn scalar(v: f64) -> Self {
        Self { labels: Vec::new(), data: vec![v] }
    }

    /// Sums over shared labels; free labels of `self` come first.
    pub fn contract(&self, other: &Labeled) -> Labeled {
        let shared: Vec<usize> = self.labels.iter().copied().filter(|l| other.labels.contains(l)).collect();
        let free_a: Vec<usize> = self.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
        let free_b: Vec<usize> = other.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
        let mut labels = free_a.clone();
        labels.extend(&free_b);

        let strides = |ls: &[usize]| -> HashMap<usize, usize> {
            let n = ls.len();
            ls.iter().enumerate().map(|(i, &l)| (l, 1 << (n - 1 - i))).collect()
        };
        let (sa, sb) = (strides(&self.labels), strides(&other.labels));
        let offset = |digits: usize, ls: &[usize], s: &HashMap<usize, usize>| -> usize {
            let n = ls.len();
            ls.iter().enumerate().map(|(i, l)| ((digits >> (n - 1 - i)) & 1) * s.get(l).copied().unwrap_or(0)).sum()
        };

        let mut data = vec![0.0; 1 << labels.len()];
        for (out_idx, slot) in data.iter_mut().enumerate() {
            let fa = out_idx >> free_b.len();
            let fb = out_idx & ((1 << free_b.len()) - 1);
            let base_a = offset(fa, &free_a, &sa);
            let base_b = offset(fb, &free_b, &sb);
            let mut acc = 0.0;
            for k in 0..1usize << shared.len() {
                acc += self.data[base_a + offset(k, &shared, &sa)] * other.data[base_b + offset(k, &shared, &sb)];
            }
            *slot = acc;
        }
        Labeled { labels, data }
    }

    /// Reorders axes to `order` (a permutation of `self.labels`).
    pub fn permuted(&self, order: &[usize]) -> Labeled {
        let n = self.labels.len();
        let pos: Vec<usize> = order.iter().map(|l| self.labels.iter().position(|x| x == l).unwrap()).collect();
        let data = (0..self.data.len())
            .map(|idx| {
                let src = pos.iter().enumerate().fold(0, |acc, (i, &p)| {
                    acc | (((idx >> (n - 1 - i)) & 1) << (n - 1 - p))
                });
                self.data[src]
            })
            .collect();
        Labeled { labels: order.to_vec(), data }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionOrder {
    LeftToRight,
    RightToLeft,
}

/// Word tensors of `d` with cup partners sharing one label.
fn network(d: &StringDiagram, store: &TensorStore) -> Result<(Vec<Labeled>, usize), TensorError> {
    let open = match d.open_wires() {
        [w] => *w,
        _ => return Err(TensorError::OpenWires),
    };
    let mut label: Vec<usize> = (0..d.wires().len()).collect();
    for c in d.cups() {
        label[c.right] = c.left;
    }
    let nodes = d
        .boxes()
        .iter()
        .map(|b| {
            let t = store.get(&b.word).ok_or_else(|| TensorError::MissingWord(b.word.clone()))?;
            if t.rank != b.ty.len() {
                return Err(TensorError::Shape {
                    word: b.word.clone(),
                    expected: WIRE_DIM.pow(b.ty.len() as u32),
                    found: t.entries.len(),
                });
            }
            Ok(Labeled { labels: b.wires().map(|w| label[w]).collect(), data: t.entries.clone() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((nodes, label[open]))
}

fn contract_all<'a>(nodes: impl Iterator<Item = &'a Labeled>) -> Labeled {
    nodes.fold(Labeled::scalar(1.0), |acc, t| acc.contract(t))
}

/// Contracts the (un-rewritten) diagram to the vector on its open wire.
pub fn evaluate(d: &StringDiagram, store: &TensorStore) -> Result<[f64; 2], TensorError> {
    evaluate_with_order(d, store, ContractionOrder::LeftToRight)
}

pub fn evaluate_with_order(
    d: &StringDiagram,
    store: &TensorStore,
    order: ContractionOrder,
) -> Result<[f64; 2], TensorError> {
    let (nodes, _) = network(d, store)?;
    let out = match order {
        ContractionOrder::LeftToRight => contract_all(nodes.iter()),
        ContractionOrder::RightToLeft => contract_all(nodes.iter().rev()),
    };
    Ok([out.data[0], out.data[1]])
}

/// Softmax over the two components.
pub fn predict_classical(v: [f64; 2]) -> (f64, f64) {
    let m = v[0].max(v[1]);
    let (e0, e1) = ((v[0] - m).exp(), (v[1] - m).exp());
    (e0 / (e0 + e1), e1 / (e0 + e1))
}

/// Cross-entropy `-log p_label` of the softmax readout.
pub fn loss(d: &StringDiagram, store: &TensorStore, label: usize) -> Result<f64, TensorError> {
    let v = evaluate(d, store)?;
    let m = v[0].max(v[1]);
    let lse = m + ((v[0] - m).exp() + (v[1] - m).exp()).ln();
    Ok(lse - v[label])
}

/// Exact gradient of the cross-entropy loss with respect to every word
/// tensor in `d`. Words not in `d` get zero cotensors.
pub fn gradient(d: &StringDiagram, store: &TensorStore, label: usize) -> Result<TensorStore, TensorError> {
    let (nodes, open) = network(d, store)?;
    let v = contract_all(nodes.iter());
    let (p0, p1) = predict_classical([v.data[0], v.data[1]]);
    let dv = Labeled {
        labels: vec![open],
        data: vec![p0 - f64::from(label == 0), p1 - f64::from(label == 1)],
    };
    let mut grads = store.zeros_like();
    for (i, b) in d.boxes().iter().enumerate() {
        let env = contract_all(nodes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t));
        let g = env.contract(&dv).permuted(&nodes[i].labels);
        let slot = grads.tensors.get_mut(&b.word).expect("word present in store");
        for (a, x) in slot.entries.iter_mut().zip(&g.data) {
            *a += x;
        }
    }
    Ok(grads)
}
