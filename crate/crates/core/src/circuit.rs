//! IQP-ansatz compilation of string diagrams into parameterized circuits.
//!
//! Angle conventions: `RZ(t) = diag(e^{-it/2}, e^{it/2})`,
//! `RX(t) = cos(t/2) I - i sin(t/2) X`, and `CRZ(t)` applies `RZ(t)` to the
//! target when the control is 1.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::diagram::{Cup, Effect, QubitMap, StringDiagram, WireId};

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("diagram must have exactly one open sentence wire, found {0}")]
    OpenWires(String),
    #[error("missing parameters: {}", .0.join(", "))]
    MissingParameters(Vec<String>),
    #[error("invalid gate {0}")]
    InvalidGate(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid ansatz config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Rx,
    Rz,
    Crz,
    Cx,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::Rx | GateKind::Rz => 1,
            GateKind::Crz | GateKind::Cx => 2,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Rz | GateKind::Crz)
    }

    fn as_str(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Crz => "CRZ",
            GateKind::Cx => "CX",
        }
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "H" => GateKind::H,
            "RX" => GateKind::Rx,
            "RZ" => GateKind::Rz,
            "CRZ" => GateKind::Crz,
            "CX" => GateKind::Cx,
            other => return Err(format!("unknown gate {other:?}")),
        })
    }
}

/// A named parameter with a sign.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParameterRef {
    pub name: String,
    pub negated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Angle {
    Const(f64),
    Param(ParameterRef),
}

impl Angle {
    pub fn param(name: impl Into<String>) -> Self {
        Angle::Param(ParameterRef { name: name.into(), negated: false })
    }

    pub fn negated(&self) -> Self {
        match self {
            Angle::Const(v) => Angle::Const(-v),
            Angle::Param(p) => {
                Angle::Param(ParameterRef { name: p.name.clone(), negated: !p.negated })
            }
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Const(v) => write!(f, "{v}"),
            Angle::Param(p) if p.negated => write!(f, "-{}", p.name),
            Angle::Param(p) => f.write_str(&p.name),
        }
    }
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains("__") {
            let (negated, name) = match s.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, s),
            };
            Ok(Angle::Param(ParameterRef { name: name.to_string(), negated }))
        } else {
            s.parse::<f64>().map(Angle::Const).map_err(|_| format!("bad angle {s:?}"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    angle: Option<Angle>,
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, qubits: [q, q], angle: None }
    }

    pub fn rx(q: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Rx, qubits: [q, q], angle: Some(angle) }
    }

    pub fn rz(q: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Rz, qubits: [q, q], angle: Some(angle) }
    }

    pub fn crz(control: usize, target: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Crz, qubits: [control, target], angle: Some(angle) }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cx, qubits: [control, target], angle: None }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn angle(&self) -> Option<&Angle> {
        self.angle.as_ref()
    }

    fn remap(&self, map: impl Fn(usize) -> usize) -> Self {
        Self { kind: self.kind, qubits: self.qubits.map(map), angle: self.angle.clone() }
    }

    fn check(&self, n_qubits: usize) -> Result<(), CircuitError> {
        let qs = self.qubits();
        let ok = qs.iter().all(|&q| q < n_qubits)
            && (qs.len() == 1 || qs[0] != qs[1])
            && self.angle.is_some() == self.kind.is_rotation();
        if ok {
            Ok(())
        } else {
            Err(CircuitError::InvalidGate(self.to_string()))
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        if let Some(a) = &self.angle {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Complex conjugate of a gate sequence: rotation angles flip sign.
pub fn conjugate(gates: &[Gate]) -> Vec<Gate> {
    gates
        .iter()
        .map(|g| Gate { angle: g.angle.as_ref().map(Angle::negated), ..g.clone() })
        .collect()
}

/// Adjoint of a gate sequence: reversed order, rotation angles flip sign.
/// `H` and `CX` are self-inverse.
pub fn dagger(gates: &[Gate]) -> Vec<Gate> {
    let mut out = conjugate(gates);
    out.reverse();
    out
}

/// Transpose of a gate sequence, `U^T = (U*)†`.
pub fn transpose(gates: &[Gate]) -> Vec<Gate> {
    dagger(&conjugate(gates))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    postselect: BTreeMap<usize, u8>,
    measured: usize,
}

impl Circuit {
    /// Validates gate indices and that post-selection plus the measured
    /// qubit cover every qubit exactly once.
    pub fn new(
        n_qubits: usize,
        gates: Vec<Gate>,
        postselect: BTreeMap<usize, u8>,
        measured: usize,
    ) -> Result<Self, CircuitError> {
        for g in &gates {
            g.check(n_qubits)?;
        }
        let covered = measured < n_qubits
            && !postselect.contains_key(&measured)
            && postselect.len() + 1 == n_qubits
            && postselect.keys().all(|&q| q < n_qubits)
            && postselect.values().all(|&v| v <= 1);
        if !covered {
            return Err(CircuitError::InvalidGate(
                "post-selection and measured qubit must partition the register".into(),
            ));
        }
        Ok(Self { n_qubits, gates, postselect, measured })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn postselect(&self) -> &BTreeMap<usize, u8> {
        &self.postselect
    }

    pub fn measured(&self) -> usize {
        self.measured
    }

    /// Distinct parameter names referenced by the gates, sorted.
    pub fn parameter_names(&self) -> BTreeSet<&str> {
        self.gates
            .iter()
            .filter_map(|g| match &g.angle {
                Some(Angle::Param(p)) => Some(p.name.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Replaces every parameter by `±value`.
    pub fn bind(&self, values: &HashMap<String, f64>) -> Result<Circuit, CircuitError> {
        let missing: Vec<String> = self
            .parameter_names()
            .into_iter()
            .filter(|n| !values.contains_key(*n))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(CircuitError::MissingParameters(missing));
        }
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let angle = g.angle.as_ref().map(|a| match a {
                    Angle::Param(p) => {
                        let v = values[&p.name];
                        Angle::Const(if p.negated { -v } else { v })
                    }
                    c => c.clone(),
                });
                Gate { angle, ..g.clone() }
            })
            .collect();
        Ok(Circuit { gates, ..self.clone() })
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Circuit, CircuitError> {
        let mut n_qubits = None;
        let mut postselect = BTreeMap::new();
        let mut measured = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| CircuitError::Parse { line, message };
            let mut toks = raw.split_whitespace();
            let Some(head) = toks.next() else { continue };
            let rest: Vec<&str> = toks.collect();
            let index = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad qubit {s:?}")));
            match head {
                "qubits" => n_qubits = Some(index(rest.first().copied().unwrap_or(""))?),
                "measure" => measured = Some(index(rest.first().copied().unwrap_or(""))?),
                "postselect" => {
                    for item in rest {
                        let (q, v) = item.split_once('=').ok_or_else(|| err(format!("bad {item:?}")))?;
                        let v = v.parse::<u8>().map_err(|_| err(format!("bad outcome {v:?}")))?;
                        postselect.insert(index(q)?, v);
                    }
                }
                kind => {
                    let kind: GateKind = kind.parse().map_err(err)?;
                    let arity = kind.arity();
                    let want = arity + usize::from(kind.is_rotation());
                    if rest.len() != want {
                        return Err(err(format!("expected {want} operands")));
                    }
                    let q0 = index(rest[0])?;
                    let q1 = if arity == 2 { index(rest[1])? } else { q0 };
                    let angle = if kind.is_rotation() {
                        Some(rest[arity].parse::<Angle>().map_err(err)?)
                    } else {
                        None
                    };
                    gates.push(Gate { kind, qubits: [q0, q1], angle });
                }
            }
        }
        let missing = |what: &str| CircuitError::Parse { line: 0, message: format!("missing {what}") };
        Circuit::new(
            n_qubits.ok_or_else(|| missing("qubits"))?,
            gates,
            postselect,
            measured.ok_or_else(|| missing("measure"))?,
        )
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        f.write_str("postselect")?;
        for (q, v) in &self.postselect {
            write!(f, " {q}={v}")?;
        }
        writeln!(f)?;
        writeln!(f, "measure {}", self.measured)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnsatzConfig {
    qubits_per_n: usize,
    qubits_per_s: usize,
    iqp_layers: usize,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self { qubits_per_n: 1, qubits_per_s: 1, iqp_layers: 1 }
    }
}

impl AnsatzConfig {
    pub fn new(qubits_per_n: usize, qubits_per_s: usize, iqp_layers: usize) -> Result<Self, CircuitError> {
        if qubits_per_n == 0 || qubits_per_s == 0 || iqp_layers == 0 {
            return Err(CircuitError::Config("all counts must be at least 1".into()));
        }
        Ok(Self { qubits_per_n, qubits_per_s, iqp_layers })
    }

    pub fn qubit_map(&self) -> QubitMap {
        QubitMap { n: self.qubits_per_n, s: self.qubits_per_s }
    }

    pub fn iqp_layers(&self) -> usize {
        self.iqp_layers
    }

    /// Parameters of a word state on `k` qubits.
    pub fn param_count(&self, k: usize) -> usize {
        if k == 1 {
            3
        } else {
            (k - 1) * self.iqp_layers
        }
    }
}

/// Gates preparing `word`'s state on local qubits `0..k`.
pub fn word_gates(word: &str, k: usize, cfg: &AnsatzConfig) -> Vec<Gate> {
    let p = |i: usize| Angle::param(format!("{word}__{i}"));
    if k == 1 {
        return vec![Gate::rx(0, p(0)), Gate::rz(0, p(1)), Gate::rx(0, p(2))];
    }
    let mut gates: Vec<Gate> = (0..k).map(Gate::h).collect();
    let mut i = 0;
    for _ in 0..cfg.iqp_layers {
        for j in 0..k - 1 {
            gates.push(Gate::crz(j, j + 1, p(i)));
            i += 1;
        }
    }
    gates
}

struct Piece {
    n_qubits: usize,
    gates: Vec<Gate>,
    postselect: Vec<usize>,
    wire_qubits: HashMap<WireId, Vec<usize>>,
}

fn compile_piece(
    d: &StringDiagram,
    boxes: &[usize],
    cups: &[Cup],
    effects: &[Effect],
    cfg: &AnsatzConfig,
) -> Piece {
    let q = cfg.qubit_map();
    let mut piece = Piece { n_qubits: 0, gates: Vec::new(), postselect: Vec::new(), wire_qubits: HashMap::new() };
    for &b in boxes {
        let word = &d.boxes()[b];
        let start = piece.n_qubits;
        for w in word.wires() {
            let width = q.of(d.wires()[w].ty.base());
            piece.wire_qubits.insert(w, (piece.n_qubits..piece.n_qubits + width).collect());
            piece.n_qubits += width;
        }
        let k = piece.n_qubits - start;
        piece.gates.extend(word_gates(&word.word, k, cfg).iter().map(|g| g.remap(|x| x + start)));
    }
    for e in effects {
        let child = compile_piece(d, &e.source.boxes, &e.source.cups, &e.source.effects, cfg);
        let mut map = vec![usize::MAX; child.n_qubits];
        for (&from, &to) in child.wire_qubits[&e.source.open].iter().zip(&piece.wire_qubits[&e.target]) {
            map[from] = to;
        }
        for slot in map.iter_mut().filter(|m| **m == usize::MAX) {
            *slot = piece.n_qubits;
            piece.n_qubits += 1;
        }
        piece.gates.extend(transpose(&child.gates).iter().map(|g| g.remap(|x| map[x])));
        piece.postselect.extend(map);
    }
    for c in cups {
        let left = &piece.wire_qubits[&c.left];
        let right = &piece.wire_qubits[&c.right];
        for (&a, &b) in left.iter().zip(right) {
            piece.gates.push(Gate::cx(a, b));
            piece.gates.push(Gate::h(a));
            piece.postselect.extend([a, b]);
        }
    }
    piece
}

/// Compiles a diagram with one open `s` wire.
///
/// Bent effects compile as the transpose of their subdiagram: the piece's
/// post-selected qubits become fresh `|0>` inputs, its gates run reversed
/// with transposed gates, and every qubit it touches is post-selected.
pub fn compile(d: &StringDiagram, cfg: &AnsatzConfig) -> Result<Circuit, CircuitError> {
    let open = match d.open_wires() {
        [w] if d.wires()[*w].ty.is_sentence() => *w,
        other => {
            let types: Vec<String> = other.iter().map(|&w| d.wires()[w].ty.to_string()).collect();
            return Err(CircuitError::OpenWires(format!("[{}]", types.join(" "))));
        }
    };
    let states: Vec<usize> = d.state_boxes().collect();
    let piece = compile_piece(d, &states, d.cups(), d.effects(), cfg);
    let s_qubits = &piece.wire_qubits[&open];
    let mut postselect: BTreeMap<usize, u8> = piece.postselect.iter().map(|&q| (q, 0)).collect();
    postselect.extend(s_qubits[1..].iter().map(|&q| (q, 0)));
    Circuit::new(piece.n_qubits, piece.gates, postselect, s_qubits[0])
}

/// Sorted, deduplicated parameter names over a collection of diagrams.
pub fn parameter_names<'a>(
    diagrams: impl IntoIterator<Item = &'a StringDiagram>,
    cfg: &AnsatzConfig,
) -> Vec<String> {
    let q = cfg.qubit_map();
    let mut names = BTreeSet::new();
    for d in diagrams {
        for b in d.boxes() {
            let k: usize = b.ty.simples().iter().map(|t| q.of(t.base())).sum();
            names.extend((0..cfg.param_count(k)).map(|i| format!("{}__{i}", b.word)));
        }
    }
    names.into_iter().collect()
}
