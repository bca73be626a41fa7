//! String diagrams for typed sentences and the cup-removal rewrite.
//!
//! Every simple type of the concatenated sentence type becomes one wire,
//! produced by the word box it belongs to. Contractions of the reduction
//! witness become cups. [`remove_cups`] then bends closed state
//! subdiagrams through their cup, turning them into effects on the
//! opposite wire.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

use crate::pregroup::{AtomicType, PregroupType, ReductionWitness, SimpleType, TypedWord};

pub type WireId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("witness does not fit the sentence types: {0}")]
    Structure(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoxKind {
    State,
    Effect,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordBox {
    pub word: String,
    pub ty: PregroupType,
    pub kind: BoxKind,
    first_wire: WireId,
}

impl WordBox {
    pub fn wires(&self) -> Range<WireId> {
        self.first_wire..self.first_wire + self.ty.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Wire {
    pub ty: SimpleType,
    /// `(box, port)` producing this wire.
    pub producer: (usize, usize),
}

/// A cup between two dual wires, `left < right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cup {
    pub left: WireId,
    pub right: WireId,
}

/// A closed piece of diagram with exactly one non-consumed wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subdiagram {
    /// State boxes directly in this piece, ascending.
    pub boxes: Vec<usize>,
    pub cups: Vec<Cup>,
    pub effects: Vec<Effect>,
    pub open: WireId,
}

/// A bent subdiagram acting as an effect on `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Effect {
    pub target: WireId,
    pub source: Subdiagram,
}

/// One application of the bending rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BendStep {
    pub cup: Cup,
    pub closed: WireId,
    pub target: WireId,
    /// Every box that moved into the effect, nested ones included.
    pub boxes: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StringDiagram {
    boxes: Vec<WordBox>,
    wires: Vec<Wire>,
    cups: Vec<Cup>,
    effects: Vec<Effect>,
    open_wires: Vec<WireId>,
    bent: Vec<BendStep>,
}

/// Qubits per wire for each atomic type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitMap {
    pub n: usize,
    pub s: usize,
}

impl Default for QubitMap {
    fn default() -> Self {
        Self { n: 1, s: 1 }
    }
}

impl QubitMap {
    pub fn of(&self, base: AtomicType) -> usize {
        match base {
            AtomicType::N => self.n,
            AtomicType::S => self.s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResourceCount {
    pub qubits_total: usize,
    pub qubits_postselected: usize,
    pub qubits_measured: usize,
}

/// One state box per word, one cup per contraction, one open `s` wire.
pub fn build_diagram(
    typed: &[TypedWord],
    witness: &ReductionWitness,
) -> Result<StringDiagram, DiagramError> {
    let types: Vec<SimpleType> =
        typed.iter().flat_map(|(_, t)| t.simples().iter().copied()).collect();
    witness.validate(&types).map_err(DiagramError::Structure)?;

    let mut boxes = Vec::with_capacity(typed.len());
    let mut wires = Vec::with_capacity(types.len());
    for (b, (word, ty)) in typed.iter().enumerate() {
        boxes.push(WordBox {
            word: word.clone(),
            ty: ty.clone(),
            kind: BoxKind::State,
            first_wire: wires.len(),
        });
        wires.extend(ty.simples().iter().enumerate().map(|(port, &t)| Wire {
            ty: t,
            producer: (b, port),
        }));
    }
    let cups = witness
        .contractions
        .iter()
        .map(|&(left, right)| Cup { left, right })
        .collect();
    Ok(StringDiagram {
        boxes,
        wires,
        cups,
        effects: Vec::new(),
        open_wires: witness.residual.clone(),
        bent: Vec::new(),
    })
}

impl StringDiagram {
    pub fn boxes(&self) -> &[WordBox] {
        &self.boxes
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    /// Cups not yet removed.
    pub fn cups(&self) -> &[Cup] {
        &self.cups
    }

    /// Top-level effects, ordered by target wire.
    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn open_wires(&self) -> &[WireId] {
        &self.open_wires
    }

    pub fn bent(&self) -> &[BendStep] {
        &self.bent
    }

    pub fn owner(&self, wire: WireId) -> usize {
        self.wires[wire].producer.0
    }

    /// Box indices of states that are not part of any effect.
    pub fn state_boxes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.boxes.len()).filter(|&b| self.boxes[b].kind == BoxKind::State)
    }

    pub fn sentence(&self) -> String {
        self.boxes.iter().map(|b| b.word.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Distinct words, sorted.
    pub fn words(&self) -> BTreeSet<&str> {
        self.boxes.iter().map(|b| b.word.as_str()).collect()
    }

    /// Finds the maximal top-level state piece that `closed` would leave
    /// with no other free wire once `cup` is cut.
    fn closed_piece(&self, cup: Cup, closed: WireId, target: WireId) -> Option<Subdiagram> {
        let mut cup_at: HashMap<WireId, Cup> = HashMap::new();
        for &c in self.cups.iter().filter(|&&c| c != cup) {
            cup_at.insert(c.left, c);
            cup_at.insert(c.right, c);
        }
        let mut members = BTreeSet::new();
        let mut stack = vec![self.owner(closed)];
        while let Some(b) = stack.pop() {
            if !members.insert(b) {
                continue;
            }
            for w in self.boxes[b].wires() {
                if let Some(c) = cup_at.get(&w) {
                    let other = if c.left == w { c.right } else { c.left };
                    stack.push(self.owner(other));
                }
            }
        }
        if members.contains(&self.owner(target)) {
            return None;
        }
        let effect_targets: BTreeSet<WireId> = self.effects.iter().map(|e| e.target).collect();
        let mut free = members
            .iter()
            .flat_map(|&b| self.boxes[b].wires())
            .filter(|w| !cup_at.contains_key(w) && !effect_targets.contains(w));
        if free.next() != Some(closed) || free.next().is_some() {
            return None;
        }
        let inside = |w: WireId| members.contains(&self.owner(w));
        let mut cups: Vec<Cup> = self.cups.iter().copied().filter(|c| c != &cup && inside(c.left)).collect();
        cups.sort();
        let effects = self.effects.iter().filter(|e| inside(e.target)).cloned().collect();
        Some(Subdiagram { boxes: members.into_iter().collect(), cups, effects, open: closed })
    }

    fn bend(&mut self, cup: Cup, target: WireId, piece: Subdiagram) {
        let mut moved = Vec::new();
        collect_boxes(&piece, &mut moved);
        moved.sort_unstable();
        for &b in &piece.boxes {
            self.boxes[b].kind = BoxKind::Effect;
        }
        self.cups.retain(|c| *c != cup && !piece.cups.contains(c));
        self.effects.retain(|e| !piece.effects.iter().any(|p| p.target == e.target));
        self.bent.push(BendStep { cup, closed: piece.open, target, boxes: moved });
        self.effects.push(Effect { target, source: piece });
        self.effects.sort_by_key(|e| e.target);
    }

    /// Renders as line-oriented ASCII or DOT.
    pub fn render(&self, format: RenderFormat) -> String {
        match format {
            RenderFormat::Text => self.render_text(),
            RenderFormat::Dot => self.render_dot(),
        }
    }

    fn wire_label(&self, w: WireId) -> String {
        format!("{}:{}", w, self.wires[w].ty)
    }

    fn render_text(&self) -> String {
        if self.boxes.is_empty() {
            return "diagram: (empty)\n".to_string();
        }
        let mut out = format!("diagram: {}\n", self.sentence());
        for (i, b) in self.boxes.iter().enumerate() {
            let kind = match b.kind {
                BoxKind::State => "state",
                BoxKind::Effect => "effect",
            };
            let wires: Vec<String> = b.wires().map(|w| w.to_string()).collect();
            let _ = writeln!(out, "  [{i}] {} : {} ({kind}) wires {}", b.word, b.ty, wires.join(" "));
        }
        let cups: Vec<String> = self
            .cups
            .iter()
            .map(|c| format!("{}~{}", self.wire_label(c.left), self.wire_label(c.right)))
            .collect();
        let _ = writeln!(out, "cups: {}", cups.join(" "));
        let open: Vec<String> = self.open_wires.iter().map(|&w| self.wire_label(w)).collect();
        let _ = writeln!(out, "open: {}", open.join(" "));
        if !self.effects.is_empty() {
            out.push_str("effects:\n");
            for e in &self.effects {
                let _ = writeln!(out, "  {}", self.effect_text(e));
            }
        }
        out
    }

    fn effect_text(&self, e: &Effect) -> String {
        let mut parts: Vec<String> =
            e.source.boxes.iter().map(|&b| self.boxes[b].word.clone()).collect();
        parts.extend(e.source.cups.iter().map(|c| format!("cup {}~{}", c.left, c.right)));
        parts.extend(e.source.effects.iter().map(|n| self.effect_text(n)));
        format!("{} <- transpose{{{}}}", self.wire_label(e.target), parts.join("; "))
    }

    fn render_dot(&self) -> String {
        let mut out = String::from("graph diagram {\n");
        if self.boxes.is_empty() {
            out.push_str("}\n");
            return out;
        }
        out.push_str("  rankdir=LR;\n");
        for (i, b) in self.boxes.iter().enumerate() {
            let shape = match b.kind {
                BoxKind::State => "triangle",
                BoxKind::Effect => "invtriangle",
            };
            let _ = writeln!(out, "  b{i} [label=\"{}\\n{}\", shape={shape}];", b.word, b.ty);
        }
        let mut cups = self.cups.clone();
        let mut bends = Vec::new();
        let mut todo: Vec<&Effect> = self.effects.iter().collect();
        while let Some(e) = todo.pop() {
            cups.extend(e.source.cups.iter().copied());
            bends.push((e.source.open, e.target));
            todo.extend(e.source.effects.iter());
        }
        cups.sort();
        bends.sort();
        for c in &cups {
            let _ = writeln!(
                out,
                "  b{} -- b{} [label=\"cup {}/{}\"];",
                self.owner(c.left),
                self.owner(c.right),
                self.wires[c.left].ty,
                self.wires[c.right].ty
            );
        }
        for (closed, target) in bends {
            let _ = writeln!(
                out,
                "  b{} -- b{} [label=\"bend {}\", style=dashed];",
                self.owner(closed),
                self.owner(target),
                self.wires[target].ty
            );
        }
        for (k, &w) in self.open_wires.iter().enumerate() {
            let _ = writeln!(out, "  out{k} [shape=point];");
            let _ = writeln!(out, "  b{} -- out{k} [label=\"{}\"];", self.owner(w), self.wires[w].ty);
        }
        out.push_str("}\n");
        out
    }
}

fn collect_boxes(piece: &Subdiagram, into: &mut Vec<usize>) {
    into.extend(&piece.boxes);
    for e in &piece.effects {
        collect_boxes(&e.source, into);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Dot,
}

/// Applies the bending rule until no cup closes a state piece.
///
/// Cups are tried rightmost first; for each cup the right endpoint is
/// tried as the closing wire before the left one.
pub fn remove_cups(d: &StringDiagram) -> StringDiagram {
    let mut d = d.clone();
    'outer: loop {
        let mut order = d.cups.clone();
        order.sort_by_key(|c| std::cmp::Reverse((c.right, c.left)));
        for cup in order {
            for (closed, target) in [(cup.right, cup.left), (cup.left, cup.right)] {
                if let Some(piece) = d.closed_piece(cup, closed, target) {
                    d.bend(cup, target, piece);
                    continue 'outer;
                }
            }
        }
        return d;
    }
}

fn piece_qubits(d: &StringDiagram, piece: &Subdiagram, q: &QubitMap) -> usize {
    let own: usize = piece.boxes.iter().map(|&b| box_qubits(d, b, q)).sum();
    own + piece.effects.iter().map(|e| fresh_qubits(d, e, q)).sum::<usize>()
}

fn box_qubits(d: &StringDiagram, b: usize, q: &QubitMap) -> usize {
    d.boxes[b].ty.simples().iter().map(|t| q.of(t.base())).sum()
}

/// Qubits an effect needs beyond those of its target wire.
pub fn fresh_qubits(d: &StringDiagram, e: &Effect, q: &QubitMap) -> usize {
    piece_qubits(d, &e.source, q) - q.of(d.wires[e.source.open].ty.base())
}

/// Qubit budget of the compiled circuit.
///
/// Sentence wires wider than one qubit are measured on their first qubit
/// and post-select the rest.
pub fn count_resources(d: &StringDiagram, q: &QubitMap) -> ResourceCount {
    let states: usize = d.state_boxes().map(|b| box_qubits(d, b, q)).sum();
    let fresh: usize = d.effects.iter().map(|e| fresh_qubits(d, e, q)).sum();
    let cups: usize = d.cups.iter().map(|c| 2 * q.of(d.wires[c.left].ty.base())).sum();
    let effects: usize = d.effects.iter().map(|e| piece_qubits(d, &e.source, q)).sum();
    let open_extra: usize =
        d.open_wires.iter().map(|&w| q.of(d.wires[w].ty.base()) - 1).sum();
    ResourceCount {
        qubits_total: states + fresh,
        qubits_postselected: cups + effects + open_extra,
        qubits_measured: d.open_wires.len(),
    }
}
