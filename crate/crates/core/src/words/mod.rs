//! Symbolic unitaries built from rotation and phase atoms.
//!
//! A [`Word`] is an ordered product of atoms. A [`RotationAtom`] on the pair
//! `{i, j}` embeds `[[cos θ, sin θ], [-sin θ, cos θ]]` at rows/columns
//! `(min, max)`; its label order only decides which index carries the
//! chart phase of a block (the first one). A [`PhaseAtom`] is a diagonal
//! matrix `e^{iδ_k}` with absent indices meaning `δ_k = 0`.
//!
//! Indices are 0-based in the API and 1-based in JSON and `Display`.

mod km;
mod rewrite;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::builder::canonical_order;
use crate::degeneracy::DegeneracyPattern;
use crate::error::{Error, Result};
use crate::numerics::{phase, ComplexMatrix};

pub use rewrite::{merge_phases, normalize, pass_through, range_reduce, Direction};

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Ordered label of a rotation pair. The matrix block only depends on the
/// unordered pair; `first` is the index that carries a block's chart phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub first: usize,
    pub second: usize,
}

impl Pair {
    pub fn new(first: usize, second: usize) -> Self {
        assert_ne!(first, second, "rotation pair needs two distinct indices");
        Self { first, second }
    }

    pub fn lo(&self) -> usize {
        self.first.min(self.second)
    }

    pub fn hi(&self) -> usize {
        self.first.max(self.second)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.first == i || self.second == i
    }

    /// Unordered identity of the pair.
    pub fn key(&self) -> (usize, usize) {
        (self.lo(), self.hi())
    }

    /// Chart label of the unordered pair `{a, b}` in dimension `n`: `(lo, hi)`,
    /// except that `{0, n-1}` closes the cycle as `(n-1, 0)` when `n > 2`.
    /// In dimension 3 this yields the blocks `(3,1)`, `(2,3)`, `(1,2)`.
    pub fn chart_label(a: usize, b: usize, n: usize) -> Self {
        let (lo, hi) = (a.min(b), a.max(b));
        if n > 2 && lo == 0 && hi == n - 1 {
            Self::new(hi, lo)
        } else {
            Self::new(lo, hi)
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first + 1, self.second + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAtom {
    pub pair: Pair,
    pub theta: f64,
}

impl RotationAtom {
    pub fn new(first: usize, second: usize, theta: f64) -> Self {
        Self {
            pair: Pair::new(first, second),
            theta,
        }
    }
}

/// Diagonal phase matrix over a subset of indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseAtom {
    deltas: BTreeMap<usize, f64>,
}

impl PhaseAtom {
    pub fn new(deltas: BTreeMap<usize, f64>) -> Self {
        Self { deltas }
    }

    pub fn single(index: usize, delta: f64) -> Self {
        Self {
            deltas: BTreeMap::from([(index, delta)]),
        }
    }

    /// Phase on every index `0..angles.len()`.
    pub fn full(angles: &[f64]) -> Self {
        Self {
            deltas: angles.iter().copied().enumerate().collect(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        self.deltas.get(&index).copied().unwrap_or(0.0)
    }

    pub fn deltas(&self) -> &BTreeMap<usize, f64> {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Rotation(RotationAtom),
    Phase(PhaseAtom),
}

impl Atom {
    pub fn rotation(first: usize, second: usize, theta: f64) -> Self {
        Atom::Rotation(RotationAtom::new(first, second, theta))
    }

    pub fn phase_single(index: usize, delta: f64) -> Self {
        Atom::Phase(PhaseAtom::single(index, delta))
    }

    pub fn phase_full(angles: &[f64]) -> Self {
        Atom::Phase(PhaseAtom::full(angles))
    }

    pub fn as_rotation(&self) -> Option<&RotationAtom> {
        match self {
            Atom::Rotation(r) => Some(r),
            Atom::Phase(_) => None,
        }
    }

    pub fn as_phase(&self) -> Option<&PhaseAtom> {
        match self {
            Atom::Phase(p) => Some(p),
            Atom::Rotation(_) => None,
        }
    }

    /// Dense matrix of the atom in dimension `n`.
    pub fn to_matrix(&self, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(n);
        apply_right(&mut m, self);
        m
    }
}

/// Right-multiplies `m` by the atom in place.
fn apply_right(m: &mut ComplexMatrix, atom: &Atom) {
    match atom {
        Atom::Rotation(r) => {
            let (s, c) = r.theta.sin_cos();
            m.rotate_columns(r.pair.lo(), r.pair.hi(), c, s);
        }
        Atom::Phase(p) => {
            for (&k, &d) in &p.deltas {
                m.scale_column(k, phase(d));
            }
        }
    }
}

/// Syntactic families of words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordForm {
    /// `[P_i R_(i,j)] × m` followed by one full phase matrix.
    OnePhaseOneRotation,
    /// `[P_i R_(i,j) P_i†] × m` followed by one full phase matrix.
    PhaseAdjoint,
    /// Outer phase matrices with only the irreducible internal phases left.
    Km,
    /// Any word whose rotation pairs are all distinct.
    General,
}

/// Internal and external phase-parameter counts of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCount {
    pub internal: usize,
    pub external: usize,
}

impl PhaseCount {
    pub fn total(&self) -> usize {
        self.internal + self.external
    }
}

/// Ordered product of atoms in dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WordJson", into = "WordJson")]
pub struct Word {
    n: usize,
    atoms: Vec<Atom>,
}

impl Word {
    pub fn new(n: usize, atoms: Vec<Atom>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        for atom in &atoms {
            match atom {
                Atom::Rotation(r) => {
                    for i in [r.pair.first, r.pair.second] {
                        if i >= n {
                            return Err(Error::IndexOutOfRange { index: i, n });
                        }
                    }
                    if !r.theta.is_finite() {
                        return Err(Error::NonFinite(format!("rotation angle {}", r.theta)));
                    }
                }
                Atom::Phase(p) => {
                    for (&i, &d) in &p.deltas {
                        if i >= n {
                            return Err(Error::IndexOutOfRange { index: i, n });
                        }
                        if !d.is_finite() {
                            return Err(Error::NonFinite(format!("phase {d}")));
                        }
                    }
                }
            }
        }
        Ok(Self { n, atoms })
    }

    pub fn empty(n: usize) -> Self {
        assert!(n > 0);
        Self { n, atoms: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<Atom> {
        self.atoms
    }

    pub fn rotations(&self) -> impl Iterator<Item = &RotationAtom> {
        self.atoms.iter().filter_map(Atom::as_rotation)
    }

    pub fn num_rotations(&self) -> usize {
        self.rotations().count()
    }

    /// Left-to-right matrix product of the atoms.
    pub fn evaluate(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(self.n);
        for atom in &self.atoms {
            apply_right(&mut m, atom);
        }
        m
    }

    pub fn has_distinct_pairs(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.rotations().all(|r| seen.insert(r.pair.key()))
    }

    /// Number of connected components of the graph on `0..n` whose edges
    /// are the rotation pairs.
    fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.n;
        for r in self.rotations() {
            let a = find(&mut parent, r.pair.first);
            let b = find(&mut parent, r.pair.second);
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }

    /// Irreducible internal phase count for the word's rotation sequence:
    /// `m - n + components`, which is `(n-1)(n-2)/2` for a word holding all
    /// `n(n-1)/2` pairs.
    pub fn irreducible_internal_phases(&self) -> usize {
        self.num_rotations() + self.components() - self.n
    }

    pub fn is_opor(&self) -> bool {
        if !self.has_distinct_pairs() || self.atoms.len() % 2 != 1 {
            return false;
        }
        let (blocks, last) = self.atoms.split_at(self.atoms.len() - 1);
        let trailing_full = matches!(&last[0], Atom::Phase(p) if p.len() == self.n);
        trailing_full
            && blocks.chunks(2).all(|b| match (&b[0], &b[1]) {
                (Atom::Phase(p), Atom::Rotation(r)) => {
                    p.len() == 1 && p.deltas.contains_key(&r.pair.first)
                }
                _ => false,
            })
    }

    pub fn is_phase_adjoint(&self) -> bool {
        let len = self.atoms.len();
        if !self.has_distinct_pairs() || len < 4 || len % 3 != 1 {
            return false;
        }
        let (blocks, last) = self.atoms.split_at(len - 1);
        let trailing_full = matches!(&last[0], Atom::Phase(p) if p.len() == self.n);
        trailing_full
            && blocks.chunks(3).all(|b| match (&b[0], &b[1], &b[2]) {
                (Atom::Phase(left), Atom::Rotation(r), Atom::Phase(right)) => {
                    let p = r.pair.first;
                    left.len() == 1
                        && right.len() == 1
                        && left.deltas.contains_key(&p)
                        && right.deltas.contains_key(&p)
                        && {
                            let sum = wrap_phase(left.get(p) + right.get(p));
                            sum.min(TAU - sum) < 1e-12
                        }
                }
                _ => false,
            })
    }

    pub fn is_km(&self) -> bool {
        if !self.has_distinct_pairs() {
            return false;
        }
        if self
            .atoms
            .windows(2)
            .any(|w| matches!((&w[0], &w[1]), (Atom::Phase(_), Atom::Phase(_))))
        {
            return false;
        }
        self.phase_split().internal == self.irreducible_internal_phases()
    }

    /// Phase entries strictly between the first and last rotation vs. outside.
    fn phase_split(&self) -> PhaseCount {
        let rot_positions: Vec<usize> = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Atom::Rotation(_)))
            .map(|(i, _)| i)
            .collect();
        let (first, last) = match (rot_positions.first(), rot_positions.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => (usize::MAX, usize::MAX),
        };
        let mut count = PhaseCount {
            internal: 0,
            external: 0,
        };
        for (i, atom) in self.atoms.iter().enumerate() {
            if let Atom::Phase(p) = atom {
                if first != usize::MAX && i > first && i < last {
                    count.internal += p.len();
                } else {
                    count.external += p.len();
                }
            }
        }
        count
    }

    /// Most specific recognized form.
    pub fn classify(&self) -> Option<WordForm> {
        if self.is_phase_adjoint() {
            Some(WordForm::PhaseAdjoint)
        } else if self.is_opor() {
            Some(WordForm::OnePhaseOneRotation)
        } else if self.is_km() {
            Some(WordForm::Km)
        } else if self.has_distinct_pairs() {
            Some(WordForm::General)
        } else {
            None
        }
    }

    /// Counts phase parameters. In phase-adjoint words each conjugate pair
    /// `P_i … P_i†` is one parameter; of the `m + n` parameters the
    /// irreducible ones count as internal, the rest as external.
    pub fn count_phases(&self) -> Result<PhaseCount> {
        match self.classify() {
            None => Err(Error::UnrecognizedForm),
            Some(WordForm::PhaseAdjoint) => {
                let internal = self.irreducible_internal_phases();
                Ok(PhaseCount {
                    internal,
                    external: self.num_rotations() + self.n - internal,
                })
            }
            Some(_) => Ok(self.phase_split()),
        }
    }

    /// Flat chart parameters `[δ_1, θ_1, …, δ_m, θ_m, η_1, …, η_n]` of a
    /// one phase–one rotation word.
    pub fn opor_params(&self) -> Option<Vec<f64>> {
        if !self.is_opor() {
            return None;
        }
        let mut out = Vec::with_capacity(self.atoms.len() + self.n);
        let (blocks, last) = self.atoms.split_at(self.atoms.len() - 1);
        for b in blocks.chunks(2) {
            if let (Atom::Phase(p), Atom::Rotation(r)) = (&b[0], &b[1]) {
                out.push(p.get(r.pair.first));
                out.push(r.theta);
            }
        }
        if let Atom::Phase(q) = &last[0] {
            out.extend((0..self.n).map(|i| q.get(i)));
        }
        Some(out)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "I{}", self.n);
        }
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| match a {
                Atom::Rotation(r) => format!("R{}[{:.4}]", r.pair, r.theta),
                Atom::Phase(p) => {
                    let e: Vec<String> =
                        p.deltas.iter().map(|(k, d)| format!("{}:{:.4}", k + 1, d)).collect();
                    format!("P{{{}}}", e.join(","))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Builds the chart word `[P_first(δ) R(θ)] × blocks` with an optional
/// trailing full phase.
pub(crate) fn block_word(n: usize, order: &[Pair], params: &[(f64, f64)], trailing: Option<&[f64]>) -> Word {
    let mut atoms = Vec::with_capacity(2 * order.len() + 1);
    for (pair, &(delta, theta)) in order.iter().zip(params) {
        atoms.push(Atom::phase_single(pair.first, delta));
        atoms.push(Atom::Rotation(RotationAtom { pair: *pair, theta }));
    }
    if let Some(eta) = trailing {
        atoms.push(Atom::phase_full(eta));
    }
    Word { n, atoms }
}

fn split_chart_params(n: usize, params: &[f64]) -> Result<(Vec<(f64, f64)>, &[f64])> {
    if params.len() != n * n {
        return Err(Error::ParameterCount {
            expected: n * n,
            found: params.len(),
        });
    }
    if let Some(x) = params.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(x.to_string()));
    }
    let m = n * (n - 1) / 2;
    let blocks = params[..2 * m].chunks(2).map(|c| (c[0], c[1])).collect();
    Ok((blocks, &params[2 * m..]))
}

/// One phase–one rotation chart of U(n): blocks `P_i(δ) R_(i,j)(θ)` in the
/// canonical singleton order, then `Q = diag(e^{iη})`. Takes exactly `n²`
/// values laid out as `[δ_1, θ_1, …, δ_m, θ_m, η_1, …, η_n]`.
pub fn make_opor_chart(n: usize, params: &[f64]) -> Result<Word> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let (blocks, eta) = split_chart_params(n, params)?;
    let order = canonical_order(&DegeneracyPattern::singletons(n));
    Ok(block_word(n, &order, &blocks, Some(eta)))
}

/// Phase-adjoint chart: blocks `P_i(δ) R_(i,j)(θ) P_i(δ)†` in canonical
/// singleton order, then `Q`. Same parameter layout as [`make_opor_chart`].
pub fn make_phase_adjoint_chart(n: usize, params: &[f64]) -> Result<Word> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let (blocks, eta) = split_chart_params(n, params)?;
    let order = canonical_order(&DegeneracyPattern::singletons(n));
    let mut atoms = Vec::with_capacity(3 * order.len() + 1);
    for (pair, (delta, theta)) in order.iter().zip(blocks) {
        atoms.push(Atom::phase_single(pair.first, delta));
        atoms.push(Atom::Rotation(RotationAtom { pair: *pair, theta }));
        atoms.push(Atom::phase_single(pair.first, -delta));
    }
    atoms.push(Atom::phase_full(eta));
    Ok(Word { n, atoms })
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AtomJson {
    Rot { rot: [usize; 2], theta: f64 },
    Phase { phase: BTreeMap<String, f64> },
}

#[derive(Serialize, Deserialize)]
struct WordJson {
    n: usize,
    atoms: Vec<AtomJson>,
}

fn from_one_based(i: usize) -> Result<usize> {
    i.checked_sub(1)
        .ok_or_else(|| Error::InvalidPattern("word indices are 1-based".into()))
}

impl TryFrom<WordJson> for Word {
    type Error = Error;

    fn try_from(raw: WordJson) -> Result<Self> {
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| match a {
                AtomJson::Rot { rot: [a, b], theta } => {
                    let (a, b) = (from_one_based(a)?, from_one_based(b)?);
                    if a == b {
                        return Err(Error::InvalidPattern(format!(
                            "rotation pair ({}, {}) needs distinct indices",
                            a + 1,
                            b + 1
                        )));
                    }
                    Ok(Atom::Rotation(RotationAtom::new(a, b, theta)))
                }
                AtomJson::Phase { phase } => {
                    let deltas = phase
                        .into_iter()
                        .map(|(k, d)| {
                            let i: usize = k
                                .parse()
                                .map_err(|_| Error::InvalidPattern(format!("bad phase index {k:?}")))?;
                            Ok((from_one_based(i)?, d))
                        })
                        .collect::<Result<BTreeMap<_, _>>>()?;
                    Ok(Atom::Phase(PhaseAtom::new(deltas)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(raw.n, atoms)
    }
}

impl From<Word> for WordJson {
    fn from(w: Word) -> Self {
        WordJson {
            n: w.n,
            atoms: w
                .atoms
                .into_iter()
                .map(|a| match a {
                    Atom::Rotation(r) => AtomJson::Rot {
                        rot: [r.pair.first + 1, r.pair.second + 1],
                        theta: r.theta,
                    },
                    Atom::Phase(p) => AtomJson::Phase {
                        phase: p
                            .deltas
                            .into_iter()
                            .map(|(k, d)| ((k + 1).to_string(), d))
                            .collect(),
                    },
                })
                .collect(),
        }
    }
}
