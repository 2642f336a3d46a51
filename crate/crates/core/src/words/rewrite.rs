//! Phase rewrites that leave a word's matrix unchanged.
//!
//! The one local identity behind all of them: on the support `(p, q)` of a
//! rotation,
//!
//! ```text
//! diag(e^{iα_p}, e^{iα_q}) · R = diag(e^{i(α_p-α_q)}, 1) · R · diag(e^{iα_q}, e^{iα_q})
//! ```
//!
//! so the common part of a phase passes through and only the difference
//! stays behind, on the rotation's first label `p`. Phases off the support
//! commute with the rotation outright.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{km, wrap_phase, Atom, PhaseAtom, RotationAtom, Word, WordForm};
use crate::error::{Error, Result};

/// Which neighbour a phase is pushed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

fn phase_atom(entries: BTreeMap<usize, f64>) -> Option<Atom> {
    (!entries.is_empty()).then(|| Atom::Phase(PhaseAtom::new(entries)))
}

/// Merges adjacent phases and moves every phase entry rightwards past
/// rotations whose support it does not touch. Merged angles are reduced
/// into `[0, 2π)`; entries that become exactly zero are dropped.
pub fn merge_phases(w: &Word) -> Word {
    let mut out = Vec::with_capacity(w.atoms.len());
    let mut pending: BTreeMap<usize, f64> = BTreeMap::new();
    let flush = |pending: &mut BTreeMap<usize, f64>, keep: &dyn Fn(usize) -> bool, out: &mut Vec<Atom>| {
        let mut emitted = BTreeMap::new();
        pending.retain(|&k, d| {
            if keep(k) {
                true
            } else {
                let r = wrap_phase(*d);
                if r != 0.0 {
                    emitted.insert(k, r);
                }
                false
            }
        });
        if let Some(a) = phase_atom(emitted) {
            out.push(a);
        }
    };
    for atom in &w.atoms {
        match atom {
            Atom::Phase(p) => {
                for (&k, &d) in &p.deltas {
                    *pending.entry(k).or_insert(0.0) += d;
                }
            }
            Atom::Rotation(r) => {
                let pair = r.pair;
                flush(&mut pending, &|k| !pair.contains(k), &mut out);
                out.push(atom.clone());
            }
        }
    }
    flush(&mut pending, &|_| false, &mut out);
    Word { n: w.n, atoms: out }
}

/// Pushes the phase at `at` through the adjacent rotation in `direction`.
///
/// Moving right, `P · R` becomes `P_res · R · P_common`: the residual
/// `α_p - α_q` stays on the rotation's first label, the common `α_q` (on
/// both `p` and `q`) and all off-support entries move across. Moving left
/// is the mirror: `R · P` becomes `P_common · R · P_res`. Angles are not
/// reduced; zero residual or common parts are not emitted.
pub fn pass_through(w: &Word, at: usize, direction: Direction) -> Result<Word> {
    let not_applicable = |reason: &str| Error::NotApplicable {
        position: at,
        reason: reason.to_string(),
    };
    let phase = w
        .atoms
        .get(at)
        .ok_or_else(|| not_applicable("position out of range"))?
        .as_phase()
        .ok_or_else(|| not_applicable("atom is not a phase"))?;
    let neighbour = match direction {
        Direction::Right => at.checked_add(1),
        Direction::Left => at.checked_sub(1),
    }
    .and_then(|i| w.atoms.get(i))
    .ok_or_else(|| not_applicable("no neighbouring atom in that direction"))?;
    let rot = neighbour
        .as_rotation()
        .ok_or_else(|| not_applicable("neighbour is not a rotation"))?;

    let (p, q) = (rot.pair.first, rot.pair.second);
    let common = phase.get(q);
    let residual = phase.get(p) - common;

    let mut moved: BTreeMap<usize, f64> = phase
        .deltas
        .iter()
        .filter(|(&k, _)| !rot.pair.contains(k))
        .map(|(&k, &d)| (k, d))
        .collect();
    if common != 0.0 {
        moved.insert(p, common);
        moved.insert(q, common);
    }
    let stays = (residual != 0.0).then(|| BTreeMap::from([(p, residual)]));

    let rotation = Atom::Rotation(*rot);
    let mut atoms = Vec::with_capacity(w.atoms.len() + 1);
    match direction {
        Direction::Right => {
            atoms.extend_from_slice(&w.atoms[..at]);
            atoms.extend(stays.and_then(phase_atom));
            atoms.push(rotation);
            atoms.extend(phase_atom(moved));
            atoms.extend_from_slice(&w.atoms[at + 2..]);
        }
        Direction::Left => {
            atoms.extend_from_slice(&w.atoms[..at - 1]);
            atoms.extend(phase_atom(moved));
            atoms.push(rotation);
            atoms.extend(stays.and_then(phase_atom));
            atoms.extend_from_slice(&w.atoms[at + 1..]);
        }
    }
    Ok(Word { n: w.n, atoms })
}

/// Rewrites `w` into the target form with the same matrix.
///
/// Rotations are never reordered or merged, so words that repeat a rotation
/// pair are rejected with [`Error::Unreachable`].
pub fn normalize(w: &Word, target: WordForm) -> Result<Word> {
    if !w.has_distinct_pairs() {
        return Err(Error::Unreachable(
            "word repeats a rotation pair; only evaluation is supported".into(),
        ));
    }
    Ok(match target {
        WordForm::OnePhaseOneRotation => sweep(w, false),
        WordForm::PhaseAdjoint => sweep(w, true),
        WordForm::Km => km::normalize_km(w),
        WordForm::General => merge_phases(w),
    })
}

/// Single left-to-right pass carrying the accumulated diagonal phase.
/// At each rotation the difference `carry_p - carry_q` is emitted as the
/// block's phase. In one phase–one rotation form the common part keeps
/// travelling right; in phase-adjoint form the block is conjugated instead
/// and the carry is unchanged.
fn sweep(w: &Word, adjoint: bool) -> Word {
    let n = w.n;
    let mut carry = vec![0.0; n];
    let mut out = Vec::with_capacity(w.atoms.len() + n);
    for atom in &w.atoms {
        match atom {
            Atom::Phase(p) => {
                for (&k, &d) in &p.deltas {
                    carry[k] += d;
                }
            }
            Atom::Rotation(r) => {
                let (p, q) = (r.pair.first, r.pair.second);
                let residual = wrap_phase(carry[p] - carry[q]);
                out.push(Atom::phase_single(p, residual));
                out.push(Atom::Rotation(*r));
                if adjoint {
                    out.push(Atom::phase_single(p, wrap_phase(-residual)));
                } else {
                    carry[p] = carry[q];
                }
            }
        }
    }
    let eta: Vec<f64> = carry.into_iter().map(wrap_phase).collect();
    out.push(Atom::phase_full(&eta));
    Word { n, atoms: out }
}

/// Sign matrices that bring an arbitrary rotation angle into `[0, π/2]`:
/// `R(θ) = diag(π-phases on lo/hi) · R(θ') · diag(π-phases on lo/hi)`.
fn reduce_angle(theta: f64) -> (f64, [bool; 2], [bool; 2]) {
    let t = wrap_phase(theta);
    if t <= FRAC_PI_2 {
        (t, [false, false], [false, false])
    } else if t <= PI {
        // R(π - θ') = diag(-1, 1) R(θ') diag(1, -1)
        ((PI - t).clamp(0.0, FRAC_PI_2), [true, false], [false, true])
    } else if t <= 3.0 * FRAC_PI_2 {
        // R(π + θ') = -R(θ')
        ((t - PI).clamp(0.0, FRAC_PI_2), [true, true], [false, false])
    } else {
        // R(-θ') = diag(1, -1) R(θ') diag(1, -1)
        ((TAU - t).clamp(0.0, FRAC_PI_2), [false, true], [false, true])
    }
}

/// Maps every rotation angle into `[0, π/2]` and every phase into
/// `[0, 2π)`, absorbing the sign flips as π phases. The result is in one
/// phase–one rotation form.
pub fn range_reduce(w: &Word) -> Result<Word> {
    let base = normalize(w, WordForm::OnePhaseOneRotation)?;
    let mut expanded = Vec::with_capacity(base.atoms.len() * 2);
    for atom in &base.atoms {
        match atom {
            Atom::Rotation(r) => {
                let (theta, left, right) = reduce_angle(r.theta);
                let (lo, hi) = (r.pair.lo(), r.pair.hi());
                let signs = |flags: [bool; 2]| {
                    let m: BTreeMap<usize, f64> = [(lo, flags[0]), (hi, flags[1])]
                        .into_iter()
                        .filter(|&(_, f)| f)
                        .map(|(k, _)| (k, PI))
                        .collect();
                    phase_atom(m)
                };
                expanded.extend(signs(left));
                expanded.push(Atom::Rotation(RotationAtom { pair: r.pair, theta }));
                expanded.extend(signs(right));
            }
            other => expanded.push(other.clone()),
        }
    }
    Ok(sweep(&Word { n: w.n, atoms: expanded }, false))
}
