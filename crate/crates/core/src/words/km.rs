//! Reduction to the form with only irreducible internal phases.
//!
//! Write the word as `A_0 R_1 A_1 R_2 … R_m A_m` with diagonal phases `A_k`.
//! For any diagonal `G_k` with equal entries on rotation `k`'s pair,
//! `R_k = G_k R_k G_k†`, so the phases can be re-gauged:
//!
//! ```text
//! a_0 += g_1,   a_k += g_{k+1} - g_k,   a_m -= g_m      (additive angles)
//! ```
//!
//! Internal entries are zeroed greedily, left to right, as long as the
//! corresponding linear condition on the `g_k` stays independent of those
//! already chosen; the remaining freedom (one constant per connected
//! component of the rotation graph) then clears entries of the right outer
//! phase. What survives inside is `m - n + components` entries, i.e.
//! `(n-1)(n-2)/2` when all pairs are present. The choice of surviving
//! positions depends only on the rotation sequence, never on the angles.

use super::{wrap_phase, Atom, PhaseAtom, Word};

const PIVOT_TOL: f64 = 1e-9;

/// Incremental row-echelon system over the gauge variables.
struct Echelon {
    rows: Vec<(Vec<f64>, f64, usize)>,
}

impl Echelon {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// Adds the row if it is independent of the current ones.
    fn try_add(&mut self, mut coeffs: Vec<f64>, mut rhs: f64) -> bool {
        for (row, r_rhs, pivot) in &self.rows {
            let f = coeffs[*pivot];
            if f != 0.0 {
                for (c, r) in coeffs.iter_mut().zip(row) {
                    *c -= f * r;
                }
                rhs -= f * r_rhs;
            }
        }
        let Some((pivot, &val)) = coeffs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        else {
            return false;
        };
        if val.abs() < PIVOT_TOL {
            return false;
        }
        for c in &mut coeffs {
            *c /= val;
        }
        rhs /= val;
        // keep the system fully reduced so back substitution is trivial
        for (row, r_rhs, _) in &mut self.rows {
            let f = row[pivot];
            if f != 0.0 {
                for (r, c) in row.iter_mut().zip(&coeffs) {
                    *r -= f * c;
                }
                *r_rhs -= f * rhs;
            }
        }
        self.rows.push((coeffs, rhs, pivot));
        true
    }

    /// Solution with all free variables set to zero.
    fn solve(&self, vars: usize) -> Vec<f64> {
        let mut x = vec![0.0; vars];
        for (_, rhs, pivot) in &self.rows {
            x[*pivot] = *rhs;
        }
        x
    }
}

pub(super) fn normalize_km(w: &Word) -> Word {
    let n = w.n;
    let rotations: Vec<_> = w.rotations().copied().collect();
    let m = rotations.len();

    // phase sums before, between and after the rotations
    let mut segments = vec![vec![0.0; n]; m + 1];
    let mut seg = 0;
    for atom in &w.atoms {
        match atom {
            Atom::Rotation(_) => seg += 1,
            Atom::Phase(p) => {
                for (&k, &d) in p.deltas() {
                    segments[seg][k] += d;
                }
            }
        }
    }

    if m == 0 {
        let left: Vec<f64> = segments[0].iter().map(|&d| wrap_phase(d)).collect();
        return Word {
            n,
            atoms: vec![Atom::phase_full(&left)],
        };
    }

    // gauge vector k (0-based over rotations) has n-1 free slots: the second
    // index of the pair shares the slot of the first
    let slots = n - 1;
    let var = |k: usize, i: usize| -> usize {
        let pair = rotations[k].pair;
        let i = if i == pair.second { pair.first } else { i };
        let lo_missing = pair.second;
        let slot = if i > lo_missing { i - 1 } else { i };
        k * slots + slot
    };
    let vars = m * slots;

    let mut system = Echelon::new();
    let mut zeroed_internal = vec![vec![false; n]; m + 1];
    for k in 1..m {
        for i in 0..n {
            let mut row = vec![0.0; vars];
            row[var(k, i)] += 1.0;
            row[var(k - 1, i)] -= 1.0;
            if system.try_add(row, -segments[k][i]) {
                zeroed_internal[k][i] = true;
            }
        }
    }
    for i in 0..n {
        let mut row = vec![0.0; vars];
        row[var(m - 1, i)] -= 1.0;
        if system.try_add(row, -segments[m][i]) {
            zeroed_internal[m][i] = true;
        }
    }
    let g = system.solve(vars);
    let gauge = |k: usize, i: usize| g[var(k, i)];

    let mut atoms = Vec::with_capacity(2 * m + 1);
    let left: Vec<f64> = (0..n).map(|i| wrap_phase(segments[0][i] + gauge(0, i))).collect();
    atoms.push(Atom::phase_full(&left));
    for (k, rot) in rotations.iter().enumerate() {
        atoms.push(Atom::Rotation(*rot));
        let seg = k + 1;
        let kept: std::collections::BTreeMap<usize, f64> = (0..n)
            .filter(|&i| !zeroed_internal[seg][i])
            .map(|i| {
                let mut d = segments[seg][i] - gauge(k, i);
                if seg < m {
                    d += gauge(seg, i);
                }
                (i, wrap_phase(d))
            })
            .collect();
        if !kept.is_empty() {
            atoms.push(Atom::Phase(PhaseAtom::new(kept)));
        }
    }
    Word { n, atoms }
}
