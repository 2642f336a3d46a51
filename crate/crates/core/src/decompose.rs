//! Factoring a unitary into the one phase–one rotation chart.
//!
//! Blocks are peeled off from the left in chart order. For block `(p, q)`
//! the inverse `W† = Rᵀ P_p(-δ)` is applied to the rows `lo, hi` of the
//! current matrix so that entry `(lo, hi)` vanishes; `δ` absorbs the relative
//! phase of the two entries involved and `θ = atan2(|x_lo|, |x_hi|)`. Once
//! every entry above the diagonal is zero the remainder is a diagonal phase,
//! which becomes `Q`.

use serde::{Deserialize, Serialize};

use crate::builder::canonical_order;
use crate::degeneracy::DegeneracyPattern;
use crate::error::{Error, Result};
use crate::numerics::{phase, ComplexMatrix};
use crate::words::{block_word, wrap_phase, Word};

/// Unitarity tolerance for accepted inputs.
pub const UNITARY_TOL: f64 = 1e-10;

/// Below this magnitude an entry counts as already zero and the block phase
/// is set to zero.
const NEGLIGIBLE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub word: Word,
    pub residual: f64,
}

impl DecompositionResult {
    /// `[δ_1, θ_1, …, δ_m, θ_m, η_1, …, η_n]`, the layout of
    /// [`crate::words::make_opor_chart`].
    pub fn params(&self) -> Vec<f64> {
        self.word.opor_params().expect("decomposition output is in chart form")
    }
}

pub fn decompose(u: &ComplexMatrix) -> Result<DecompositionResult> {
    let deviation = u.unitarity_deviation();
    if deviation.is_nan() || deviation > UNITARY_TOL {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: UNITARY_TOL,
        });
    }
    let n = u.dim();
    let order = canonical_order(&DegeneracyPattern::singletons(n));
    let mut m = u.clone();
    let mut blocks = Vec::with_capacity(order.len());
    for pair in &order {
        let (lo, hi) = (pair.lo(), pair.hi());
        let x_lo = m[(lo, hi)];
        let x_hi = m[(hi, hi)];
        let (a_lo, a_hi) = (x_lo.norm(), x_hi.norm());
        let theta = a_lo.atan2(a_hi);
        let delta = if a_lo.min(a_hi) <= NEGLIGIBLE {
            0.0
        } else if pair.first == lo {
            wrap_phase(x_lo.arg() - x_hi.arg())
        } else {
            wrap_phase(x_hi.arg() - x_lo.arg())
        };
        m.scale_row(pair.first, phase(-delta));
        let (s, c) = theta.sin_cos();
        m.rotate_rows_transposed(lo, hi, c, s);
        blocks.push((delta, theta));
    }
    let eta: Vec<f64> = (0..n).map(|k| wrap_phase(m[(k, k)].arg())).collect();
    let word = block_word(n, &order, &blocks, Some(&eta));
    let residual = word.evaluate().max_abs_diff(u)?;
    Ok(DecompositionResult { word, residual })
}

pub fn reconstruct(r: &DecompositionResult) -> ComplexMatrix {
    r.word.evaluate()
}
