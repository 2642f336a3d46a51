//! Density matrices from charts, commutants and the pruning between them.
//!
//! A full one phase–one rotation word in [`canonical_order`] places every
//! intra-class block to the right of every inter-class block, followed by the
//! trailing phase `Q`. Those rightmost factors form a commutant of `D`, so
//! they cancel in `U D U†`; a [`DensityChart`] keeps only the inter-class
//! blocks.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::charts::EigenChart;
use crate::degeneracy::DegeneracyPattern;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::words::{block_word, wrap_phase, Pair, Word};

/// Gap required between eigenvalues of different classes at an interior point.
pub const CLASS_GAP: f64 = 1e-6;

/// All `n(n-1)/2` pairs with chart labels: inter-class pairs in descending
/// lexicographic order of their labels, then intra-class pairs in the same
/// order.
pub fn canonical_order(p: &DegeneracyPattern) -> Vec<Pair> {
    let n = p.n();
    let mut inter = Vec::new();
    let mut intra = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let label = Pair::chart_label(a, b, n);
            if p.same_class(a, b) {
                intra.push(label);
            } else {
                inter.push(label);
            }
        }
    }
    let desc = |x: &Pair, y: &Pair| (y.first, y.second).cmp(&(x.first, x.second));
    inter.sort_by(desc);
    intra.sort_by(desc);
    inter.extend(intra);
    inter
}

/// Inter-class prefix of [`canonical_order`].
pub fn kept_blocks(p: &DegeneracyPattern) -> Vec<Pair> {
    canonical_order(p)
        .into_iter()
        .filter(|pair| !p.same_class(pair.first, pair.second))
        .collect()
}

/// Intra-class suffix of [`canonical_order`].
pub fn commutant_blocks(p: &DegeneracyPattern) -> Vec<Pair> {
    canonical_order(p)
        .into_iter()
        .filter(|pair| p.same_class(pair.first, pair.second))
        .collect()
}

/// Parameters of one W-block `P_first(δ) R(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockParamJson", into = "BlockParamJson")]
pub struct BlockParam {
    pub pair: Pair,
    pub delta: f64,
    pub theta: f64,
}

impl BlockParam {
    pub fn new(pair: Pair, delta: f64, theta: f64) -> Self {
        Self { pair, delta, theta }
    }

    fn check_ranges(&self) -> Result<()> {
        if !self.delta.is_finite() || !self.theta.is_finite() {
            return Err(Error::NonFinite(format!("block {}", self.pair)));
        }
        if !(0.0..TAU).contains(&self.delta) {
            return Err(Error::OutOfRange(format!(
                "phase {} of block {} outside [0, 2π)",
                self.delta, self.pair
            )));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.theta) {
            return Err(Error::OutOfRange(format!(
                "angle {} of block {} outside [0, π/2]",
                self.theta, self.pair
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BlockParamJson {
    block: [usize; 2],
    delta: f64,
    theta: f64,
}

impl TryFrom<BlockParamJson> for BlockParam {
    type Error = Error;

    fn try_from(raw: BlockParamJson) -> Result<Self> {
        let [a, b] = raw.block;
        if a == 0 || b == 0 || a == b {
            return Err(Error::InvalidPattern(format!("bad block label [{a},{b}]")));
        }
        Ok(BlockParam::new(Pair::new(a - 1, b - 1), raw.delta, raw.theta))
    }
}

impl From<BlockParam> for BlockParamJson {
    fn from(b: BlockParam) -> Self {
        BlockParamJson {
            block: [b.pair.first + 1, b.pair.second + 1],
            delta: b.delta,
            theta: b.theta,
        }
    }
}

fn check_blocks(expected: &[Pair], blocks: &[BlockParam]) -> Result<()> {
    if blocks.len() != expected.len() {
        return Err(Error::ParameterCount {
            expected: 2 * expected.len(),
            found: 2 * blocks.len(),
        });
    }
    for (want, got) in expected.iter().zip(blocks) {
        if want != &got.pair {
            return Err(Error::InvalidPattern(format!(
                "expected block {want}, found {}",
                got.pair
            )));
        }
        got.check_ranges()?;
    }
    Ok(())
}

fn blocks_word(n: usize, blocks: &[BlockParam], trailing: Option<&[f64]>) -> Word {
    let pairs: Vec<Pair> = blocks.iter().map(|b| b.pair).collect();
    let params: Vec<(f64, f64)> = blocks.iter().map(|b| (b.delta, b.theta)).collect();
    block_word(n, &pairs, &params, trailing)
}

/// Minimal chart of a density matrix with a given degeneracy pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityChartJson", into = "DensityChartJson")]
pub struct DensityChart {
    eigen: EigenChart,
    unitary_params: Vec<BlockParam>,
}

impl DensityChart {
    /// Blocks must be exactly [`kept_blocks`] of the eigen chart's pattern,
    /// with angles in `[0, π/2]` and phases in `[0, 2π)`.
    pub fn new(eigen: EigenChart, unitary_params: Vec<BlockParam>) -> Result<Self> {
        check_blocks(&kept_blocks(eigen.pattern()), &unitary_params)?;
        Ok(Self { eigen, unitary_params })
    }

    /// Builds the blocks from a flat `[δ_1, θ_1, δ_2, θ_2, …]` vector.
    pub fn from_flat(eigen: EigenChart, flat: &[f64]) -> Result<Self> {
        let pairs = kept_blocks(eigen.pattern());
        if flat.len() != 2 * pairs.len() {
            return Err(Error::ParameterCount {
                expected: 2 * pairs.len(),
                found: flat.len(),
            });
        }
        let blocks = pairs
            .iter()
            .zip(flat.chunks(2))
            .map(|(&pair, c)| BlockParam::new(pair, c[0], c[1]))
            .collect();
        Self::new(eigen, blocks)
    }

    /// Phases uniform in `[0, 2π)`, angles uniform in `[0, π/2]`.
    pub fn random<R: Rng + ?Sized>(pattern: DegeneracyPattern, rng: &mut R) -> Self {
        let unitary_params = kept_blocks(&pattern)
            .into_iter()
            .map(|pair| BlockParam::new(pair, rng.random_range(0.0..TAU), rng.random_range(0.0..=FRAC_PI_2)))
            .collect();
        let eigen = EigenChart::random(pattern, rng);
        Self { eigen, unitary_params }
    }

    /// Random chart that passes [`DensityChart::check_interior`] with room to
    /// spare: angles are kept `margin` away from the range ends and distinct
    /// classes at least `margin / 10` apart.
    pub fn random_interior<R: Rng + ?Sized>(pattern: DegeneracyPattern, margin: f64, rng: &mut R) -> Self {
        let angle = |rng: &mut R| rng.random_range(margin..FRAC_PI_2 - margin);
        let unitary_params: Vec<BlockParam> = kept_blocks(&pattern)
            .into_iter()
            .map(|pair| BlockParam::new(pair, rng.random_range(0.0..TAU), angle(rng)))
            .collect();
        loop {
            let angles = (1..pattern.num_classes()).map(|_| angle(rng)).collect();
            let eigen = EigenChart::new(pattern.clone(), angles).expect("angles in range");
            if min_class_gap(&eigen) >= margin / 10.0 {
                return Self {
                    eigen,
                    unitary_params: unitary_params.clone(),
                };
            }
        }
    }

    pub fn pattern(&self) -> &DegeneracyPattern {
        self.eigen.pattern()
    }

    pub fn eigen(&self) -> &EigenChart {
        &self.eigen
    }

    pub fn unitary_params(&self) -> &[BlockParam] {
        &self.unitary_params
    }

    /// Kept unitary parameters flattened as `[δ_1, θ_1, …]`.
    pub fn flat_params(&self) -> Vec<f64> {
        self.unitary_params.iter().flat_map(|b| [b.delta, b.theta]).collect()
    }

    /// Inter-class blocks only, no trailing phase.
    pub fn kept_word(&self) -> Word {
        blocks_word(self.pattern().n(), &self.unitary_params, None)
    }

    /// Errors unless every angle is strictly inside `(0, π/2)` and
    /// eigenvalues from different classes differ by at least [`CLASS_GAP`].
    pub fn check_interior(&self) -> Result<()> {
        let inside = |a: f64| a > 0.0 && a < FRAC_PI_2;
        if let Some(b) = self.unitary_params.iter().find(|b| !inside(b.theta)) {
            return Err(Error::NotInterior(format!("block {} has angle {}", b.pair, b.theta)));
        }
        if let Some(a) = self.eigen.angles().iter().find(|&&a| !inside(a)) {
            return Err(Error::NotInterior(format!("eigen angle {a}")));
        }
        let gap = min_class_gap(&self.eigen);
        if gap < CLASS_GAP {
            return Err(Error::NotInterior(format!("class eigenvalues only {gap:.3e} apart")));
        }
        Ok(())
    }
}

fn min_class_gap(eigen: &EigenChart) -> f64 {
    let p = eigen.pattern();
    let masses = eigen.class_masses();
    let values: Vec<f64> = masses
        .iter()
        .zip(p.classes())
        .map(|(m, c)| m / c.len() as f64)
        .collect();
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).abs());
        }
    }
    gap
}

#[derive(Serialize, Deserialize)]
struct DensityChartJson {
    #[serde(with = "crate::degeneracy::compact")]
    pattern: DegeneracyPattern,
    eigen_angles: Vec<f64>,
    unitary_params: Vec<BlockParam>,
}

impl TryFrom<DensityChartJson> for DensityChart {
    type Error = Error;

    fn try_from(raw: DensityChartJson) -> Result<Self> {
        DensityChart::new(EigenChart::new(raw.pattern, raw.eigen_angles)?, raw.unitary_params)
    }
}

impl From<DensityChart> for DensityChartJson {
    fn from(c: DensityChart) -> Self {
        DensityChartJson {
            pattern: c.eigen.pattern().clone(),
            eigen_angles: c.eigen.angles().to_vec(),
            unitary_params: c.unitary_params,
        }
    }
}

fn conjugate(u: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
    &(u * d) * &u.adjoint()
}

/// `ρ = U D U†` with `U` the kept word of the chart.
pub fn build_density(c: &DensityChart) -> ComplexMatrix {
    conjugate(&c.kept_word().evaluate(), &c.eigen.eigen_matrix())
}

/// Intra-class blocks followed by a full diagonal phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CommutantSpecJson", into = "CommutantSpecJson")]
pub struct CommutantSpec {
    pattern: DegeneracyPattern,
    blocks: Vec<BlockParam>,
    phases: Vec<f64>,
}

impl CommutantSpec {
    /// Blocks must be exactly [`commutant_blocks`] of the pattern; `phases`
    /// has one entry per index.
    pub fn new(pattern: DegeneracyPattern, blocks: Vec<BlockParam>, phases: Vec<f64>) -> Result<Self> {
        if let Some(b) = blocks.iter().find(|b| !pattern.same_class(b.pair.first, b.pair.second)) {
            return Err(Error::CrossesClassBoundary(b.pair.first + 1, b.pair.second + 1));
        }
        check_blocks(&commutant_blocks(&pattern), &blocks)?;
        if phases.len() != pattern.n() {
            return Err(Error::ParameterCount {
                expected: pattern.n(),
                found: phases.len(),
            });
        }
        if let Some(x) = phases.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(x.to_string()));
        }
        Ok(Self { pattern, blocks, phases })
    }

    pub fn random<R: Rng + ?Sized>(pattern: DegeneracyPattern, rng: &mut R) -> Self {
        let blocks = commutant_blocks(&pattern)
            .into_iter()
            .map(|pair| BlockParam::new(pair, rng.random_range(0.0..TAU), rng.random_range(0.0..=FRAC_PI_2)))
            .collect();
        let phases = (0..pattern.n()).map(|_| rng.random_range(0.0..TAU)).collect();
        Self { pattern, blocks, phases }
    }

    pub fn pattern(&self) -> &DegeneracyPattern {
        &self.pattern
    }

    pub fn blocks(&self) -> &[BlockParam] {
        &self.blocks
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `redundant_params + n`.
    pub fn param_count(&self) -> usize {
        2 * self.blocks.len() + self.phases.len()
    }

    pub fn word(&self) -> Word {
        blocks_word(self.pattern.n(), &self.blocks, Some(&self.phases))
    }
}

#[derive(Serialize, Deserialize)]
struct CommutantSpecJson {
    #[serde(with = "crate::degeneracy::compact")]
    pattern: DegeneracyPattern,
    blocks: Vec<BlockParam>,
    phases: Vec<f64>,
}

impl TryFrom<CommutantSpecJson> for CommutantSpec {
    type Error = Error;

    fn try_from(raw: CommutantSpecJson) -> Result<Self> {
        CommutantSpec::new(raw.pattern, raw.blocks, raw.phases)
    }
}

impl From<CommutantSpec> for CommutantSpecJson {
    fn from(s: CommutantSpec) -> Self {
        CommutantSpecJson {
            pattern: s.pattern,
            blocks: s.blocks,
            phases: s.phases,
        }
    }
}

pub fn build_commutant(s: &CommutantSpec) -> ComplexMatrix {
    s.word().evaluate()
}

/// Result of [`prune_equivalence`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    pub chart: DensityChart,
    pub commutant: CommutantSpec,
}

/// Splits a full `n²`-parameter chart (laid out as for
/// [`crate::words::make_opor_chart`], blocks in `canonical_order(pattern)`)
/// into the kept density chart and the deleted commutant part. Phases are
/// wrapped into `[0, 2π)`; angles must already lie in `[0, π/2]`.
pub fn prune_equivalence(full_params: &[f64], eigen: EigenChart) -> Result<Pruned> {
    let pattern = eigen.pattern().clone();
    let n = pattern.n();
    if full_params.len() != n * n {
        return Err(Error::ParameterCount {
            expected: n * n,
            found: full_params.len(),
        });
    }
    let order = canonical_order(&pattern);
    let m = order.len();
    let mut kept = Vec::new();
    let mut deleted = Vec::new();
    for (pair, c) in order.into_iter().zip(full_params[..2 * m].chunks(2)) {
        let block = BlockParam::new(pair, wrap_phase(c[0]), c[1]);
        if pattern.same_class(pair.first, pair.second) {
            deleted.push(block);
        } else {
            kept.push(block);
        }
    }
    let phases = full_params[2 * m..].to_vec();
    Ok(Pruned {
        chart: DensityChart::new(eigen, kept)?,
        commutant: CommutantSpec::new(pattern, deleted, phases)?,
    })
}

/// Finite-difference step and singular-value threshold for the rank oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOptions {
    pub step: f64,
    pub threshold: f64,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self {
            step: 1e-6,
            threshold: 1e-7,
        }
    }
}

pub fn jacobian_rank(c: &DensityChart, include_eigen: bool) -> Result<usize> {
    jacobian_rank_with(c, include_eigen, RankOptions::default())
}

/// Numerical rank of `∂(Re ρ, Im ρ)/∂(params)` by central differences.
/// Parameters are the kept block phases and angles, plus the eigen angles
/// when `include_eigen` is set.
pub fn jacobian_rank_with(c: &DensityChart, include_eigen: bool, opts: RankOptions) -> Result<usize> {
    c.check_interior()?;
    let n = c.pattern().n();
    let pairs: Vec<Pair> = c.unitary_params.iter().map(|b| b.pair).collect();
    let base_unitary = c.flat_params();
    let base_eigen = c.eigen.angles().to_vec();
    let n_unitary = base_unitary.len();
    let cols = n_unitary + if include_eigen { base_eigen.len() } else { 0 };
    if cols == 0 {
        return Ok(0);
    }

    // range checks are skipped: perturbed points may step just outside
    let rho = |params: &[f64], angles: &[f64]| -> Vec<f64> {
        let blocks: Vec<(f64, f64)> = params.chunks(2).map(|b| (b[0], b[1])).collect();
        let u = block_word(n, &pairs, &blocks, None).evaluate();
        let eigen = EigenChart::new(c.pattern().clone(), angles.to_vec());
        let d = match eigen {
            Ok(e) => e.eigen_matrix(),
            Err(_) => unchecked_eigen_matrix(c.pattern(), angles),
        };
        conjugate(&u, &d)
            .entries()
            .iter()
            .flat_map(|z| [z.re, z.im])
            .collect()
    };

    let rows = 2 * n * n;
    let mut jac = DMatrix::<f64>::zeros(rows, cols);
    for col in 0..cols {
        let (mut up_u, mut dn_u) = (base_unitary.clone(), base_unitary.clone());
        let (mut up_e, mut dn_e) = (base_eigen.clone(), base_eigen.clone());
        if col < n_unitary {
            up_u[col] += opts.step;
            dn_u[col] -= opts.step;
        } else {
            up_e[col - n_unitary] += opts.step;
            dn_e[col - n_unitary] -= opts.step;
        }
        let (f_up, f_dn) = (rho(&up_u, &up_e), rho(&dn_u, &dn_e));
        for row in 0..rows {
            jac[(row, col)] = (f_up[row] - f_dn[row]) / (2.0 * opts.step);
        }
    }
    let sv = jac.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > opts.threshold * max).count())
}

fn unchecked_eigen_matrix(p: &DegeneracyPattern, angles: &[f64]) -> ComplexMatrix {
    let k = p.num_classes();
    let mut values = vec![0.0; p.n()];
    let mut remaining = 1.0;
    let mut masses = vec![0.0; k];
    for m in (1..k).rev() {
        let c = angles[m - 1].cos();
        masses[m] = remaining * c * c;
        remaining -= masses[m];
    }
    masses[0] = remaining;
    for (class, mass) in p.classes().iter().zip(masses) {
        for &i in class {
            values[i] = mass / class.len() as f64;
        }
    }
    ComplexMatrix::real_diagonal(&values)
}

/// Outcome of [`validate_density`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks Hermiticity, unit trace and positivity, each to `tol`.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> DensityReport {
    let hermiticity_deviation = m.hermiticity_deviation();
    let tr = m.trace();
    let trace_deviation = (tr.re - 1.0).abs().max(tr.im.abs());
    let min_eigenvalue = m.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
    let mut failures = Vec::new();
    if hermiticity_deviation.is_nan() || hermiticity_deviation > tol {
        failures.push(format!("not Hermitian: deviation {hermiticity_deviation:.3e}"));
    }
    if trace_deviation.is_nan() || trace_deviation > tol {
        failures.push(format!("trace deviates from 1 by {trace_deviation:.3e}"));
    }
    if min_eigenvalue.is_nan() || min_eigenvalue < -tol {
        failures.push(format!("negative eigenvalue {min_eigenvalue:.3e}"));
    }
    DensityReport {
        hermiticity_deviation,
        trace_deviation,
        min_eigenvalue,
        tolerance: tol,
        passed: failures.is_empty(),
        failures,
    }
}
