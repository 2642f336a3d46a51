//! Eigenvalue degeneracy patterns and the parameter counts they induce.
//!
//! A pattern partitions the eigenvalue indices `0..n` into classes of equal
//! eigenvalues. With class multiplicities `Δ_i`:
//!
//! * degrees of degeneracy = `Σ Δ_i(Δ_i-1)/2` (equal-eigenvalue pairs),
//! * redundant parameters  = `Σ Δ_i(Δ_i-1)` (two per pair: one angle, one phase),
//! * internal parameters   = `(n-1)² - Σ Δ_i(Δ_i-1)`,
//! * orbit dimension       = `n² - Σ Δ_i²` (unitary parameters that survive in ρ).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition of `0..n` into eigenvalue-equality classes.
///
/// Classes are sorted internally and listed by their smallest index, so the
/// class holding eigenvalue 0 always comes first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PatternRepr", into = "PatternJson")]
pub struct DegeneracyPattern {
    n: usize,
    classes: Vec<Vec<usize>>,
}

impl DegeneracyPattern {
    /// Contiguous classes with the given multiplicities, e.g. `[2, 1, 1]`
    /// for `λ₁ = λ₂`, `λ₃`, `λ₄`.
    pub fn from_multiplicities(multiplicities: &[usize]) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::InvalidPattern("no classes".into()));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidPattern("zero multiplicity".into()));
        }
        let mut start = 0;
        let classes = multiplicities
            .iter()
            .map(|&m| {
                let class: Vec<usize> = (start..start + m).collect();
                start += m;
                class
            })
            .collect();
        Ok(Self { n: start, classes })
    }

    /// Arbitrary (0-based) index classes; must cover `0..n` exactly once.
    pub fn from_classes(n: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPattern("dimension must be positive".into()));
        }
        let mut seen = vec![false; n];
        let mut classes: Vec<Vec<usize>> = classes
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        for class in &classes {
            if class.is_empty() {
                return Err(Error::InvalidPattern("empty class".into()));
            }
            for &i in class {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPattern(format!("index {} repeated", i + 1)));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPattern(format!("index {} not covered", missing + 1)));
        }
        classes.sort_by_key(|c| c[0]);
        Ok(Self { n, classes })
    }

    /// All eigenvalues distinct.
    pub fn singletons(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        Self {
            n,
            classes: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// Groups a numeric spectrum into classes: values closer than `gap_tol`
    /// (after sorting, chained through neighbours) share a class.
    pub fn from_spectrum(values: &[f64], gap_tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(v.to_string()));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let mut classes: Vec<Vec<usize>> = vec![vec![order[0]]];
        for w in order.windows(2) {
            if (values[w[0]] - values[w[1]]).abs() <= gap_tol {
                classes.last_mut().expect("non-empty").push(w[1]);
            } else {
                classes.push(vec![w[1]]);
            }
        }
        Self::from_classes(values.len(), classes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    /// Index of the class containing eigenvalue `i`.
    pub fn class_of(&self, i: usize) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(&i))
            .expect("pattern covers every index")
    }

    pub fn same_class(&self, i: usize, j: usize) -> bool {
        self.class_of(i) == self.class_of(j)
    }

    /// True when every class is a run of consecutive indices.
    pub fn is_contiguous(&self) -> bool {
        self.classes
            .iter()
            .all(|c| c.windows(2).all(|w| w[1] == w[0] + 1))
    }

    pub fn degrees_of_degeneracy(&self) -> usize {
        self.multiplicities().iter().map(|d| d * (d - 1) / 2).sum()
    }

    pub fn redundant_params(&self) -> usize {
        self.multiplicities().iter().map(|d| d * (d - 1)).sum()
    }

    /// `(n-1)² - Σ Δ_i(Δ_i-1)`. Negative for patterns with a class larger
    /// than `n-1`, where the formula's count of internal directions no
    /// longer has a geometric meaning.
    pub fn internal_params(&self) -> i64 {
        let n = self.n as i64;
        (n - 1) * (n - 1) - self.redundant_params() as i64
    }

    /// `n² - Σ Δ_i²`.
    pub fn orbit_dim(&self) -> usize {
        self.n * self.n - self.multiplicities().iter().map(|d| d * d).sum::<usize>()
    }
}

pub fn degrees_of_degeneracy(p: &DegeneracyPattern) -> usize {
    p.degrees_of_degeneracy()
}

pub fn redundant_params(p: &DegeneracyPattern) -> usize {
    p.redundant_params()
}

pub fn internal_params(p: &DegeneracyPattern) -> i64 {
    p.internal_params()
}

pub fn orbit_dim(p: &DegeneracyPattern) -> usize {
    p.orbit_dim()
}

/// Every integer partition of `n`, each in non-increasing order.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            prefix.push(part);
            go(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

impl FromStr for DegeneracyPattern {
    type Err = Error;

    /// Parses a multiplicity list such as `"2,1,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPattern(format!("bad multiplicity {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_multiplicities(&parts)
    }
}

impl fmt::Display for DegeneracyPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_contiguous() {
            let m: Vec<String> = self.multiplicities().iter().map(|d| d.to_string()).collect();
            write!(f, "{}", m.join(","))
        } else {
            let cs: Vec<String> = self
                .classes
                .iter()
                .map(|c| {
                    let idx: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
                    format!("{{{}}}", idx.join(","))
                })
                .collect();
            write!(f, "{}", cs.join(""))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PatternJson {
    n: usize,
    multiplicities: Vec<usize>,
    /// 1-based; only present when the classes are not contiguous runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<Vec<usize>>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PatternRepr {
    List(Vec<usize>),
    Full(PatternJson),
}

impl TryFrom<PatternRepr> for DegeneracyPattern {
    type Error = Error;

    fn try_from(raw: PatternRepr) -> Result<Self> {
        match raw {
            PatternRepr::List(m) => Self::from_multiplicities(&m),
            PatternRepr::Full(json) => {
                let pattern = match json.classes {
                    Some(classes) => {
                        let zero_based = classes
                            .into_iter()
                            .map(|c| {
                                c.into_iter()
                                    .map(|i| {
                                        i.checked_sub(1).ok_or_else(|| {
                                            Error::InvalidPattern("indices are 1-based".into())
                                        })
                                    })
                                    .collect::<Result<Vec<_>>>()
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Self::from_classes(json.n, zero_based)?
                    }
                    None => Self::from_multiplicities(&json.multiplicities)?,
                };
                if pattern.n != json.n || pattern.multiplicities() != json.multiplicities {
                    return Err(Error::InvalidPattern(format!(
                        "n = {} and multiplicities {:?} disagree",
                        json.n, json.multiplicities
                    )));
                }
                Ok(pattern)
            }
        }
    }
}

impl From<DegeneracyPattern> for PatternJson {
    fn from(p: DegeneracyPattern) -> Self {
        let classes = (!p.is_contiguous()).then(|| {
            p.classes
                .iter()
                .map(|c| c.iter().map(|i| i + 1).collect())
                .collect()
        });
        PatternJson {
            n: p.n,
            multiplicities: p.multiplicities(),
            classes,
        }
    }
}

/// Serde adapter writing a pattern as a bare multiplicity list when its
/// classes are contiguous, and as the full object otherwise.
pub mod compact {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &DegeneracyPattern, s: S) -> std::result::Result<S::Ok, S::Error> {
        if p.is_contiguous() {
            p.multiplicities().serialize(s)
        } else {
            p.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DegeneracyPattern, D::Error> {
        DegeneracyPattern::deserialize(d)
    }
}
