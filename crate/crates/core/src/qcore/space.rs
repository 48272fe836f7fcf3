use serde::Serialize;

use crate::error::{dims, invalid, Result};

/// Ordered tensor-product structure of a composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceLayout {
    factors: Vec<usize>,
    labels: Vec<String>,
}

impl SpaceLayout {
    /// Builds a layout from matching lists of factor dimensions and labels.
    pub fn new(factors: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("layout needs at least one factor"));
        }
        if factors.len() != labels.len() {
            return Err(dims(format!("{} factors but {} labels", factors.len(), labels.len())));
        }
        if factors.iter().any(|&d| d == 0) {
            return Err(invalid("factor dimensions must be positive"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(invalid(format!("duplicate factor label `{l}`")));
            }
        }
        Ok(Self { factors, labels })
    }

    /// Builds a layout from `(label, dimension)` pairs.
    pub fn from_pairs(pairs: &[(&str, usize)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| p.1).collect(),
            pairs.iter().map(|p| p.0.to_string()).collect(),
        )
    }

    /// Single-factor layout.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::from_pairs(&[(label, dim)])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of tensor factors.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &SpaceLayout) -> Result<Self> {
        let mut f = self.factors.clone();
        f.extend_from_slice(&other.factors);
        let mut l = self.labels.clone();
        l.extend_from_slice(&other.labels);
        Self::new(f, l)
    }

    /// Layout restricted to the listed factors, kept in layout order.
    pub fn subsystem(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.normalize_keep(keep)?;
        Self::new(
            keep.iter().map(|&k| self.factors[k]).collect(),
            keep.iter().map(|&k| self.labels[k].clone()).collect(),
        )
    }

    /// Digits of a flat basis index in the mixed radix defined by the
    /// factors, most significant factor first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, &d) in self.factors.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    /// Flat basis index of the given per-factor digits.
    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.factors).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub(crate) fn normalize_keep(&self, keep: &[usize]) -> Result<Vec<usize>> {
        if keep.is_empty() {
            return Err(invalid("no factors kept"));
        }
        let mut k = keep.to_vec();
        k.sort_unstable();
        k.dedup();
        if k.len() != keep.len() {
            return Err(invalid("repeated factor index"));
        }
        if let Some(&bad) = k.iter().find(|&&i| i >= self.len()) {
            return Err(invalid(format!(
                "factor index {bad} out of range for {} factors",
                self.len()
            )));
        }
        Ok(k)
    }
}
