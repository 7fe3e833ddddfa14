//! Labeled feature rows and their split into class-conditional groups.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A validated set of `dim`-dimensional feature rows, each tagged with a
/// non-negative class id. Rows are stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    dim: usize,
    labels: Vec<u32>,
    data: Vec<f64>,
}

impl LabeledEmbeddings {
    /// Builds a set from a flat row-major buffer.
    pub fn from_flat(dim: usize, labels: Vec<u32>, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if labels.is_empty() {
            return Err(Error::Empty);
        }
        if data.len() != labels.len() * dim {
            return Err(Error::RaggedRow {
                row: data.len() / dim,
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { dim, labels, data })
    }

    /// Builds a set from `(label, features)` rows; `dim` is taken from the
    /// first row.
    pub fn from_rows<I, R>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, R)>,
        R: AsRef<[f64]>,
    {
        let mut labels = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (row, (label, features)) in rows.into_iter().enumerate() {
            let features = features.as_ref();
            let expected = *dim.get_or_insert(features.len());
            if features.len() != expected {
                return Err(Error::RaggedRow {
                    row,
                    expected,
                    found: features.len(),
                });
            }
            labels.push(label);
            data.extend_from_slice(features);
        }
        match dim {
            None => Err(Error::Empty),
            Some(dim) => Self::from_flat(dim, labels, data),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> (u32, &[f64]) {
        (self.labels[i], &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = (u32, &[f64])> + '_ {
        self.labels.iter().copied().zip(self.data.chunks_exact(self.dim))
    }

    /// Distinct labels in ascending order.
    pub fn distinct_labels(&self) -> Vec<u32> {
        let mut out = self.labels.clone();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Applies `x -> scale * x + shift` to every feature row.
    pub fn map_affine(&self, scale: f64, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let data = self
            .data
            .chunks_exact(self.dim)
            .flat_map(|row| row.iter().zip(shift).map(|(x, t)| scale * x + t))
            .collect();
        Self::from_flat(self.dim, self.labels.clone(), data)
    }

    /// Replaces every label through `map`.
    pub fn relabel(&self, mut map: impl FnMut(u32) -> u32) -> Self {
        Self {
            dim: self.dim,
            labels: self.labels.iter().map(|&l| map(l)).collect(),
            data: self.data.clone(),
        }
    }
}

/// The feature rows of one class, `f(S_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGroup {
    pub label: u32,
    /// Index of the first source row carrying this label. Episode sampling
    /// orders classes by this key, which does not depend on label values.
    pub first_row: usize,
    pub points: Vec<Vec<f64>>,
}

impl ClassGroup {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Disjoint class groups, iterated in ascending label order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    dim: usize,
    groups: Vec<ClassGroup>,
}

impl ClassPartition {
    /// Builds a partition directly from groups. Groups are sorted by label;
    /// labels must be unique and groups non-empty with uniform dimension.
    pub fn from_groups(dim: usize, mut groups: Vec<ClassGroup>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if groups.is_empty() {
            return Err(Error::Empty);
        }
        groups.sort_by_key(|g| g.label);
        for pair in groups.windows(2) {
            if pair[0].label == pair[1].label {
                return Err(Error::param("groups", "duplicate class label"));
            }
        }
        for g in &groups {
            if g.points.is_empty() {
                return Err(Error::Empty);
            }
            for p in &g.points {
                if p.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: p.len(),
                    });
                }
            }
        }
        Ok(Self { dim, groups })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[ClassGroup] {
        &self.groups
    }

    pub fn num_classes(&self) -> usize {
        self.groups.len()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.label).collect()
    }

    pub fn total_points(&self) -> usize {
        self.groups.iter().map(ClassGroup::len).sum()
    }

    pub fn group(&self, label: u32) -> Option<&ClassGroup> {
        self.groups
            .binary_search_by_key(&label, |g| g.label)
            .ok()
            .map(|i| &self.groups[i])
    }
}

/// Splits a set into per-class groups. Each row lands in the group of its
/// label, keeping source order inside the group.
pub fn partition_by_class(set: &LabeledEmbeddings) -> ClassPartition {
    let mut groups: BTreeMap<u32, ClassGroup> = BTreeMap::new();
    for (i, (label, features)) in set.rows().enumerate() {
        groups
            .entry(label)
            .or_insert_with(|| ClassGroup {
                label,
                first_row: i,
                points: Vec::new(),
            })
            .points
            .push(features.to_vec());
    }
    ClassPartition {
        dim: set.dim(),
        groups: groups.into_values().collect(),
    }
}
