//! Datasets, full labels and sufficient (same-class / different-class) labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ExampleId = u64;
pub type FeatureVector = Vec<f64>;

/// One fully-labeled example. Class indices are 0-based; in binary tasks
/// class 1 plays the role of the positive class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: ExampleId,
    pub x: FeatureVector,
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullyLabeledDataset {
    examples: Vec<Example>,
    class_count: usize,
    dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ClassCountTooSmall(usize),
    DuplicateId(ExampleId),
    LabelOutOfRange { id: ExampleId, label: usize, class_count: usize },
    DimMismatch { id: ExampleId, expected: usize, got: usize },
    NonFinite { id: ExampleId, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ClassCountTooSmall(c) => write!(f, "class count {c} is below 2"),
            Violation::DuplicateId(id) => write!(f, "duplicate id {id}"),
            Violation::LabelOutOfRange { id, label, class_count } => {
                write!(f, "example {id}: label {label} outside [0, {class_count})")
            }
            Violation::DimMismatch { id, expected, got } => {
                write!(f, "example {id}: dimension {got}, expected {expected}")
            }
            Violation::NonFinite { id, index } => {
                write!(f, "example {id}: non-finite feature at index {index}")
            }
        }
    }
}

impl FullyLabeledDataset {
    /// Builds a dataset, rejecting it with every violation found.
    pub fn new(examples: Vec<Example>, class_count: usize, dim: usize) -> Result<Self> {
        let ds = Self::raw(examples, class_count, dim);
        validate_dataset(&ds).map_err(Error::InvalidDataset)?;
        Ok(ds)
    }

    /// Builds a dataset without validation; pair with [`validate_dataset`].
    pub fn raw(examples: Vec<Example>, class_count: usize, dim: usize) -> Self {
        Self { examples, class_count, dim }
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.y).collect()
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    /// A dataset over the examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            class_count: self.class_count,
            dim: self.dim,
        }
    }

    /// Same class count and dimension, different examples.
    pub fn with_examples(&self, examples: Vec<Example>) -> Self {
        Self { examples, class_count: self.class_count, dim: self.dim }
    }

    pub fn id_index(&self) -> HashMap<ExampleId, usize> {
        self.examples.iter().enumerate().map(|(i, e)| (e.id, i)).collect()
    }

    /// Row-major feature matrix.
    pub fn feature_matrix(&self) -> ndarray::Array2<f64> {
        let mut m = ndarray::Array2::zeros((self.examples.len(), self.dim));
        for (mut row, e) in m.rows_mut().into_iter().zip(&self.examples) {
            row.assign(&ndarray::ArrayView1::from(&e.x[..]));
        }
        m
    }
}

/// Checks every dataset invariant and reports all violations at once.
pub fn validate_dataset(ds: &FullyLabeledDataset) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if ds.class_count < 2 {
        out.push(Violation::ClassCountTooSmall(ds.class_count));
    }
    let mut seen = HashSet::with_capacity(ds.examples.len());
    for e in &ds.examples {
        if !seen.insert(e.id) {
            out.push(Violation::DuplicateId(e.id));
        }
        if e.y >= ds.class_count {
            out.push(Violation::LabelOutOfRange { id: e.id, label: e.y, class_count: ds.class_count });
        }
        if e.x.len() != ds.dim {
            out.push(Violation::DimMismatch { id: e.id, expected: ds.dim, got: e.x.len() });
        }
        if let Some(index) = e.x.iter().position(|v| !v.is_finite()) {
            out.push(Violation::NonFinite { id: e.id, index });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Count of examples per class; every class in `0..class_count` is present.
pub fn class_histogram(ds: &FullyLabeledDataset) -> BTreeMap<usize, usize> {
    let mut h: BTreeMap<usize, usize> = (0..ds.class_count).map(|c| (c, 0)).collect();
    for e in &ds.examples {
        *h.entry(e.y).or_insert(0) += 1;
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum SufficientLabel {
    Different = 0,
    Same = 1,
}

impl SufficientLabel {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(SufficientLabel::Different),
            1 => Some(SufficientLabel::Same),
            _ => None,
        }
    }

    pub fn is_same(self) -> bool {
        self == SufficientLabel::Same
    }
}

/// 1 iff both examples belong to the same class.
pub fn sufficient_label(y: usize, y_prime: usize) -> SufficientLabel {
    if y == y_prime {
        SufficientLabel::Same
    } else {
        SufficientLabel::Different
    }
}

/// A pair of example ids in canonical order (`a < b`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SufficientPair {
    a: ExampleId,
    b: ExampleId,
    pub t: SufficientLabel,
}

impl SufficientPair {
    pub fn new(x: ExampleId, y: ExampleId, t: SufficientLabel) -> Result<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(Self { a: x, b: y, t }),
            std::cmp::Ordering::Greater => Ok(Self { a: y, b: x, t }),
            std::cmp::Ordering::Equal => Err(Error::InvalidPairs(format!("self-pair on id {x}"))),
        }
    }

    pub fn a(&self) -> ExampleId {
        self.a
    }

    pub fn b(&self) -> ExampleId {
        self.b
    }

    pub fn key(&self) -> (ExampleId, ExampleId) {
        (self.a, self.b)
    }
}

/// A pair carrying both feature vectors and no identifying information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InlinePair {
    pub a: FeatureVector,
    pub b: FeatureVector,
    pub t: SufficientLabel,
}

/// Sufficiently-labeled data, either referencing a feature store by id or
/// carrying the features inline so the file can travel on its own.
#[derive(Clone, Debug, PartialEq)]
pub enum PairDataset {
    Referenced(Vec<SufficientPair>),
    Inline { dim: usize, pairs: Vec<InlinePair> },
}

/// Borrowed view of one resolved pair.
#[derive(Clone, Copy, Debug)]
pub struct PairView<'a> {
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub t: SufficientLabel,
}

impl PairDataset {
    /// Builds an id-referencing pair set, rejecting duplicate canonical pairs.
    pub fn referenced(pairs: Vec<SufficientPair>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if !seen.insert(p.key()) {
                return Err(Error::InvalidPairs(format!("duplicate pair ({}, {})", p.a, p.b)));
            }
        }
        Ok(PairDataset::Referenced(pairs))
    }

    pub fn inline(dim: usize, pairs: Vec<InlinePair>) -> Result<Self> {
        for p in &pairs {
            if p.a.len() != dim || p.b.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: p.a.len().max(p.b.len()) });
            }
        }
        Ok(PairDataset::Inline { dim, pairs })
    }

    pub fn empty() -> Self {
        PairDataset::Referenced(Vec::new())
    }

    pub fn len(&self) -> usize {
        match self {
            PairDataset::Referenced(p) => p.len(),
            PairDataset::Inline { pairs, .. } => pairs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_inline(&self) -> bool {
        matches!(self, PairDataset::Inline { .. })
    }

    pub fn labels(&self) -> Vec<SufficientLabel> {
        match self {
            PairDataset::Referenced(p) => p.iter().map(|p| p.t).collect(),
            PairDataset::Inline { pairs, .. } => pairs.iter().map(|p| p.t).collect(),
        }
    }

    pub fn referenced_pairs(&self) -> Option<&[SufficientPair]> {
        match self {
            PairDataset::Referenced(p) => Some(p),
            PairDataset::Inline { .. } => None,
        }
    }

    /// Resolves every pair to its two feature vectors. Id-referencing pairs
    /// need the dataset they were drawn from.
    pub fn resolve<'a>(&'a self, store: Option<&'a FullyLabeledDataset>) -> Result<Vec<PairView<'a>>> {
        match self {
            PairDataset::Inline { pairs, .. } => {
                Ok(pairs.iter().map(|p| PairView { a: &p.a, b: &p.b, t: p.t }).collect())
            }
            PairDataset::Referenced(pairs) => {
                let ds =
                    store.ok_or_else(|| Error::InvalidPairs("id-referencing pairs need a feature store".into()))?;
                let index = ds.id_index();
                let lookup = |id| index.get(&id).map(|&i| &ds.examples()[i].x[..]).ok_or(Error::UnknownId(id));
                pairs.iter().map(|p| Ok(PairView { a: lookup(p.a)?, b: lookup(p.b)?, t: p.t })).collect()
            }
        }
    }

    /// Subset by position.
    pub fn select(&self, indices: &[usize]) -> Self {
        match self {
            PairDataset::Referenced(p) => PairDataset::Referenced(indices.iter().map(|&i| p[i]).collect()),
            PairDataset::Inline { dim, pairs } => {
                PairDataset::Inline { dim: *dim, pairs: indices.iter().map(|&i| pairs[i].clone()).collect() }
            }
        }
    }

    /// Fraction of pairs labeled same-class.
    pub fn same_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels().iter().filter(|t| t.is_same()).count() as f64 / self.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: u64, y: usize) -> Example {
        Example { id, x: vec![id as f64, 1.0], y }
    }

    #[test]
    fn sufficient_label_cases() {
        assert_eq!(sufficient_label(3, 3), SufficientLabel::Same);
        assert_eq!(sufficient_label(2, 5), SufficientLabel::Different);
        assert_eq!(sufficient_label(5, 2), sufficient_label(2, 5));
        assert_eq!(SufficientLabel::Same.as_u8(), 1);
    }

    #[test]
    fn histogram() {
        let ds = FullyLabeledDataset::new(vec![ex(0, 0), ex(1, 0), ex(2, 1), ex(3, 1)], 2, 2).unwrap();
        assert_eq!(class_histogram(&ds), BTreeMap::from([(0, 2), (1, 2)]));

        let empty = FullyLabeledDataset::new(vec![], 3, 2).unwrap();
        assert_eq!(class_histogram(&empty), BTreeMap::from([(0, 0), (1, 0), (2, 0)]));

        let ds = FullyLabeledDataset::new(vec![ex(0, 2), ex(1, 2), ex(2, 2)], 3, 2).unwrap();
        assert_eq!(class_histogram(&ds), BTreeMap::from([(0, 0), (1, 0), (2, 3)]));
    }

    #[test]
    fn validation_reports_violations() {
        let ok = FullyLabeledDataset::raw(vec![ex(0, 0), ex(1, 1), ex(2, 0), ex(3, 1)], 2, 2);
        assert!(validate_dataset(&ok).is_ok());

        let dup = FullyLabeledDataset::raw(vec![ex(0, 0), ex(7, 1), ex(7, 0)], 2, 2);
        let v = validate_dataset(&dup).unwrap_err();
        assert_eq!(v, vec![Violation::DuplicateId(7)]);
        assert!(v[0].to_string().contains('7'));

        let bad_label = FullyLabeledDataset::raw(vec![ex(0, 2)], 2, 2);
        assert!(matches!(validate_dataset(&bad_label).unwrap_err()[..], [Violation::LabelOutOfRange { label: 2, .. }]));

        let mut nan = ex(4, 0);
        nan.x[1] = f64::NAN;
        let v = validate_dataset(&FullyLabeledDataset::raw(vec![nan], 2, 2)).unwrap_err();
        assert_eq!(v, vec![Violation::NonFinite { id: 4, index: 1 }]);
        assert!(FullyLabeledDataset::new(vec![ex(1, 0), ex(1, 0)], 2, 2).is_err());
    }

    #[test]
    fn pairs_are_canonical() {
        let p = SufficientPair::new(9, 3, SufficientLabel::Same).unwrap();
        assert_eq!(p.key(), (3, 9));
        assert!(SufficientPair::new(4, 4, SufficientLabel::Same).is_err());

        let q = SufficientPair::new(3, 9, SufficientLabel::Same).unwrap();
        assert!(PairDataset::referenced(vec![p, q]).is_err());
    }

    #[test]
    fn resolve_needs_store() {
        let ds = FullyLabeledDataset::new(vec![ex(0, 0), ex(1, 1)], 2, 2).unwrap();
        let pd = PairDataset::referenced(vec![SufficientPair::new(0, 1, SufficientLabel::Different).unwrap()]).unwrap();
        assert!(pd.resolve(None).is_err());
        let views = pd.resolve(Some(&ds)).unwrap();
        assert_eq!(views[0].b, &[1.0, 1.0]);

        let missing = PairDataset::referenced(vec![SufficientPair::new(0, 5, SufficientLabel::Same).unwrap()]).unwrap();
        assert!(matches!(missing.resolve(Some(&ds)), Err(Error::UnknownId(5))));
    }
}
