use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::alias::AliasTable;
use crate::error::{Error, Result};
use crate::numeric::exact_sum;

/// Opaque item identity. Estimators only ever compare these for equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u64);

/// One oracle answer: an item and its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemDraw {
    pub id: ItemId,
    pub weight: f64,
}

/// The hidden universe behind the sampling oracles: distinct items with
/// nonnegative weights and a positive total.
///
/// Immutable once built; share it across threads by reference and give each
/// trial its own [`SamplerHandle`](super::SamplerHandle).
#[derive(Debug, Clone)]
pub struct WeightedInstance {
    labels: Vec<String>,
    weights: Vec<f64>,
    total: f64,
    table: AliasTable,
}

impl WeightedInstance {
    /// Builds an instance whose items are labelled `0..n`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::build(labels, weights)
    }

    /// Builds an instance from `(label, weight)` pairs, keeping their order.
    pub fn from_labeled<S: Into<String>>(items: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let (labels, weights) = items.into_iter().map(|(l, w)| (l.into(), w)).unzip();
        Self::build(labels, weights)
    }

    /// Parses the text instance format: one `<id> <weight>` pair per line,
    /// `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let mut fields = line.split_whitespace();
            let (Some(id), Some(weight), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err("expected `<id> <weight>`"));
            };
            let weight: f64 = weight
                .parse()
                .map_err(|_| parse_err(&format!("invalid weight `{weight}`")))?;
            items.push((id.to_string(), weight));
        }
        Self::from_labeled(items)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn build(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInstance);
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for (label, &w) in labels.iter().zip(&weights) {
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { id: label.clone() });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight {
                    id: label.clone(),
                    weight: w,
                });
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateId(label.clone()));
            }
        }
        let total = exact_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        let table = AliasTable::new(&weights, total);
        Ok(Self {
            labels,
            weights,
            total,
            table,
        })
    }

    /// Number of items `n`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total weight `W`, correctly rounded.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self, id: ItemId) -> Option<&str> {
        self.labels.get(id.0 as usize).map(String::as_str)
    }

    pub fn contains(&self, id: ItemId) -> bool {
        (id.0 as usize) < self.weights.len()
    }

    pub fn weight_of(&self, id: ItemId) -> Option<f64> {
        self.weights.get(id.0 as usize).copied()
    }

    /// All items in source order.
    pub fn items(&self) -> impl Iterator<Item = ItemDraw> + '_ {
        self.weights.iter().enumerate().map(|(i, &weight)| ItemDraw {
            id: ItemId(i as u64),
            weight,
        })
    }

    pub(crate) fn draw_at(&self, index: usize) -> ItemDraw {
        ItemDraw {
            id: ItemId(index as u64),
            weight: self.weights[index],
        }
    }

    pub(crate) fn table(&self) -> &AliasTable {
        &self.table
    }
}
