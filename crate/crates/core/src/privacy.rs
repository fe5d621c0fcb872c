//! Encoding full labels as pair labels, and how much an attacker can undo.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::data::{ExampleId, FullyLabeledDataset, InlinePair, PairDataset};
use crate::error::{Error, Result};
use crate::pairing::{pair_disjoint, PairingMode};

/// How a participant is recognized in a pair file: by id when pairs
/// reference a store, by the exact bits of its features when inline.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Participant {
    Id(ExampleId),
    Features(Vec<u64>),
}

impl Participant {
    pub fn of_features(x: &[f64]) -> Self {
        Participant::Features(x.iter().map(|v| v.to_bits()).collect())
    }
}

/// Connected components over same-class edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    /// Every participant, in order of first appearance in the pair set.
    pub participants: Vec<Participant>,
    /// Components as sorted positions into `participants`, ordered by their
    /// first member.
    pub components: Vec<Vec<usize>>,
}

impl Partition {
    pub fn max_component(&self) -> usize {
        self.components.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn endpoints(pd: &PairDataset) -> Vec<(Participant, Participant, bool)> {
    match pd {
        PairDataset::Referenced(p) => {
            p.iter().map(|p| (Participant::Id(p.a()), Participant::Id(p.b()), p.t.is_same())).collect()
        }
        PairDataset::Inline { pairs, .. } => pairs
            .iter()
            .map(|p| (Participant::of_features(&p.a), Participant::of_features(&p.b), p.t.is_same()))
            .collect(),
    }
}

/// Merges participants joined by same-class pairs; different-class pairs
/// only register their endpoints.
pub fn recover_clusters(pd: &PairDataset) -> Partition {
    let edges = endpoints(pd);
    let mut index: HashMap<Participant, usize> = HashMap::new();
    let mut participants = Vec::new();
    let mut pos = |p: &Participant, participants: &mut Vec<Participant>| {
        *index.entry(p.clone()).or_insert_with(|| {
            participants.push(p.clone());
            participants.len() - 1
        })
    };
    let ends: Vec<(usize, usize, bool)> =
        edges.iter().map(|(a, b, same)| (pos(a, &mut participants), pos(b, &mut participants), *same)).collect();
    let mut uf = UnionFind::<usize>::new(participants.len());
    for &(a, b, same) in &ends {
        if same {
            uf.union(a, b);
        }
    }
    let mut by_root: HashMap<usize, usize> = HashMap::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in 0..participants.len() {
        let root = uf.find(i);
        let c = *by_root.entry(root).or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[c].push(i);
    }
    Partition { participants, components }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncryptionReport {
    pub mode: Option<PairingMode>,
    pub pairs: usize,
    pub participants: usize,
    /// No participant appears in more than one pair.
    pub disjoint: bool,
    pub components: usize,
    pub max_component: usize,
    /// Fraction of participant pairs whose same/different-class relation
    /// the recovered components get right; absent with fewer than two
    /// participants or no ground truth.
    pub agreement: Option<f64>,
    pub holdout: Option<usize>,
    /// `⌊N/2⌋`, the pair count if every example were used.
    pub max_pairs_all_used: Option<usize>,
    /// `⌊(N−1)/2⌋`, the largest count leaving at least one example over.
    pub max_pairs_with_holdout: Option<usize>,
}

fn choose2(n: usize) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

/// Rand-style agreement between two labelings of the same items.
pub fn pairwise_agreement(predicted: &[usize], truth: &[usize]) -> Option<f64> {
    let n = predicted.len();
    if n < 2 || truth.len() != n {
        return None;
    }
    let mut pred: HashMap<usize, usize> = HashMap::new();
    let mut tru: HashMap<usize, usize> = HashMap::new();
    let mut both: HashMap<(usize, usize), usize> = HashMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        *pred.entry(p).or_default() += 1;
        *tru.entry(t).or_default() += 1;
        *both.entry((p, t)).or_default() += 1;
    }
    let total = choose2(n);
    let same_pred: u128 = pred.values().map(|&c| choose2(c)).sum();
    let same_true: u128 = tru.values().map(|&c| choose2(c)).sum();
    let same_both: u128 = both.values().map(|&c| choose2(c)).sum();
    let agree = total + 2 * same_both - same_pred - same_true;
    Some(agree as f64 / total as f64)
}

/// Attack statistics for a pair set. `truth` supplies the real classes of
/// the participants (matched by id, or by features for inline pairs).
pub fn strength_report(
    pd: &PairDataset,
    truth: Option<&FullyLabeledDataset>,
    mode: Option<PairingMode>,
) -> Result<EncryptionReport> {
    let part = recover_clusters(pd);
    let mut component_of = vec![0; part.participants.len()];
    for (c, members) in part.components.iter().enumerate() {
        for &i in members {
            component_of[i] = c;
        }
    }
    let agreement = match truth {
        Some(ds) => {
            let lookup: HashMap<Participant, usize> = ds
                .examples()
                .iter()
                .flat_map(|e| [(Participant::Id(e.id), e.y), (Participant::of_features(&e.x), e.y)])
                .collect();
            let labels = part
                .participants
                .iter()
                .map(|p| {
                    lookup.get(p).copied().ok_or_else(|| match p {
                        Participant::Id(id) => Error::UnknownId(*id),
                        Participant::Features(_) => {
                            Error::InvalidPairs("inline participant not found in the labeled set".into())
                        }
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            pairwise_agreement(&component_of, &labels)
        }
        None => None,
    };
    Ok(EncryptionReport {
        mode,
        pairs: pd.len(),
        participants: part.participants.len(),
        disjoint: part.participants.len() == 2 * pd.len(),
        components: part.components.len(),
        max_component: part.max_component(),
        agreement,
        holdout: None,
        max_pairs_all_used: None,
        max_pairs_with_holdout: None,
    })
}

/// Draws `n` disjoint pairs, writes them with features inline and no
/// class information, and keeps the unused examples as a labeled holdout.
pub fn encrypt_disjoint(
    ds: &FullyLabeledDataset,
    n: usize,
    seed: u64,
) -> Result<(PairDataset, FullyLabeledDataset, EncryptionReport)> {
    let (pairs, holdout) = pair_disjoint(ds, n, seed)?;
    let store = ds.id_index();
    let refs = pairs.referenced_pairs().expect("disjoint pairing references ids");
    let inline = refs
        .iter()
        .map(|p| InlinePair {
            a: ds.examples()[store[&p.a()]].x.clone(),
            b: ds.examples()[store[&p.b()]].x.clone(),
            t: p.t,
        })
        .collect();
    let encrypted = PairDataset::inline(ds.dim(), inline)?;
    let mut report = strength_report(&encrypted, Some(ds), Some(PairingMode::Disjoint))?;
    report.holdout = Some(holdout.len());
    report.max_pairs_all_used = Some(ds.len() / 2);
    report.max_pairs_with_holdout = Some(ds.len().saturating_sub(1) / 2);
    Ok((encrypted, holdout, report))
}
