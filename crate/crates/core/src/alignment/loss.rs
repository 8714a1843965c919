use serde::{Deserialize, Serialize};

use crate::embed::{cosine_slices, EmbeddingVector};
use crate::error::TrainError;

use super::views::{view_pairs, ViewEmbeddingSet};

/// Contribution of one `(k, l)` order pair to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLoss {
    pub k: usize,
    pub l: usize,
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub positive: f64,
    pub negative: f64,
    /// Always `positive + negative`.
    pub total: f64,
    pub breakdown: Vec<PairLoss>,
}

fn lookup_b(set: &ViewEmbeddingSet, k: usize, l: usize) -> Result<&EmbeddingVector, TrainError> {
    set.b.get(&(k, l)).ok_or(TrainError::MissingView { node: set.node, k, l })
}

fn lookup_h(set: &ViewEmbeddingSet, k: usize) -> Result<&EmbeddingVector, TrainError> {
    set.h.get(&k).ok_or(TrainError::MissingView { node: set.node, k, l: k })
}

/// Evaluates the objective restricted to `pairs`. Both terms carry the
/// factor `1 / (K |B|)`; negatives run over ordered pairs `i != j` and
/// compare graph and text views of the same order `k`.
pub fn total_loss_over(
    batch: &[ViewEmbeddingSet],
    max_order: usize,
    pairs: &[(usize, usize)],
) -> Result<LossReport, TrainError> {
    if batch.is_empty() || max_order == 0 {
        return Err(TrainError::Config("loss needs a nonempty batch and K >= 1".into()));
    }
    if batch.iter().any(|s| s.max_order() != max_order) {
        return Err(TrainError::InconsistentOrder);
    }
    let scale = 1.0 / (max_order as f64 * batch.len() as f64);
    let mut breakdown = Vec::with_capacity(pairs.len());
    for &(k, l) in pairs {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for (i, si) in batch.iter().enumerate() {
            let b = lookup_b(si, k, l)?;
            pos += cosine_slices(b, lookup_h(si, k)?);
            for (j, sj) in batch.iter().enumerate() {
                if i != j {
                    neg += cosine_slices(b, lookup_h(sj, k)?);
                }
            }
        }
        breakdown.push(PairLoss { k, l, positive: -scale * pos, negative: scale * neg });
    }
    let positive = breakdown.iter().map(|p| p.positive).sum::<f64>();
    let negative = breakdown.iter().map(|p| p.negative).sum::<f64>();
    Ok(LossReport { positive, negative, total: positive + negative, breakdown })
}

pub fn total_loss(batch: &[ViewEmbeddingSet], max_order: usize) -> Result<LossReport, TrainError> {
    total_loss_over(batch, max_order, &view_pairs(max_order, false))
}

pub fn positive_loss(batch: &[ViewEmbeddingSet], max_order: usize) -> Result<f64, TrainError> {
    Ok(total_loss(batch, max_order)?.positive)
}

pub fn negative_loss(batch: &[ViewEmbeddingSet], max_order: usize) -> Result<f64, TrainError> {
    Ok(total_loss(batch, max_order)?.negative)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn set(node: usize, h: &[(usize, Vec<f64>)], b: &[((usize, usize), Vec<f64>)]) -> ViewEmbeddingSet {
        ViewEmbeddingSet {
            node,
            h: h.iter().map(|(k, v)| (*k, EmbeddingVector::new(v.clone()))).collect::<BTreeMap<_, _>>(),
            b: b.iter().map(|(k, v)| (*k, EmbeddingVector::new(v.clone()))).collect(),
        }
    }

    #[test]
    fn perfect_alignment_single_node() {
        let s = set(0, &[(0, vec![1.0, 0.0]), (1, vec![0.6, 0.8])], &[((1, 0), vec![3.0, 4.0])]);
        let r = total_loss(std::slice::from_ref(&s), 1).unwrap();
        assert!((r.positive + 1.0).abs() < 1e-15);
        assert_eq!(r.negative, 0.0);
        assert_eq!(r.total, r.positive + r.negative);

        let o = set(0, &[(0, vec![1.0, 0.0]), (1, vec![1.0, 0.0])], &[((1, 0), vec![0.0, 2.0])]);
        assert_eq!(positive_loss(&[o], 1).unwrap(), 0.0);
    }

    #[test]
    fn negative_term_closed_forms() {
        let u = vec![0.0, 1.0];
        let a = set(0, &[(0, u.clone()), (1, u.clone())], &[((1, 0), u.clone())]);
        let b = set(1, &[(0, u.clone()), (1, u.clone())], &[((1, 0), u.clone())]);
        assert!((negative_loss(&[a, b], 1).unwrap() - 1.0).abs() < 1e-15);

        let x = set(0, &[(0, vec![1.0, 0.0]), (1, vec![1.0, 0.0])], &[((1, 0), vec![1.0, 0.0])]);
        let y = set(1, &[(0, vec![0.0, 1.0]), (1, vec![0.0, 1.0])], &[((1, 0), vec![0.0, 1.0])]);
        assert_eq!(negative_loss(&[x, y], 1).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let a = set(0, &[(0, vec![1.0]), (1, vec![1.0])], &[]);
        assert!(matches!(
            total_loss(std::slice::from_ref(&a), 1),
            Err(TrainError::MissingView { node: 0, k: 1, l: 0 })
        ));
        let c = set(1, &[(0, vec![1.0]), (1, vec![1.0]), (2, vec![1.0])], &[]);
        assert!(matches!(total_loss(&[a, c], 1), Err(TrainError::InconsistentOrder)));
        assert!(total_loss(&[], 1).is_err());
    }
}
