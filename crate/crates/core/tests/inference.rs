//! Zero-shot math, adapter identity and split/evaluation properties.

use proptest::prelude::*;
use taga::embed::{EmbeddingVector, HashEmbedder, TextEmbedder};
use taga::inference::*;
use taga::toy::{planted_partition, ToyConfig};
use taga::Execution;

fn labels(vectors: Vec<Vec<f64>>) -> LabelEmbeddings {
    LabelEmbeddings {
        labels: (0..vectors.len()).map(|i| format!("l{i}")).collect(),
        vectors: vectors.into_iter().map(EmbeddingVector::new).collect(),
    }
}

fn vec_strategy(f: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, f).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn softmax_is_a_distribution_and_scale_free(
        xs in prop::collection::vec(vec_strategy(5), 1..6),
        ls in prop::collection::vec(vec_strategy(5), 1..5),
        alpha in 0.01f64..100.0,
        beta in 0.01f64..100.0,
    ) {
        let lab = labels(ls.clone());
        let nodes: Vec<usize> = (0..xs.len()).collect();
        let emb: Vec<EmbeddingVector> = xs.iter().cloned().map(EmbeddingVector::new).collect();
        let base = zero_shot(&nodes, &emb, &lab, Execution::Sequential).unwrap();
        for p in &base {
            prop_assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.probabilities.iter().all(|&q| q > 0.0));
        }
        let scaled: Vec<EmbeddingVector> = xs.iter().map(|x| EmbeddingVector::new(x.iter().map(|v| v * alpha).collect())).collect();
        let lab_scaled = labels(ls.iter().map(|l| l.iter().map(|v| v * beta).collect()).collect());
        let other = zero_shot(&nodes, &scaled, &lab_scaled, Execution::Parallel).unwrap();
        for (a, b) in base.iter().zip(&other) {
            prop_assert_eq!(a.predicted, b.predicted);
            for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unfitted_adapter_is_zero_shot(xs in prop::collection::vec(vec_strategy(4), 1..6), seed: u64) {
        let lab = labels(vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0], vec![0.3, -0.2, 0.0, 1.0]]);
        let emb: Vec<EmbeddingVector> = xs.into_iter().map(EmbeddingVector::new).collect();
        let nodes: Vec<usize> = (0..emb.len()).collect();
        let targets: Vec<usize> = nodes.iter().map(|i| i % 3).collect();
        let adapter = FewShotAdapter::fit(&emb, &targets, &lab, FewShotConfig { epochs: 0, seed, ..Default::default() }).unwrap();
        prop_assert_eq!(
            adapter.predict(&nodes, &emb, &lab, Execution::Sequential).unwrap(),
            zero_shot(&nodes, &emb, &lab, Execution::Sequential).unwrap()
        );
        let fitted = FewShotAdapter::fit(&emb, &targets, &lab, FewShotConfig { epochs: 30, seed, ..Default::default() }).unwrap();
        prop_assert!(fitted.support_loss(&emb, &targets, &lab) <= adapter.support_loss(&emb, &targets, &lab));
    }

    #[test]
    fn accuracy_ignores_node_order(seed: u64, shots in 1usize..6) {
        let g = planted_partition(&ToyConfig::default());
        let split = few_shot_split(&g, shots, seed).unwrap();
        let preds: Vec<Prediction> = (0..60).map(|v| Prediction { node: v, probabilities: vec![0.5, 0.5], predicted: (v * 7 + 3) % 2 }).collect();
        let mut reversed = split.test.clone();
        reversed.reverse();
        let mut shuffled_preds = preds.clone();
        shuffled_preds.reverse();
        prop_assert_eq!(evaluate(&preds, &g, &split.test).unwrap(), evaluate(&shuffled_preds, &g, &reversed).unwrap());
        prop_assert_eq!(split.support.len(), 2 * shots);
        prop_assert_eq!(split.validation.len(), (60 - 2 * shots) / 10);
    }
}

#[test]
fn five_shot_fits_the_toy_support() {
    let g = planted_partition(&ToyConfig::default());
    let p = HashEmbedder::new(128);
    let lab = LabelEmbeddings::new(&p, g.label_texts().unwrap(), None).unwrap();
    for seed in 0..5 {
        let split = few_shot_split(&g, 5, seed).unwrap();
        let emb = p.embed(&split.support.iter().map(|&v| g.text(v).to_string()).collect::<Vec<_>>()).unwrap();
        let targets: Vec<usize> = split.support.iter().map(|&v| g.label(v).unwrap()).collect();
        let adapter = FewShotAdapter::fit(&emb, &targets, &lab, FewShotConfig { seed, ..Default::default() }).unwrap();
        let preds = adapter.predict(&split.support, &emb, &lab, Execution::Sequential).unwrap();
        assert_eq!(evaluate(&preds, &g, &split.support).unwrap().accuracy, 1.0, "seed {seed}");
    }
}

#[test]
fn label_template_substitutes() {
    let p = HashEmbedder::new(32);
    let lab = LabelEmbeddings::new(&p, &["cats".to_string()], Some("a paper about {}")).unwrap();
    assert_eq!(lab.vectors[0], p.embed_one("a paper about cats").unwrap());
    assert!(matches!(LabelEmbeddings::new(&p, &[], None), Err(taga::error::InferenceError::NoLabels)));
}
