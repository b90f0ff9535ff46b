mod common;

use std::collections::BTreeMap;

use kltext::bayes::{fit_bayes, mahalanobis_full, posterior, CovarianceModel};
use kltext::centroid::{
    class_centroid, cosine_classify, dataset_centroids, separation_holds, similarities, superclass_central_vector,
};
use kltext::corpus::{normalize_counts, Document, LabeledDataset, SparseVector, TermId, Vocabulary};
use kltext::scores_tie;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn counts() -> impl Strategy<Value = SparseVector> {
    prop::collection::vec((0u32..8, 1u32..5), 1..6)
        .prop_map(|e| SparseVector::from_unsorted(e.into_iter().map(|(t, c)| (TermId(t), c as f64))))
}

fn labelled() -> impl Strategy<Value = Vec<(usize, SparseVector)>> {
    prop::collection::vec((0usize..3, counts()), 3..12).prop_filter("every class present", |docs| {
        (0..3).all(|c| docs.iter().any(|(l, _)| *l == c))
    })
}

fn dataset(docs: &[(usize, SparseVector)]) -> LabeledDataset {
    let vocab = Vocabulary::from_words((0..8).map(|i| format!("w{i}")).collect()).unwrap();
    let documents = docs
        .iter()
        .enumerate()
        .map(|(i, (l, c))| Document::from_counts(format!("d{i:02}"), Some(format!("c{l}")), c.clone()).unwrap())
        .collect();
    LabeledDataset::from_documents(vocab, documents).unwrap()
}

fn same(a: &SparseVector, b: &SparseVector, tol: f64) -> bool {
    a.len() == b.len()
        && a.terms()
            .iter()
            .zip(b.terms())
            .all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= tol)
}

proptest! {
    #[test]
    fn centroid_ignores_order_and_scale(docs in prop::collection::vec(counts(), 1..8), scale in 0.1f64..50.0) {
        let units: Vec<SparseVector> = docs.iter().map(|d| normalize_counts(d).unwrap()).collect();
        let forward = class_centroid("a", units.iter()).unwrap();
        let backward = class_centroid("a", units.iter().rev()).unwrap();
        prop_assert!(same(&forward.vector, &backward.vector, 1e-12));

        let scaled: Vec<SparseVector> = docs.iter().map(|d| normalize_counts(&d.scale(scale)).unwrap()).collect();
        let s = class_centroid("a", scaled.iter()).unwrap();
        prop_assert!(same(&forward.vector, &s.vector, 1e-12));
    }

    #[test]
    fn superclass_of_copies_is_the_centroid(docs in prop::collection::vec(counts(), 1..5), k in 1usize..5) {
        let units: Vec<SparseVector> = docs.iter().map(|d| normalize_counts(d).unwrap()).collect();
        let c = class_centroid("a", units.iter()).unwrap();
        let copies = vec![c.clone(); k];
        let s = superclass_central_vector(&copies).unwrap();
        prop_assert!(same(&s.vector, &c.vector, 1e-12));
    }

    #[test]
    fn separation_agrees_with_cosine_argmax(docs in labelled()) {
        let ds = dataset(&docs);
        let cs = dataset_centroids(&ds).unwrap();
        let held = separation_holds(&ds, &cs).unwrap();
        for d in &ds.documents {
            let own = d.label.as_deref().unwrap();
            let sims = similarities(&d.unit, &cs);
            let best = sims.values().copied().fold(f64::NEG_INFINITY, f64::max);
            let tied = sims.iter().filter(|(_, &v)| scores_tie(v, best)).count();
            let winner = cosine_classify(&d.unit, &cs).unwrap();
            if held[&d.id] {
                prop_assert_eq!(winner, own);
            } else if winner == own {
                // Own class won only through the tie-break.
                prop_assert!(tied > 1);
            }
        }
    }

    #[test]
    fn posteriors_sum_to_one(docs in labelled(), query in counts()) {
        let model = fit_bayes(&dataset(&docs), 1.0).unwrap();
        let total: f64 = posterior(&model, &query).values().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn posterior_is_unchanged_by_a_shared_likelihood_factor(docs in labelled(), query in counts(), shift in -500.0f64..500.0) {
        // The posterior is the normalized exp of the log joints, so adding
        // one constant to every class's log likelihood must not move it.
        let model = fit_bayes(&dataset(&docs), 1.0).unwrap();
        let post = posterior(&model, &query);
        let shifted: BTreeMap<&String, f64> = model.priors.keys().map(|c| (c, model.log_joint(c, &query) + shift)).collect();
        let top = shifted.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = shifted.values().map(|v| (v - top).exp()).sum();
        for (c, v) in &shifted {
            prop_assert!((post[*c] - (v - top).exp() / z).abs() <= 1e-12);
        }
        let arg = |m: &BTreeMap<&String, f64>| m.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| (*k).clone());
        let post_ref: BTreeMap<&String, f64> = post.iter().map(|(k, v)| (k, *v)).collect();
        prop_assert_eq!(arg(&post_ref), arg(&shifted));
    }
}

#[test]
fn identity_mahalanobis_is_euclidean() {
    let mut r = common::rng(11);
    for _ in 0..100 {
        let d = r.gen_range(1..8);
        let x: Vec<f64> = (0..d).map(|_| r.gen_range(-10.0..10.0)).collect();
        let mu: Vec<f64> = (0..d).map(|_| r.gen_range(-10.0..10.0)).collect();
        let model = CovarianceModel::new(DVector::from_vec(mu.clone()), DMatrix::identity(d, d)).unwrap();
        let euclid = x.iter().zip(&mu).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((mahalanobis_full(&x, &model).unwrap() - euclid).abs() <= 1e-12);
    }
}

#[test]
fn mahalanobis_is_invariant_under_joint_linear_maps() {
    let mut r = common::rng(5);
    let mut checked = 0;
    while checked < 50 {
        let a = DMatrix::<f64>::from_fn(3, 3, |_, _| r.gen_range(-2.0..2.0));
        if a.determinant().abs() < 0.1 {
            continue;
        }
        let l = DMatrix::from_fn(3, 3, |i, j| if j <= i { r.gen_range(-1.0..1.0) } else { 0.0 })
            + DMatrix::identity(3, 3) * 1.5;
        let sigma = &l * l.transpose();
        let mu = DVector::from_fn(3, |_, _| r.gen_range(-3.0..3.0));
        let x = DVector::from_fn(3, |_, _| r.gen_range(-3.0..3.0));

        let before = CovarianceModel::new(mu.clone(), sigma.clone()).unwrap();
        let after = CovarianceModel::new(&a * &mu, &a * &sigma * a.transpose()).unwrap();
        let d0 = mahalanobis_full(x.as_slice(), &before).unwrap();
        let d1 = mahalanobis_full((&a * &x).as_slice(), &after).unwrap();
        assert!((d0 - d1).abs() <= 1e-8 * d0.max(1.0), "{d0} vs {d1}");
        checked += 1;
    }
}
