mod common;

use common::*;
use nalgebra::DMatrix;
use ncollapse_core::embeddings::partition_by_class;
use ncollapse_core::fewshot::{
    evaluate, ncm_fit, ncm_predict, ridge_fit_lambda, sample_episode, support_matrices, Episode, EpisodeConfig,
    Head, LambdaExponent,
};
use proptest::prelude::*;

fn cfg(k: usize, n_shot: usize, n_query: usize, episodes: usize, seed: u64) -> EpisodeConfig {
    EpisodeConfig { k, n_shot, n_query, episodes, seed }
}

fn episode(classes: &[Vec<Vec<f64>>], n_shot: usize) -> Episode {
    Episode {
        class_ids: (0..classes.len() as u32).collect(),
        support: classes.iter().map(|c| c[..n_shot].to_vec()).collect(),
        query: classes.iter().map(|c| c[n_shot..].to_vec()).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_residual_small(classes in class_points(2..=5, 2..=6, 1..=10), lambda in 1e-3f64..10.0) {
        let ep = episode(&classes, 1);
        let m = ridge_fit_lambda(&ep, lambda).unwrap();
        prop_assert!(m.normal_equation_residual(&ep) <= 1e-8);
    }

    #[test]
    fn tiny_lambda_matches_least_squares(classes in class_points(2..=4, 4..=8, 1..=3)) {
        // more support rows than features: F has full column rank
        let n_shot = 3;
        let ep = episode(&classes, n_shot);
        let (f, y) = support_matrices(&ep);
        prop_assume!(f.clone().svd(false, false).singular_values.min() > 1e-2);
        let w = ridge_fit_lambda(&ep, 1e-10).unwrap().weights;
        let oracle = f.clone().svd(true, true).solve(&y, 0.0).unwrap();
        let err = (&w - &oracle).amax();
        prop_assert!(err <= 1e-5 * oracle.amax().max(1.0), "{err}");
    }

    #[test]
    fn ncm_invariant_under_similarity(
        classes in class_points(2..=5, 2..=6, 1..=6),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let ep = episode(&classes, 1);
        let moved = Episode {
            class_ids: ep.class_ids.clone(),
            support: ep.support.iter().map(|c| c.iter().map(|p| p.iter().map(|v| v * scale + shift).collect()).collect()).collect(),
            query: ep.query.clone(),
        };
        let a = ncm_fit(&ep).unwrap();
        let b = ncm_fit(&moved).unwrap();
        for c in &ep.query {
            for q in c {
                let q2: Vec<f64> = q.iter().map(|v| v * scale + shift).collect();
                // skip near-ties, where rounding may legitimately flip the choice
                let mut d: Vec<f64> = a.means.iter().map(|m| m.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum()).collect();
                d.sort_by(f64::total_cmp);
                prop_assume!(d[1] - d[0] > 1e-9 * d[1].max(1.0));
                prop_assert_eq!(ncm_predict(&a, q).unwrap(), ncm_predict(&b, &q2).unwrap());
            }
        }
    }

    #[test]
    fn accuracy_invariant_under_label_permutation(
        classes in class_points(5..=7, 4..=6, 2..=4),
        seed in any::<u64>(),
        offset in 1u32..1000,
    ) {
        let set = embeddings(&classes);
        let k = classes.len() as u32;
        // reverse the label order, then spread the labels out
        let renamed = set.relabel(|l| (k - 1 - l) * 7 + offset);
        let c = cfg(3, 2, 2, 20, seed);
        for head in [Head::Ncm, Head::Ridge { alpha: 1.0, exponent: LambdaExponent::PlusHalf }] {
            let a = evaluate(&partition_by_class(&set), &c, &head).unwrap();
            let b = evaluate(&partition_by_class(&renamed), &c, &head).unwrap();
            prop_assert_eq!(a.per_episode, b.per_episode);
        }
    }

    #[test]
    fn episodes_are_balanced_and_deterministic(
        classes in class_points(3..=6, 3..=8, 1..=3),
        seed in any::<u64>(),
        idx in any::<u64>(),
    ) {
        let part = partition(&classes);
        let c = cfg(3, 1, 2, 1, seed);
        let ep = sample_episode(&part, &c, idx).unwrap();
        prop_assert_eq!(&ep, &sample_episode(&part, &c, idx).unwrap());
        prop_assert_eq!(ep.class_ids.len(), 3);
        prop_assert!(ep.class_ids.windows(2).all(|w| w[0] < w[1]));
        for (ci, &label) in ep.class_ids.iter().enumerate() {
            prop_assert_eq!(ep.support[ci].len(), 1);
            prop_assert_eq!(ep.query[ci].len(), 2);
            let pool = &classes[label as usize];
            let picked: Vec<usize> = ep.support[ci]
                .iter()
                .chain(&ep.query[ci])
                .map(|p| pool.iter().position(|x| x == p).expect("drawn from its class"))
                .collect();
            let mut uniq = picked.clone();
            uniq.sort_unstable();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), picked.len());
        }
    }
}

#[test]
fn identity_support_hand_example() {
    let ep = Episode {
        class_ids: vec![0, 1],
        support: vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
        query: vec![vec![], vec![]],
    };
    let m = ridge_fit_lambda(&ep, 1.0).unwrap();
    assert_eq!(m.weights, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
}

#[test]
fn class_selection_is_roughly_uniform() {
    let classes: Vec<Vec<Vec<f64>>> = (0..6).map(|c| vec![vec![c as f64]; 4]).collect();
    let part = partition(&classes);
    let c = cfg(2, 1, 1, 1, 11);
    let mut counts = [0usize; 6];
    let draws = 6000;
    for i in 0..draws {
        for &l in &sample_episode(&part, &c, i).unwrap().class_ids {
            counts[l as usize] += 1;
        }
    }
    // each class appears with probability 1/3; 2000 expected, sd about 36
    for n in counts {
        assert!((n as f64 - 2000.0).abs() < 200.0, "{counts:?}");
    }
}

#[test]
fn too_few_eligible_classes_is_an_error() {
    let classes = vec![vec![vec![0.0]; 2], vec![vec![1.0]; 5], vec![vec![2.0]; 5]];
    let err = sample_episode(&partition(&classes), &cfg(3, 2, 1, 1, 0), 0).unwrap_err();
    assert!(matches!(err, ncollapse_core::Error::TooFewEligibleClasses { .. }), "{err:?}");
}
