mod common;

use common::*;
use nalgebra::DMatrix;
use ncollapse_core::metrics::{ccnv, cdnv_matrix, class_stats, geometry, pseudo_inverse, scatter};
use ncollapse_core::linalg::default_rel_tol;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdnv_matches_double_loop(classes in class_points(2..=5, 3..=50, 2..=8)) {
        let report = cdnv_matrix(&partition(&classes)).unwrap();
        let k = classes.len();
        let mut sum = 0.0;
        for i in 0..k {
            prop_assert!(report.matrix[i][i].is_none());
            for j in 0..k {
                if i == j {
                    continue;
                }
                let want = naive_cdnv(&classes[i], &classes[j]);
                let got = report.matrix[i][j].unwrap();
                prop_assert!(rel_close(got, want, 1e-12), "{got} vs {want}");
                sum += want;
            }
        }
        let avg = sum / (k * (k - 1)) as f64;
        prop_assert!(rel_close(report.average, avg, 1e-12));
        prop_assert!(report.degenerate_pairs.is_empty());
    }

    #[test]
    fn ccnv_matches_eigen_oracle(classes in class_points(2..=5, 3..=50, 2..=8)) {
        let got = ccnv(&partition(&classes)).unwrap();
        let want = naive_ccnv(&classes);
        prop_assert!(rel_close(got, want, 1e-9), "{got} vs {want}");
    }

    #[test]
    fn cdnv_affine_invariant(
        classes in class_points(2..=4, 3..=20, 2..=6),
        scale in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        shift in -100.0f64..100.0,
    ) {
        let set = embeddings(&classes);
        let moved = set.map_affine(scale, &vec![shift; set.dim()]).unwrap();
        let a = cdnv_matrix(&ncollapse_core::embeddings::partition_by_class(&set)).unwrap();
        let b = cdnv_matrix(&ncollapse_core::embeddings::partition_by_class(&moved)).unwrap();
        prop_assert!(rel_close(a.average, b.average, 1e-10));
        for (ra, rb) in a.matrix.iter().zip(&b.matrix) {
            for (x, y) in ra.iter().zip(rb) {
                if let (Some(x), Some(y)) = (x, y) {
                    prop_assert!(rel_close(*x, *y, 1e-10));
                }
            }
        }
    }

    #[test]
    fn ccnv_scale_translation_invariant(
        classes in class_points(2..=4, 3..=20, 2..=6),
        scale in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        shift in -100.0f64..100.0,
    ) {
        let set = embeddings(&classes);
        let moved = set.map_affine(scale, &vec![shift; set.dim()]).unwrap();
        let a = ccnv(&ncollapse_core::embeddings::partition_by_class(&set)).unwrap();
        let b = ccnv(&ncollapse_core::embeddings::partition_by_class(&moved)).unwrap();
        prop_assert!(rel_close(a, b, 1e-9), "{a} vs {b}");
    }

    #[test]
    fn scatter_traces_agree_with_geometry(classes in class_points(2..=4, 2..=10, 1..=5)) {
        let part = partition(&classes);
        let s = scatter(&part);
        let g = geometry(&part).unwrap();
        prop_assert!(rel_close(s.within.trace(), g.within_trace, 1e-12));
        prop_assert!(rel_close(s.between.trace(), g.between_trace, 1e-12));
        // within trace is the sample-weighted mean of class variances
        let n: usize = classes.iter().map(Vec::len).sum();
        let w: f64 = classes.iter().map(|c| naive_var(c) * c.len() as f64).sum::<f64>() / n as f64;
        prop_assert!(rel_close(g.within_trace, w, 1e-10));
        for c in &classes {
            let st = class_stats(c).unwrap();
            prop_assert!(rel_close(st.variance, naive_var(c), 1e-10) || st.variance < 1e-12);
        }
    }

    #[test]
    fn penrose_conditions(
        (rows, cols, rank, a, b) in (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
            let rank = 0..=r.min(c);
            (Just(r), Just(c), rank,
             prop::collection::vec(-3.0f64..3.0, r * 8),
             prop::collection::vec(-3.0f64..3.0, 8 * c))
        })
    ) {
        // A = L R with inner dimension `rank` gives rank <= rank
        let l = DMatrix::from_vec(rows, 8, a).columns(0, rank).into_owned();
        let r = DMatrix::from_vec(8, cols, b).rows(0, rank).into_owned();
        let m = &l * &r;
        let p = pseudo_inverse(&m, default_rel_tol(rows, cols) * 1e3).unwrap();
        let scale = m.norm().max(1.0);
        let tol = 1e-8;
        prop_assert!((&m * &p * &m - &m).amax() <= tol * scale);
        let pn = p.norm().max(1.0);
        prop_assert!((&p * &m * &p - &p).amax() <= tol * pn * pn * scale);
        let mp = &m * &p;
        let pm = &p * &m;
        prop_assert!((&mp - mp.transpose()).amax() <= tol * pn * scale);
        prop_assert!((&pm - pm.transpose()).amax() <= tol * pn * scale);
    }
}

#[test]
fn degenerate_pair_reports_infinity() {
    let classes = vec![
        vec![vec![0.0, 1.0], vec![0.0, -1.0]],
        vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        vec![vec![5.0, 5.0]],
    ];
    let r = cdnv_matrix(&partition(&classes)).unwrap();
    assert_eq!(r.degenerate_pairs, vec![(0, 1)]);
    assert_eq!(r.matrix[0][1], Some(f64::INFINITY));
    assert!(r.average.is_infinite());
}
