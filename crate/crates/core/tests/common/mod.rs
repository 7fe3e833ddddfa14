// Shared strategies and naive reference implementations.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ncollapse_core::embeddings::{ClassGroup, ClassPartition, LabeledEmbeddings};
use proptest::prelude::*;

/// Rows per class, one vector of points per class; labels are 0..k.
pub fn class_points(
    classes: std::ops::RangeInclusive<usize>,
    points: std::ops::RangeInclusive<usize>,
    dims: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
    (classes, dims).prop_flat_map(move |(k, d)| {
        prop::collection::vec(
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), points.clone()),
            k,
        )
    })
}

pub fn partition(classes: &[Vec<Vec<f64>>]) -> ClassPartition {
    let dim = classes[0][0].len();
    let mut first = 0;
    let groups = classes
        .iter()
        .enumerate()
        .map(|(c, pts)| {
            let g = ClassGroup {
                label: c as u32,
                first_row: first,
                points: pts.clone(),
            };
            first += pts.len();
            g
        })
        .collect();
    ClassPartition::from_groups(dim, groups).unwrap()
}

pub fn embeddings(classes: &[Vec<Vec<f64>>]) -> LabeledEmbeddings {
    LabeledEmbeddings::from_rows(
        classes
            .iter()
            .enumerate()
            .flat_map(|(c, pts)| pts.iter().map(move |p| (c as u32, p.clone()))),
    )
    .unwrap()
}

pub fn naive_mean(points: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; points[0].len()];
    for p in points {
        for j in 0..m.len() {
            m[j] += p[j];
        }
    }
    for v in &mut m {
        *v /= points.len() as f64;
    }
    m
}

pub fn naive_var(points: &[Vec<f64>]) -> f64 {
    let m = naive_mean(points);
    let mut s = 0.0;
    for p in points {
        for j in 0..m.len() {
            s += (p[j] - m[j]) * (p[j] - m[j]);
        }
    }
    s / points.len() as f64
}

pub fn naive_cdnv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (ma, mb) = (naive_mean(a), naive_mean(b));
    let mut d2 = 0.0;
    for j in 0..ma.len() {
        d2 += (ma[j] - mb[j]) * (ma[j] - mb[j]);
    }
    (naive_var(a) + naive_var(b)) / (2.0 * d2)
}

/// `Tr(Sigma_W Sigma_B^+)` with the pseudoinverse taken through a symmetric
/// eigendecomposition instead of an SVD.
pub fn naive_ccnv(classes: &[Vec<Vec<f64>>]) -> f64 {
    let d = classes[0][0].len();
    let k = classes.len();
    let means: Vec<Vec<f64>> = classes.iter().map(|c| naive_mean(c)).collect();
    let n: usize = classes.iter().map(Vec::len).sum();
    let mut g = vec![0.0; d];
    for m in &means {
        for j in 0..d {
            g[j] += m[j] / k as f64;
        }
    }
    let mut sw = DMatrix::<f64>::zeros(d, d);
    let mut sb = DMatrix::<f64>::zeros(d, d);
    for (c, pts) in classes.iter().enumerate() {
        for p in pts {
            for i in 0..d {
                for j in 0..d {
                    sw[(i, j)] += (p[i] - means[c][i]) * (p[j] - means[c][j]) / n as f64;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                sb[(i, j)] += (means[c][i] - g[i]) * (means[c][j] - g[j]) / k as f64;
            }
        }
    }
    let eig = SymmetricEigen::new(sb);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pinv = DMatrix::<f64>::zeros(d, d);
    for (r, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() <= 1e-10 * top {
            continue;
        }
        let v = eig.eigenvectors.column(r);
        pinv += v * v.transpose() / l;
    }
    (sw * pinv).trace()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
