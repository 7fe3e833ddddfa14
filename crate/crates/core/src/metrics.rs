//! Class statistics and collapse measures: CDNV, CCNV and class-mean geometry.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::embeddings::ClassPartition;
use crate::error::{Error, Result};
use crate::linalg::{default_rel_tol, sq_dist};

pub use crate::linalg::pseudo_inverse;

/// Empirical mean, population variance `E||x - mean||^2` and size of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub count: usize,
}

pub fn class_stats<P: AsRef<[f64]>>(points: &[P]) -> Result<ClassStats> {
    let first = points.first().ok_or(Error::Empty)?;
    let dim = first.as_ref().len();
    // Accumulate offsets from the first point: identical points then give
    // their exact value back as the mean.
    let origin = first.as_ref();
    let mut shift = vec![0.0; dim];
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        for ((s, x), o) in shift.iter_mut().zip(p).zip(origin) {
            *s += x - o;
        }
    }
    let n = points.len() as f64;
    let mean: Vec<f64> = origin.iter().zip(&shift).map(|(o, s)| o + s / n).collect();
    let variance = points.iter().map(|p| sq_dist(p.as_ref(), &mean)).sum::<f64>() / n;
    Ok(ClassStats {
        mean,
        variance,
        count: points.len(),
    })
}

/// One CDNV value. Coincident means give `+inf` with `degenerate` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdnv {
    pub value: f64,
    pub degenerate: bool,
}

/// `(Var(a) + Var(b)) / (2 ||mean(a) - mean(b)||^2)`.
pub fn cdnv_pair(a: &ClassStats, b: &ClassStats) -> Result<Cdnv> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: a.mean.len(),
            found: b.mean.len(),
        });
    }
    let d2 = sq_dist(&a.mean, &b.mean);
    if d2 == 0.0 {
        return Ok(Cdnv {
            value: f64::INFINITY,
            degenerate: true,
        });
    }
    Ok(Cdnv {
        value: (a.variance + b.variance) / (2.0 * d2),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdnvReport {
    pub labels: Vec<u32>,
    /// Symmetric; `None` on the diagonal.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Mean over off-diagonal entries, `+inf` if any pair is degenerate.
    pub average: f64,
    pub degenerate_pairs: Vec<(u32, u32)>,
}

fn require_classes(partition: &ClassPartition, needed: usize) -> Result<()> {
    if partition.num_classes() < needed {
        return Err(Error::TooFewClasses {
            needed,
            found: partition.num_classes(),
        });
    }
    Ok(())
}

pub fn partition_stats(partition: &ClassPartition) -> Vec<ClassStats> {
    partition
        .groups()
        .iter()
        .map(|g| class_stats(&g.points).expect("partition groups are non-empty"))
        .collect()
}

pub fn cdnv_matrix(partition: &ClassPartition) -> Result<CdnvReport> {
    require_classes(partition, 2)?;
    let stats = partition_stats(partition);
    let labels = partition.labels();
    let k = stats.len();
    let mut matrix = vec![vec![None; k]; k];
    let mut degenerate_pairs = Vec::new();
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let v = cdnv_pair(&stats[i], &stats[j])?;
            matrix[i][j] = Some(v.value);
            matrix[j][i] = Some(v.value);
            if v.degenerate {
                degenerate_pairs.push((labels[i], labels[j]));
            } else {
                sum += v.value;
            }
        }
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let average = if degenerate_pairs.is_empty() {
        sum / pairs
    } else {
        f64::INFINITY
    };
    Ok(CdnvReport {
        labels,
        matrix,
        average,
        degenerate_pairs,
    })
}

/// Within- and between-class covariance about the mean of class means.
#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub global_mean: Vec<f64>,
    pub within: DMatrix<f64>,
    pub between: DMatrix<f64>,
}

/// `within` averages `(x - mu_c)(x - mu_c)^T` over every sample; `between`
/// averages `(mu_c - mu_G)(mu_c - mu_G)^T` over classes.
pub fn scatter(partition: &ClassPartition) -> Scatter {
    let dim = partition.dim();
    let stats = partition_stats(partition);
    let classes = stats.len() as f64;
    let mut global_mean = vec![0.0; dim];
    for s in &stats {
        for (g, m) in global_mean.iter_mut().zip(&s.mean) {
            *g += m / classes;
        }
    }

    let mut within = DMatrix::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for (group, s) in partition.groups().iter().zip(&stats) {
        for p in &group.points {
            for (c, (x, m)) in centered.iter_mut().zip(p.iter().zip(&s.mean)) {
                *c = x - m;
            }
            add_outer(&mut within, &centered, 1.0);
        }
    }
    within /= partition.total_points() as f64;

    let mut between = DMatrix::zeros(dim, dim);
    for s in &stats {
        for (c, (m, g)) in centered.iter_mut().zip(s.mean.iter().zip(&global_mean)) {
            *c = m - g;
        }
        add_outer(&mut between, &centered, 1.0);
    }
    between /= classes;

    Scatter {
        global_mean,
        within,
        between,
    }
}

fn add_outer(acc: &mut DMatrix<f64>, v: &[f64], w: f64) {
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (j, &vj) in v.iter().enumerate() {
            acc[(i, j)] += w * vi * vj;
        }
    }
}

/// `Tr(Sigma_W Sigma_B^+)` with the default rank tolerance.
pub fn ccnv(partition: &ClassPartition) -> Result<f64> {
    let dim = partition.dim();
    ccnv_with_tol(partition, default_rel_tol(dim, dim))
}

pub fn ccnv_with_tol(partition: &ClassPartition, rel_tol: f64) -> Result<f64> {
    require_classes(partition, 2)?;
    let s = scatter(partition);
    let between_pinv = pseudo_inverse(&s.between, rel_tol)?;
    // Tr(A B) = sum_ij A_ij B_ji
    let dim = partition.dim();
    let mut trace = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            trace += s.within[(i, j)] * between_pinv[(j, i)];
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub min_mean_distance: f64,
    pub argmin_pair: (u32, u32),
    pub global_mean: Vec<f64>,
    pub within_trace: f64,
    pub between_trace: f64,
}

pub fn geometry(partition: &ClassPartition) -> Result<GeometryReport> {
    require_classes(partition, 2)?;
    let stats = partition_stats(partition);
    let labels = partition.labels();
    let mut best = (f64::INFINITY, (labels[0], labels[1]));
    for i in 0..stats.len() {
        for j in i + 1..stats.len() {
            let d2 = sq_dist(&stats[i].mean, &stats[j].mean);
            // Strict comparison keeps the lexicographically first pair on ties.
            if d2 < best.0 {
                best = (d2, (labels[i], labels[j]));
            }
        }
    }
    let s = scatter(partition);
    Ok(GeometryReport {
        min_mean_distance: libm::sqrt(best.0),
        argmin_pair: best.1,
        global_mean: s.global_mean,
        within_trace: s.within.trace(),
        between_trace: s.between.trace(),
    })
}
