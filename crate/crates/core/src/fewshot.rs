//! k-way n-shot episodes and the two linear-probe heads scored on them.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::index;

use crate::embeddings::{ClassGroup, ClassPartition};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, sq_dist};
use crate::metrics::class_stats;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeConfig {
    pub k: usize,
    pub n_shot: usize,
    pub n_query: usize,
    pub episodes: usize,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("n_shot", self.n_shot),
            ("n_query", self.n_query),
            ("episodes", self.episodes),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn points_per_class(&self) -> usize {
        self.n_shot + self.n_query
    }

    /// Checks that `partition` has at least `k` classes large enough to
    /// supply a support and query set.
    pub fn check_partition(&self, partition: &ClassPartition) -> Result<()> {
        self.validate()?;
        let eligible = eligible_groups(partition, self.points_per_class()).len();
        if eligible < self.k {
            return Err(Error::TooFewEligibleClasses {
                eligible,
                needed: self.k,
                per_class: self.points_per_class(),
            });
        }
        Ok(())
    }
}

/// One sampled few-shot task. Classes are listed in ascending id order and
/// `support[c]`, `query[c]` belong to `class_ids[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub class_ids: Vec<u32>,
    pub support: Vec<Vec<Vec<f64>>>,
    pub query: Vec<Vec<Vec<f64>>>,
}

impl Episode {
    pub fn dim(&self) -> usize {
        self.support[0][0].len()
    }

    pub fn support_size(&self) -> usize {
        self.support.iter().map(Vec::len).sum()
    }
}

/// Groups that can supply `per_class` distinct points, ordered by first
/// appearance in the source rows so that renaming labels does not change
/// which groups get drawn.
fn eligible_groups(partition: &ClassPartition, per_class: usize) -> Vec<&ClassGroup> {
    let mut groups: Vec<&ClassGroup> = partition
        .groups()
        .iter()
        .filter(|g| g.len() >= per_class)
        .collect();
    groups.sort_by_key(|g| (g.first_row, g.label));
    groups
}

/// Label, support points and query points of one drawn class.
type DrawnClass = (u32, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Draws episode `episode_index`; the result depends only on the partition,
/// `cfg` and the index.
pub fn sample_episode(
    partition: &ClassPartition,
    cfg: &EpisodeConfig,
    episode_index: u64,
) -> Result<Episode> {
    cfg.check_partition(partition)?;
    let per_class = cfg.points_per_class();
    let eligible = eligible_groups(partition, per_class);
    let mut rng = stream_rng(cfg.seed, episode_index);

    let mut drawn: Vec<DrawnClass> = Vec::with_capacity(cfg.k);
    for gi in index::sample(&mut rng, eligible.len(), cfg.k) {
        let group = eligible[gi];
        let picks = index::sample(&mut rng, group.len(), per_class).into_vec();
        let support = picks[..cfg.n_shot]
            .iter()
            .map(|&i| group.points[i].clone())
            .collect();
        let query = picks[cfg.n_shot..]
            .iter()
            .map(|&i| group.points[i].clone())
            .collect();
        drawn.push((group.label, support, query));
    }
    drawn.sort_by_key(|d| d.0);

    let mut ep = Episode {
        class_ids: Vec::with_capacity(cfg.k),
        support: Vec::with_capacity(cfg.k),
        query: Vec::with_capacity(cfg.k),
    };
    for (label, support, query) in drawn {
        ep.class_ids.push(label);
        ep.support.push(support);
        ep.query.push(query);
    }
    Ok(ep)
}

/// Exponent `e` in the regularizer `lambda_n = alpha * n^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaExponent {
    /// `lambda_n = alpha * sqrt(n)`
    #[default]
    PlusHalf,
    /// `lambda_n = alpha / sqrt(n)`
    MinusHalf,
}

impl LambdaExponent {
    pub fn value(self) -> f64 {
        match self {
            LambdaExponent::PlusHalf => 0.5,
            LambdaExponent::MinusHalf => -0.5,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 0.5 {
            Ok(LambdaExponent::PlusHalf)
        } else if v == -0.5 {
            Ok(LambdaExponent::MinusHalf)
        } else {
            Err(Error::param("lambda_exponent", "must be 0.5 or -0.5"))
        }
    }

    pub fn lambda(self, alpha: f64, n: usize) -> f64 {
        let root = libm::sqrt(n as f64);
        match self {
            LambdaExponent::PlusHalf => alpha * root,
            LambdaExponent::MinusHalf => alpha / root,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// `p x k`, column `c` scores `class_ids[c]`.
    pub weights: DMatrix<f64>,
    pub lambda: f64,
    /// `None` when the regularizer was given directly.
    pub alpha: Option<f64>,
    pub class_ids: Vec<u32>,
}

/// Support features as an `n x p` matrix and one-hot targets as `n x k`,
/// with rows grouped by class in `class_ids` order.
pub fn support_matrices(ep: &Episode) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ep.support_size();
    let p = ep.dim();
    let k = ep.class_ids.len();
    let mut features = DMatrix::zeros(n, p);
    let mut targets = DMatrix::zeros(n, k);
    let mut row = 0;
    for (c, points) in ep.support.iter().enumerate() {
        for x in points {
            for (j, &v) in x.iter().enumerate() {
                features[(row, j)] = v;
            }
            targets[(row, c)] = 1.0;
            row += 1;
        }
    }
    (features, targets)
}

/// Solves `(F^T F + lambda I) W = F^T Y` through an `L D L^T` factorization
/// of the positive-definite left-hand side.
pub fn ridge_solve(features: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::param("lambda", "must be positive and finite"));
    }
    let p = features.ncols();
    let mut gram = features.tr_mul(features);
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let rhs = features.tr_mul(targets);
    solve_spd(&gram, &rhs)
        .ok_or_else(|| Error::Degenerate(format!("F^T F + {lambda} I is not positive definite")))
}

/// Ridge head with `lambda_n = alpha * n^e` where `n` is the support size.
pub fn ridge_fit(ep: &Episode, alpha: f64, exponent: LambdaExponent) -> Result<RidgeModel> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::param("alpha", "must be positive and finite"));
    }
    let lambda = exponent.lambda(alpha, ep.support_size());
    let mut model = ridge_fit_lambda(ep, lambda)?;
    model.alpha = Some(alpha);
    Ok(model)
}

pub fn ridge_fit_lambda(ep: &Episode, lambda: f64) -> Result<RidgeModel> {
    let (features, targets) = support_matrices(ep);
    let weights = ridge_solve(&features, &targets, lambda)?;
    Ok(RidgeModel {
        weights,
        lambda,
        alpha: None,
        class_ids: ep.class_ids.clone(),
    })
}

impl RidgeModel {
    /// Largest absolute entry of `(F^T F + lambda I) W - F^T Y`.
    pub fn normal_equation_residual(&self, ep: &Episode) -> f64 {
        let (features, targets) = support_matrices(ep);
        let mut gram = features.tr_mul(&features);
        for i in 0..gram.nrows() {
            gram[(i, i)] += self.lambda;
        }
        let resid = gram * &self.weights - features.tr_mul(&targets);
        resid.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// First index of the maximum; the first index wins ties.
fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `class_ids[argmax(x^T W)]`, smallest id on ties.
pub fn ridge_predict(model: &RidgeModel, x: &[f64]) -> Result<u32> {
    check_dim(model.weights.nrows(), x.len())?;
    let w = &model.weights;
    let best = argmax((0..w.ncols()).map(|c| w.column(c).iter().zip(x).map(|(a, b)| a * b).sum()));
    Ok(model.class_ids[best])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcmModel {
    pub means: Vec<Vec<f64>>,
    pub class_ids: Vec<u32>,
}

pub fn ncm_fit(ep: &Episode) -> Result<NcmModel> {
    let means = ep
        .support
        .iter()
        .map(|s| class_stats(s).map(|st| st.mean))
        .collect::<Result<Vec<_>>>()?;
    Ok(NcmModel {
        means,
        class_ids: ep.class_ids.clone(),
    })
}

/// Class of the nearest mean, smallest id on ties.
pub fn ncm_predict(model: &NcmModel, x: &[f64]) -> Result<u32> {
    check_dim(model.means[0].len(), x.len())?;
    Ok(model.class_ids[nearest(&model.means, x)])
}

/// Index of the nearest of `centers`, first index on ties.
pub(crate) fn nearest<C: AsRef<[f64]>>(centers: &[C], x: &[f64]) -> usize {
    argmax(centers.iter().map(|m| -sq_dist(m.as_ref(), x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    Ridge { alpha: f64, exponent: LambdaExponent },
    Ncm,
}

impl Head {
    pub fn name(&self) -> &'static str {
        match self {
            Head::Ridge { .. } => "ridge",
            Head::Ncm => "ncm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedHead {
    Ridge(RidgeModel),
    Ncm(NcmModel),
}

impl FittedHead {
    pub fn fit(head: &Head, ep: &Episode) -> Result<Self> {
        match *head {
            Head::Ridge { alpha, exponent } => ridge_fit(ep, alpha, exponent).map(FittedHead::Ridge),
            Head::Ncm => ncm_fit(ep).map(FittedHead::Ncm),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        match self {
            FittedHead::Ridge(m) => ridge_predict(m, x),
            FittedHead::Ncm(m) => ncm_predict(m, x),
        }
    }
}

/// Fraction of the episode's queries the fitted head labels correctly.
pub fn query_accuracy(model: &FittedHead, ep: &Episode) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for (label, queries) in ep.class_ids.iter().zip(&ep.query) {
        for x in queries {
            if model.predict(x)? == *label {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(correct as f64 / total as f64)
}

/// Samples episode `episode_index`, fits `head` on its support and scores
/// the queries.
pub fn episode_accuracy(
    partition: &ClassPartition,
    cfg: &EpisodeConfig,
    head: &Head,
    episode_index: u64,
) -> Result<f64> {
    let ep = sample_episode(partition, cfg, episode_index)?;
    let model = FittedHead::fit(head, &ep)?;
    query_accuracy(&model, &ep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub head: Head,
    pub config: EpisodeConfig,
    pub mean_accuracy: f64,
    /// `1.96 * sd / sqrt(episodes)` with the sample (n - 1) standard deviation.
    pub ci95_halfwidth: f64,
    pub per_episode: Vec<f64>,
}

impl AccuracyReport {
    pub fn from_episodes(head: Head, config: EpisodeConfig, per_episode: Vec<f64>) -> Self {
        let n = per_episode.len() as f64;
        let mean = per_episode.iter().sum::<f64>() / n;
        let sd = if per_episode.len() > 1 {
            libm::sqrt(per_episode.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0))
        } else {
            0.0
        };
        Self {
            head,
            config,
            mean_accuracy: mean,
            ci95_halfwidth: 1.96 * sd / libm::sqrt(n),
            per_episode,
        }
    }
}

/// Serial evaluation over episodes `0..cfg.episodes`.
pub fn evaluate(partition: &ClassPartition, cfg: &EpisodeConfig, head: &Head) -> Result<AccuracyReport> {
    cfg.check_partition(partition)?;
    let per_episode = (0..cfg.episodes as u64)
        .map(|i| episode_accuracy(partition, cfg, head, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(AccuracyReport::from_episodes(*head, *cfg, per_episode))
}
