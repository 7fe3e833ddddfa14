//! Closed-form collapse and transfer bounds, and Monte Carlo checks of the
//! ones that can be simulated.
//!
//! The high-probability bounds over learned feature maps (sample-to-population
//! CDNV, source-to-target CDNV, ReLU concentration terms) are evaluated as
//! plain arithmetic over caller-supplied quantities. The nearest-mean error
//! bounds and the minimal-distance lower bound are additionally checked
//! against simulation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::fewshot::nearest;
use crate::linalg::sq_dist;
use crate::metrics::class_stats;
use crate::rng::stream_rng;
use crate::synth::{gaussian_point, simplex_etf_means};

fn nonneg(name: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, "must be finite and non-negative"))
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, "must be finite and positive"))
    }
}

fn open_unit(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::param(name, "must lie in (0, 1)"))
    }
}

fn at_least(name: &'static str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be at least {min}")))
    }
}

/// Population variance from the empirical one and the two concentration gaps:
/// `emp_var + eps2 + 2 ||mu|| eps1 + eps1^2`.
pub fn lemma1_variance_bound(emp_var: f64, eps1: f64, eps2: f64, pop_mean_norm: f64) -> Result<f64> {
    let emp_var = nonneg("emp_var", emp_var)?;
    let eps1 = nonneg("eps1", eps1)?;
    let eps2 = nonneg("eps2", eps2)?;
    let norm = nonneg("pop_mean_norm", pop_mean_norm)?;
    Ok(emp_var + eps2 + 2.0 * norm * eps1 + eps1 * eps1)
}

/// Inputs of the sample-to-population CDNV bound for one pair of classes.
/// The gaps are evaluated at confidence `delta / 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop1Inputs {
    pub empirical_cdnv: f64,
    pub eps1_i: f64,
    pub eps1_j: f64,
    pub eps2_i: f64,
    pub eps2_j: f64,
    pub mean_norm_i: f64,
    pub mean_norm_j: f64,
    pub pop_mean_dist: f64,
    pub emp_mean_dist: f64,
}

/// `(V_emp + B)(1 + A)^2` with `A = (eps1_i + eps1_j) / ||mu_i - mu_j||` and
/// `B` the averaged variance gap over `||mu_hat_i - mu_hat_j||^2`.
pub fn prop1_bound(inp: &Prop1Inputs) -> Result<f64> {
    let v = nonneg("empirical_cdnv", inp.empirical_cdnv)?;
    let pop = positive("pop_mean_dist", inp.pop_mean_dist)?;
    let emp = positive("emp_mean_dist", inp.emp_mean_dist)?;
    let gap_i = lemma1_variance_bound(0.0, inp.eps1_i, inp.eps2_i, inp.mean_norm_i)?;
    let gap_j = lemma1_variance_bound(0.0, inp.eps1_j, inp.eps2_j, inp.mean_norm_j)?;
    let a = (inp.eps1_i + inp.eps1_j) / pop;
    let b = 0.5 * (gap_i + gap_j) / (emp * emp);
    Ok((v + b) * (1.0 + a) * (1.0 + a))
}

/// Inputs of the source-to-target CDNV bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop2Inputs {
    pub avg_source_cdnv: f64,
    /// Smallest class-mean separation over the candidate maps.
    pub delta_fstar: f64,
    pub sup_var: f64,
    pub sup_feat_norm: f64,
    /// Number of source classes.
    pub l: usize,
    /// Expected Rademacher complexity of the (mean, variance) embedding.
    pub rademacher: f64,
    pub delta: f64,
}

pub fn prop2_bound(inp: &Prop2Inputs) -> Result<f64> {
    let avg = nonneg("avg_source_cdnv", inp.avg_source_cdnv)?;
    let d = positive("delta_fstar", inp.delta_fstar)?;
    let sup_var = nonneg("sup_var", inp.sup_var)?;
    let sup_norm = nonneg("sup_feat_norm", inp.sup_feat_norm)?;
    let l = at_least("l", inp.l, 2)? as f64;
    let rad = nonneg("rademacher", inp.rademacher)?;
    let delta = open_unit("delta", inp.delta)?;

    let complexity = (8.0 + 16.0 * sup_var / d) * libm::sqrt(2.0 * PI * libm::log(l)) * rad
        / ((l - 1.0) * d * d);
    let confidence = (1.0 + 4.0 * sup_norm / d) * 2.0 * libm::sqrt(libm::log(1.0 / delta)) * sup_var
        / (libm::sqrt(l) * d * d);
    Ok(avg + complexity + confidence)
}

/// Architecture and data-scale inputs of the ReLU-network bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluBoundInputs {
    /// Feature dimension.
    pub p: usize,
    /// Depth.
    pub q: usize,
    /// Number of source classes.
    pub l: usize,
    /// Samples in the class.
    pub m_c: usize,
    pub sup_x_norm: f64,
    pub spectral_complexity: f64,
    /// Spectral-complexity budget `M`.
    pub m_bound: f64,
    pub delta: f64,
}

impl ReluBoundInputs {
    fn check(&self) -> Result<()> {
        at_least("p", self.p, 1)?;
        at_least("q", self.q, 1)?;
        at_least("l", self.l, 1)?;
        at_least("m_c", self.m_c, 1)?;
        positive("sup_x_norm", self.sup_x_norm)?;
        nonneg("spectral_complexity", self.spectral_complexity)?;
        nonneg("m_bound", self.m_bound)?;
        Ok(())
    }
}

/// Mean-concentration gap of a ReLU feature map.
pub fn prop3_eps1(inp: &ReluBoundInputs) -> Result<f64> {
    inp.check()?;
    let delta = open_unit("delta", inp.delta)?;
    let (p, l) = (inp.p as f64, inp.l as f64);
    let c1 = inp.spectral_complexity + 1.0;
    let lead = p * c1 * inp.sup_x_norm / libm::sqrt(inp.m_c as f64);
    let bracket = 3.0 * libm::sqrt(inp.q as f64)
        + 2.0
        + libm::sqrt(libm::log(4.0 * p * l / delta) / 2.0)
        + libm::sqrt(libm::log(c1));
    Ok(lead * bracket)
}

/// Second-moment concentration gap of a ReLU feature map.
pub fn prop3_eps2(inp: &ReluBoundInputs) -> Result<f64> {
    inp.check()?;
    let delta = open_unit("delta", inp.delta)?;
    let l = inp.l as f64;
    let m = inp.m_bound;
    let lead = inp.p as f64 * m * m * inp.sup_x_norm * inp.sup_x_norm / libm::sqrt(inp.m_c as f64);
    let bracket = 6.0 * libm::sqrt(inp.q as f64)
        + 4.0
        + 3.0 * libm::sqrt(libm::log(4.0 * l / delta) / 2.0)
        + 3.0 * libm::sqrt(libm::log(inp.spectral_complexity + 1.0));
    Ok(lead * bracket)
}

/// Rademacher complexity of spectrally bounded ReLU maps over `l` classes:
/// `sqrt(l) (1.5 sqrt(q) + 1) M X (1 + 4 p M X)`.
pub fn prop4_rademacher_bound(inp: &ReluBoundInputs) -> Result<f64> {
    inp.check()?;
    let m = inp.m_bound;
    let x = inp.sup_x_norm;
    Ok(libm::sqrt(inp.l as f64) * (1.5 * libm::sqrt(inp.q as f64) + 1.0) * m * x
        * (1.0 + 4.0 * inp.p as f64 * m * x))
}

/// Nearest-mean error bound `16 (k - 1) (1/s + 1/n_c) avg_cdnv`, with
/// `s = p` for spherically symmetric classes and `s = 1` otherwise.
pub fn prop5_general_bound(k: usize, n_c: usize, avg_cdnv: f64, spherical_p: Option<usize>) -> Result<f64> {
    let k = at_least("k", k, 2)? as f64;
    let n_c = at_least("n_c", n_c, 1)? as f64;
    let avg = nonneg("avg_cdnv", avg_cdnv)?;
    let s = match spherical_p {
        Some(p) => at_least("spherical_p", p, 1)? as f64,
        None => 1.0,
    };
    Ok(16.0 * (k - 1.0) * (1.0 / s + 1.0 / n_c) * avg)
}

pub const GAUSSIAN_V_MAX_LIMIT: f64 = 1.0 / 16.0;

/// Spherical-Gaussian bound `3 (k - 1) exp(-p / (32 V)) / (5 V)^(p/2)`,
/// valid for `V <= 1/16`. Evaluated in log space.
pub fn prop5_gaussian_bound(k: usize, p: usize, v_max: f64) -> Result<f64> {
    let k = at_least("k", k, 2)? as f64;
    let p = at_least("p", p, 1)? as f64;
    let v = positive("v_max", v_max)?;
    if v > GAUSSIAN_V_MAX_LIMIT {
        return Err(Error::Precondition(format!(
            "v_max = {v} exceeds the 1/16 threshold of the Gaussian bound"
        )));
    }
    let log = libm::log(3.0 * (k - 1.0)) - p / (32.0 * v) - 0.5 * p * libm::log(5.0 * v);
    Ok(libm::exp(log))
}

/// Relaxed spherical-Gaussian bound, valid for `V <= gamma^2 n_c / 4`.
pub fn prop5_relaxed_bound(k: usize, p: usize, n_c: usize, v_max: f64, gamma: f64) -> Result<f64> {
    let k = at_least("k", k, 2)? as f64;
    let p = at_least("p", p, 1)? as f64;
    let n_c = at_least("n_c", n_c, 1)? as f64;
    let v = positive("v_max", v_max)?;
    let g = open_unit("gamma", gamma)?;
    let limit = g * g * n_c / 4.0;
    if v > limit {
        return Err(Error::Precondition(format!(
            "v_max = {v} exceeds gamma^2 n_c / 4 = {limit}"
        )));
    }
    let h = (1.0 - g) * (1.0 - g);
    let term1 = libm::sqrt(2.0 * v / (h * PI * p)) * libm::exp(-h * p / (4.0 * v));
    let ratio = n_c * g * g / (4.0 * v);
    let term2 = libm::exp(p * libm::log(ratio * E) - ratio * p);
    Ok((k - 1.0) * (term1 + term2))
}

/// Lower bound on the expected minimal pairwise distance of `n` uniform
/// points in `[0, 1]^p`: `D* (1 - 1/(p + 1))` with
/// `D* = (2 / (n (n - 1)))^(1/p) Gamma(p/2 + 1)^(1/p) / sqrt(pi)`.
pub fn lemma2_lower_bound(n: usize, p: usize) -> Result<f64> {
    let n = at_least("n", n, 2)? as f64;
    let p = at_least("p", p, 1)? as f64;
    let log_d = (libm::log(2.0) - libm::log(n * (n - 1.0)) + libm::lgamma(p / 2.0 + 1.0)) / p
        - 0.5 * libm::log(PI);
    Ok(libm::exp(log_d) * p / (p + 1.0))
}

/// Spherical class-conditionals `N(mean_c, total_variances[c] / p * I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClassModel {
    pub p: usize,
    pub means: Vec<Vec<f64>>,
    pub total_variances: Vec<f64>,
    /// Whether the spherical-symmetry bounds may be applied.
    pub spherical: bool,
}

impl GaussianClassModel {
    /// Regular-simplex means at unit pairwise distance, each class with
    /// total variance `v_max`, so that `V_max = v_max`.
    pub fn etf(k: usize, p: usize, v_max: f64) -> Result<Self> {
        let v = positive("v_max", v_max)?;
        let scale = 1.0 / libm::sqrt(2.0 * k as f64 / (k as f64 - 1.0));
        Ok(Self {
            p,
            means: simplex_etf_means(k, p, scale)?,
            total_variances: vec![v; k],
            spherical: true,
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<()> {
        at_least("p", self.p, 1)?;
        at_least("k", self.k(), 2)?;
        if self.total_variances.len() != self.k() {
            return Err(Error::param("total_variances", "must have one entry per class"));
        }
        for m in &self.means {
            if m.len() != self.p {
                return Err(Error::DimensionMismatch {
                    expected: self.p,
                    found: m.len(),
                });
            }
        }
        for &v in &self.total_variances {
            positive("total_variances", v)?;
        }
        for i in 0..self.k() {
            for j in 0..i {
                if sq_dist(&self.means[i], &self.means[j]) == 0.0 {
                    return Err(Error::Degenerate(format!("classes {j} and {i} share a mean")));
                }
            }
        }
        Ok(())
    }

    /// `max_{i != j} Var(P_i) / ||mu_i - mu_j||^2`.
    pub fn v_max(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.k() {
            for j in 0..self.k() {
                if i != j {
                    best = best.max(self.total_variances[i] / sq_dist(&self.means[i], &self.means[j]));
                }
            }
        }
        best
    }

    /// Average population CDNV over ordered pairs of distinct classes.
    pub fn avg_cdnv(&self) -> f64 {
        let k = self.k();
        let mut sum = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    sum += (self.total_variances[i] + self.total_variances[j])
                        / (2.0 * sq_dist(&self.means[i], &self.means[j]));
                }
            }
        }
        sum / (k * (k - 1)) as f64
    }

    pub fn equal_variances(&self) -> bool {
        let v0 = self.total_variances[0];
        self.total_variances.iter().all(|&v| v == v0)
    }

    /// All pairwise mean distances agree to 1e-9 relative.
    pub fn means_form_regular_simplex(&self) -> bool {
        let d0 = sq_dist(&self.means[0], &self.means[1]);
        (0..self.k()).all(|i| {
            (i + 1..self.k()).all(|j| (sq_dist(&self.means[i], &self.means[j]) - d0).abs() <= 1e-9 * d0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundDirection {
    /// The bound caps the estimate from above.
    Upper,
    /// The bound caps the estimate from below.
    Lower,
}

/// Outcome of checking a bound against a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckReport {
    pub bound_name: String,
    pub params: Vec<(&'static str, f64)>,
    pub bound_value: f64,
    /// Every bound that applied, by name; `bound_value` is their minimum.
    pub applicable: Vec<(String, f64)>,
    pub direction: BoundDirection,
    pub empirical_estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
    /// Upper: `estimate <= bound + 3 se`; lower: `estimate >= bound - 3 se`.
    pub satisfied: bool,
}

pub const MARGIN_STD_ERRORS: f64 = 3.0;

pub const MIN_TRIALS: usize = 100;

/// Sample mean and its standard error (sample sd over `sqrt(n)`).
pub fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

/// Grid of `gamma` values tried for the relaxed Gaussian bound.
pub fn relaxed_gamma_grid() -> impl Iterator<Item = f64> {
    (1..100).map(|i| i as f64 / 100.0)
}

/// Every nearest-mean error bound whose preconditions hold for `model`.
pub fn prop5_applicable_bounds(model: &GaussianClassModel, n_c: usize) -> Result<Vec<(String, f64)>> {
    model.validate()?;
    at_least("n_c", n_c, 1)?;
    let k = model.k();
    let avg = model.avg_cdnv();
    let mut out = vec![("prop5-general".to_string(), prop5_general_bound(k, n_c, avg, None)?)];
    if !model.spherical {
        return Ok(out);
    }
    out.push((
        "prop5-spherical".to_string(),
        prop5_general_bound(k, n_c, avg, Some(model.p))?,
    ));
    if model.equal_variances() && model.means_form_regular_simplex() {
        let v = model.v_max();
        if v <= GAUSSIAN_V_MAX_LIMIT {
            out.push(("prop5-gaussian".to_string(), prop5_gaussian_bound(k, model.p, v)?));
        }
        let relaxed = relaxed_gamma_grid()
            .filter(|g| v <= g * g * n_c as f64 / 4.0)
            .map(|g| prop5_relaxed_bound(k, model.p, n_c, v, g).map(|b| (g, b)))
            .collect::<Result<Vec<_>>>()?;
        if let Some((g, b)) = relaxed.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
            out.push((format!("prop5-relaxed(gamma={g})"), b));
        }
    }
    Ok(out)
}

/// One nearest-mean trial: fresh support sets of `n_c` points per class, a
/// query from a uniformly drawn class, and whether it is misclassified.
pub fn prop5_trial(model: &GaussianClassModel, n_c: usize, seed: u64, trial: u64) -> bool {
    let mut rng = stream_rng(seed, trial);
    let inv_p = 1.0 / model.p as f64;
    let sigmas: Vec<f64> = model.total_variances.iter().map(|v| libm::sqrt(v * inv_p)).collect();
    let mut support_means = Vec::with_capacity(model.k());
    let mut support = Vec::with_capacity(n_c);
    for (mean, &sigma) in model.means.iter().zip(&sigmas) {
        support.clear();
        for _ in 0..n_c {
            support.push(gaussian_point(&mut rng, mean, sigma));
        }
        support_means.push(class_stats(&support).expect("n_c >= 1").mean);
    }
    let label = rng.random_range(0..model.k());
    let query = gaussian_point(&mut rng, &model.means[label], sigmas[label]);
    nearest(&support_means, &query) != label
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::param("trials", format!("must be at least {MIN_TRIALS}")));
    }
    Ok(())
}

/// Builds the report from per-trial error indicators in trial order.
pub fn finish_prop5(
    model: &GaussianClassModel,
    n_c: usize,
    seed: u64,
    errors: &[bool],
) -> Result<BoundCheckReport> {
    let applicable = prop5_applicable_bounds(model, n_c)?;
    let (name, bound) = applicable
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("general bound always applies");
    let samples: Vec<f64> = errors.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect();
    let (estimate, se) = mean_and_std_error(&samples);
    Ok(BoundCheckReport {
        bound_name: name,
        params: vec![
            ("k", model.k() as f64),
            ("p", model.p as f64),
            ("n_c", n_c as f64),
            ("v_max", model.v_max()),
            ("avg_cdnv", model.avg_cdnv()),
        ],
        bound_value: bound,
        applicable,
        direction: BoundDirection::Upper,
        empirical_estimate: estimate,
        std_error: se,
        trials: errors.len(),
        seed,
        satisfied: estimate <= bound + MARGIN_STD_ERRORS * se,
    })
}

pub fn check_prop5_inputs(model: &GaussianClassModel, n_c: usize, trials: usize) -> Result<()> {
    model.validate()?;
    at_least("n_c", n_c, 1)?;
    check_trials(trials)
}

/// Serial Monte Carlo estimate of the nearest-mean error against the
/// tightest applicable bound.
pub fn verify_prop5_mc(
    model: &GaussianClassModel,
    n_c: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundCheckReport> {
    check_prop5_inputs(model, n_c, trials)?;
    let errors: Vec<bool> = (0..trials as u64).map(|t| prop5_trial(model, n_c, seed, t)).collect();
    finish_prop5(model, n_c, seed, &errors)
}

/// Minimal pairwise distance of `n` fresh uniform points in `[0, 1]^p`.
pub fn lemma2_trial(n: usize, p: usize, seed: u64, trial: u64) -> f64 {
    let mut rng = stream_rng(seed, trial);
    let points: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = &points[i * p..(i + 1) * p];
        for j in i + 1..n {
            best = best.min(sq_dist(a, &points[j * p..(j + 1) * p]));
        }
    }
    libm::sqrt(best)
}

pub fn check_lemma2_inputs(n: usize, p: usize, trials: usize) -> Result<()> {
    at_least("n", n, 2)?;
    at_least("p", p, 1)?;
    check_trials(trials)
}

pub fn finish_lemma2(n: usize, p: usize, seed: u64, distances: &[f64]) -> Result<BoundCheckReport> {
    let bound = lemma2_lower_bound(n, p)?;
    let (estimate, se) = mean_and_std_error(distances);
    Ok(BoundCheckReport {
        bound_name: "lemma2".to_string(),
        params: vec![("n", n as f64), ("p", p as f64)],
        bound_value: bound,
        applicable: vec![("lemma2".to_string(), bound)],
        direction: BoundDirection::Lower,
        empirical_estimate: estimate,
        std_error: se,
        trials: distances.len(),
        seed,
        satisfied: estimate >= bound - MARGIN_STD_ERRORS * se,
    })
}

pub fn verify_lemma2_mc(n: usize, p: usize, trials: usize, seed: u64) -> Result<BoundCheckReport> {
    check_lemma2_inputs(n, p, trials)?;
    let d: Vec<f64> = (0..trials as u64).map(|t| lemma2_trial(n, p, seed, t)).collect();
    finish_lemma2(n, p, seed, &d)
}
