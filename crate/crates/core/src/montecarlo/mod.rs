//! Trial orchestration, power-law fits and the random-walk exponent
//! experiments.
//!
//! Every trial gets its own ChaCha8 stream keyed by a splitmix64 hash of
//! `(master_seed, trial_index)`, and results are collected by index before
//! reduction, so estimates do not depend on the worker count.

mod exponents;
mod gof;

pub use exponents::{
    disconnection_experiment, disconnection_indicator, nonintersection_experiment,
    nonintersection_first_meeting, nonintersection_indicator, trace_disconnects,
};
pub use gof::{
    chi_square_gof, chi_square_homogeneity, kolmogorov_q, ks_one_sample, ks_two_sample, GofResult,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::conformal::ComplexPoint;
use crate::error::{Error, Result};

pub type TrialRng = ChaCha8Rng;

/// The splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for trial `index` of a run with `master` seed.
#[inline]
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

/// Run `f` on `pool_size` workers (0 = rayon default) and return the
/// per-trial outputs in index order.
pub fn map_trials<T, F>(trials: u64, master_seed: u64, parallelism: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut TrialRng) -> T + Sync + Send,
{
    let body = || {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(master_seed, i);
                f(i, &mut rng)
            })
            .collect::<Vec<T>>()
    };
    if parallelism == 0 {
        body()
    } else {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
        {
            Ok(pool) => pool.install(body),
            Err(_) => body(),
        }
    }
}

/// Named scalar estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub name: String,
    pub scale: f64,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Estimate plus run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub record: EstimateRecord,
    /// Trials whose experiment returned an error; they are excluded.
    pub failures: u64,
    pub first_failure: Option<String>,
    /// Standard error recomputed from 20 contiguous batch means.
    pub batch_stderr: f64,
}

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error. Bernoulli samples use `sqrt(p(1-p)/n)`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    if xs.iter().all(|&x| x == 0.0 || x == 1.0) {
        return (mean, (mean * (1.0 - mean) / n).sqrt());
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error from contiguous batch means.
pub fn batch_stderr(xs: &[f64], batches: usize) -> f64 {
    if xs.len() < 2 * batches || batches < 2 {
        return f64::NAN;
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| pairwise_sum(&xs[b * size..(b + 1) * size]) / size as f64)
        .collect();
    let m = pairwise_sum(&means) / batches as f64;
    let dev: Vec<f64> = means.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&dev) / (batches as f64 - 1.0) / batches as f64).sqrt()
}

/// Monte Carlo estimate of the mean of a per-trial statistic.
pub fn run_trials<F>(
    name: &str,
    scale: f64,
    trials: u64,
    master_seed: u64,
    parallelism: usize,
    experiment: F,
) -> Result<RunReport>
where
    F: Fn(u64, &mut TrialRng) -> Result<f64> + Sync + Send,
{
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let outs = map_trials(trials, master_seed, parallelism, experiment);
    let mut values = Vec::with_capacity(outs.len());
    let mut failures = 0;
    let mut first_failure = None;
    for o in outs {
        match o {
            Ok(v) => values.push(v),
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Invalid(format!(
            "all {trials} trials failed: {}",
            first_failure.unwrap_or_default()
        )));
    }
    let (value, stderr) = mean_stderr(&values);
    Ok(RunReport {
        record: EstimateRecord {
            name: name.to_string(),
            scale,
            value,
            stderr,
            trials: values.len() as u64,
            seed: master_seed,
        },
        failures,
        first_failure,
        batch_stderr: batch_stderr(&values, 20),
    })
}

/// Weighted least-squares line through `(log scale, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// `(log scale, log value, weight)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl PowerLawFit {
    /// The `{slope, intercept, slope_stderr}` object written to fit files.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
        })
    }
}

/// Fit `value ~ C scale^slope` with weights `(value/stderr)^2`.
///
/// When any record has zero standard error, all points get equal weight
/// and the slope error comes from the residuals.
pub fn fit_power_law(records: &[EstimateRecord]) -> Result<PowerLawFit> {
    if records.len() < 3 {
        return Err(Error::Invalid(
            "a power-law fit needs at least 3 points".into(),
        ));
    }
    if records.iter().any(|r| !(r.value > 0.0) || !(r.scale > 0.0)) {
        return Err(Error::Invalid(
            "power-law fits need positive scales and values".into(),
        ));
    }
    let exact = records.iter().any(|r| r.stderr == 0.0);
    let pts: Vec<(f64, f64, f64)> = records
        .iter()
        .map(|r| {
            let w = if exact {
                1.0
            } else {
                let s = r.stderr / r.value;
                1.0 / (s * s)
            };
            (r.scale.ln(), r.value.ln(), w)
        })
        .collect();
    let s: f64 = pts.iter().map(|p| p.2).sum();
    let sx: f64 = pts.iter().map(|p| p.2 * p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.2 * p.1).sum();
    let (mx, my) = (sx / s, sy / s);
    // Centered sums keep the slope exact under a common rescaling of scales.
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("all scales coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if exact {
        let rss: f64 = pts
            .iter()
            .map(|p| {
                let r = p.1 - intercept - slope * p.0;
                r * r
            })
            .sum();
        (rss / (pts.len() as f64 - 2.0) / sxx).sqrt()
    } else {
        (1.0 / sxx).sqrt()
    };
    Ok(PowerLawFit {
        slope,
        intercept,
        slope_stderr,
        points: pts,
    })
}

/// Fit, then refit without the smallest scale if its standardized
/// residual exceeds 3 (finite-size correction). Needs 4+ records to drop.
pub fn fit_power_law_robust(records: &[EstimateRecord]) -> Result<PowerLawFit> {
    let fit = fit_power_law(records)?;
    if records.len() < 4 || records.iter().any(|r| r.stderr == 0.0) {
        return Ok(fit);
    }
    let (idx, r) = records
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.scale.total_cmp(&b.1.scale))
        .expect("non-empty");
    let p = fit.points[idx];
    let resid = (p.1 - fit.intercept - fit.slope * p.0) * p.2.sqrt();
    if resid.abs() > 3.0 && r.stderr > 0.0 {
        let rest: Vec<EstimateRecord> = records
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, r)| r.clone())
            .collect();
        return fit_power_law(&rest);
    }
    Ok(fit)
}

/// Box-counting dimension: the negated slope of `N(eps)` against `eps`.
pub fn box_dimension_estimate(points: &[ComplexPoint], scales: &[f64]) -> Result<PowerLawFit> {
    if points.len() < 1000 {
        return Err(Error::Invalid(
            "box counting needs at least 1000 points".into(),
        ));
    }
    if scales.len() < 3 || scales.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Invalid(
            "box counting needs 3 positive scales".into(),
        ));
    }
    let records: Vec<EstimateRecord> = scales
        .iter()
        .map(|&eps| {
            let boxes: FxHashSet<(i64, i64)> = points
                .iter()
                .map(|z| ((z.re / eps).floor() as i64, (z.im / eps).floor() as i64))
                .collect();
            EstimateRecord {
                name: "box_count".into(),
                scale: eps,
                value: boxes.len() as f64,
                stderr: 0.0,
                trials: 1,
                seed: 0,
            }
        })
        .collect();
    fit_power_law(&records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn rec(scale: f64, value: f64, stderr: f64) -> EstimateRecord {
        EstimateRecord {
            name: "t".into(),
            scale,
            value,
            stderr,
            trials: 1,
            seed: 0,
        }
    }

    #[test]
    fn constant_statistic() {
        let r = run_trials("one", 1.0, 100, 7, 1, |_, _| Ok(1.0)).unwrap();
        assert_eq!(r.record.value, 1.0);
        assert_eq!(r.record.stderr, 0.0);
    }

    #[test]
    fn fair_coin() {
        let r = run_trials("coin", 1.0, 10_000, 11, 1, |_, rng| {
            Ok(if rng.random::<bool>() { 1.0 } else { 0.0 })
        })
        .unwrap();
        assert!((r.record.value - 0.5).abs() < 3.0 * 0.005);
        assert_relative_eq!(
            r.record.stderr,
            (r.record.value * (1.0 - r.record.value) / 1e4).sqrt()
        );
        // Batch-split variance agrees with the Bernoulli formula.
        assert!((r.batch_stderr / r.record.stderr - 1.0).abs() < 0.6);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let f = |_: u64, rng: &mut TrialRng| Ok(rng.random::<f64>().sqrt());
        let a = run_trials("x", 1.0, 5000, 99, 1, f).unwrap();
        let b = run_trials("x", 1.0, 5000, 99, 8, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.record.value.to_bits(), b.record.value.to_bits());
    }

    #[test]
    fn failures_are_counted() {
        let r = run_trials("f", 1.0, 10, 1, 1, |i, _| {
            if i % 5 == 0 {
                Err(Error::Invalid("bad".into()))
            } else {
                Ok(1.0)
            }
        })
        .unwrap();
        assert_eq!(r.failures, 2);
        assert_eq!(r.record.trials, 8);
    }

    #[test]
    fn exact_power_law() {
        let recs: Vec<_> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&s: &f64| rec(s, s.powi(-2), 0.0))
            .collect();
        let f = fit_power_law(&recs).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        let flat: Vec<_> = [1.0, 2.0, 4.0].iter().map(|&s| rec(s, 3.0, 0.1)).collect();
        assert!(fit_power_law(&flat).unwrap().slope.abs() < 1e-15);
        assert!(
            fit_power_law(&[rec(1.0, -1.0, 0.1), rec(2.0, 1.0, 0.1), rec(3.0, 1.0, 0.1)]).is_err()
        );
    }

    #[test]
    fn synthetic_noisy_quarter_law() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = trial_rng(3, 0);
        let recs: Vec<_> = [4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&s: &f64| {
                let v = s.powf(-0.25);
                let se = 0.01 * v;
                let z: f64 = StandardNormal.sample(&mut rng);
                rec(s, v + se * z, se)
            })
            .collect();
        let f = fit_power_law(&recs).unwrap();
        assert!((f.slope + 0.25).abs() < 3.0 * f.slope_stderr, "{f:?}");
    }

    #[test]
    fn rescaling_scales_keeps_slope() {
        let recs = vec![
            rec(2.0, 0.5, 0.01),
            rec(4.0, 0.41, 0.01),
            rec(8.0, 0.36, 0.02),
        ];
        let scaled: Vec<_> = recs
            .iter()
            .map(|r| rec(r.scale * 8.0, r.value, r.stderr))
            .collect();
        let (a, b) = (
            fit_power_law(&recs).unwrap(),
            fit_power_law(&scaled).unwrap(),
        );
        assert!((a.slope - b.slope).abs() < 1e-14);
    }

    #[test]
    fn box_dimension_of_segment_and_square() {
        let seg: Vec<ComplexPoint> = (0..5000)
            .map(|i| ComplexPoint::new(i as f64 / 5000.0, 0.3))
            .collect();
        let scales = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let f = box_dimension_estimate(&seg, &scales).unwrap();
        assert!((-f.slope - 1.0).abs() < 0.05);
        let sq: Vec<ComplexPoint> = (0..200 * 200)
            .map(|i| ComplexPoint::new((i % 200) as f64 / 200.0, (i / 200) as f64 / 200.0))
            .collect();
        let f = box_dimension_estimate(&sq, &scales).unwrap();
        assert!((-f.slope - 2.0).abs() < 0.05);
    }
}
