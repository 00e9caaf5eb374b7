use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn chi_sq_tail(stat: f64, dof: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(dist.sf(stat))
}

/// Pearson chi-square test of `counts` against cell probabilities `probs`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<GofResult> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::Invalid(
            "need matching counts and probabilities, at least 2 cells".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    let psum: f64 = probs.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = total as f64 * p / psum;
        if e < 5.0 {
            return Err(Error::InsufficientCounts(format!(
                "expected count {e:.3} < 5"
            )));
        }
        stat += (c as f64 - e) * (c as f64 - e) / e;
    }
    let dof = (counts.len() - 1) as f64;
    Ok(GofResult {
        statistic: stat,
        dof,
        p_value: chi_sq_tail(stat, dof)?,
    })
}

/// Chi-square test that two count vectors come from the same distribution.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<GofResult> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Invalid(
            "count vectors must match, at least 2 cells".into(),
        ));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let n = na + nb;
    let mut stat = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        let (ea, eb) = (na * col / n, nb * col / n);
        if ea < 5.0 || eb < 5.0 {
            return Err(Error::InsufficientCounts("expected count below 5".into()));
        }
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = (a.len() - 1) as f64;
    Ok(GofResult {
        statistic: stat,
        dof,
        p_value: chi_sq_tail(stat, dof)?,
    })
}

/// Tail of the Kolmogorov distribution, `P[K > lambda]`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientCounts("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(GofResult {
        statistic: d,
        dof: n,
        p_value: ks_p(d, n),
    })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<GofResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientCounts("empty sample".into()));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(GofResult {
        statistic: d,
        dof: ne,
        p_value: ks_p(d, ne),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::trial_rng;
    use rand::Rng;

    #[test]
    fn uniform_counts_give_zero_statistic() {
        let r = chi_square_gof(&[100; 10], &[0.1; 10]).unwrap();
        assert!(r.statistic < 1e-20);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn skewed_counts_are_rejected() {
        let mut c = [0u64; 10];
        c[0] = 1000;
        assert!(chi_square_gof(&c, &[0.1; 10]).unwrap().p_value < 1e-6);
        assert!(chi_square_gof(&[1, 2], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn chi_square_p_values_are_uniform_under_the_null() {
        let mut rng = trial_rng(5, 0);
        let ps: Vec<f64> = (0..1000)
            .map(|_| {
                let mut c = [0u64; 5];
                for _ in 0..500 {
                    c[rng.random_range(0..5)] += 1;
                }
                chi_square_gof(&c, &[0.2; 5]).unwrap().p_value
            })
            .collect();
        // Discreteness of the statistic makes the p-values slightly lumpy; KS still accepts.
        assert!(ks_one_sample(&ps, |x| x.clamp(0.0, 1.0)).unwrap().p_value > 0.001);
    }

    #[test]
    fn ks_two_sample_detects_shift() {
        let mut rng = trial_rng(6, 0);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.001);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // P[K > 1.36] ~ 0.05 and P[K > 1.63] ~ 0.01.
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn homogeneity() {
        assert!(
            chi_square_homogeneity(&[50, 50, 50], &[50, 50, 50])
                .unwrap()
                .p_value
                > 0.999
        );
        assert!(
            chi_square_homogeneity(&[100, 10, 50], &[10, 100, 50])
                .unwrap()
                .p_value
                < 1e-6
        );
    }
}
