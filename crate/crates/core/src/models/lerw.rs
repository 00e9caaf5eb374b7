use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{domain, Error, Result};
use crate::lattice::{green_at, srw_path, LatticeDomain, LatticePath};

/// Chronological loop erasure: `L_0 = x_0`, and `L_{j+1} = x_{1+n_j}` where
/// `n_j` is the last visit to `L_j`.
pub fn loop_erase(path: &[usize]) -> LatticePath {
    if path.is_empty() {
        return Vec::new();
    }
    let mut last: FxHashMap<usize, usize> = FxHashMap::default();
    for (i, &v) in path.iter().enumerate() {
        last.insert(v, i);
    }
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        out.push(path[i]);
        i = last[&path[i]];
        if i + 1 >= path.len() {
            break;
        }
        i += 1;
    }
    out
}

pub const LERW_REJECTION_CAP: u64 = 1_000_000;

/// Loop-erased exit walk from `start`. With `condition` set, walks are
/// redrawn until they exit there. `reversed` indexes the result from the
/// boundary back to `start`.
pub fn sample_lerw<R: Rng + ?Sized>(
    d: &LatticeDomain,
    start: usize,
    absorbing: &[bool],
    rng: &mut R,
    condition: Option<usize>,
    reversed: bool,
) -> Result<LatticePath> {
    if let Some(y) = condition {
        if y >= d.len() || !absorbing[y] {
            return domain("conditioning vertex must be absorbing");
        }
    }
    for _ in 0..LERW_REJECTION_CAP {
        let walk = srw_path(d, start, absorbing, rng)?;
        if condition.is_some_and(|y| *walk.last().unwrap() != y) {
            continue;
        }
        let mut l = loop_erase(&walk);
        if reversed {
            l.reverse();
        }
        return Ok(l);
    }
    Err(Error::RejectionCap(LERW_REJECTION_CAP))
}

/// Exact law of the loop-erased exit walk by enumerating simple paths:
/// `P[L = w] = prod_j G(w_j, A + {w_0..w_{j-1}}) p(w_j, w_{j+1})`.
/// Meant for graphs with a handful of vertices.
pub fn lerw_exact_law(
    d: &LatticeDomain,
    start: usize,
    absorbing: &[bool],
) -> Result<Vec<(LatticePath, f64)>> {
    if start >= d.len() || absorbing.len() != d.len() {
        return domain("start or mask out of range");
    }
    if absorbing[start] {
        return Ok(vec![(vec![start], 1.0)]);
    }
    const MAX_PATHS: usize = 100_000;
    let mut out = Vec::new();
    let mut path = vec![start];
    let mut mask = absorbing.to_vec();
    fn rec(
        d: &LatticeDomain,
        absorbing: &[bool],
        path: &mut Vec<usize>,
        mask: &mut Vec<bool>,
        weight: f64,
        out: &mut Vec<(LatticePath, f64)>,
    ) -> Result<()> {
        let v = *path.last().unwrap();
        let g = green_at(d, v, mask)?;
        let deg = d.adjacency[v].len() as f64;
        mask[v] = true;
        for &w in &d.adjacency[v] {
            let p = weight * g / deg;
            if absorbing[w] {
                let mut done = path.clone();
                done.push(w);
                out.push((done, p));
                if out.len() > MAX_PATHS {
                    return domain("graph too large for enumeration");
                }
            } else if !mask[w] {
                path.push(w);
                rec(d, absorbing, path, mask, p, out)?;
                path.pop();
            }
        }
        mask[v] = false;
        Ok(())
    }
    rec(d, absorbing, &mut path, &mut mask, 1.0, &mut out)?;
    Ok(out)
}

/// Exact law conditioned on the exit vertex `y`.
pub fn lerw_conditioned_law(
    d: &LatticeDomain,
    start: usize,
    absorbing: &[bool],
    y: usize,
) -> Result<Vec<(LatticePath, f64)>> {
    let law: Vec<_> = lerw_exact_law(d, start, absorbing)?
        .into_iter()
        .filter(|(p, _)| *p.last().unwrap() == y)
        .collect();
    let z: f64 = law.iter().map(|(_, w)| w).sum();
    if z <= 0.0 {
        return domain("exit vertex has zero probability");
    }
    Ok(law.into_iter().map(|(p, w)| (p, w / z)).collect())
}

/// Total variation between an exact law and empirical samples.
pub fn path_law_tv(exact: &[(LatticePath, f64)], samples: &[LatticePath]) -> f64 {
    let mut freq: FxHashMap<&[usize], f64> = FxHashMap::default();
    let n = samples.len() as f64;
    for s in samples {
        *freq.entry(s.as_slice()).or_default() += 1.0 / n;
    }
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (p, w) in exact {
        let f = freq.get(p.as_slice()).copied().unwrap_or(0.0);
        covered += f;
        tv += (f - w).abs();
    }
    0.5 * (tv + (1.0 - covered).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{chi_square_gof, trial_rng};

    /// Square 1-2-3-4 with a pendant exit at 0 off vertex 1 and exit 5 off 3.
    fn small_graph() -> LatticeDomain {
        LatticeDomain::from_graph(
            6,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 1), (3, 5), (2, 4)],
            &[0, 5],
        )
        .unwrap()
    }

    #[test]
    fn simple_path_is_unchanged() {
        assert_eq!(loop_erase(&[1, 2, 3, 4]), vec![1, 2, 3, 4]);
        assert_eq!(loop_erase(&[7]), vec![7]);
    }

    #[test]
    fn single_loop_is_erased() {
        assert_eq!(loop_erase(&[0, 1, 0, 2]), vec![0, 2]);
        assert_eq!(loop_erase(&[0, 1, 2, 1, 3, 0, 4]), vec![0, 4]);
        assert_eq!(loop_erase(&[0, 1, 2, 3, 1, 4]), vec![0, 1, 4]);
    }

    #[test]
    fn exact_law_sums_to_one() {
        let d = small_graph();
        let law = lerw_exact_law(&d, 2, &d.absorbing).unwrap();
        let z: f64 = law.iter().map(|(_, w)| w).sum();
        assert!((z - 1.0).abs() < 1e-10, "{z}");
    }

    #[test]
    fn conditioned_law_matches_samples() {
        let d = small_graph();
        let exact = lerw_conditioned_law(&d, 2, &d.absorbing, 5).unwrap();
        let mut rng = trial_rng(5, 0);
        let samples: Vec<_> = (0..100_000)
            .map(|_| sample_lerw(&d, 2, &d.absorbing, &mut rng, Some(5), false).unwrap())
            .collect();
        assert!(path_law_tv(&exact, &samples) < 0.02);
    }

    #[test]
    fn markov_property_of_the_last_step() {
        // Given the last two vertices (5, 3), the rest is the walk stopped on A + {3}.
        let d = small_graph();
        let full = lerw_conditioned_law(&d, 2, &d.absorbing, 5).unwrap();
        let mut cond: FxHashMap<LatticePath, f64> = FxHashMap::default();
        for (p, w) in &full {
            if p[p.len() - 2] == 3 {
                *cond.entry(p[..p.len() - 1].to_vec()).or_default() += w;
            }
        }
        let z: f64 = cond.values().sum();
        let mut a = d.absorbing.clone();
        a[3] = true;
        let target = lerw_conditioned_law(&d, 2, &a, 3).unwrap();
        for (p, w) in &target {
            assert!((cond.get(p).copied().unwrap_or(0.0) / z - w).abs() < 1e-10);
        }
        assert_eq!(cond.len(), target.len());
        // And the sampled remainders agree with it.
        let mut rng = trial_rng(6, 0);
        let mut rest = Vec::new();
        while rest.len() < 100_000 {
            let p = sample_lerw(&d, 2, &d.absorbing, &mut rng, Some(5), false).unwrap();
            if p[p.len() - 2] == 3 {
                rest.push(p[..p.len() - 1].to_vec());
            }
        }
        assert!(path_law_tv(&target, &rest) < 0.02);
    }

    #[test]
    fn endpoint_law_is_the_exit_law() {
        let d = small_graph();
        let exit = crate::lattice::exit_distribution(&d, 2, &d.absorbing).unwrap();
        let mut rng = trial_rng(7, 0);
        let mut counts = [0u64; 2];
        for _ in 0..20_000 {
            let p = sample_lerw(&d, 2, &d.absorbing, &mut rng, None, false).unwrap();
            counts[(*p.last().unwrap() == 5) as usize] += 1;
        }
        assert!(
            chi_square_gof(&counts, &[exit[0], exit[5]])
                .unwrap()
                .p_value
                > 0.001
        );
    }

    #[test]
    fn single_exit_conditioning_is_vacuous() {
        let d = LatticeDomain::from_graph(3, &[(0, 1), (1, 2)], &[2]).unwrap();
        let mut rng = trial_rng(1, 0);
        let p = sample_lerw(&d, 0, &d.absorbing, &mut rng, Some(2), true).unwrap();
        assert_eq!(p, vec![2, 1, 0]);
    }

    #[test]
    fn impossible_endpoint_is_rejected() {
        let d = LatticeDomain::from_graph(3, &[(0, 1)], &[1, 2]).unwrap();
        let mut rng = trial_rng(1, 0);
        assert!(sample_lerw(&d, 0, &d.absorbing, &mut rng, Some(2), false).is_err());
    }
}
