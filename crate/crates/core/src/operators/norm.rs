use serde::Serialize;

use super::{DifferenceMap, LinearMap, MismatchedPair};
use crate::vecops::{self, gaussian_vec, seeded_rng};

/// Result of a power-method norm estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when `max_iter` was exhausted before the relative change fell
    /// below the tolerance; `value` is then the last iterate's estimate.
    pub converged: bool,
}

/// Spectral norm `‖M‖` by power iteration on `MᵀM` from a seeded Gaussian
/// start vector.
///
/// Each step evaluates the Rayleigh quotient `⟨v, MᵀMv⟩` for the unit vector
/// `v`; iteration stops once two consecutive quotients agree to `tol`
/// relative.
pub fn estimate_operator_norm(
    map: &dyn LinearMap,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> NormEstimate {
    assert!(map.rows() >= 1 && map.cols() >= 1, "empty operator");
    assert!(tol > 0.0, "tolerance must be positive");

    let mut rng = seeded_rng(seed);
    let mut v = gaussian_vec(&mut rng, map.cols());
    let nv = vecops::norm(&v);
    v.iter_mut().for_each(|e| *e /= nv);

    let mut mv = vec![0.0; map.rows()];
    let mut w = vec![0.0; map.cols()];
    let mut lambda = 0.0_f64;
    for it in 1..=max_iter.max(1) {
        map.apply_into(&v, &mut mv);
        map.apply_transpose_into(&mv, &mut w);
        let rayleigh = vecops::dot(&v, &w).max(0.0);
        let nw = vecops::norm(&w);
        if nw == 0.0 {
            return NormEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let change = (rayleigh - lambda).abs();
        lambda = rayleigh;
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
        if it > 1 && change <= tol * lambda {
            return NormEstimate {
                value: lambda.sqrt(),
                iterations: it,
                converged: true,
            };
        }
    }
    NormEstimate {
        value: lambda.sqrt(),
        iterations: max_iter,
        converged: false,
    }
}

/// `‖A − V‖` via the power method on the difference map. The value is
/// written once into the pair's cache; later calls return the cached value.
pub fn mismatch_norm(pair: &MismatchedPair, tol: f64, seed: u64) -> f64 {
    *pair.mismatch.get_or_init(|| {
        let diff = DifferenceMap::new(pair.forward(), pair.surrogate());
        estimate_operator_norm(&diff, tol, 10_000, seed).value
    })
}

/// Largest normalized adjointness gap
/// `|⟨Mx, y⟩ − ⟨x, Mᵀy⟩| / (‖x‖‖y‖)` over `trials` seeded Gaussian probes.
pub fn adjointness_defect(map: &dyn LinearMap, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1);
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let x = gaussian_vec(&mut rng, map.cols());
        let y = gaussian_vec(&mut rng, map.rows());
        let lhs = vecops::dot(&map.apply(&x), &y);
        let rhs = vecops::dot(&x, &map.apply_transpose(&y));
        let gap = (lhs - rhs).abs() / (vecops::norm(&x) * vecops::norm(&y));
        worst = worst.max(gap);
    }
    worst
}
