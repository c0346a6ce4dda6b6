//! Optimal lumped controls `g(x) u(t)` with a fixed unit-norm profile.
//!
//! Maximizing `min_j γ_j g_j²` over `Σ g_j² = 1` is solved by equalization:
//! `g_j² = value/γ_j` with `value = (Σ_j 1/γ_j)^{−1}`.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::geometry::IntervalUnion;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LumpedProfile {
    /// Positive representative `g_j = sqrt(value/γ_j)`.
    pub g: Vec<f64>,
    pub value: f64,
}

pub fn solve_lumped(gamma: &[f64]) -> Result<LumpedProfile> {
    if gamma.is_empty() {
        return domain("lumped problem needs at least one weight");
    }
    if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return domain(format!("weight {g} is not finite and positive"));
    }
    let value = 1.0 / gamma.iter().map(|g| 1.0 / g).sum::<f64>();
    let g = gamma.iter().map(|gj| (value / gj).sqrt()).collect();
    Ok(LumpedProfile { g, value })
}

/// `min_j γ_j h_j²` for an arbitrary profile `h`.
pub fn profile_value(h: &[f64], gamma: &[f64]) -> f64 {
    h.iter()
        .zip(gamma)
        .map(|(h, g)| g * h * h)
        .fold(f64::INFINITY, f64::min)
}

/// `max_j |γ_j g_j² − value|`.
pub fn verify_equalization(profile: &LumpedProfile, gamma: &[f64]) -> f64 {
    profile
        .g
        .iter()
        .zip(gamma)
        .map(|(g, gamma)| (gamma * g * g - profile.value).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    /// `Σ_{j≤M} 1/γ_j`.
    pub partial: f64,
    /// `(1/γ_M)/(1/γ_{M−1})`.
    pub tail_ratio: f64,
    pub ok: bool,
}

pub fn summability_diagnostic(gamma: &[f64]) -> Result<SummabilityReport> {
    let m = gamma.len();
    if m < 3 {
        return domain(format!("summability check needs M ≥ 3, got {m}"));
    }
    let tail_ratio = gamma[m - 2] / gamma[m - 1];
    Ok(SummabilityReport {
        partial: gamma.iter().map(|g| 1.0 / g).sum(),
        tail_ratio,
        ok: tail_ratio < 1.0,
    })
}

/// Largest denominator accepted for endpoints `pπ/q`.
pub const MAX_DENOMINATOR: u64 = 64;
const RATIONAL_TOL: f64 = 1e-12;

/// `pπ/q` for `x` when such a multiple with `q ≤ 64` lies within 1e-12.
fn rational_multiple(x: f64) -> Option<f64> {
    let r = x / PI;
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (r * q as f64).round();
        ((r - p / q as f64).abs() <= RATIONAL_TOL).then(|| p * PI / q as f64)
    })
}

/// Smallest `j ≤ J_max` with `|∫_ω sin(jx) dx| ≤ 1e-12`, for a domain whose
/// endpoints are rational multiples of `π`.
pub fn rational_degeneracy(omega: &IntervalUnion, j_max: usize) -> Result<Option<usize>> {
    let mut snapped = Vec::with_capacity(omega.intervals().len());
    for &(a, b) in omega.intervals() {
        match (rational_multiple(a), rational_multiple(b)) {
            (Some(a), Some(b)) => snapped.push((a, b)),
            _ => {
                return domain(format!(
                    "interval ({a}, {b}) does not have endpoints pπ/q with q ≤ {MAX_DENOMINATOR}"
                ))
            }
        }
    }
    Ok((1..=j_max).find(|&j| {
        let jf = j as f64;
        let integral: f64 = snapped
            .iter()
            .map(|&(a, b)| ((jf * a).cos() - (jf * b).cos()) / jf)
            .sum();
        integral.abs() <= RATIONAL_TOL
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let p = solve_lumped(&[1.0, 1.0]).unwrap();
        assert!((p.value - 0.5).abs() < 1e-15);
        assert!(p.g.iter().all(|g| (g - 0.5f64.sqrt()).abs() < 1e-15));
        let p = solve_lumped(&[1.0, 3.0]).unwrap();
        assert!((p.value - 0.75).abs() < 1e-15);
        assert!((p.g[0].powi(2) - 0.75).abs() < 1e-15 && (p.g[1].powi(2) - 0.25).abs() < 1e-15);
        let p = solve_lumped(&[2.5]).unwrap();
        assert_eq!((p.value, p.g[0]), (2.5, 1.0));
        assert!(solve_lumped(&[1.0, 0.0]).is_err());
        assert!(solve_lumped(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn equalization_and_perturbation() {
        let gamma = [1.0, 3.0, 10.0];
        let p = solve_lumped(&gamma).unwrap();
        assert!(verify_equalization(&p, &gamma) <= 1e-12 * p.value);
        let mut h = p.g.clone();
        h[0] += 0.01;
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        h.iter_mut().for_each(|x| *x /= norm);
        let perturbed = LumpedProfile { g: h.clone(), value: p.value };
        assert!(verify_equalization(&perturbed, &gamma) > 0.0);
        assert!(profile_value(&h, &gamma) < p.value);
        // Uniform weights: equal up to the rounding of sqrt(1/2)².
        assert!(verify_equalization(&solve_lumped(&[1.0, 1.0]).unwrap(), &[1.0, 1.0]) <= 2e-16);
    }

    #[test]
    fn summability() {
        assert!(!summability_diagnostic(&[2.0; 5]).unwrap().ok);
        let r = summability_diagnostic(&[1.0, 10.0, 100.0]).unwrap();
        assert!(r.ok && (r.tail_ratio - 0.1).abs() < 1e-15);
        assert!(summability_diagnostic(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn rational_examples() {
        let half = IntervalUnion::new(vec![(0.0, PI / 2.0)]).unwrap();
        assert_eq!(rational_degeneracy(&half, 8).unwrap(), Some(4));
        assert_eq!(rational_degeneracy(&half, 3).unwrap(), None);
        assert_eq!(rational_degeneracy(&IntervalUnion::full(), 8).unwrap(), Some(2));
        let irrational = IntervalUnion::new(vec![(0.1, 0.7)]).unwrap();
        assert!(rational_degeneracy(&irrational, 8).is_err());
    }
}
