//! Spectral families on `Ω = (0, π)` with Dirichlet sine eigenfunctions.
//!
//! Every family uses the L²-normalized eigenfunctions
//! `φ_j(x) = sqrt(2/π)·sin(jx)`; only the eigenvalue law differs.
//! [`FamilyKind::SinePowerLaw`] is a *weight model*: it pairs a
//! `K·(j + a)^β` eigenvalue law with sine eigenfunctions in order to exercise
//! the growth of the biorthogonal weights. The Sturm–Liouville operators
//! behind such laws generally have other eigenfunctions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::geometry::IntervalUnion;

/// Eigenvalue law of a family.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `λ_j = j^(2α)`: fractional powers of the Dirichlet Laplacian.
    SineFractional { alpha: f64 },
    /// `λ_j = K·(j + a)^β`.
    SinePowerLaw { k: f64, a: f64, beta: f64 },
    /// A finite, user-supplied strictly increasing positive sequence.
    ExplicitReal(Vec<f64>),
}

/// Eigenvalues and orthonormal eigenfunctions on `(0, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFamily {
    kind: FamilyKind,
}

impl SpectralFamily {
    pub fn new(kind: FamilyKind) -> Result<Self> {
        match &kind {
            FamilyKind::SineFractional { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return domain(format!("alpha = {alpha} must be positive"));
                }
            }
            FamilyKind::SinePowerLaw { k, a, beta } => {
                if !(k.is_finite() && *k > 0.0) {
                    return domain(format!("K = {k} must be positive"));
                }
                if !(a.is_finite() && *a >= 0.0) {
                    return domain(format!("a = {a} must be nonnegative"));
                }
                if !(beta.is_finite() && *beta > 1.0) {
                    return domain(format!("beta = {beta} must exceed 1"));
                }
            }
            FamilyKind::ExplicitReal(lambda) => {
                if lambda.is_empty() {
                    return domain("explicit eigenvalue list is empty");
                }
                if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return domain("explicit eigenvalues must be finite and positive");
                }
                if lambda.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("explicit eigenvalues must be strictly increasing");
                }
            }
        }
        Ok(Self { kind })
    }

    /// The Dirichlet Laplacian, `λ_j = j²`.
    pub fn heat() -> Self {
        Self {
            kind: FamilyKind::SineFractional { alpha: 1.0 },
        }
    }

    pub fn sine_fractional(alpha: f64) -> Result<Self> {
        Self::new(FamilyKind::SineFractional { alpha })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Number of represented modes, `None` when unbounded.
    pub fn max_modes(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::ExplicitReal(l) => Some(l.len()),
            _ => None,
        }
    }

    /// `λ_j` for `j ≥ 1`.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::Index {
                index: 0,
                max: self.max_modes().unwrap_or(usize::MAX),
            });
        }
        let jf = j as f64;
        Ok(match &self.kind {
            FamilyKind::SineFractional { alpha } => {
                if *alpha == 1.0 {
                    jf * jf
                } else {
                    jf.powf(2.0 * alpha)
                }
            }
            FamilyKind::SinePowerLaw { k, a, beta } => k * (jf + a).powf(*beta),
            FamilyKind::ExplicitReal(l) => *l.get(j - 1).ok_or(Error::Index {
                index: j,
                max: l.len(),
            })?,
        })
    }

    /// `λ_1, …, λ_m`.
    pub fn eigenvalues(&self, m: usize) -> Result<Vec<f64>> {
        (1..=m).map(|j| self.eigenvalue(j)).collect()
    }

    /// True when `λ_j = j²` for every represented `j ≤ up_to`.
    pub fn is_heat(&self, up_to: usize) -> bool {
        match &self.kind {
            FamilyKind::SineFractional { alpha } => *alpha == 1.0,
            FamilyKind::SinePowerLaw { .. } => false,
            FamilyKind::ExplicitReal(l) => {
                l.len() >= up_to
                    && l.iter()
                        .take(up_to)
                        .enumerate()
                        .all(|(i, &v)| v == ((i + 1) * (i + 1)) as f64)
            }
        }
    }

    /// `φ_j(x) = sqrt(2/π)·sin(jx)`.
    pub fn eigenfunction(&self, j: usize, x: f64) -> f64 {
        (2.0 / PI).sqrt() * (j as f64 * x).sin()
    }

    /// `∫_ω φ_j²` in closed form.
    pub fn mode_mass(&self, j: usize, omega: &IntervalUnion) -> f64 {
        mode_mass(j, omega)
    }

    /// `∫_ω φ_j φ_k` in closed form.
    pub fn mode_cross(&self, j: usize, k: usize, omega: &IntervalUnion) -> f64 {
        mode_cross(j, k, omega)
    }

    /// Partial Müntz sum `Σ_{j≤J} 1/(λ_j − λ_1 + 1)` with the analytic verdict
    /// where one is known.
    pub fn muntz_diagnostic(&self, j_max: usize) -> Result<MuntzReport> {
        if j_max < 2 {
            return domain(format!("J_max = {j_max} must be at least 2"));
        }
        let terms = self.max_modes().map_or(j_max, |m| m.min(j_max));
        let shift = 1.0 - self.eigenvalue(1)?;
        let partial_sum = (1..=terms)
            .map(|j| self.eigenvalue(j).map(|l| 1.0 / (l + shift)))
            .sum::<Result<f64>>()?;
        let verdict = match &self.kind {
            FamilyKind::SineFractional { alpha } => {
                if 2.0 * alpha > 1.0 {
                    MuntzVerdict::Convergent
                } else {
                    MuntzVerdict::Divergent
                }
            }
            // β > 1 is enforced at construction.
            FamilyKind::SinePowerLaw { .. } => MuntzVerdict::Convergent,
            FamilyKind::ExplicitReal(_) => MuntzVerdict::Inconclusive,
        };
        Ok(MuntzReport {
            partial_sum,
            terms,
            verdict,
        })
    }
}

impl fmt::Display for SpectralFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FamilyKind::SineFractional { alpha } => write!(f, "sine-fractional:alpha={alpha}"),
            FamilyKind::SinePowerLaw { k, a, beta } => {
                write!(f, "sine-powerlaw:K={k},a={a},beta={beta}")
            }
            FamilyKind::ExplicitReal(l) => {
                let list: Vec<String> = l.iter().map(|v| v.to_string()).collect();
                write!(f, "explicit:lambda={}", list.join(","))
            }
        }
    }
}

/// Parses `sine-fractional:alpha=<f>`, `sine-powerlaw:K=<f>,a=<f>,beta=<f>`
/// or `explicit:lambda=<f>,<f>,...`.
impl FromStr for SpectralFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("family `{s}` lacks `name:params`")))?;
        let num = |key: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("family parameter {key}: {e}")))
        };
        match name.trim() {
            "sine-fractional" => {
                let (key, v) = params
                    .split_once('=')
                    .ok_or_else(|| Error::Parse("expected alpha=<float>".into()))?;
                if key.trim() != "alpha" {
                    return Err(Error::Parse(format!("unknown parameter `{key}`")));
                }
                Self::sine_fractional(num("alpha", v)?)
            }
            "sine-powerlaw" => {
                let (mut k, mut a, mut beta) = (None, None, None);
                for pair in params.split(',') {
                    let (key, v) = pair
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("expected key=value, got `{pair}`")))?;
                    let slot = match key.trim() {
                        "K" => &mut k,
                        "a" => &mut a,
                        "beta" => &mut beta,
                        other => return Err(Error::Parse(format!("unknown parameter `{other}`"))),
                    };
                    *slot = Some(num(key, v)?);
                }
                match (k, a, beta) {
                    (Some(k), Some(a), Some(beta)) => {
                        Self::new(FamilyKind::SinePowerLaw { k, a, beta })
                    }
                    _ => Err(Error::Parse("sine-powerlaw needs K, a and beta".into())),
                }
            }
            "explicit" => {
                let list = params
                    .trim()
                    .strip_prefix("lambda=")
                    .ok_or_else(|| Error::Parse("expected lambda=<list>".into()))?;
                let lambda = list
                    .split(',')
                    .map(|v| num("lambda", v))
                    .collect::<Result<Vec<_>>>()?;
                Self::new(FamilyKind::ExplicitReal(lambda))
            }
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MuntzVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuntzReport {
    pub partial_sum: f64,
    pub terms: usize,
    pub verdict: MuntzVerdict,
}

/// `(2/π) Σ_i [(b−a)/2 − (sin 2jb − sin 2ja)/(4j)]`.
///
/// The sine difference is evaluated as `2 cos(j(a+b)) sin(j(b−a))` to keep
/// short intervals accurate.
pub fn mode_mass(j: usize, omega: &IntervalUnion) -> f64 {
    let jf = j as f64;
    let sum: f64 = omega
        .intervals()
        .iter()
        .map(|&(a, b)| {
            let dsin = 2.0 * (jf * (a + b)).cos() * (jf * (b - a)).sin();
            0.5 * (b - a) - dsin / (4.0 * jf)
        })
        .sum();
    2.0 / PI * sum
}

/// `(2/π) ∫_ω sin(jx) sin(kx) dx` via product-to-sum antiderivatives.
pub fn mode_cross(j: usize, k: usize, omega: &IntervalUnion) -> f64 {
    if j == k {
        return mode_mass(j, omega);
    }
    let (lo, hi) = (j.min(k), j.max(k));
    let dm = (hi - lo) as f64;
    let sm = (hi + lo) as f64;
    // sin(nb) − sin(na) = 2 cos(n(a+b)/2) sin(n(b−a)/2)
    let dsin = |n: f64, a: f64, b: f64| 2.0 * (0.5 * n * (a + b)).cos() * (0.5 * n * (b - a)).sin();
    let sum: f64 = omega
        .intervals()
        .iter()
        .map(|&(a, b)| 0.5 * (dsin(dm, a, b) / dm - dsin(sm, a, b) / sm))
        .sum();
    2.0 / PI * sum
}

/// Lower bound `L − sin(Lπ)/π` on `∫_ω φ_j²` over every `ω` of measure `Lπ`.
pub fn mass_floor(fraction: f64) -> f64 {
    fraction - (fraction * PI).sin() / PI
}
