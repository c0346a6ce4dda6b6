//! Moment-method null controls and the randomized cost.
//!
//! For `y⁰ = Σ a_j φ_j` and a domain `ω`, the control
//! `u(t,x) = −Σ_j c_j θ_j(T−t) φ_j(x)` with `c_j = a_j e^{−λ_j T}/∫_ω φ_j²`
//! solves every moment equation `∫₀^T∫_ω e^{−λ_j(T−t)} u φ_j = −a_j e^{−λ_j T}`
//! for `j ≤ M`, which steers the represented modes to zero at time `T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::biortho::BiorthogonalFamily;
use crate::error::{domain, Error, Result};
use crate::geometry::IntervalUnion;
use crate::spectrum::{mode_cross, mode_mass};

/// Fourier coefficients `a_j` of `y⁰` in the orthonormal sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatum {
    coeffs: Vec<f64>,
}

impl InitialDatum {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|a| !a.is_finite()) {
            return domain("initial datum coefficients must be finite");
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `a_j`, 1-based; zero beyond the stored coefficients.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j - 1).copied().unwrap_or(0.0)
    }

    /// `‖y⁰‖_{L²}`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Parses `j,a_j` rows; a header line and `#` comments are skipped and
    /// missing indices are zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected `j,a_j`, got `{line}`",
                    lineno + 1
                )));
            }
            let (Ok(j), Ok(a)) = (fields[0].parse::<usize>(), fields[1].parse::<f64>()) else {
                if pairs.is_empty() && lineno == 0 {
                    continue;
                }
                return Err(Error::Parse(format!("line {}: cannot parse `{line}`", lineno + 1)));
            };
            if j == 0 {
                return Err(Error::Parse(format!("line {}: mode index starts at 1", lineno + 1)));
            }
            pairs.push((j, a));
        }
        let len = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let mut coeffs = vec![0.0; len];
        for (j, a) in pairs {
            coeffs[j - 1] = a;
        }
        Self::new(coeffs)
    }
}

/// Control `u(t,x) = −Σ_j c_j θ_j(T−t) φ_j(x)` restricted to `ω`.
#[derive(Debug, Clone)]
pub struct MomentControl<'a> {
    omega: IntervalUnion,
    coeffs: Vec<f64>,
    bio: &'a BiorthogonalFamily,
}

impl<'a> MomentControl<'a> {
    pub fn omega(&self) -> &IntervalUnion {
        &self.omega
    }

    /// `c_j`, one per exponential of the family.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn family(&self) -> &BiorthogonalFamily {
        self.bio
    }

    /// `u(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        let s = self.bio.horizon() - t;
        let mut acc = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                let phi = (2.0 / std::f64::consts::PI).sqrt() * ((j + 1) as f64 * x).sin();
                acc += c * self.bio.theta(j + 1, s)? * phi;
            }
        }
        Ok(-acc)
    }
}

pub fn synthesize_control<'a>(
    omega: &IntervalUnion,
    y0: &InitialDatum,
    bio: &'a BiorthogonalFamily,
) -> Result<MomentControl<'a>> {
    let m = bio.size();
    if y0.coeffs().len() > m {
        return Err(Error::Size(format!(
            "initial datum has {} modes but the family only {m}",
            y0.coeffs().len()
        )));
    }
    let t = bio.horizon();
    let mut coeffs = vec![0.0; m];
    for (j, c) in coeffs.iter_mut().enumerate() {
        let a = y0.coeff(j + 1);
        if a == 0.0 {
            continue;
        }
        let mass = mode_mass(j + 1, omega);
        if !(mass > 0.0) {
            return Err(Error::UncontrollableMode { mode: j + 1 });
        }
        *c = a * (-bio.lambda(j + 1) * t).exp() / mass;
    }
    Ok(MomentControl {
        omega: omega.clone(),
        coeffs,
        bio,
    })
}

fn cross_matrix(omega: &IntervalUnion, m: usize) -> Vec<f64> {
    let mut w = vec![0.0; m * m];
    for j in 0..m {
        for k in j..m {
            let v = mode_cross(j + 1, k + 1, omega);
            w[j * m + k] = v;
            w[k * m + j] = v;
        }
    }
    w
}

/// `‖χ_ω u‖²_{L²((0,T)×(0,π))} = Σ_{j,k} c_j c_k (G⁻¹)_{jk} ∫_ω φ_j φ_k`.
pub fn control_energy(ctrl: &MomentControl) -> Result<f64> {
    let w = cross_matrix(&ctrl.omega, ctrl.bio.size());
    ctrl.bio.quadratic_form(&ctrl.coeffs, &w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `y_k(T)` for `k = 1..=K_check`.
    pub terminal: Vec<f64>,
    pub energy: f64,
    /// `max_{k≤M} |y_k(T)|`.
    pub max_residual: f64,
    /// `max_{M<k≤K_check} |y_k(T)|`, zero when `K_check = M`.
    pub spillover: f64,
    /// `max_{j≤M} |∫∫ e^{−λ_j(T−t)} u φ_j + a_j e^{−λ_j T}|`.
    pub moment_residual: f64,
    pub datum_norm: f64,
}

/// Terminal coefficients under the control:
/// `y_k(T) = e^{−λ_k T} a_k − Σ_j c_j I_{kj} ∫_ω φ_j φ_k` with
/// `I_{kj} = ∫₀^T e^{−λ_k s} θ_j(s) ds`, which is `δ_{kj}` for `k ≤ M`.
pub fn simulate_terminal(
    omega: &IntervalUnion,
    y0: &InitialDatum,
    ctrl: &MomentControl,
    k_check: usize,
) -> Result<ResidualReport> {
    let bio = ctrl.bio;
    let m = bio.size();
    if k_check < m {
        return domain(format!("K_check = {k_check} must be at least M = {m}"));
    }
    let family = bio.family();
    let t = bio.horizon();
    let active: Vec<usize> = (0..m).filter(|&j| ctrl.coeffs[j] != 0.0).collect();
    let mut terminal = Vec::with_capacity(k_check);
    let mut moment_residual: f64 = 0.0;
    for k in 1..=k_check {
        let lambda = family.eigenvalue(k)?;
        let free = (-lambda * t).exp() * y0.coeff(k);
        let moments = if active.is_empty() {
            Vec::new()
        } else {
            bio.time_moments(lambda)
        };
        let forced: f64 = active
            .iter()
            .map(|&j| ctrl.coeffs[j] * moments[j] * mode_cross(j + 1, k, omega))
            .sum();
        let y = free - forced;
        if k <= m {
            moment_residual = moment_residual.max((free - forced).abs());
        }
        terminal.push(y);
    }
    let max_residual = terminal[..m].iter().fold(0.0f64, |acc, y| acc.max(y.abs()));
    let spillover = terminal[m..].iter().fold(0.0f64, |acc, y| acc.max(y.abs()));
    Ok(ResidualReport {
        terminal,
        energy: control_energy(ctrl)?,
        max_residual,
        spillover,
        moment_residual,
        datum_norm: y0.norm(),
    })
}

/// `K(χ_ω) = (min_{j≤M} γ_j ∫_ω φ_j²)^{−1}`; `+∞` when some mass vanishes.
pub fn randomized_cost(omega: &IntervalUnion, bio: &BiorthogonalFamily) -> Result<f64> {
    let mut ln_min = f64::INFINITY;
    for j in 1..=bio.size() {
        ln_min = ln_min.min(bio.ln_gamma(j)? + mode_mass(j, omega).ln());
    }
    Ok((-ln_min).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `Σ_j a_j² e^{−2λ_j T} ‖θ_j‖² / ∫_ω φ_j²`.
    pub formula_value: f64,
}

/// Mean energy over sign-randomized data `Σ β_j a_j φ_j` with i.i.d.
/// Rademacher `β_j`; sample `i` draws from a stream seeded with `seed + i`.
pub fn monte_carlo_expectation(
    omega: &IntervalUnion,
    y0: &InitialDatum,
    bio: &BiorthogonalFamily,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if samples < 100 {
        return domain(format!("need at least 100 samples, got {samples}"));
    }
    let base = synthesize_control(omega, y0, bio)?;
    let m = bio.size();
    let w = cross_matrix(omega, m);
    let energies = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let c: Vec<f64> = base
                .coeffs
                .iter()
                .map(|&c| if rng.random::<bool>() { c } else { -c })
                .collect();
            bio.quadratic_form(&c, &w)
        })
        .collect::<Result<Vec<f64>>>()?;

    // Deviations from the first sample keep identical samples at zero variance.
    let n = samples as f64;
    let shift = energies[0];
    let (s1, s2) = energies
        .iter()
        .map(|e| e - shift)
        .fold((0.0, 0.0), |(s1, s2), d| (s1 + d, s2 + d * d));
    let variance = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);

    let t = bio.horizon();
    let formula_value = (1..=m)
        .map(|j| {
            let a = y0.coeff(j);
            if a == 0.0 {
                return 0.0;
            }
            a * a * (-2.0 * bio.lambda(j) * t).exp() * bio.norm_sq(j) / mode_mass(j, omega)
        })
        .sum();
    Ok(MonteCarloReport {
        samples,
        mean: shift + s1 / n,
        stderr: (variance / n).sqrt(),
        formula_value,
    })
}
