//! Truncated max-min actuator design.
//!
//! For weights `γ_1..γ_N` and a measure budget `Lπ`, the truncated value is
//! `J_N = max_ω min_{j≤N} γ_j ∫_ω φ_j²`. By the minimax theorem it equals
//! `min_{α∈S_N} B(α)` with `B(α) = max_ω Σ α_j γ_j ∫_ω φ_j²`, where the inner
//! maximizer is the bathtub set of `Σ α_j γ_j φ_j²`. `B` is convex with
//! gradient `v_j = γ_j ∫_{ω(α)} φ_j²`, and its Hessian is available in closed
//! form from the motion of the boundary points of `ω(α)`.
//!
//! The solver alternates projected subgradient steps (used to bring new modes
//! into the support) with Newton steps on the current support, which drive
//! the active mode values to equality.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::biortho::{build_biorthogonal, BiorthogonalFamily};
use crate::error::{domain, Error, Result};
use crate::geometry::{bathtub, IntervalUnion, ModeCombination};
use crate::spectrum::{mass_floor, mode_mass, SpectralFamily};

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_STEP_C: f64 = 0.5;
/// Modes with `α_j` above this belong to the active set.
pub const ACTIVE_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-2;
/// Default `M − N` when building weights for a truncation `N`.
pub const DEFAULT_M_OFFSET: usize = 8;
/// Relative gap at which Newton polishing stops early.
const POLISH_TOL: f64 = 1e-12;
/// Newton steps without improvement tolerated once `tol` is met.
const STALL_LIMIT: usize = 3;
const MAX_BRUTE_SUBSETS: u64 = 1_000_000;

/// Weights `γ_1..γ_M` (held as logarithms), a budget fraction `L` and a
/// truncation order `N ≤ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    fraction: f64,
    n: usize,
    ln_gamma: Vec<f64>,
}

impl DesignProblem {
    pub fn new(ln_gamma: Vec<f64>, fraction: f64, n: usize) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return domain(format!("measure fraction L = {fraction} must lie in (0, 1)"));
        }
        if n == 0 || n > ln_gamma.len() {
            return domain(format!(
                "truncation N = {n} must lie in 1..={}",
                ln_gamma.len()
            ));
        }
        if ln_gamma.iter().any(|g| !g.is_finite()) {
            return domain("log-weights must be finite");
        }
        Ok(Self {
            fraction,
            n,
            ln_gamma,
        })
    }

    /// Uses `ln γ_j` for every `j ≤ M` of the family.
    pub fn from_biorthogonal(bio: &BiorthogonalFamily, fraction: f64, n: usize) -> Result<Self> {
        let ln_gamma = (1..=bio.size())
            .map(|j| bio.ln_gamma(j))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ln_gamma, fraction, n)
    }

    /// Builds the biorthogonal family with `M` exponentials and the problem
    /// on top of it.
    pub fn build(
        family: &SpectralFamily,
        t: f64,
        fraction: f64,
        n: usize,
        m: usize,
        precision_bits: u32,
    ) -> Result<(Self, BiorthogonalFamily)> {
        if m < n {
            return domain(format!("truncation M = {m} is below N = {n}"));
        }
        let bio = build_biorthogonal(family, m, t, precision_bits)?;
        Ok((Self::from_biorthogonal(&bio, fraction, n)?, bio))
    }

    /// Same problem with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("scale factor {c} must be positive"));
        }
        let shift = c.ln();
        Self::new(
            self.ln_gamma.iter().map(|g| g + shift).collect(),
            self.fraction,
            self.n,
        )
    }

    /// Same weights with a different truncation order.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.ln_gamma.clone(), self.fraction, n)
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    /// Truncation order `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of available weights `M`.
    pub fn m(&self) -> usize {
        self.ln_gamma.len()
    }

    /// `ln γ_j`, 1-based.
    pub fn ln_gamma(&self, j: usize) -> f64 {
        self.ln_gamma[j - 1]
    }

    pub fn gamma(&self, j: usize) -> f64 {
        self.ln_gamma(j).exp()
    }

    fn ln_gamma_min(&self) -> f64 {
        self.ln_gamma[..self.n]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `min_{1≤j≤N} γ_j ∫_ω φ_j²`.
pub fn j_trunc(problem: &DesignProblem, omega: &IntervalUnion) -> f64 {
    (1..=problem.n())
        .map(|j| (problem.ln_gamma(j) + mode_mass(j, omega).ln()).exp())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub step_c: f64,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            step_c: DEFAULT_STEP_C,
            tol: DEFAULT_TOL,
        }
    }
}

/// Finite global-optimality check over the modes `N < j ≤ J_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub checked_to: usize,
    /// `min_{N<j≤J_max} γ_j ∫_{ω^N} φ_j²`; may be `+∞` in `f64`.
    pub tail_min: f64,
    pub ln_tail_min: f64,
    pub certified: bool,
    /// `γ_{J_max}·(L − sin(Lπ)/π) ≥ J_N`: the mass floor alone already
    /// dominates at the last checked mode (heuristic beyond `J_max`).
    pub floor_extrapolation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub alpha: Vec<f64>,
    pub omega: IntervalUnion,
    /// `J_N = min_j v_j`.
    pub value: f64,
    pub ln_value: f64,
    /// `v_j = γ_j ∫_ω φ_j²` for `j = 1..=N`.
    pub mode_values: Vec<f64>,
    /// 1-based indices with `α_j > 1e-6`.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    /// `max_{j∈active} |v_j − J_N|`.
    pub equalization_gap: f64,
    pub converged: bool,
    pub certificate: Option<Certificate>,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&yi| (yi - theta).max(0.0)).collect()
}

/// Normalized weights `γ̂_j = γ_j/γ_min` for `j ≤ N`.
struct Scaled<'a> {
    problem: &'a DesignProblem,
    ln_gamma_min: f64,
    gamma_hat: Vec<f64>,
    /// Modes that can ever attain the minimum: `γ_j·floor ≤ γ_min·ceiling`.
    candidate: Vec<bool>,
}

struct Eval {
    alpha: Vec<f64>,
    p: ModeCombination,
    omega: IntervalUnion,
    v: Vec<f64>,
    b: f64,
    j: f64,
}

impl<'a> Scaled<'a> {
    fn new(problem: &'a DesignProblem) -> Self {
        let n = problem.n();
        let ln_min = problem.ln_gamma_min();
        let l = problem.fraction();
        let ceiling = l + (l * PI).sin() / PI;
        let slack = (ceiling / mass_floor(l)).ln() + 1e-9;
        let candidate = (1..=n)
            .map(|j| problem.ln_gamma(j) - ln_min <= slack)
            .collect();
        let gamma_hat = (1..=n)
            .map(|j| (problem.ln_gamma(j) - ln_min).exp().min(1e200))
            .collect();
        Self {
            problem,
            ln_gamma_min: ln_min,
            gamma_hat,
            candidate,
        }
    }

    fn evaluate(&self, alpha: Vec<f64>) -> Result<Eval> {
        let weights: Vec<f64> = alpha
            .iter()
            .zip(&self.gamma_hat)
            .map(|(a, g)| if *a > 0.0 { a * g } else { 0.0 })
            .collect();
        let p = ModeCombination::new(weights)?;
        let omega = bathtub(&p, self.problem.fraction())?.omega;
        let v: Vec<f64> = self
            .gamma_hat
            .iter()
            .enumerate()
            .map(|(k, g)| g * mode_mass(k + 1, &omega))
            .collect();
        let b = alpha.iter().zip(&v).map(|(a, v)| a * v).sum();
        let j = v.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Eval {
            alpha,
            p,
            omega,
            v,
            b,
            j,
        })
    }

    fn gap(&self, e: &Eval) -> f64 {
        e.alpha
            .iter()
            .zip(&e.v)
            .filter(|(a, _)| **a > ACTIVE_THRESHOLD)
            .map(|(_, v)| (v - e.j).abs())
            .fold(0.0, f64::max)
    }

    /// Hessian of `B` restricted to `support`:
    /// `H = Σ_b w_b (f(x_b) − f̄)(f(x_b) − f̄)ᵀ` with `w_b = 1/|p'(x_b)|`,
    /// `f_k = γ̂_k φ_k²` and `f̄` the `w`-weighted mean over boundary points.
    fn hessian(&self, e: &Eval, support: &[usize]) -> Vec<f64> {
        let s = support.len();
        let points: Vec<f64> = e
            .omega
            .intervals()
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&x| x > 0.0 && x < PI)
            .collect();
        let scale = e.p.weights().iter().sum::<f64>();
        let w: Vec<f64> = points
            .iter()
            .map(|&x| 1.0 / e.p.derivative(x).abs().max(1e-12 * scale))
            .collect();
        let f: Vec<Vec<f64>> = points
            .iter()
            .map(|&x| {
                support
                    .iter()
                    .map(|&k| {
                        let sk = ((k + 1) as f64 * x).sin();
                        self.gamma_hat[k] * 2.0 / PI * sk * sk
                    })
                    .collect()
            })
            .collect();
        let wsum: f64 = w.iter().sum();
        let mut mean = vec![0.0; s];
        for (wb, fb) in w.iter().zip(&f) {
            for i in 0..s {
                mean[i] += wb * fb[i] / wsum;
            }
        }
        let mut h = vec![0.0; s * s];
        for (wb, fb) in w.iter().zip(&f) {
            for i in 0..s {
                for k in 0..s {
                    h[i * s + k] += wb * (fb[i] - mean[i]) * (fb[k] - mean[k]);
                }
            }
        }
        h
    }

    /// Newton direction for `min B` on `support` subject to `Σ d = 0`.
    fn newton_direction(&self, e: &Eval, support: &[usize]) -> Option<Vec<f64>> {
        let s = support.len();
        if s < 2 {
            return None;
        }
        let h = self.hessian(e, support);
        let trace: f64 = (0..s).map(|i| h[i * s + i]).sum();
        let reg = 1e-10 * (trace / s as f64).max(f64::MIN_POSITIVE);
        let n = s + 1;
        let mut a = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for i in 0..s {
            for k in 0..s {
                a[i * n + k] = h[i * s + k];
            }
            a[i * n + i] += reg;
            a[i * n + s] = 1.0;
            a[s * n + i] = 1.0;
            rhs[i] = -e.v[support[i]];
        }
        let x = solve_dense(a, rhs)?;
        let d = x[..s].to_vec();
        d.iter().all(|v| v.is_finite()).then_some(d)
    }

    fn subgradient_step(&self, e: &Eval, t: usize, step_c: f64) -> Vec<f64> {
        let eta = step_c / (t as f64).sqrt();
        let idx: Vec<usize> = (0..e.alpha.len()).filter(|&k| self.candidate[k]).collect();
        let y: Vec<f64> = idx
            .iter()
            .map(|&k| e.alpha[k] - eta * e.v[k] / e.j)
            .collect();
        let projected = project_simplex(&y);
        let mut alpha = vec![0.0; e.alpha.len()];
        for (&k, a) in idx.iter().zip(projected) {
            alpha[k] = a;
        }
        alpha
    }

    /// Armijo line search along a Newton direction, truncated at the simplex
    /// boundary.
    fn newton_step(&self, e: &Eval, support: &[usize], d: &[f64]) -> Result<Option<Eval>> {
        let slope: f64 = support.iter().zip(d).map(|(&k, dk)| e.v[k] * dk).sum();
        if !(slope < 0.0) {
            return Ok(None);
        }
        let mut s_max: f64 = 1.0;
        for (&k, &dk) in support.iter().zip(d) {
            if dk < 0.0 {
                s_max = s_max.min(e.alpha[k] / -dk);
            }
        }
        let mut s = s_max;
        for _ in 0..40 {
            let mut alpha = e.alpha.clone();
            for (&k, &dk) in support.iter().zip(d) {
                let a = alpha[k] + s * dk;
                alpha[k] = if a > 1e-15 { a } else { 0.0 };
            }
            let total: f64 = alpha.iter().sum();
            alpha.iter_mut().for_each(|a| *a /= total);
            let trial = self.evaluate(alpha)?;
            // Near the minimum B is flat to rounding; the gap still shrinks.
            if trial.b <= e.b + 1e-4 * s * slope || (trial.j >= e.j && self.gap(&trial) < 0.5 * self.gap(e)) {
                return Ok(Some(trial));
            }
            s *= 0.5;
        }
        Ok(None)
    }

    fn solve(&self, config: &SolverConfig) -> Result<(Eval, usize)> {
        let n = self.gamma_hat.len();
        let count = self.candidate.iter().filter(|c| **c).count();
        let alpha: Vec<f64> = (0..n)
            .map(|k| if self.candidate[k] { 1.0 / count as f64 } else { 0.0 })
            .collect();
        let mut cur = self.evaluate(alpha)?;
        let mut best_j = cur.j;
        let mut best_alpha = cur.alpha.clone();
        let mut iterations = 0;
        let mut sub_t = 0;
        let mut stall = 0;
        loop {
            let gap = self.gap(&cur);
            if gap <= POLISH_TOL * cur.j || (gap <= config.tol * cur.j && stall >= STALL_LIMIT) {
                break;
            }
            if iterations >= config.max_iter {
                break;
            }
            iterations += 1;

            let support: Vec<usize> = (0..n).filter(|&k| cur.alpha[k] > 0.0).collect();
            let violated = (0..n).any(|k| self.candidate[k] && cur.alpha[k] == 0.0 && cur.v[k] < cur.b);
            let mut next = None;
            if !violated {
                if let Some(d) = self.newton_direction(&cur, &support) {
                    next = self.newton_step(&cur, &support, &d)?;
                }
            }
            let next = match next {
                Some(e) => e,
                None => {
                    sub_t += 1;
                    self.evaluate(self.subgradient_step(&cur, sub_t, config.step_c))?
                }
            };
            if next.j > best_j * (1.0 + 1e-15) {
                stall = 0;
            } else {
                stall += 1;
            }
            if next.j > best_j {
                best_j = next.j;
                best_alpha = next.alpha.clone();
            }
            cur = next;
        }
        let best = if cur.j >= best_j { cur } else { self.evaluate(best_alpha)? };
        Ok((best, iterations))
    }
}

/// Solves the truncated design problem. The certificate is computed over
/// all available weights when `M > N`.
pub fn solve_truncated(problem: &DesignProblem, config: &SolverConfig) -> Result<DesignResult> {
    if config.max_iter == 0 || !(config.step_c > 0.0) || !(config.tol > 0.0) {
        return domain("solver needs max_iter ≥ 1, step_c > 0 and tol > 0");
    }
    let scaled = Scaled::new(problem);
    let (best, iterations) = scaled.solve(config)?;
    let gap_hat = scaled.gap(&best);
    let scale = scaled.ln_gamma_min.exp();
    let ln_value = best.j.ln() + scaled.ln_gamma_min;
    let mut result = DesignResult {
        active_set: (1..=problem.n())
            .filter(|&j| best.alpha[j - 1] > ACTIVE_THRESHOLD)
            .collect(),
        mode_values: (1..=problem.n())
            .map(|j| (problem.ln_gamma(j) + mode_mass(j, &best.omega).ln()).exp())
            .collect(),
        value: ln_value.exp(),
        ln_value,
        equalization_gap: gap_hat * scale,
        converged: gap_hat <= config.tol * best.j,
        alpha: best.alpha,
        omega: best.omega,
        iterations,
        certificate: None,
    };
    if problem.m() > problem.n() {
        result.certificate = Some(tail_certificate(&result, problem, problem.m())?);
    }
    Ok(result)
}

/// `tail_min = min_{N<j≤J_max} γ_j ∫_{ω^N} φ_j²`, certified when it is at
/// least `J_N`.
pub fn tail_certificate(
    result: &DesignResult,
    problem: &DesignProblem,
    j_max: usize,
) -> Result<Certificate> {
    certificate(problem, &result.omega, result.mode_values.len(), result.ln_value, j_max)
}

/// Tail check for an arbitrary domain against its own truncated value
/// `J_N(ω)` with `N = problem.n()`.
pub fn certify_domain(problem: &DesignProblem, omega: &IntervalUnion, j_max: usize) -> Result<Certificate> {
    certificate(problem, omega, problem.n(), j_trunc(problem, omega).ln(), j_max)
}

fn certificate(
    problem: &DesignProblem,
    omega: &IntervalUnion,
    n: usize,
    ln_value: f64,
    j_max: usize,
) -> Result<Certificate> {
    if j_max <= n {
        return domain(format!("J_max = {j_max} must exceed N = {n}"));
    }
    if j_max > problem.m() {
        return Err(Error::Index {
            index: j_max,
            max: problem.m(),
        });
    }
    let ln_tail_min = ((n + 1)..=j_max)
        .map(|j| problem.ln_gamma(j) + mode_mass(j, omega).ln())
        .fold(f64::INFINITY, f64::min);
    let floor = mass_floor(problem.fraction()).ln();
    Ok(Certificate {
        checked_to: j_max,
        tail_min: ln_tail_min.exp(),
        ln_tail_min,
        certified: ln_tail_min >= ln_value,
        floor_extrapolation: problem.ln_gamma(j_max) + floor >= ln_value,
    })
}

/// Best union of `L·cells` equal cells, found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    pub omega: IntervalUnion,
}

pub fn brute_force_small(problem: &DesignProblem, cells: usize) -> Result<BruteForce> {
    if cells == 0 || cells > 24 {
        return domain(format!("cell count {cells} must lie in 1..=24"));
    }
    let kf = problem.fraction() * cells as f64;
    let k = kf.round() as usize;
    if (kf - k as f64).abs() > 1e-9 || k == 0 {
        return domain(format!("L·cells = {kf} is not a positive integer"));
    }
    let subsets = binomial(cells as u64, k as u64);
    if subsets > MAX_BRUTE_SUBSETS {
        return Err(Error::Size(format!(
            "C({cells}, {k}) = {subsets} subsets exceeds {MAX_BRUTE_SUBSETS}"
        )));
    }
    let n = problem.n();
    let h = PI / cells as f64;
    let cell = |c: usize| (c as f64 * h, if c + 1 == cells { PI } else { (c + 1) as f64 * h });
    let masses: Vec<Vec<f64>> = (0..cells)
        .map(|c| {
            let u = IntervalUnion::new(vec![cell(c)]).expect("cell lies in [0, π]");
            (1..=n).map(|j| mode_mass(j, &u)).collect()
        })
        .collect();
    let ln_min = problem.ln_gamma_min();
    let gamma_hat: Vec<f64> = (1..=n).map(|j| (problem.ln_gamma(j) - ln_min).exp()).collect();

    let mut best = (f64::NEG_INFINITY, 0u32);
    let mut mask: u32 = (1 << k) - 1;
    let limit: u32 = 1 << cells;
    while mask < limit {
        let value = (0..n)
            .map(|j| {
                let m: f64 = (0..cells)
                    .filter(|c| mask >> c & 1 == 1)
                    .map(|c| masses[c][j])
                    .sum();
                gamma_hat[j] * m
            })
            .fold(f64::INFINITY, f64::min);
        if value > best.0 {
            best = (value, mask);
        }
        // Next subset of the same size (Gosper's hack).
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    let omega = IntervalUnion::new(
        (0..cells)
            .filter(|c| best.1 >> c & 1 == 1)
            .map(cell)
            .collect(),
    )?;
    Ok(BruteForce {
        value: (best.0.ln() + ln_min).exp(),
        omega,
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// How `M` is chosen in a stationarity scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationPolicy {
    /// One family with `M = N_max + k` shared by every `N`.
    Offset(usize),
    /// One family with exactly `M` exponentials shared by every `N`.
    Fixed(usize),
    /// A separate family with `M = N + k` for each `N`. The weights then
    /// drift with `N` and the domains need not become stationary.
    PerN(usize),
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::Offset(DEFAULT_M_OFFSET)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub n_min: usize,
    pub n_max: usize,
    pub n_stat: usize,
    /// False when `N_stat = N_max`, where stationarity is vacuous.
    pub verified: bool,
    /// `symdiffs[a][b] = |ω^{N_min+a} Δ ω^{N_min+b}|`.
    pub symdiffs: Vec<Vec<f64>>,
    pub results: Vec<DesignResult>,
}

impl StationarityReport {
    pub fn result(&self, n: usize) -> &DesignResult {
        &self.results[n - self.n_min]
    }

    pub fn symdiff(&self, n1: usize, n2: usize) -> f64 {
        self.symdiffs[n1 - self.n_min][n2 - self.n_min]
    }
}

/// Settings for [`stationarity_scan`] besides the physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub tol: f64,
    pub policy: TruncationPolicy,
    pub precision_bits: u32,
    pub solver: SolverConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_STATIONARITY_TOL,
            policy: TruncationPolicy::default(),
            precision_bits: crate::biortho::DEFAULT_PRECISION_BITS,
            solver: SolverConfig::default(),
        }
    }
}

/// Solves every `N ∈ [N_min, N_max]` and reports the first `N_stat` whose
/// domain agrees with all later ones up to `tol` in symmetric difference.
pub fn stationarity_scan(
    family: &SpectralFamily,
    t: f64,
    fraction: f64,
    n_min: usize,
    n_max: usize,
    config: &ScanConfig,
) -> Result<StationarityReport> {
    if n_min == 0 || n_max < n_min {
        return domain(format!("need 1 ≤ N_min ≤ N_max, got {n_min}..{n_max}"));
    }
    let shared_m = match config.policy {
        TruncationPolicy::Offset(0) | TruncationPolicy::PerN(0) => {
            return domain("truncation offset must be at least 1");
        }
        TruncationPolicy::Offset(k) => Some(n_max + k),
        TruncationPolicy::Fixed(m) => {
            if n_max + 1 > m {
                return domain(format!("N_max = {n_max} must be at most M − 1 = {}", m as i64 - 1));
            }
            Some(m)
        }
        TruncationPolicy::PerN(_) => None,
    };
    let shared = match shared_m {
        Some(m) => Some(DesignProblem::build(family, t, fraction, n_max, m, config.precision_bits)?.0),
        None => None,
    };
    let results = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let problem = match (&shared, config.policy) {
                (Some(p), _) => p.with_n(n)?,
                (None, TruncationPolicy::PerN(k)) => {
                    DesignProblem::build(family, t, fraction, n, n + k, config.precision_bits)?.0
                }
                (None, _) => unreachable!("shared policies build one problem"),
            };
            solve_truncated(&problem, &config.solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let count = results.len();
    let symdiffs: Vec<Vec<f64>> = (0..count)
        .map(|a| {
            (0..count)
                .map(|b| results[a].omega.symdiff_measure(&results[b].omega))
                .collect()
        })
        .collect();
    let n_stat = (0..count)
        .find(|&a| ((a + 1)..count).all(|b| symdiffs[a][b] <= config.tol))
        .map(|a| n_min + a)
        .expect("the last truncation is trivially stationary");
    Ok(StationarityReport {
        n_min,
        n_max,
        n_stat,
        verified: n_stat < n_max,
        symdiffs,
        results,
    })
}

/// First `Ñ₀ ∈ [1, cap)` such that for every `j ∈ (Ñ₀, cap]`
/// `‖θ_j‖² ≤ e²(πL − sin πL)/128 · e^{2T(j²−1)}`, or `None`.
///
/// At `j = 1` the inequality can never hold (`‖θ_1‖² ≥ 2`), so the check
/// starts strictly above the candidate.
pub fn estimate_n0_bound(bio: &BiorthogonalFamily, fraction: f64, cap: usize) -> Result<Option<usize>> {
    if !bio.family().is_heat(cap.min(bio.size())) {
        return Err(Error::UnsupportedFamily(format!(
            "{} (the bound is stated for λ_j = j²)",
            bio.family()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return domain(format!("measure fraction L = {fraction} must lie in (0, 1)"));
    }
    if cap == 0 || cap > bio.size() {
        return Err(Error::Index {
            index: cap,
            max: bio.size(),
        });
    }
    let t = bio.horizon();
    let ln_c = 2.0 + (PI * fraction - (PI * fraction).sin()).ln() - 128f64.ln();
    let holds = |j: usize| {
        let jf = j as f64;
        bio.ln_norm_sq(j) <= ln_c + 2.0 * t * (jf * jf - 1.0)
    };
    Ok((1..cap).find(|&n0| ((n0 + 1)..=cap).all(holds)))
}

/// Gaussian elimination with partial pivoting on a row-major square system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &k| a[i * n + col].abs().total_cmp(&a[k * n + col].abs()))?;
        if a[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = ((row + 1)..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat_problem(t: f64, l: f64, n: usize, m: usize) -> (DesignProblem, BiorthogonalFamily) {
        DesignProblem::build(&SpectralFamily::heat(), t, l, n, m, 512).unwrap()
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.3, 0.3, -5.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && p[2] == 0.0);
        let p = project_simplex(&[0.1, 0.2, 0.3, 0.9]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn dense_solver() {
        let x = solve_dense(vec![0.0, 1.0, 2.0, 1.0], vec![3.0, 4.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn j_trunc_examples() {
        let (p, bio) = heat_problem(1.0, 0.2, 3, 5);
        let omega = IntervalUnion::centered(0.2).unwrap();
        let one = p.with_n(1).unwrap();
        let expected = bio.gamma_weight(1).unwrap() * mode_mass(1, &omega);
        assert!((j_trunc(&one, &omega) - expected).abs() < 1e-12 * expected);
        let full = j_trunc(&p, &IntervalUnion::full());
        let gmin = (1..=3).map(|j| bio.gamma_weight(j).unwrap()).fold(f64::INFINITY, f64::min);
        assert!((full - gmin).abs() < 1e-12 * gmin);
        assert_eq!(j_trunc(&p, &IntervalUnion::empty()), 0.0);
    }

    #[test]
    fn single_mode_optimum_is_centered() {
        let p = DesignProblem::new(vec![1.7f64.ln()], 0.2, 1).unwrap();
        let r = solve_truncated(&p, &SolverConfig::default()).unwrap();
        let (a, b) = r.omega.intervals()[0];
        assert_eq!(r.omega.intervals().len(), 1);
        assert!((a - 0.4 * PI).abs() < 1e-8 && (b - 0.6 * PI).abs() < 1e-8);
        let expected = 1.7 * (0.2 + (0.2 * PI).sin() / PI);
        assert!((r.value - expected).abs() < 1e-10 * expected);
        assert!((expected / 1.7 - 0.387097).abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn two_modes_equalize() {
        let (p, _) = heat_problem(1.0, 0.2, 2, 10);
        let r = solve_truncated(&p, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        if r.active_set.len() == 2 {
            let (v1, v2) = (r.mode_values[0], r.mode_values[1]);
            assert!((v1 - v2).abs() <= 1e-6 * v1.max(v2));
        }
        assert!((r.omega.measure() - 0.2 * PI).abs() < 1e-10);
    }

    #[test]
    fn brute_force_examples() {
        let p = DesignProblem::new(vec![0.0], 0.2, 1).unwrap();
        let bf = brute_force_small(&p, 5).unwrap();
        let (a, b) = bf.omega.intervals()[0];
        assert!((a - 0.4 * PI).abs() < 1e-12 && (b - 0.6 * PI).abs() < 1e-12);
        assert!(brute_force_small(&p, 7).is_err());
        assert!(DesignProblem::new(vec![0.0], 1.0, 1).is_err());
        let big = DesignProblem::new(vec![0.0], 0.5, 1).unwrap();
        assert!(matches!(brute_force_small(&big, 24), Err(Error::Size(_))));
    }

    #[test]
    fn brute_force_below_solver() {
        let (p, _) = heat_problem(1.0, 0.25, 3, 11);
        let bf = brute_force_small(&p, 16).unwrap();
        let r = solve_truncated(&p, &SolverConfig::default()).unwrap();
        assert!(bf.value <= r.value + 1e-9, "{} vs {}", bf.value, r.value);
    }

    #[test]
    fn certificate_heat() {
        let (p, _) = heat_problem(1.0, 0.2, 3, 11);
        let r = solve_truncated(&p, &SolverConfig::default()).unwrap();
        let c = tail_certificate(&r, &p, 10).unwrap();
        assert!(c.certified);
        let single = tail_certificate(&r, &p, 4).unwrap();
        let direct = p.ln_gamma(4) + mode_mass(4, &r.omega).ln();
        assert_eq!(single.ln_tail_min, direct);
        let floor_bound = (5..=10)
            .map(|j| p.ln_gamma(j))
            .fold(p.ln_gamma(4), f64::min)
            + mass_floor(0.2).ln();
        assert!(c.ln_tail_min >= floor_bound - 1e-12);
        assert!(tail_certificate(&r, &p, 3).is_err());
        assert!(tail_certificate(&r, &p, 12).is_err());
    }

    #[test]
    fn n0_estimates() {
        let bio = build_biorthogonal(&SpectralFamily::heat(), 10, 1.0, 512).unwrap();
        let n0 = estimate_n0_bound(&bio, 0.2, 10).unwrap();
        assert!(matches!(n0, Some(k) if k <= 3), "{n0:?}");
        assert_eq!(estimate_n0_bound(&bio, 0.2, 1).unwrap(), None);
        let frac = build_biorthogonal(&SpectralFamily::sine_fractional(0.75).unwrap(), 4, 1.0, 512).unwrap();
        assert!(matches!(
            estimate_n0_bound(&frac, 0.2, 4),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn degenerate_scan_range() {
        let cfg = ScanConfig::default();
        let r = stationarity_scan(&SpectralFamily::heat(), 1.0, 0.2, 2, 2, &cfg).unwrap();
        assert_eq!(r.n_stat, 2);
        assert!(!r.verified);
        assert_eq!(r.symdiffs, vec![vec![0.0]]);
    }
}
