//! Truncated minimal-norm biorthogonal families to `(e^{−λ_j t})` on `(0, T)`.
//!
//! Within the span of the first `M` exponentials, the element `θ_j` with
//! `∫₀^T e^{−λ_k t} θ_j(t) dt = δ_{jk}` (`k ≤ M`) of least `L²(0,T)` norm has
//! coefficients given by the `j`-th row of the inverse Gram matrix,
//! `θ_j = Σ_m (G⁻¹)_{jm} e^{−λ_m t}`, so that `‖θ_j‖² = (G⁻¹)_{jj}` and
//! `⟨θ_j, θ_k⟩ = (G⁻¹)_{jk}`. Gram matrices of exponentials are extremely
//! ill-conditioned, so assembly, factorization and every quantity that
//! suffers cancellation (moments, point values) run in extended precision.

use dashu_base::Abs;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::spectrum::SpectralFamily;

pub const DEFAULT_PRECISION_BITS: u32 = 512;
/// Default bound on `max |G·G⁻¹ − I|`.
pub const DEFAULT_GRAM_TOLERANCE: f64 = 1e-30;
/// Bound on `max_{j,k} |∫ e^{−λ_j t} θ_k − δ_{jk}|`.
pub const BIORTHOGONALITY_TOLERANCE: f64 = 1e-20;
/// Extra bits used by the independent biorthogonality check.
const CHECK_GUARD_BITS: u32 = 64;

type Real = FBig<HalfEven, 2>;

fn real(x: f64, bits: u32) -> Real {
    Real::try_from(x)
        .expect("finite f64 converts exactly")
        .with_precision(bits as usize)
        .value()
}

fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

fn ln_f64(x: &Real) -> f64 {
    x.ln().to_f64().value()
}

/// `∫₀^T e^{−(λ_j+λ_k)t} dt = (1 − e^{−(λ_j+λ_k)T})/(λ_j+λ_k)`.
pub fn gram_entry(lambda_j: f64, lambda_k: f64, t: f64) -> Result<f64> {
    let s = lambda_j + lambda_k;
    if !(s > 0.0) {
        return domain(format!("exponent sum λ_j + λ_k = {s} must be positive"));
    }
    if !(t > 0.0) {
        return domain(format!("horizon T = {t} must be positive"));
    }
    Ok(-(-s * t).exp_m1() / s)
}

fn gram_entry_mp(lambda_j: f64, lambda_k: f64, t: f64, bits: u32) -> Real {
    let s = real(lambda_j, bits) + real(lambda_k, bits);
    let one = real(1.0, bits);
    let decay = (-(&s * real(t, bits))).exp();
    (one - decay) / s
}

/// Gram matrix `G_{jk} = ∫₀^T e^{−(λ_j+λ_k)t} dt` of the first `M` exponentials
/// and its inverse, both held in extended precision.
#[derive(Debug, Clone)]
pub struct GramSystem {
    t: f64,
    lambdas: Vec<f64>,
    precision_bits: u32,
    entries: Vec<Real>,
    inverse: Vec<Real>,
    residual: f64,
}

impl GramSystem {
    /// Assembles and inverts the Gram matrix; fails when the residual
    /// `max |G·G⁻¹ − I|` exceeds `tolerance`.
    pub fn assemble(lambdas: &[f64], t: f64, precision_bits: u32, tolerance: f64) -> Result<Self> {
        let m = lambdas.len();
        if m == 0 {
            return domain("Gram system needs at least one exponent");
        }
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("horizon T = {t} must be positive"));
        }
        if precision_bits < 64 {
            return domain(format!("precision {precision_bits} bits is below the 64-bit minimum"));
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return domain("exponents must be finite and positive");
        }
        let bits = precision_bits;
        let zero = real(0.0, bits);

        let mut entries = vec![zero.clone(); m * m];
        for j in 0..m {
            for k in j..m {
                let g = gram_entry_mp(lambdas[j], lambdas[k], t, bits);
                entries[k * m + j] = g.clone();
                entries[j * m + k] = g;
            }
        }

        // LDLᵀ factorization.
        let mut lower = vec![zero.clone(); m * m];
        let mut diag = vec![zero.clone(); m];
        for j in 0..m {
            let mut d = entries[j * m + j].clone();
            for k in 0..j {
                d -= &lower[j * m + k] * &lower[j * m + k] * &diag[k];
            }
            if d <= zero {
                return Err(Error::PrecisionInsufficient {
                    achieved: f64::INFINITY,
                    tolerance,
                    bits,
                });
            }
            for i in (j + 1)..m {
                let mut v = entries[i * m + j].clone();
                for k in 0..j {
                    v -= &lower[i * m + k] * &lower[j * m + k] * &diag[k];
                }
                lower[i * m + j] = v / &d;
            }
            diag[j] = d;
        }

        // Columns of the inverse by forward and backward substitution.
        let mut inverse = vec![zero.clone(); m * m];
        for col in 0..m {
            let mut y = vec![zero.clone(); m];
            for i in 0..m {
                let mut v = if i == col { real(1.0, bits) } else { zero.clone() };
                for k in 0..i {
                    v -= &lower[i * m + k] * &y[k];
                }
                y[i] = v;
            }
            for i in 0..m {
                y[i] = &y[i] / &diag[i];
            }
            for i in (0..m).rev() {
                let mut v = y[i].clone();
                for k in (i + 1)..m {
                    v -= &lower[k * m + i] * &inverse[k * m + col];
                }
                inverse[i * m + col] = v;
            }
        }

        let mut residual: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut acc = if i == j { -real(1.0, bits) } else { zero.clone() };
                for k in 0..m {
                    acc += &entries[i * m + k] * &inverse[k * m + j];
                }
                residual = residual.max(to_f64(&acc.abs()));
            }
        }
        if !(residual <= tolerance) {
            return Err(Error::PrecisionInsufficient {
                achieved: residual,
                tolerance,
                bits,
            });
        }

        Ok(Self {
            t,
            lambdas: lambdas.to_vec(),
            precision_bits,
            entries,
            inverse,
            residual,
        })
    }

    pub fn size(&self) -> usize {
        self.lambdas.len()
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// `G_{jk}`, 1-based.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        to_f64(&self.entries[self.index(j, k)])
    }

    /// `(G⁻¹)_{jk}`, 1-based.
    pub fn inverse_entry(&self, j: usize, k: usize) -> f64 {
        to_f64(&self.inverse[self.index(j, k)])
    }

    /// `max |G·G⁻¹ − I|` measured at assembly.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Largest relative asymmetry `|(G⁻¹)_{jk} − (G⁻¹)_{kj}| / max(|·|)`.
    pub fn inverse_asymmetry(&self) -> f64 {
        let m = self.size();
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for k in (j + 1)..m {
                let a = &self.inverse[j * m + k];
                let b = &self.inverse[k * m + j];
                let scale = to_f64(&a.clone().abs()).max(to_f64(&b.clone().abs()));
                if scale > 0.0 {
                    worst = worst.max(to_f64(&(a - b).abs()) / scale);
                }
            }
        }
        worst
    }

    fn index(&self, j: usize, k: usize) -> usize {
        let m = self.size();
        assert!(
            (1..=m).contains(&j) && (1..=m).contains(&k),
            "Gram index ({j}, {k}) outside 1..={m}"
        );
        (j - 1) * m + (k - 1)
    }
}

/// Minimal-norm biorthogonal family `θ_1, …, θ_M` in the span of the first
/// `M` exponentials.
#[derive(Debug, Clone)]
pub struct BiorthogonalFamily {
    family: SpectralFamily,
    gram: GramSystem,
    norms_sq: Vec<f64>,
    ln_norms_sq: Vec<f64>,
    biorthogonality_residual: f64,
}

/// Builds the family with the default tolerances.
pub fn build_biorthogonal(
    family: &SpectralFamily,
    m: usize,
    t: f64,
    precision_bits: u32,
) -> Result<BiorthogonalFamily> {
    BiorthogonalFamily::build(family, m, t, precision_bits, DEFAULT_GRAM_TOLERANCE)
}

impl BiorthogonalFamily {
    pub fn build(
        family: &SpectralFamily,
        m: usize,
        t: f64,
        precision_bits: u32,
        gram_tolerance: f64,
    ) -> Result<Self> {
        if m == 0 {
            return domain("truncation M must be at least 1");
        }
        let lambdas = family.eigenvalues(m)?;
        let gram = GramSystem::assemble(&lambdas, t, precision_bits, gram_tolerance)?;

        // Independent check: Gram entries re-evaluated with guard bits.
        let bits = precision_bits + CHECK_GUARD_BITS;
        let mut residual: f64 = 0.0;
        for j in 0..m {
            let row: Vec<Real> = (0..m)
                .map(|q| gram_entry_mp(lambdas[j], lambdas[q], t, bits))
                .collect();
            for k in 0..m {
                let mut acc = if j == k { -real(1.0, bits) } else { real(0.0, bits) };
                for (q, g) in row.iter().enumerate() {
                    acc += g * &gram.inverse[k * m + q];
                }
                residual = residual.max(to_f64(&acc.abs()));
            }
        }
        if !(residual <= BIORTHOGONALITY_TOLERANCE) {
            return Err(Error::PrecisionInsufficient {
                achieved: residual,
                tolerance: BIORTHOGONALITY_TOLERANCE,
                bits: precision_bits,
            });
        }

        let norms_sq = (0..m).map(|j| to_f64(&gram.inverse[j * m + j])).collect();
        let ln_norms_sq = (0..m).map(|j| ln_f64(&gram.inverse[j * m + j])).collect();
        Ok(Self {
            family: family.clone(),
            gram,
            norms_sq,
            ln_norms_sq,
            biorthogonality_residual: residual,
        })
    }

    pub fn family(&self) -> &SpectralFamily {
        &self.family
    }

    pub fn gram(&self) -> &GramSystem {
        &self.gram
    }

    /// Truncation level `M`.
    pub fn size(&self) -> usize {
        self.gram.size()
    }

    pub fn horizon(&self) -> f64 {
        self.gram.t
    }

    /// `λ_j`, 1-based.
    pub fn lambda(&self, j: usize) -> f64 {
        self.gram.lambdas[j - 1]
    }

    /// `max_{j,k} |∫₀^T e^{−λ_j t} θ_k(t) dt − δ_{jk}|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        self.biorthogonality_residual
    }

    /// Coefficient `c_{j,m}` in `θ_j = Σ_m c_{j,m} e^{−λ_m t}`.
    pub fn coefficient(&self, j: usize, m: usize) -> f64 {
        self.gram.inverse_entry(j, m)
    }

    /// `‖θ_j‖²_{L²(0,T)}`.
    pub fn norm_sq(&self, j: usize) -> f64 {
        self.norms_sq[j - 1]
    }

    /// `ln ‖θ_j‖²`, finite even where the norm overflows `f64`.
    pub fn ln_norm_sq(&self, j: usize) -> f64 {
        self.ln_norms_sq[j - 1]
    }

    /// `⟨θ_j, θ_k⟩_{L²(0,T)} = (G⁻¹)_{jk}`.
    pub fn inner(&self, j: usize, k: usize) -> f64 {
        self.gram.inverse_entry(j, k)
    }

    /// `ln γ_j = 2λ_j T − ln ‖θ_j‖²`.
    pub fn ln_gamma(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Ok(2.0 * self.lambda(j) * self.horizon() - self.ln_norm_sq(j))
    }

    /// `γ_j(T) = e^{2λ_j T}/‖θ_j‖²`; may be `+∞` when it overflows `f64`.
    pub fn gamma_weight(&self, j: usize) -> Result<f64> {
        Ok(self.ln_gamma(j)?.exp())
    }

    /// `∫₀^T e^{−λt} θ_j(t) dt` for an arbitrary exponent, evaluated in
    /// extended precision. Equals `δ` for `λ = λ_k`, `k ≤ M`.
    pub fn time_moment(&self, lambda: f64, j: usize) -> Result<f64> {
        self.check_index(j)?;
        let m = self.size();
        let bits = self.gram.precision_bits;
        let mut acc = real(0.0, bits);
        for q in 0..m {
            let g = gram_entry_mp(lambda, self.gram.lambdas[q], self.horizon(), bits);
            acc += g * &self.gram.inverse[(j - 1) * m + q];
        }
        Ok(to_f64(&acc))
    }

    /// All moments `∫ e^{−λ t} θ_j` for `j = 1..=M` at one exponent.
    pub fn time_moments(&self, lambda: f64) -> Vec<f64> {
        let m = self.size();
        let bits = self.gram.precision_bits;
        let row: Vec<Real> = (0..m)
            .map(|q| gram_entry_mp(lambda, self.gram.lambdas[q], self.horizon(), bits))
            .collect();
        (0..m)
            .map(|j| {
                let mut acc = real(0.0, bits);
                for (q, g) in row.iter().enumerate() {
                    acc += g * &self.gram.inverse[j * m + q];
                }
                to_f64(&acc)
            })
            .collect()
    }

    /// `Σ_{j,k} c_j c_k ⟨θ_j, θ_k⟩ w_{jk}` in extended precision, with `w`
    /// given row-major (`M×M`). This is `‖Σ_j c_j θ_j ψ_j‖²` whenever `w` is
    /// the Gram matrix of the spatial factors `ψ_j`.
    pub fn quadratic_form(&self, c: &[f64], w: &[f64]) -> Result<f64> {
        let m = self.size();
        if c.len() != m || w.len() != m * m {
            return Err(Error::Size(format!(
                "quadratic form expects {m} coefficients and {m}×{m} weights"
            )));
        }
        let bits = self.gram.precision_bits;
        let cs: Vec<Real> = c.iter().map(|&x| real(x, bits)).collect();
        let mut acc = real(0.0, bits);
        for j in 0..m {
            if c[j] == 0.0 {
                continue;
            }
            let mut row = real(0.0, bits);
            for k in 0..m {
                if c[k] == 0.0 || w[j * m + k] == 0.0 {
                    continue;
                }
                row += &cs[k] * real(w[j * m + k], bits) * &self.gram.inverse[j * m + k];
            }
            acc += &cs[j] * row;
        }
        Ok(to_f64(&acc))
    }

    /// Point value `θ_j(t)`, summed in extended precision.
    pub fn theta(&self, j: usize, t: f64) -> Result<f64> {
        self.check_index(j)?;
        let m = self.size();
        let bits = self.gram.precision_bits;
        let tt = real(t, bits);
        let mut acc = real(0.0, bits);
        for q in 0..m {
            let e = (-(real(self.gram.lambdas[q], bits) * &tt)).exp();
            acc += e * &self.gram.inverse[(j - 1) * m + q];
        }
        Ok(to_f64(&acc))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.size() {
            return Err(Error::Index {
                index: j,
                max: self.size(),
            });
        }
        Ok(())
    }
}

/// Outcome of increasing the truncation until `‖θ_j‖²` stabilizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub m_star: usize,
    pub norm_sq: f64,
    pub converged: bool,
    /// `(M, ‖θ_j^{(M)}‖²)` for every truncation visited.
    pub history: Vec<(usize, f64)>,
}

/// Smallest `M ∈ [m_start, m_max)` with
/// `|‖θ_j^{(M+1)}‖² − ‖θ_j^{(M)}‖²| ≤ rtol·‖θ_j^{(M)}‖²`.
pub fn converge_in_m(
    family: &SpectralFamily,
    j: usize,
    t: f64,
    m_start: usize,
    m_max: usize,
    rtol: f64,
    precision_bits: u32,
) -> Result<Convergence> {
    if j == 0 || m_start < j {
        return domain(format!("need 1 ≤ j ≤ M_start, got j = {j}, M_start = {m_start}"));
    }
    if m_max < m_start {
        return domain(format!("M_max = {m_max} is below M_start = {m_start}"));
    }
    if !(rtol > 0.0) {
        return domain(format!("rtol = {rtol} must be positive"));
    }
    let norm = |m: usize| build_biorthogonal(family, m, t, precision_bits).map(|b| b.norm_sq(j));
    let mut history = vec![(m_start, norm(m_start)?)];
    for m in m_start..m_max {
        let current = history.last().expect("history is nonempty").1;
        let next = norm(m + 1)?;
        history.push((m + 1, next));
        if (next - current).abs() <= rtol * current {
            return Ok(Convergence {
                m_star: m,
                norm_sq: current,
                converged: true,
                history,
            });
        }
    }
    let norm_sq = history.last().expect("history is nonempty").1;
    Ok(Convergence {
        m_star: m_max,
        norm_sq,
        converged: false,
        history,
    })
}

/// Envelope `ln ‖θ_j‖² ≤ ln m₁ + m₂ λ_j` with `m₂` from least squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub m1: f64,
    pub ln_m1: f64,
    pub m2: f64,
    /// `m₂ < 2T`: the norms grow slower than the weights' numerator.
    pub ok: bool,
}

pub fn growth_fit(bio: &BiorthogonalFamily) -> Result<GrowthFit> {
    let m = bio.size();
    if m < 3 {
        return domain(format!("growth fit needs M ≥ 3, got {m}"));
    }
    let xs: Vec<f64> = (1..=m).map(|j| bio.lambda(j)).collect();
    let ys: Vec<f64> = (1..=m).map(|j| bio.ln_norm_sq(j)).collect();
    let n = m as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let m2 = sxy / sxx;
    let ln_m1 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - m2 * x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthFit {
        m1: ln_m1.exp(),
        ln_m1,
        m2,
        ok: m2 < 2.0 * bio.horizon(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_entry_examples() {
        let g = gram_entry(1.0, 1.0, 1.0).unwrap();
        assert!((g - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-16);
        assert!((g - 0.4323324).abs() < 1e-7);
        assert!((gram_entry(1.0, 1.0, 1e6).unwrap() - 0.5).abs() < 1e-12);
        let g = gram_entry(1.0, 4.0, 0.05).unwrap();
        assert!((g - (1.0 - (-0.25f64).exp()) / 5.0).abs() < 1e-17);
        assert!((g - 0.0442398).abs() < 1e-7);
        assert!(gram_entry(-1.0, 0.5, 1.0).is_err());
        assert!(gram_entry(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mp_gram_entry_agrees_with_f64() {
        for &(a, b, t) in &[(1.0, 1.0, 1.0), (4.0, 9.0, 0.05), (100.0, 225.0, 0.5)] {
            let hi = to_f64(&gram_entry_mp(a, b, t, 256));
            let lo = gram_entry(a, b, t).unwrap();
            assert!((hi - lo).abs() <= 1e-15 * lo);
        }
    }

    #[test]
    fn single_mode_family() {
        let fam = SpectralFamily::heat();
        let bio = build_biorthogonal(&fam, 1, 1.0, 256).unwrap();
        let g11 = gram_entry(1.0, 1.0, 1.0).unwrap();
        assert!((bio.norm_sq(1) - 1.0 / g11).abs() < 1e-14);
        assert!((bio.norm_sq(1) - 2.313035).abs() < 1e-6);
        assert!((bio.coefficient(1, 1) - 1.0 / g11).abs() < 1e-14);
        let gamma = bio.gamma_weight(1).unwrap();
        assert!((gamma - 2f64.exp() * g11).abs() < 1e-13);
        assert!((gamma - 3.194528).abs() < 1e-6);
    }

    #[test]
    fn two_mode_family_matches_explicit_inverse() {
        let bio = build_biorthogonal(&SpectralFamily::heat(), 2, 1.0, 512).unwrap();
        let a = gram_entry(1.0, 1.0, 1.0).unwrap();
        let b = gram_entry(1.0, 4.0, 1.0).unwrap();
        let d = gram_entry(4.0, 4.0, 1.0).unwrap();
        let det = a * d - b * b;
        assert!((bio.inner(1, 2) - (-b / det)).abs() <= 1e-12 * (b / det).abs());
        assert!((bio.norm_sq(1) - d / det).abs() <= 1e-12 * d / det);
        assert!((bio.norm_sq(2) - a / det).abs() <= 1e-12 * a / det);
        assert!(bio.biorthogonality_residual() <= 1e-20);
    }

    #[test]
    fn time_moment_recovers_delta() {
        let bio = build_biorthogonal(&SpectralFamily::heat(), 6, 1.0, 512).unwrap();
        for k in 1..=6 {
            let row = bio.time_moments(bio.lambda(k));
            for (j, v) in row.iter().enumerate() {
                let expected = if j + 1 == k { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-25, "k={k} j={} v={v}", j + 1);
            }
        }
        assert!(bio.time_moment(1.0, 7).is_err());
    }

    #[test]
    fn theta_point_values_integrate_to_norm() {
        // Gauss–Legendre on (0, T) against the closed-form norm.
        let bio = build_biorthogonal(&SpectralFamily::heat(), 3, 1.0, 256).unwrap();
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let panels = 200;
        let h = 1.0 / panels as f64;
        let mut q = 0.0;
        for p in 0..panels {
            for &(x, w) in &nodes {
                let t = h * (p as f64 + 0.5 * (x + 1.0));
                q += 0.5 * h * w * bio.theta(2, t).unwrap().powi(2);
            }
        }
        assert!((q - bio.norm_sq(2)).abs() < 1e-9 * bio.norm_sq(2));
    }

    #[test]
    fn rejects_bad_arguments() {
        let fam = SpectralFamily::heat();
        assert!(build_biorthogonal(&fam, 0, 1.0, 512).is_err());
        assert!(build_biorthogonal(&fam, 3, 0.0, 512).is_err());
        assert!(build_biorthogonal(&fam, 3, 1.0, 32).is_err());
        let bio = build_biorthogonal(&fam, 3, 1.0, 128).unwrap();
        assert!(matches!(bio.gamma_weight(4), Err(Error::Index { index: 4, max: 3 })));
    }

    #[test]
    fn low_precision_is_reported() {
        // 64 bits cannot invert a 12-mode Gram matrix at T = 0.05.
        let err = build_biorthogonal(&SpectralFamily::heat(), 12, 0.05, 64).unwrap_err();
        assert!(matches!(err, Error::PrecisionInsufficient { .. }), "{err}");
    }

    #[test]
    fn gamma_dominance() {
        let bio = build_biorthogonal(&SpectralFamily::heat(), 8, 1.0, 512).unwrap();
        for j in 1..=8 {
            assert!(bio.gamma_weight(j).unwrap() > 0.0);
        }
        assert!(bio.gamma_weight(8).unwrap() / bio.gamma_weight(1).unwrap() > 1e6);
    }

    #[test]
    fn convergence_heat() {
        let fam = SpectralFamily::heat();
        // The increments of ‖θ₁^{(M)}‖² decay slowly: still about 9% at M = 12.
        let c = converge_in_m(&fam, 1, 1.0, 1, 12, 1e-6, 512).unwrap();
        assert!(!c.converged);
        assert_eq!(c.m_star, 12);
        assert_eq!(c.history.len(), 12);
        for w in c.history.windows(2) {
            assert!(w[1].1 >= w[0].1 * (1.0 - 1e-12));
        }
        let c = converge_in_m(&fam, 1, 1.0, 1, 30, 0.1, 512).unwrap();
        assert!(c.converged);
        let (m, v) = c.history[c.history.len() - 2];
        assert_eq!(m, c.m_star);
        assert_eq!(v, c.norm_sq);
    }

    #[test]
    fn convergence_divergent_family() {
        let fam = SpectralFamily::sine_fractional(0.5).unwrap();
        let c = converge_in_m(&fam, 1, 1.0, 1, 16, 1e-3, 512).unwrap();
        assert!(!c.converged);
        assert_eq!(c.m_star, 16);
    }

    #[test]
    fn growth_fit_minimum_size() {
        let bio = build_biorthogonal(&SpectralFamily::heat(), 3, 1.0, 256).unwrap();
        let fit = growth_fit(&bio).unwrap();
        assert!(fit.m1.is_finite() && fit.m2.is_finite());
        let small = build_biorthogonal(&SpectralFamily::heat(), 2, 1.0, 256).unwrap();
        assert!(growth_fit(&small).is_err());
    }
}
