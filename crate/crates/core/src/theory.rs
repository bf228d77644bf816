//! Closed-form PIP-loss identities and bounds.
//!
//! Spectra are zero-padded to their ambient dimension `n`, so `λ_s = 0` for
//! `s > d`. Sums over spectral gaps `(λ_r − λ_s)^{-2}` are precomputed once
//! per spectrum ([`GapSums`]) so that a full sweep over `k` costs `O(d²)`.

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::estimate::Spectrum;
use crate::linalg::{check_orthonormal, frobenius};
use crate::transforms::SignalMatrix;

/// Floor on spectral gaps, relative to `λ_1`, used by [`GapPolicy::clamped`].
pub const DEFAULT_GAP_FLOOR: f64 = 1e-8;

/// Treatment of tied singular values across a cut, where `(λ_r − λ_s)^{-2}`
/// is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GapPolicy {
    /// Cuts through a tie are errors.
    #[default]
    Strict,
    /// Every gap is floored at `relative_floor · λ_1`.
    Clamp { relative_floor: f64 },
}

impl GapPolicy {
    pub fn clamped() -> Self {
        GapPolicy::Clamp {
            relative_floor: DEFAULT_GAP_FLOOR,
        }
    }
}

/// Bias/variance split of an expected PIP-loss bound at dimensionality `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundBreakdown {
    pub k: usize,
    pub bias: f64,
    pub magnitude_variance: f64,
    pub direction_variance: f64,
    pub total: f64,
}

/// `Σ_{r ≤ i < s ≤ n} (λ_r − λ_s)^{-2}` for every cut `i = 1..=d`.
#[derive(Debug, Clone)]
pub struct GapSums {
    sums: Vec<f64>,
    /// 1-based cuts `i` with `λ_i = λ_{i+1}` (only under [`GapPolicy::Strict`]).
    degenerate: Vec<usize>,
}

impl GapSums {
    pub fn new(spectrum: &Spectrum, policy: GapPolicy) -> Self {
        let lambda = spectrum.positive();
        let d = lambda.len();
        let tail = (spectrum.ambient() - d) as f64;
        let floor = match policy {
            GapPolicy::Strict => 0.0,
            GapPolicy::Clamp { relative_floor } => relative_floor * lambda.first().copied().unwrap_or(0.0),
        };
        let weight = |gap: f64| {
            let g = gap.max(floor);
            if g > 0.0 {
                1.0 / (g * g)
            } else {
                f64::INFINITY
            }
        };
        let mut sums = vec![0.0; d];
        for r in 0..d {
            let mut acc = tail * weight(lambda[r]);
            for i in (r..d).rev() {
                if i + 1 < d {
                    acc += weight(lambda[r] - lambda[i + 1]);
                }
                sums[i] += acc;
            }
        }
        let degenerate = match policy {
            GapPolicy::Strict => (1..d).filter(|&i| lambda[i - 1] <= lambda[i]).collect(),
            GapPolicy::Clamp { .. } => Vec::new(),
        };
        GapSums { sums, degenerate }
    }

    /// The sum at 1-based cut `i ≤ d`.
    pub fn at(&self, i: usize) -> f64 {
        self.sums[i - 1]
    }

    pub fn degenerate_cuts(&self) -> &[usize] {
        &self.degenerate
    }

    fn first_degenerate(&self) -> Option<usize> {
        self.degenerate.first().copied()
    }
}

/// Exact PIP loss between two orthonormal embeddings `E` (`n × d`) and
/// `Ê` (`n × k`): `√(d − k + 2‖ÊᵀE^⊥‖²)`.
pub fn exact_loss_alpha0(e: ArrayView2<'_, f64>, e_hat: ArrayView2<'_, f64>) -> Result<f64> {
    if e.nrows() != e_hat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have {} and {} rows",
            e.nrows(),
            e_hat.nrows()
        )));
    }
    let (d, k) = (e.ncols(), e_hat.ncols());
    if k > d {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds d = {d}")));
    }
    check_orthonormal(e)?;
    check_orthonormal(e_hat)?;
    // ‖ÊᵀE^⊥‖ is the norm of Ê's residual after projecting onto span(E).
    let residual = &e_hat - &e.dot(&e.t().dot(&e_hat));
    let leak = frobenius(&residual);
    Ok(((d - k) as f64 + 2.0 * leak * leak).sqrt())
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        Err(Error::InvalidArgument(format!(
            "dimensionality k = {k} outside 1..={d}"
        )))
    } else {
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )))
    }
}

/// Empirical telescoping bound on `‖PIP(f_{α,d}(M)) − PIP(f_{α,k}(M̃))‖`,
/// built from the SVDs of both matrices:
///
/// `√Σ_{i>k}^d λ_i^{4α} + √Σ_{i≤k} (λ_i^{2α} − λ̃_i^{2α})² + √2 Σ_{i≤k} c_i ‖Ũ_{·,1:i}ᵀ U_{·,i+1:n}‖`
///
/// with `c_i = λ_i^{2α} − λ_{i+1}^{2α}` for `i < k` and `c_k = λ_k^{2α}`.
/// `d` is the numerical rank of `M`.
pub fn telescoping_bound(m: &SignalMatrix, noisy: &SignalMatrix, alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if m.dim() != noisy.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrices are {:?} and {:?}",
            m.dim(),
            noisy.dim()
        )));
    }
    let svd = m.svd()?;
    let noisy_svd = noisy.svd()?;
    let d = svd.rank();
    check_k(k, d)?;
    let w = |v: f64| v.powf(2.0 * alpha);
    let lambda = &svd.s;
    let lambda_noisy = &noisy_svd.s;

    let bias = (k..d).map(|i| w(lambda[i]).powi(2)).sum::<f64>().sqrt();
    let magnitude = (0..k)
        .map(|i| (w(lambda[i]) - w(lambda_noisy[i])).powi(2))
        .sum::<f64>()
        .sqrt();

    // Column j of `residual` holds ũ_j minus its projection on u_1..u_i
    // after step i, so its norm over j ≤ i gives ‖Ũ_{1:i}ᵀ U_{i+1:n}‖.
    let u = svd.u.slice(s![.., ..k]);
    let u_noisy = noisy_svd.u.slice(s![.., ..k]);
    let overlap = u.t().dot(&u_noisy);
    let mut residual: Array2<f64> = u_noisy.to_owned();
    let mut direction = 0.0;
    for i in 0..k {
        for j in 0..k {
            residual.column_mut(j).scaled_add(-overlap[[i, j]], &u.column(i));
        }
        let leak = (0..=i)
            .map(|j| residual.column(j).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let coefficient = if i + 1 < k {
            w(lambda[i]) - w(lambda[i + 1])
        } else {
            w(lambda[i])
        };
        direction += coefficient * leak;
    }
    Ok(bias + magnitude + std::f64::consts::SQRT_2 * direction)
}

/// Expected PIP-loss bound for a symmetric signal with the given spectrum
/// under iid noise of standard deviation `sigma`.
///
/// At `α = 0` this is `√(d − k + 2σ² Σ_{r≤k, s>d} (λ_r − λ_s)^{-2})`, split
/// into `bias = √(d − k)` and the remaining direction term. For `0 < α ≤ 1`
/// it is the sum of
/// - bias `√Σ_{i>k}^d λ_i^{4α}`,
/// - magnitude variance `2√(2n) α σ √Σ_{i≤k} λ_i^{4α−2}`,
/// - direction variance `√2 σ Σ_{i≤k} (λ_i^{2α} − λ_{i+1}^{2α}) √Σ_{r≤i<s≤n} (λ_r − λ_s)^{-2}`.
pub fn expected_bound(spectrum: &Spectrum, sigma: f64, alpha: f64, k: usize) -> Result<BoundBreakdown> {
    expected_bound_with(spectrum, sigma, alpha, k, GapPolicy::Strict)
}

pub fn expected_bound_with(
    spectrum: &Spectrum,
    sigma: f64,
    alpha: f64,
    k: usize,
    policy: GapPolicy,
) -> Result<BoundBreakdown> {
    check_k(k, spectrum.rank())?;
    let sweep = BoundSweep::new(spectrum, sigma, alpha, policy)?;
    sweep.at(k)
}

/// Expected bounds for every `k = 1..=d`, sharing one gap precomputation.
#[derive(Debug, Clone)]
pub struct BoundSweep {
    rank: usize,
    breakdowns: Vec<BoundBreakdown>,
    /// Smallest `k` whose bound crosses a tied gap, if any.
    first_invalid: Option<(usize, f64)>,
}

impl BoundSweep {
    pub fn new(spectrum: &Spectrum, sigma: f64, alpha: f64, policy: GapPolicy) -> Result<Self> {
        check_alpha(alpha)?;
        check_sigma(sigma)?;
        let lambda = spectrum.positive();
        let d = lambda.len();
        if d == 0 {
            return Err(Error::InvalidArgument("spectrum has rank 0".into()));
        }
        let n = spectrum.ambient();
        let mut breakdowns = Vec::with_capacity(d);
        let mut first_invalid = None;

        if alpha == 0.0 {
            let tail = (n - d) as f64;
            let mut inverse_squares = 0.0;
            for k in 1..=d {
                inverse_squares += lambda[k - 1].powi(-2);
                let extra = 2.0 * sigma * sigma * tail * inverse_squares;
                let base = (d - k) as f64;
                let bias = base.sqrt();
                let direction = if extra > 0.0 {
                    extra / ((base + extra).sqrt() + bias)
                } else {
                    0.0
                };
                breakdowns.push(BoundBreakdown {
                    k,
                    bias,
                    magnitude_variance: 0.0,
                    direction_variance: direction,
                    total: bias + direction,
                });
            }
        } else {
            let w = |i: usize| {
                if i < d {
                    lambda[i].powf(2.0 * alpha)
                } else {
                    0.0
                }
            };
            let mut bias_sq = vec![0.0; d + 1];
            for i in (0..d).rev() {
                bias_sq[i] = bias_sq[i + 1] + w(i) * w(i);
            }
            let gaps = (sigma > 0.0).then(|| GapSums::new(spectrum, policy));
            if let Some(cut) = gaps.as_ref().and_then(GapSums::first_degenerate) {
                first_invalid = Some((cut, lambda[cut - 1]));
            }
            let magnitude_scale = 2.0 * (2.0 * n as f64).sqrt() * alpha * sigma;
            let mut magnitude_sum = 0.0;
            let mut direction_sum = 0.0;
            for (i, &tail_sq) in bias_sq[1..].iter().enumerate() {
                let k = i + 1;
                magnitude_sum += lambda[i].powf(4.0 * alpha - 2.0);
                if let Some(g) = &gaps {
                    if first_invalid.is_none_or(|(cut, _)| k < cut) {
                        direction_sum += (w(i) - w(i + 1)) * g.at(k).sqrt();
                    }
                }
                let bias = tail_sq.sqrt();
                let magnitude_variance = magnitude_scale * magnitude_sum.sqrt();
                let direction_variance = std::f64::consts::SQRT_2 * sigma * direction_sum;
                breakdowns.push(BoundBreakdown {
                    k,
                    bias,
                    magnitude_variance,
                    direction_variance,
                    total: bias + magnitude_variance + direction_variance,
                });
            }
        }
        Ok(BoundSweep {
            rank: d,
            breakdowns,
            first_invalid,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Breakdown at `k`, or [`Error::DegenerateGap`] when the bound at `k`
    /// involves a tied gap.
    pub fn at(&self, k: usize) -> Result<BoundBreakdown> {
        check_k(k, self.rank)?;
        match self.first_invalid {
            Some((cut, value)) if k >= cut => Err(Error::DegenerateGap { k: cut, value }),
            _ => Ok(self.breakdowns[k - 1]),
        }
    }

    /// All valid breakdowns in increasing `k`.
    pub fn valid(&self) -> &[BoundBreakdown] {
        match self.first_invalid {
            Some((cut, _)) => &self.breakdowns[..cut - 1],
            None => &self.breakdowns,
        }
    }

    /// Values of `k` excluded because of tied gaps.
    pub fn excluded(&self) -> std::ops::RangeInclusive<usize> {
        match self.first_invalid {
            Some((cut, _)) => cut..=self.rank,
            #[allow(clippy::reversed_empty_ranges)]
            None => 1..=0,
        }
    }
}

/// `σ √Σ_{i≤k<j≤n} (λ_i − λ_j)^{-2}`, the expected leakage of the top-`k`
/// noisy singular subspace out of the clean one.
pub fn subspace_perturbation_term(spectrum: &Spectrum, sigma: f64, k: usize) -> Result<f64> {
    check_sigma(sigma)?;
    let n = spectrum.ambient();
    check_k(k, n)?;
    if k == n {
        return Ok(0.0);
    }
    let gap = spectrum.get(k - 1) - spectrum.get(k);
    if gap <= 0.0 {
        return Err(Error::DegenerateGap {
            k,
            value: spectrum.get(k - 1),
        });
    }
    let stored = spectrum.values().len().max(k);
    let zeros = (n - stored) as f64;
    let mut total = 0.0;
    for i in 0..k {
        let li = spectrum.get(i);
        for j in k..stored {
            total += (li - spectrum.get(j)).powi(-2);
        }
        total += zeros * li.powi(-2);
    }
    Ok(sigma * total.sqrt())
}

/// Classical sin-Θ bound `σ √(k(n−k)) / δ_k` with `δ_k = λ_k − λ_{k+1}`.
pub fn sin_theta_bound(spectrum: &Spectrum, sigma: f64, k: usize) -> Result<f64> {
    check_sigma(sigma)?;
    let n = spectrum.ambient();
    check_k(k, n)?;
    let gap = spectrum.get(k - 1) - spectrum.get(k);
    if k == n {
        return Ok(0.0);
    }
    if gap <= 0.0 {
        return Err(Error::DegenerateGap {
            k,
            value: spectrum.get(k - 1),
        });
    }
    Ok(sigma * ((k * (n - k)) as f64).sqrt() / gap)
}

/// Whether `max_i |λ_i − λ̃_i| ≤ ‖Z‖₂`, up to round-off.
pub fn weyl_check(clean: &Spectrum, noisy: &Spectrum, noise_norm: f64) -> bool {
    let len = clean.values().len().max(noisy.values().len());
    let scale = clean.get(0).max(noisy.get(0)).max(noise_norm);
    let slack = 64.0 * f64::EPSILON * scale;
    (0..len).all(|i| (clean.get(i) - noisy.get(i)).abs() <= noise_norm + slack)
}
