//! PIP-loss curves: analytic bounds, Monte-Carlo simulation and empirical
//! comparison of two matrices.

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Spectrum;
use crate::exec::Exec;
use crate::linalg::{pip_loss_sweep, random_orthonormal_with, Svd};
use crate::theory::BoundSweep;
use crate::transforms::SignalMatrix;

/// Default number of Monte-Carlo instances per curve.
pub const DEFAULT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    ExpectedBound,
    MonteCarlo,
    Empirical,
}

impl CurveMethod {
    pub fn name(self) -> &'static str {
        match self {
            CurveMethod::ExpectedBound => "expected_bound",
            CurveMethod::MonteCarlo => "monte_carlo",
            CurveMethod::Empirical => "empirical",
        }
    }
}

/// PIP loss `L(k)` against dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct PipCurve {
    pub alpha: f64,
    pub sigma: f64,
    pub ambient: usize,
    /// Strictly increasing.
    pub k_values: Vec<usize>,
    pub losses: Vec<f64>,
    /// Per-k sample standard deviation; zero for analytic curves.
    pub stddevs: Vec<f64>,
    pub samples: usize,
    pub method: CurveMethod,
}

impl PipCurve {
    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }

    /// Loss at dimensionality `k`, if it is on the curve.
    pub fn loss_at(&self, k: usize) -> Option<f64> {
        self.k_values
            .binary_search(&k)
            .ok()
            .map(|i| self.losses[i])
    }

    /// Curve of bound totals over the valid range of a sweep.
    pub fn from_bounds(sweep: &BoundSweep, spectrum: &Spectrum, sigma: f64, alpha: f64) -> Self {
        let points = sweep.valid();
        PipCurve {
            alpha,
            sigma,
            ambient: spectrum.ambient(),
            k_values: points.iter().map(|b| b.k).collect(),
            losses: points.iter().map(|b| b.total).collect(),
            stddevs: vec![0.0; points.len()],
            samples: 1,
            method: CurveMethod::ExpectedBound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub base_seed: u64,
    /// Use `V = U` and symmetrized noise instead of independent frames.
    pub symmetric: bool,
    pub exec: Exec,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            samples: DEFAULT_SAMPLES,
            base_seed: 0,
            symmetric: false,
            exec: Exec::default(),
        }
    }
}

fn check_inputs(spectrum: &Spectrum, sigma: f64, alpha: f64) -> Result<()> {
    if spectrum.rank() == 0 {
        return Err(Error::InvalidArgument("spectrum has rank 0".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn weights(values: impl Iterator<Item = f64>, alpha: f64) -> Vec<f64> {
    values.map(|v| v.powf(2.0 * alpha)).collect()
}

/// One synthetic instance: `M = U diag(λ) Vᵀ` with random orthonormal `n × d`
/// frames and `M̃ = M + Z` with iid `N(0, σ²)` noise. Returns
/// `‖PIP(f_{α,d}(M)) − PIP(f_{α,k}(M̃))‖` for `k = 1..=d`, from a single SVD.
pub fn simulate_instance(
    spectrum: &Spectrum,
    sigma: f64,
    alpha: f64,
    seed: u64,
    symmetric: bool,
) -> Result<Vec<f64>> {
    check_inputs(spectrum, sigma, alpha)?;
    let n = spectrum.ambient();
    let lambda = Array1::from(spectrum.positive().to_vec());
    let d = lambda.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthonormal_with(&mut rng, n, d)?;
    let v = if symmetric {
        u.clone()
    } else {
        random_orthonormal_with(&mut rng, n, d)?
    };
    let mut noisy = (&u * &lambda).dot(&v.t());
    if sigma > 0.0 {
        let z = Array2::from_shape_simple_fn((n, n), || sigma * rng.sample::<f64, _>(StandardNormal));
        if symmetric {
            noisy += &((&z + &z.t()) * std::f64::consts::FRAC_1_SQRT_2);
        } else {
            noisy += &z;
        }
    }
    let svd = Svd::compute(&noisy)?;
    pip_loss_sweep(
        u.view(),
        &weights(lambda.iter().copied(), alpha),
        svd.u.slice(s![.., ..d]),
        &weights(svd.s.iter().copied(), alpha),
    )
}

/// Mean and sample standard deviation of [`simulate_instance`] over seeds
/// `base_seed..base_seed + samples`. Aggregation order is fixed by seed, so
/// the result does not depend on the execution mode.
pub fn mc_curve(spectrum: &Spectrum, sigma: f64, alpha: f64, config: &MonteCarloConfig) -> Result<PipCurve> {
    check_inputs(spectrum, sigma, alpha)?;
    if config.samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let runs = config.exec.map(config.samples, |i| {
        simulate_instance(
            spectrum,
            sigma,
            alpha,
            config.base_seed.wrapping_add(i as u64),
            config.symmetric,
        )
    });
    let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;
    let d = spectrum.rank();
    let count = runs.len() as f64;
    let mut losses = vec![0.0; d];
    let mut stddevs = vec![0.0; d];
    for k in 0..d {
        let mean = runs.iter().map(|r| r[k]).sum::<f64>() / count;
        losses[k] = mean;
        if runs.len() > 1 {
            let ss: f64 = runs.iter().map(|r| (r[k] - mean).powi(2)).sum();
            stddevs[k] = (ss / (count - 1.0)).sqrt();
        }
    }
    Ok(PipCurve {
        alpha,
        sigma,
        ambient: spectrum.ambient(),
        k_values: (1..=d).collect(),
        losses,
        stddevs,
        samples: config.samples,
        method: CurveMethod::MonteCarlo,
    })
}

/// Actual PIP loss between `f_{α,d}(clean)` and `f_{α,k}(noisy)` for every
/// `k ≤ d`, where `d` is the numerical rank of `clean`.
pub fn empirical_curve(clean: &SignalMatrix, noisy: &SignalMatrix, alpha: f64) -> Result<PipCurve> {
    if clean.dim() != noisy.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrices are {:?} and {:?}",
            clean.dim(),
            noisy.dim()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let svd = clean.svd()?;
    let noisy_svd = noisy.svd()?;
    let d = svd.rank();
    if d == 0 {
        return Err(Error::InvalidArgument("clean matrix has rank 0".into()));
    }
    let losses = pip_loss_sweep(
        svd.u.slice(s![.., ..d]),
        &weights(svd.s.iter().take(d).copied(), alpha),
        noisy_svd.u.slice(s![.., ..d]),
        &weights(noisy_svd.s.iter().copied(), alpha),
    )?;
    Ok(PipCurve {
        alpha,
        sigma: f64::NAN,
        ambient: clean.dim().0,
        k_values: (1..=d).collect(),
        stddevs: vec![0.0; d],
        losses,
        samples: 1,
        method: CurveMethod::Empirical,
    })
}
