//! Noise level and clean-spectrum estimation.

use crate::error::{Error, Result};
use crate::transforms::SignalMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub sigma: f64,
    pub method: String,
    /// Seed of the corpus split the two matrices came from, if known.
    pub split_seed: Option<u64>,
}

impl NoiseEstimate {
    pub fn with_split_seed(mut self, seed: u64) -> Self {
        self.split_seed = Some(seed);
        self
    }
}

/// Non-increasing, nonnegative singular values of a matrix acting on `R^ambient`.
///
/// Entries past `values.len()` are implicitly zero up to `ambient`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    rank: usize,
    ambient: usize,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, ambient: usize) -> Result<Self> {
        if values.len() > ambient {
            return Err(Error::InvalidArgument(format!(
                "{} singular values exceed ambient dimension {ambient}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "singular values must be finite and nonnegative, found {bad}"
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(format!(
                "singular values must be non-increasing (entry {} exceeds entry {})",
                i + 2,
                i + 1
            )));
        }
        let rank = values.iter().filter(|v| **v > 0.0).count();
        Ok(Spectrum {
            values,
            rank,
            ambient,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Strictly positive values, `λ_1..λ_d`.
    pub fn positive(&self) -> &[f64] {
        &self.values[..self.rank]
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// `λ_{i+1}` (zero-based `i`), zero past the stored values.
    pub fn get(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }
}

fn same_shape(m1: &SignalMatrix, m2: &SignalMatrix) -> Result<()> {
    if m1.dim() == m2.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "matrices are {:?} and {:?}",
            m1.dim(),
            m2.dim()
        )))
    }
}

/// Count-twice estimate `‖M₁ − M₂‖_F / (2√(mn))` from matrices built on two
/// disjoint halves of a corpus.
pub fn estimate_noise(m1: &SignalMatrix, m2: &SignalMatrix) -> Result<NoiseEstimate> {
    same_shape(m1, m2)?;
    let (m, n) = m1.dim();
    if m * n == 0 {
        return Err(Error::InvalidArgument("empty matrices".into()));
    }
    let diff: f64 = m1
        .values()
        .iter()
        .zip(m2.values().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(NoiseEstimate {
        sigma: diff / (2.0 * ((m as f64) * (n as f64)).sqrt()),
        method: "count-twice".into(),
        split_seed: None,
    })
}

/// USVT threshold `2σ√max(m, n)`.
pub fn usvt_threshold(rows: usize, cols: usize, sigma: f64) -> f64 {
    2.0 * sigma * (rows.max(cols) as f64).sqrt()
}

/// Soft-thresholds the singular values of `noisy` at [`usvt_threshold`].
///
/// Values at or below the numerical-rank cut-off are reported as zero, so
/// `sigma = 0` yields the numerical rank.
pub fn estimate_spectrum(noisy: &SignalMatrix, sigma: f64) -> Result<Spectrum> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    let (m, n) = noisy.dim();
    let svd = noisy.svd()?;
    let t = usvt_threshold(m, n, sigma);
    let tol = svd.tolerance();
    let values = svd
        .s
        .iter()
        .map(|&v| if v <= tol { 0.0 } else { (v - t).max(0.0) })
        .collect();
    Spectrum::new(values, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthonormal;
    use ndarray::{array, Array1, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Normal;

    fn noise(n: usize, std: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let dist = Normal::new(0.0, std).unwrap();
        Array2::from_shape_simple_fn((n, n), || rng.sample(dist))
    }

    #[test]
    fn spectrum_validation() {
        let s = Spectrum::new(vec![3.0, 1.0, 0.0], 5).unwrap();
        assert_eq!(s.rank(), 2);
        assert_eq!(s.get(4), 0.0);
        assert_eq!(s.positive(), &[3.0, 1.0]);
        assert!(Spectrum::new(vec![1.0, 2.0], 2).is_err());
        assert!(Spectrum::new(vec![1.0, -0.5], 2).is_err());
        assert!(Spectrum::new(vec![1.0, 0.5, 0.1], 2).is_err());
        assert!(Spectrum::new(vec![f64::NAN], 2).is_err());
    }

    #[test]
    fn identical_halves_have_zero_noise() {
        let m = SignalMatrix::raw(array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(estimate_noise(&m, &m).unwrap().sigma, 0.0);
    }

    #[test]
    fn unit_difference_gives_half() {
        let a = Array2::from_elem((3, 5), 2.0);
        let b = Array2::from_elem((3, 5), 1.0);
        let est = estimate_noise(&SignalMatrix::raw(a), &SignalMatrix::raw(b)).unwrap();
        assert!((est.sigma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_shape_mismatch() {
        let a = SignalMatrix::raw(Array2::zeros((2, 3)));
        let b = SignalMatrix::raw(Array2::zeros((3, 2)));
        assert!(matches!(estimate_noise(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn recovers_known_sigma() {
        let n = 1000;
        let sigma = 0.35;
        let signal = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m1 = &signal + &noise(n, 2f64.sqrt() * sigma, &mut rng);
            let m2 = &signal + &noise(n, 2f64.sqrt() * sigma, &mut rng);
            let est = estimate_noise(&SignalMatrix::raw(m1), &SignalMatrix::raw(m2)).unwrap();
            assert!((est.sigma - sigma).abs() <= 0.05 * sigma, "seed {seed}: {}", est.sigma);
        }
    }

    #[test]
    fn zero_sigma_is_numerical_spectrum() {
        let m = SignalMatrix::raw(array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
        let s = estimate_spectrum(&m, 0.0).unwrap();
        assert_eq!(s.values(), &[3.0, 1.0, 0.0]);
        assert_eq!(s.rank(), 2);
        assert_eq!(s.ambient(), 3);
    }

    #[test]
    fn diagonal_threshold_example() {
        let m = SignalMatrix::raw(array![[10.0, 0.0], [0.0, 1.0]]);
        let s = estimate_spectrum(&m, 1.0).unwrap();
        let t = 2.0 * 2f64.sqrt();
        assert!((s.values()[0] - (10.0 - t)).abs() < 1e-14);
        assert!((s.values()[0] - 7.172).abs() < 1e-3);
        assert_eq!(s.values()[1], 0.0);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn negative_sigma_rejected() {
        let m = SignalMatrix::raw(Array2::eye(2));
        assert!(estimate_spectrum(&m, -1.0).is_err());
    }

    #[test]
    fn usvt_recovers_rank() {
        let n = 400;
        let d = 20;
        let sigma = 0.05;
        for seed in 0..20 {
            let u = random_orthonormal(n, d, 2 * seed).unwrap();
            let v = random_orthonormal(n, d, 2 * seed + 1).unwrap();
            let lambda = Array1::from_shape_fn(d, |i| 25.0 - (i + 1) as f64);
            let m = (&u * &lambda).dot(&v.t());
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let noisy = SignalMatrix::raw(m + noise(n, sigma, &mut rng));
            let s = estimate_spectrum(&noisy, sigma).unwrap();
            assert!((15..=25).contains(&s.rank()), "seed {seed}: rank {}", s.rank());
        }
    }

    fn small_matrix() -> impl Strategy<Value = Array2<f64>> {
        (1usize..6, 1usize..6).prop_flat_map(|(m, n)| {
            proptest::collection::vec(-5.0f64..5.0, m * n)
                .prop_map(move |v| Array2::from_shape_vec((m, n), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn noise_symmetric_and_homogeneous(a in small_matrix(), c in -4.0f64..4.0, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = a.mapv(|v| v + rng.random_range(-1.0..1.0));
            let ma = SignalMatrix::raw(a.clone());
            let mb = SignalMatrix::raw(b.clone());
            let ab = estimate_noise(&ma, &mb).unwrap().sigma;
            let ba = estimate_noise(&mb, &ma).unwrap().sigma;
            prop_assert_eq!(ab, ba);
            let scaled = estimate_noise(
                &SignalMatrix::raw(a * c),
                &SignalMatrix::raw(b * c),
            ).unwrap().sigma;
            prop_assert!((scaled - c.abs() * ab).abs() <= 1e-12 * (1.0 + ab));
        }

        #[test]
        fn spectrum_is_soft_threshold(a in small_matrix(), sigma in 0.0f64..2.0) {
            let m = SignalMatrix::raw(a);
            let (rows, cols) = m.dim();
            let s = estimate_spectrum(&m, sigma).unwrap();
            let svd = m.svd().unwrap();
            let t = usvt_threshold(rows, cols, sigma);
            prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
            for (est, raw) in s.values().iter().zip(svd.s.iter()) {
                if *raw > svd.tolerance() {
                    prop_assert_eq!(*est, (raw - t).max(0.0));
                } else {
                    prop_assert_eq!(*est, 0.0);
                }
            }
        }

        #[test]
        fn larger_sigma_never_increases(a in small_matrix(), s1 in 0.0f64..2.0, s2 in 0.0f64..2.0) {
            let m = SignalMatrix::raw(a);
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let a = estimate_spectrum(&m, lo).unwrap();
            let b = estimate_spectrum(&m, hi).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!(y <= x);
            }
        }
    }
}
