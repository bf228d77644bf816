//! Dimensionality selection from a PIP-loss curve, and forward-stability
//! diagnostics between embedding runs.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{pip_distance, pip_norm, Embedding};
use crate::montecarlo::{CurveMethod, PipCurve};

/// Near-optimality levels reported by default, in percent.
pub const DEFAULT_LEVELS: [f64; 4] = [5.0, 10.0, 20.0, 50.0];

/// Dimensionalities whose loss gap to the optimum is within `p`% of the gap
/// of the 1-dimensional embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub p: f64,
    pub lo: usize,
    pub hi: usize,
    /// False when some `k` inside `[lo, hi]` falls outside the level set.
    pub contiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub method: CurveMethod,
    pub alpha: f64,
    pub sigma: f64,
    pub rank_d: usize,
    pub k_star: usize,
    pub loss_at_k_star: f64,
    /// Sorted by increasing `p`.
    pub intervals: Vec<Interval>,
    pub curve: PipCurve,
    pub warnings: Vec<String>,
}

impl SelectionReport {
    pub fn interval(&self, p: f64) -> Option<&Interval> {
        self.intervals.iter().find(|i| i.p == p)
    }
}

/// Picks `k* = argmin L(k)` (smallest `k` on ties) and, for each level `p`,
/// the span of `{k : L(k) − L(k*) ≤ (p/100)(L(1) − L(k*))}`.
///
/// `L(1)` is read from the smallest `k` on the curve. When other `k` tie
/// with it at the minimum, every interval collapses to `[k*, k*]`.
pub fn select_dimension(curve: &PipCurve, p_levels: &[f64]) -> Result<SelectionReport> {
    if curve.is_empty() {
        return Err(Error::InvalidArgument("empty PIP curve".into()));
    }
    if curve.losses.len() != curve.k_values.len() {
        return Err(Error::DimensionMismatch(
            "curve has mismatched k and loss arrays".into(),
        ));
    }
    if curve.k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "curve k values must be strictly increasing".into(),
        ));
    }
    if let Some(bad) = curve.losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite loss {bad} on curve")));
    }
    let mut levels = p_levels.to_vec();
    if let Some(bad) = levels.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
        return Err(Error::InvalidArgument(format!("level {bad} outside (0, 100]")));
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut warnings = Vec::new();
    let mut best = 0;
    for (i, loss) in curve.losses.iter().enumerate() {
        if *loss < curve.losses[best] {
            best = i;
        }
    }
    let k_star = curve.k_values[best];
    let l_star = curve.losses[best];
    let first_k = curve.k_values[0];
    if first_k != 1 {
        warnings.push(format!(
            "curve starts at k = {first_k}; its loss is used as the 1-dimensional reference"
        ));
    }
    let gap = curve.losses[0] - l_star;
    let flat = gap == 0.0 && curve.losses[1..].contains(&l_star);
    if flat {
        warnings.push(format!(
            "flat curve: reference loss equals the minimum, intervals collapse to [{k_star}, {k_star}]"
        ));
    }
    let tol = 1e-12 * gap.abs();
    let intervals = levels
        .iter()
        .map(|&p| {
            if flat {
                return Interval {
                    p,
                    lo: k_star,
                    hi: k_star,
                    contiguous: true,
                };
            }
            let budget = p / 100.0 * gap;
            let inside: Vec<bool> = curve.losses.iter().map(|l| l - l_star <= budget + tol).collect();
            let first = inside.iter().position(|x| *x).unwrap_or(best);
            let last = inside.iter().rposition(|x| *x).unwrap_or(best);
            let contiguous = inside[first..=last].iter().all(|x| *x);
            Interval {
                p,
                lo: curve.k_values[first],
                hi: curve.k_values[last],
                contiguous,
            }
        })
        .collect::<Vec<_>>();
    for i in intervals.iter().filter(|i| !i.contiguous) {
        warnings.push(format!(
            "{}% level set is not contiguous; reporting its hull [{}, {}]",
            i.p, i.lo, i.hi
        ));
    }
    Ok(SelectionReport {
        method: curve.method,
        alpha: curve.alpha,
        sigma: curve.sigma,
        rank_d: *curve.k_values.last().expect("non-empty curve"),
        k_star,
        loss_at_k_star: l_star,
        intervals,
        curve: curve.clone(),
        warnings,
    })
}

/// `‖PIP(E₁) − PIP(E₂)‖² / (‖PIP(E₁)‖ · ‖PIP(E₂)‖)`.
pub fn nsr(e1: ArrayView2<'_, f64>, e2: ArrayView2<'_, f64>) -> Result<f64> {
    let n1 = pip_norm(e1);
    let n2 = pip_norm(e2);
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let d = pip_distance(e1, e2)?;
    Ok(d * d / (n1 * n2))
}

#[derive(Debug, Clone)]
pub struct StabilityMatrix {
    pub dims1: Vec<usize>,
    pub dims2: Vec<usize>,
    /// `nsr[[i, j]]` compares `run1[i]` with `run2[j]`; NaN where missing.
    pub nsr: Array2<f64>,
    /// Cells whose NSR could not be computed, with the reason.
    pub missing: Vec<(usize, usize, String)>,
}

/// NSR between every embedding of `run1` and every embedding of `run2`.
pub fn stability_matrix(run1: &[Embedding], run2: &[Embedding], exec: Exec) -> StabilityMatrix {
    let cols = run2.len();
    let cells = exec.map(run1.len() * cols, |idx| {
        nsr(run1[idx / cols].view(), run2[idx % cols].view())
    });
    let mut values = Array2::from_elem((run1.len(), cols), f64::NAN);
    let mut missing = Vec::new();
    for (idx, cell) in cells.into_iter().enumerate() {
        let (i, j) = (idx / cols, idx % cols);
        match cell {
            Ok(v) => values[[i, j]] = v,
            Err(e) => missing.push((i, j, e.to_string())),
        }
    }
    StabilityMatrix {
        dims1: run1.iter().map(Embedding::dim).collect(),
        dims2: run2.iter().map(Embedding::dim).collect(),
        nsr: values,
        missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{embed_from_svd, random_orthonormal, Svd};
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn curve(losses: Vec<f64>) -> PipCurve {
        let n = losses.len();
        PipCurve {
            alpha: 0.5,
            sigma: 0.1,
            ambient: 100,
            k_values: (1..=n).collect(),
            losses,
            stddevs: vec![0.0; n],
            samples: 1,
            method: CurveMethod::ExpectedBound,
        }
    }

    #[test]
    fn decreasing_curve_selects_last() {
        let c = curve((1..=12).map(|k| 1.0 / k as f64).collect());
        let r = select_dimension(&c, &DEFAULT_LEVELS).unwrap();
        assert_eq!(r.k_star, 12);
        assert!(r.intervals.iter().all(|i| i.hi == 12));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn v_shaped_curve() {
        let c = curve((1..=20).map(|k: i64| ((k - 10).abs() + 1) as f64).collect());
        let r = select_dimension(&c, &[50.0]).unwrap();
        assert_eq!(r.k_star, 10);
        assert_eq!(r.loss_at_k_star, 1.0);
        let i = r.interval(50.0).unwrap();
        assert_eq!((i.lo, i.hi), (6, 14));
        assert!(i.contiguous);
        assert_eq!(r.intervals.len(), 1);
    }

    #[test]
    fn ties_break_to_smallest() {
        let c = curve(vec![5.0, 2.0, 1.0, 1.0, 3.0]);
        assert_eq!(select_dimension(&c, &[5.0]).unwrap().k_star, 3);
    }

    #[test]
    fn flat_curve_warns() {
        let c = curve(vec![1.0, 1.0, 1.0]);
        let r = select_dimension(&c, &DEFAULT_LEVELS).unwrap();
        assert_eq!(r.k_star, 1);
        assert!(r.intervals.iter().all(|i| (i.lo, i.hi) == (1, 1)));
        assert_eq!(r.warnings.len(), 1);

        let c = curve(vec![2.0, 3.0, 2.0, 4.0]);
        let r = select_dimension(&c, &[5.0]).unwrap();
        assert_eq!(r.k_star, 1);
        assert_eq!(r.interval(5.0).unwrap().hi, 1);
        assert_eq!(r.warnings.len(), 1);

        let c = curve(vec![1.0, 2.0, 3.0]);
        let r = select_dimension(&c, &DEFAULT_LEVELS).unwrap();
        assert_eq!(r.k_star, 1);
        assert!(r.intervals.iter().all(|i| (i.lo, i.hi) == (1, 1)));
        assert!(r.warnings.is_empty());

        let c = PipCurve { k_values: vec![2, 3, 4], ..curve(vec![1.0, 0.8, 0.5]) };
        let r = select_dimension(&c, &[5.0]).unwrap();
        assert_eq!(r.k_star, 4);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn non_contiguous_level_set_is_flagged() {
        let c = curve(vec![10.0, 1.0, 8.0, 1.5, 9.0]);
        let r = select_dimension(&c, &[10.0]).unwrap();
        let i = r.interval(10.0).unwrap();
        assert_eq!((i.lo, i.hi), (2, 4));
        assert!(!i.contiguous);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn invalid_inputs() {
        assert!(select_dimension(&curve(vec![]), &[5.0]).is_err());
        assert!(select_dimension(&curve(vec![1.0]), &[0.0]).is_err());
        assert!(select_dimension(&curve(vec![1.0]), &[101.0]).is_err());
        assert!(select_dimension(&curve(vec![f64::NAN]), &[5.0]).is_err());
    }

    #[test]
    fn nsr_examples() {
        let eye = Array2::<f64>::eye(2);
        let half = array![[1.0, 0.0], [0.0, 0.0]];
        let v = nsr(eye.view(), half.view()).unwrap();
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(v, nsr(half.view(), eye.view()).unwrap());

        let e = random_orthonormal(10, 3, 1).unwrap() * 2.0;
        let u = random_orthonormal(3, 3, 2).unwrap();
        assert!(nsr(e.view(), e.dot(&u).view()).unwrap() < 1e-12);

        let zero = Array2::<f64>::zeros((2, 2));
        assert!(matches!(nsr(eye.view(), zero.view()), Err(Error::ZeroNorm)));
    }

    #[test]
    fn stability_of_identical_runs() {
        let run: Vec<Embedding> = (1..=4)
            .map(|k| Embedding::new(random_orthonormal(12, k, k as u64).unwrap()))
            .collect();
        let m = stability_matrix(&run, &run, Exec::Sequential);
        assert_eq!(m.dims1, vec![1, 2, 3, 4]);
        for i in 0..4 {
            assert!(m.nsr[[i, i]].abs() < 1e-12);
        }
        assert!(m.missing.is_empty());

        let rotated: Vec<Embedding> = run
            .iter()
            .map(|e| {
                let u = random_orthonormal(e.dim(), e.dim(), 99).unwrap();
                Embedding::new(e.values.dot(&u))
            })
            .collect();
        let m = stability_matrix(&run, &rotated, Exec::Parallel);
        for i in 0..4 {
            assert!(m.nsr[[i, i]] <= 1e-10);
        }
    }

    #[test]
    fn stability_records_missing_cells() {
        let run = vec![Embedding::new(Array2::eye(3)), Embedding::new(Array2::zeros((3, 2)))];
        let m = stability_matrix(&run, &run, Exec::Sequential);
        assert_eq!(m.missing.len(), 3);
        assert!(m.nsr[[1, 1]].is_nan());
        assert_eq!(m.nsr[[0, 0]], 0.0);
    }

    #[test]
    fn stability_band_structure() {
        let n = 100;
        let d = 30;
        let lambda = Array1::from_shape_fn(d, |i| 10.0 / (i + 1) as f64);
        let u = random_orthonormal(n, d, 5).unwrap();
        let v = random_orthonormal(n, d, 6).unwrap();
        let signal = (&u * &lambda).dot(&v.t());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut run = || {
            let z = Array2::from_shape_simple_fn((n, n), || 0.01 * rng.sample::<f64, _>(StandardNormal));
            let svd = Svd::compute(&(&signal + &z)).unwrap();
            (1..=d)
                .map(|k| Embedding::new(embed_from_svd(&svd, 0.5, k).unwrap()))
                .collect::<Vec<_>>()
        };
        let (r1, r2) = (run(), run());
        let m = stability_matrix(&r1, &r2, Exec::default());
        for i in 0..d {
            assert!(m.nsr[[i, i]] < 0.1, "diag {i}: {}", m.nsr[[i, i]]);
            if i + 5 < d {
                assert!(m.nsr[[i, i]] < m.nsr[[i, i + 5]]);
                assert!(m.nsr[[i + 5, i + 5]] < m.nsr[[i, i + 5]]);
            }
        }
    }

    proptest! {
        #[test]
        fn intervals_nest_and_contain_argmin(
            losses in proptest::collection::vec(0.0f64..10.0, 1..40),
            scale in 0.01f64..100.0,
        ) {
            let c = curve(losses.clone());
            let r = select_dimension(&c, &[50.0, 5.0, 20.0, 10.0]).unwrap();
            for i in &r.intervals {
                prop_assert!(i.lo <= r.k_star && r.k_star <= i.hi);
            }
            for w in r.intervals.windows(2) {
                prop_assert!(w[0].p < w[1].p);
                prop_assert!(w[1].lo <= w[0].lo && w[0].hi <= w[1].hi);
            }
            let scaled = select_dimension(&curve(losses.iter().map(|l| l * scale).collect()), &[50.0, 5.0, 20.0, 10.0]).unwrap();
            prop_assert_eq!(scaled.k_star, r.k_star);
            prop_assert_eq!(
                scaled.intervals.iter().map(|i| (i.lo, i.hi)).collect::<Vec<_>>(),
                r.intervals.iter().map(|i| (i.lo, i.hi)).collect::<Vec<_>>()
            );
        }

        #[test]
        fn nsr_rotation_invariant(n in 2usize..20, k in 1usize..5, seed: u64) {
            let k = k.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = Array2::from_shape_simple_fn((n, k), || rng.sample::<f64, _>(StandardNormal));
            let u = random_orthonormal(k, k, seed.wrapping_add(1)).unwrap();
            prop_assert!(nsr(e.view(), e.dot(&u).view()).unwrap() <= 1e-10);
        }
    }
}
