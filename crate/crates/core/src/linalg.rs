//! Dense linear algebra behind the PIP machinery.
//!
//! SVDs are thin, sorted by descending singular value, and sign-normalized so
//! that the largest-magnitude entry of every left singular vector is positive.
//! PIP quantities never depend on that choice; it only makes runs reproducible.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, QR, SVDDC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimate::Spectrum;
use crate::transforms::SignalMatrix;

/// Frobenius tolerance on `‖XᵀX − I‖` for inputs that must be orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// `m × r` left singular vectors, `r = min(m, n)`.
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    /// `r × n` right singular vectors (transposed).
    pub vt: Array2<f64>,
}

impl Svd {
    pub fn compute(a: &Array2<f64>) -> Result<Self> {
        let (m, n) = a.dim();
        let r = m.min(n);
        if r == 0 {
            return Ok(Svd {
                u: Array2::zeros((m, 0)),
                s: Array1::zeros(0),
                vt: Array2::zeros((0, n)),
            });
        }
        let (u, s, vt) = a.svddc(JobSvd::Some)?;
        let (mut u, mut vt) = match (u, vt) {
            (Some(u), Some(vt)) => (u, vt),
            _ => unreachable!("JobSvd::Some returns both factors"),
        };
        normalize_signs(&mut u, Some(&mut vt));
        Ok(Svd { u, s, vt })
    }

    /// Cut-off below which singular values are treated as round-off.
    pub fn tolerance(&self) -> f64 {
        let (m, n) = (self.u.nrows(), self.vt.ncols());
        let top = self.s.first().copied().unwrap_or(0.0);
        m.max(n) as f64 * f64::EPSILON * top
    }

    pub fn rank(&self) -> usize {
        let tol = self.tolerance();
        self.s.iter().filter(|v| **v > tol).count()
    }
}

/// Flips columns of `u` (and the matching rows of `vt`) so the entry of
/// largest magnitude in each column is positive.
fn normalize_signs(u: &mut Array2<f64>, mut vt: Option<&mut Array2<f64>>) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            u.column_mut(j).mapv_inplace(|v| -v);
            if let Some(vt) = vt.as_deref_mut() {
                vt.row_mut(j).mapv_inplace(|v| -v);
            }
        }
    }
}

/// `n × k` embedding matrix; row `i` is the vector of object `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Array2<f64>,
    /// Exponent on the singular values, when the embedding came from an SVD.
    pub alpha: Option<f64>,
    pub source_spectrum: Option<Spectrum>,
    pub provenance: String,
}

impl Embedding {
    pub fn new(values: Array2<f64>) -> Self {
        Embedding {
            values,
            alpha: None,
            source_spectrum: None,
            provenance: String::new(),
        }
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Embedding dimensionality `k`.
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

impl From<Array2<f64>> for Embedding {
    fn from(values: Array2<f64>) -> Self {
        Embedding::new(values)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

/// `U[:, ..k] · diag(s[..k]^α)` from a precomputed SVD, with `0^0 = 1`.
pub fn embed_from_svd(svd: &Svd, alpha: f64, k: usize) -> Result<Array2<f64>> {
    check_alpha(alpha)?;
    let r = svd.s.len();
    if k == 0 || k > r {
        return Err(Error::InvalidArgument(format!(
            "dimensionality k = {k} outside 1..={r}"
        )));
    }
    let mut e = svd.u.slice(s![.., ..k]).to_owned();
    for (mut col, lambda) in e.axis_iter_mut(Axis(1)).zip(svd.s.iter()) {
        let scale = lambda.powf(alpha);
        col.mapv_inplace(|v| v * scale);
    }
    Ok(e)
}

/// The embedding procedure `f_{α,k}(M) = U[:, ..k] · D[..k, ..k]^α`.
///
/// Reuses the matrix's cached SVD, so sweeping `k` costs one decomposition.
pub fn factorize(m: &SignalMatrix, alpha: f64, k: usize) -> Result<Embedding> {
    let svd = m.svd()?;
    let values = embed_from_svd(svd, alpha, k)?;
    let spectrum = Spectrum::new(svd.s.to_vec(), m.dim().0)?;
    Ok(Embedding {
        values,
        alpha: Some(alpha),
        source_spectrum: Some(spectrum),
        provenance: format!("f(alpha={alpha}, k={k}) of {}", m.transform),
    })
}

/// `E Eᵀ`.
pub fn pip_matrix(e: ArrayView2<'_, f64>) -> Array2<f64> {
    e.dot(&e.t())
}

/// `‖E Eᵀ‖_F`, computed as `‖EᵀE‖_F`.
pub fn pip_norm(e: ArrayView2<'_, f64>) -> f64 {
    frobenius(&e.t().dot(&e))
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖E₁E₁ᵀ − E₂E₂ᵀ‖_F`. The embeddings may differ in dimensionality.
///
/// When `k₁ + k₂ < n` both PIP matrices are expressed in an orthonormal basis
/// of the joint column span, which avoids forming `n × n` matrices and keeps
/// the difference free of cancellation.
pub fn pip_distance(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have {n} and {} rows",
            b.nrows()
        )));
    }
    let (k1, k2) = (a.ncols(), b.ncols());
    if k1 + k2 == 0 {
        return Ok(0.0);
    }
    if k1 + k2 >= n {
        return Ok(frobenius(&(pip_matrix(a) - pip_matrix(b))));
    }
    let mut joint = Array2::zeros((n, k1 + k2));
    joint.slice_mut(s![.., ..k1]).assign(&a);
    joint.slice_mut(s![.., k1..]).assign(&b);
    let (q, _) = joint.qr()?;
    let pa = q.t().dot(&a);
    let pb = q.t().dot(&b);
    Ok(frobenius(&(pip_matrix(pa.view()) - pip_matrix(pb.view()))))
}

/// `‖XᵀX − I‖_F`.
pub fn orthonormality_deviation(x: ArrayView2<'_, f64>) -> f64 {
    let mut g = x.t().dot(&x);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    frobenius(&g)
}

pub fn check_orthonormal(x: ArrayView2<'_, f64>) -> Result<()> {
    let deviation = orthonormality_deviation(x);
    if deviation <= ORTHONORMAL_TOL {
        Ok(())
    } else {
        Err(Error::NotOrthonormal {
            deviation,
            tolerance: ORTHONORMAL_TOL,
        })
    }
}

/// Cosines of the principal angles between two subspaces, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    pub cosines: Vec<f64>,
}

impl PrincipalAngles {
    pub fn angles(&self) -> Vec<f64> {
        self.cosines.iter().map(|c| c.acos()).collect()
    }

    pub fn sines(&self) -> Vec<f64> {
        self.cosines.iter().map(|c| (1.0 - c * c).max(0.0).sqrt()).collect()
    }
}

/// Singular values of `XᵀY` for orthonormal `X` (`n × k₁`) and `Y` (`n × k₂`).
pub fn principal_angles(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<PrincipalAngles> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces live in R^{} and R^{}",
            x.nrows(),
            y.nrows()
        )));
    }
    check_orthonormal(x)?;
    check_orthonormal(y)?;
    let cross = x.t().dot(&y);
    let mut cosines = singular_values(&cross)?;
    for c in &mut cosines {
        *c = c.clamp(0.0, 1.0);
    }
    Ok(PrincipalAngles { cosines })
}

/// Descending singular values.
pub fn singular_values(a: &Array2<f64>) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let (_, s, _) = a.svddc(JobSvd::None)?;
    Ok(s.to_vec())
}

/// Haar-distributed `n × k` matrix with orthonormal columns: the Q factor of
/// a standard Gaussian matrix with the signs of R's diagonal forced positive.
pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_orthonormal_with(&mut rng, n, k)
}

pub fn random_orthonormal_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
) -> Result<Array2<f64>> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {k} orthonormal columns in R^{n}"
        )));
    }
    if k == 0 {
        return Ok(Array2::zeros((n, 0)));
    }
    let g = Array2::from_shape_simple_fn((n, k), || rng.sample::<f64, _>(StandardNormal));
    let (mut q, r) = g.qr()?;
    for j in 0..k {
        if r[[j, j]] < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(q)
}

/// Orthonormal basis of the orthogonal complement of `span(X)` for a
/// full-column-rank `X` (`n × k`), as an `n × (n − k)` matrix.
pub fn orthonormal_complement(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (n, k) = x.dim();
    if k == 0 {
        return Ok(Array2::eye(n));
    }
    let (u, _, _) = x.to_owned().svddc(JobSvd::All)?;
    let u = u.expect("JobSvd::All returns U");
    Ok(u.slice(s![.., k..]).to_owned())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    /// `k × k` orthogonal map with `E₁·T ≈ E₂`.
    pub rotation: Array2<f64>,
    /// `‖E₁T − E₂‖_F`, minimal over all orthogonal `T`.
    pub residual: f64,
}

/// Orthogonal Procrustes: with `E₁ᵀE₂ = V Σ Wᵀ`, `T = V Wᵀ`.
pub fn procrustes_align(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Procrustes> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot align {:?} with {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let k = a.ncols();
    if k == 0 {
        return Ok(Procrustes {
            rotation: Array2::zeros((0, 0)),
            residual: 0.0,
        });
    }
    let cross = a.t().dot(&b);
    let (v, _, wt) = cross.svddc(JobSvd::All)?;
    let rotation = v.expect("U requested").dot(&wt.expect("Vt requested"));
    let residual = frobenius(&(a.dot(&rotation) - b));
    Ok(Procrustes { rotation, residual })
}

/// PIP losses between a fixed reference embedding `U diag(w)^{1/2}` and the
/// prefixes `Ũ[:, ..k] diag(μ[..k])^{1/2}` of a second one, for every
/// `k = 1..=Ũ.ncols()`.
///
/// Both frames must have orthonormal columns; `w` and `μ` are the squared
/// column norms (`λ^{2α}` for SVD embeddings). Writing `Ũ = U C + W` with
/// `Uᵀ W = 0`, the squared loss splits into orthogonal pieces
///
/// `‖diag(w) − C_k M_k C_kᵀ‖² + Σ_{i,j≤k} μ_i μ_j S_ij (2 G_ij + S_ij)`
///
/// with `S = WᵀW`, `G = CᵀC`. `W` is formed explicitly so nothing is recovered
/// from `I − CᵀC`, and the sweep costs `O(n d K + K d²)` overall.
pub fn pip_loss_sweep(
    reference: ArrayView2<'_, f64>,
    reference_weights: &[f64],
    estimate: ArrayView2<'_, f64>,
    estimate_weights: &[f64],
) -> Result<Vec<f64>> {
    let (n, d) = reference.dim();
    let k_max = estimate.ncols();
    if estimate.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "frames have {n} and {} rows",
            estimate.nrows()
        )));
    }
    if reference_weights.len() != d || estimate_weights.len() < k_max {
        return Err(Error::DimensionMismatch(
            "one weight per frame column is required".into(),
        ));
    }
    let c = reference.t().dot(&estimate); // d × K
    let w = &estimate - &reference.dot(&c); // n × K
    let s = w.t().dot(&w);
    let g = c.t().dot(&c);

    let mut a = Array2::<f64>::zeros((d, d));
    for (i, wi) in reference_weights.iter().enumerate() {
        a[[i, i]] = *wi;
    }
    let mu = &estimate_weights[..k_max];
    let mut cross = 0.0;
    let mut losses = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let ck = c.column(k);
        for i in 0..d {
            let scale = -mu[k] * ck[i];
            a.row_mut(i).scaled_add(scale, &ck);
        }
        let mut added = mu[k] * mu[k] * s[[k, k]] * (2.0 * g[[k, k]] + s[[k, k]]);
        for i in 0..k {
            added += 2.0 * mu[i] * mu[k] * s[[i, k]] * (2.0 * g[[i, k]] + s[[i, k]]);
        }
        cross += added;
        let direct: f64 = a.iter().map(|v| v * v).sum();
        losses.push((direct + cross).max(0.0).sqrt());
    }
    Ok(losses)
}
