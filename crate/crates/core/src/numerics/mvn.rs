//! Multivariate normal and inverse-Wishart sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::rng::SeededRng;
use crate::error::{Error, Result};

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::NotSymmetric(worst));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Pivoted Cholesky: returns `F` with `m = F Fᵀ`, allowing rank deficiency.
fn pivoted_cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let max_diag = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 10.0 * n as f64 * f64::EPSILON * max_diag.max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (piv, dmax) = (k..n)
            .map(|j| (j, a[(j, j)]))
            .fold(
                (k, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        if dmax <= tol {
            // Remaining block must vanish for the matrix to be PSD.
            for i in k..n {
                if a[(i, i)] < -tol {
                    return Err(Error::NotPositiveDefinite(format!(
                        "negative pivot {:e} at step {k}",
                        a[(i, i)]
                    )));
                }
                for j in k..n {
                    if a[(i, j)].abs() > tol.max(1e-12 * max_diag) {
                        return Err(Error::NotPositiveDefinite(format!(
                            "residual entry {:e} after rank {k}",
                            a[(i, j)]
                        )));
                    }
                }
            }
            break;
        }
        if piv != k {
            a.swap_rows(k, piv);
            a.swap_columns(k, piv);
            l.swap_rows(k, piv);
            perm.swap(k, piv);
        }
        let d = a[(k, k)].sqrt();
        l[(k, k)] = d;
        for i in k + 1..n {
            l[(i, k)] = a[(i, k)] / d;
        }
        for i in k + 1..n {
            for j in k + 1..=i {
                let v = a[(i, j)] - l[(i, k)] * l[(j, k)];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    // Undo the permutation: row perm[i] of F is row i of L.
    let mut f = DMatrix::<f64>::zeros(n, n);
    for (i, &p) in perm.iter().enumerate() {
        f.set_row(p, &l.row(i));
    }
    Ok(f)
}

/// Factor a symmetric PSD matrix as `F Fᵀ`.
///
/// Plain Cholesky first; on failure a pivoted factorization handles exact
/// rank deficiency, and a single diagonal jitter of `1e-10·trace/dim`
/// absorbs round-off. Anything still indefinite is rejected.
pub fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    match pivoted_cholesky(m) {
        Ok(f) => Ok(f),
        Err(_) => {
            let n = m.nrows();
            let jitter = 1e-10 * m.trace() / n as f64;
            log::warn!("covariance not PSD to round-off; adding jitter {jitter:e}");
            let mut j = m.clone();
            for i in 0..n {
                j[(i, i)] += jitter.abs();
            }
            pivoted_cholesky(&j).map_err(|e| match e {
                Error::NotPositiveDefinite(msg) => {
                    Error::NotPositiveDefinite(format!("{msg} (after jitter {jitter:e})"))
                }
                other => other,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct MultivariateNormal {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MultivariateNormal {
    pub fn new(mean: DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::InvalidArgument(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let factor = psd_factor(covariance)?;
        Ok(MultivariateNormal { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Draw into `out` (length `dim`).
    pub fn sample_into(&self, rng: &mut SeededRng, z: &mut [f64], out: &mut [f64]) {
        let n = self.dim();
        for v in z.iter_mut().take(n) {
            *v = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate().take(n) {
                acc += self.factor[(i, j)] * zj;
            }
            out[i] = self.mean[i] + acc;
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> DVector<f64> {
        let n = self.dim();
        let mut z = vec![0.0; n];
        let mut out = vec![0.0; n];
        self.sample_into(rng, &mut z, &mut out);
        DVector::from_vec(out)
    }
}

/// Draw a multivariate normal vector.
pub fn sample_mvn(
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
    rng: &mut SeededRng,
) -> Result<DVector<f64>> {
    Ok(MultivariateNormal::new(mean.clone(), covariance)?.sample(rng))
}

/// Inverse-Wishart `W⁻¹(Ψ, ν)` with `E[Σ] = Ψ/(ν − p − 1)`.
///
/// Each draw inverts a Wishart(Ψ⁻¹, ν) matrix built by the Bartlett
/// decomposition.
#[derive(Clone, Debug)]
pub struct InverseWishart {
    inv_scale_chol: DMatrix<f64>,
    dof: usize,
}

impl InverseWishart {
    pub fn new(scale: &DMatrix<f64>, dof: usize) -> Result<Self> {
        check_symmetric(scale)?;
        let p = scale.nrows();
        if dof <= p + 1 {
            return Err(Error::InvalidArgument(format!(
                "inverse-Wishart needs dof > dim + 1 (dof {dof}, dim {p})"
            )));
        }
        let chol = scale.clone().cholesky().ok_or_else(|| {
            Error::NotPositiveDefinite("inverse-Wishart scale must be positive definite".into())
        })?;
        let inv = chol.inverse();
        let inv_sym = (&inv + inv.transpose()) * 0.5;
        let inv_scale_chol = inv_sym
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("inverse of scale".into()))?
            .l();
        Ok(InverseWishart {
            inv_scale_chol,
            dof,
        })
    }

    pub fn dim(&self) -> usize {
        self.inv_scale_chol.nrows()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> DMatrix<f64> {
        let p = self.dim();
        let mut bartlett = DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            let chi = ChiSquared::new((self.dof - i) as f64).expect("dof > dim");
            bartlett[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                bartlett[(i, j)] = rng.sample(StandardNormal);
            }
        }
        // W = M Mᵀ with M lower triangular; W⁻¹ = M⁻ᵀ M⁻¹.
        let m = &self.inv_scale_chol * bartlett;
        let m_inv = m
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .expect("Bartlett factor has positive diagonal");
        let sigma = m_inv.transpose() * &m_inv;
        let mut out = sigma.clone();
        for i in 0..p {
            for j in 0..i {
                let v = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

pub fn sample_inverse_wishart(
    scale: &DMatrix<f64>,
    dof: usize,
    rng: &mut SeededRng,
) -> Result<DMatrix<f64>> {
    Ok(InverseWishart::new(scale, dof)?.sample(rng))
}

/// Rescale a covariance matrix to a correlation matrix.
pub fn covariance_to_correlation(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(cov)?;
    let n = cov.nrows();
    let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].sqrt()).collect();
    if sd.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::NotPositiveDefinite(
            "covariance has a non-positive diagonal".into(),
        ));
    }
    let mut r = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = cov[(i, j)] / (sd[i] * sd[j]);
        }
        let d = r[(i, i)];
        assert!((d - 1.0).abs() < 1e-12, "diagonal {d} after rescaling");
        r[(i, i)] = 1.0;
    }
    Ok(r)
}
