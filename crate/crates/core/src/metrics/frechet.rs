//! Gaussian fits and the Fréchet (2-Wasserstein) distance between them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::EmbeddingSet;

const SYMMETRY_TOL: f64 = 1e-8;
const NEGATIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    count: usize,
}

impl GaussianStats {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, count: usize) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Shape(format!(
                "covariance is {}x{}, mean has {d}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if count < 2 {
            return Err(Error::Contract("Gaussian fit needs N >= 2".into()));
        }
        check_symmetric(&covariance)?;
        Ok(GaussianStats {
            mean,
            covariance,
            count,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not square",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.amax().max(1.0);
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Contract(format!(
                    "matrix not symmetric at ({i}, {j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Sample mean and unbiased (N − 1) covariance, computed in two passes.
pub fn gaussian_stats(x: &EmbeddingSet) -> Result<GaussianStats> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Contract(format!("Gaussian fit needs N >= 2, got {n}")));
    }
    let d = x.dim();
    let mut mean = DVector::<f64>::zeros(d);
    for row in x.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += f64::from(v);
        }
    }
    mean /= n as f64;
    let centered = DMatrix::from_fn(n, d, |i, j| f64::from(x.row(i)[j]) - mean[j]);
    let mut cov = centered.transpose() * &centered;
    cov /= (n - 1) as f64;
    symmetrize(&mut cov);
    Ok(GaussianStats {
        mean,
        covariance: cov,
        count: n,
    })
}

fn eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    check_symmetric(a)?;
    let mut s = a.clone();
    symmetrize(&mut s);
    Ok(SymmetricEigen::new(s))
}

/// Principal square root of a symmetric matrix with negative eigenvalues
/// clamped to zero.
pub fn sqrtm_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = eigen(a)?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let mut s = v * DMatrix::from_diagonal(&roots) * v.transpose();
    symmetrize(&mut s);
    Ok(s)
}

/// `‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2 (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2})`.
///
/// Totals slightly below zero (relative 1e-8 of the trace scale) are clamped.
pub fn frechet_distance(g1: &GaussianStats, g2: &GaussianStats) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::Shape(format!("dims differ: {} vs {}", g1.dim(), g2.dim())));
    }
    let mean_term = (&g1.mean - &g2.mean).norm_squared();
    let root1 = sqrtm_psd(&g1.covariance)?;
    let mut inner = &root1 * &g2.covariance * &root1;
    symmetrize(&mut inner);
    let cross: f64 = eigen(&inner)?.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    let traces = g1.covariance.trace() + g2.covariance.trace();
    let total = mean_term + traces - 2.0 * cross;
    if total < 0.0 {
        let scale = (mean_term + traces).max(1.0);
        if total < -NEGATIVE_TOL * scale {
            return Err(Error::Degenerate(format!(
                "Fréchet distance came out negative: {total}"
            )));
        }
        return Ok(0.0);
    }
    Ok(total)
}
