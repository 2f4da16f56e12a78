//! Dense eigensolver helpers for the small fiber matrices.
//!
//! Everything here is `P×P` (or box-sized for the reference evolution),
//! so dense factorizations are the right tool. Hermitian problems go
//! through `SymmetricEigen`; general complex spectra come from the Schur
//! form, with eigenvectors recovered by shifted inverse iteration, which
//! converges immediately in the Gershgorin-separated regime this crate
//! operates in.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// complex matrix. The columns of the returned matrix follow the sorted
/// eigenvalue order.
pub fn eigh_complex(a: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = a.nrows();
    let se = nalgebra::SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real
/// symmetric matrix.
pub fn eigh_real(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let se = nalgebra::SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// All eigenvalues of a general complex matrix via the Schur form,
/// sorted by real part then imaginary part for determinism.
pub fn eigenvalues_complex(a: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    let schur = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::EigensolverFailure("complex Schur did not converge".into()))?;
    let (q, t) = schur.unpack();
    let recon = &q * &t * q.adjoint();
    let scale = a.norm().max(1.0);
    if (recon - a).norm() > 1e-9 * scale {
        return Err(Error::EigensolverFailure(
            "Schur reconstruction residual too large".into(),
        ));
    }
    let mut vals: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    vals.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(vals)
}

/// Eigenvector for a known (approximate) eigenvalue by shifted inverse
/// iteration, started from the basis vector `start`. Returns the refined
/// eigenpair.
pub fn inverse_iteration(
    a: &DMatrix<C64>,
    lambda: C64,
    start: usize,
) -> Result<(C64, DVector<C64>)> {
    let n = a.nrows();
    let scale = a.norm().max(1.0);
    let mut v = DVector::<C64>::zeros(n);
    v[start] = C64::new(1.0, 0.0);
    let mut lam = lambda;
    for attempt in 0..8 {
        // tiny shift keeps the solve well-posed when lam is exact
        let shift = lam + C64::new(1e-13 * scale * (attempt as f64 + 1.0), 0.0);
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= shift;
        }
        let lu = shifted.lu();
        let w = match lu.solve(&v) {
            Some(w) => w,
            None => continue,
        };
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            continue;
        }
        v = w / C64::new(norm, 0.0);
        // Rayleigh quotient refinement
        let av = a * &v;
        lam = v.dotc(&av);
        let residual = (&av - &v * lam).norm();
        if residual <= 1e-12 * scale {
            return Ok((lam, v));
        }
    }
    let av = a * &v;
    let residual = (&av - &v * lam).norm();
    if residual <= 1e-9 * scale {
        Ok((lam, v))
    } else {
        Err(Error::EigensolverFailure(format!(
            "inverse iteration stalled, residual {residual:.3e}"
        )))
    }
}

/// Matrix inverse through LU.
pub fn invert(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularQ("matrix not invertible".into()))
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone().singular_values()[0]
}

/// Maximum entry modulus.
pub fn max_abs_entry(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
