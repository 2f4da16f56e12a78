//! Floquet matrices of the periodic operator and their spectra.
//!
//! Restricting `H = Δ + V` to quasi-periodic states `ψ(n + p_j e_j) =
//! z_j ψ(n)` produces a `P×P` matrix family. The symbolic Laplacian
//! `Δ(z)` is assembled once per model: a hop that stays inside the
//! fundamental cell contributes `1`, a hop wrapping in the `+j`
//! direction contributes `z_j` (on the row of the site being evaluated),
//! and a `−j` wrap contributes `z_j^{-1}`. Degenerate periods fall out
//! of the same rule: `p_j = 1` puts `z_j + z_j^{-1}` on the diagonal and
//! `p_j = 2` yields entries of the form `1 + z_j^{∓1}`.
//!
//! Numerically we work with two scalings of the same pencil,
//! `A_ε(z) = εΔ(z) + diag V` and `H_μ(z) = Δ(z) + μ·diag V = μ A_{1/μ}(z)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::LatticeModel;
use crate::laurent::LaurentPoly;
use crate::linalg::{self, C64};

/// Square matrix of Laurent polynomials indexed by the fundamental cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentMatrix {
    dim: usize,
    vars: usize,
    entries: Vec<LaurentPoly>,
}

impl LaurentMatrix {
    pub fn zeros(dim: usize, vars: usize) -> Self {
        LaurentMatrix {
            dim,
            vars,
            entries: vec![LaurentPoly::zero(vars); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn at(&self, row: usize, col: usize) -> &LaurentPoly {
        &self.entries[row * self.dim + col]
    }

    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut LaurentPoly {
        &mut self.entries[row * self.dim + col]
    }

    /// Numeric evaluation at a quasimomentum point.
    pub fn evaluate(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = self.at(r, c).evaluate(z)?;
                m[(r, c)] = C64::new(v.re, v.im);
            }
        }
        Ok(m)
    }

    /// Entry-wise θ-derivative in direction `i` (on `z = e^{iθ}`).
    pub fn theta_derivative(&self, i: usize) -> Self {
        LaurentMatrix {
            dim: self.dim,
            vars: self.vars,
            entries: self.entries.iter().map(|p| p.theta_derivative(i)).collect(),
        }
    }
}

/// Split of the Floquet Laplacian into a scalar part living on the
/// diagonal and a hopping matrix with exactly zero diagonal.
///
/// `Δ(z) = s(z)·I + B(z)` with `s(z) = Σ_{j : p_j = 1} (z_j + z_j^{-1})`.
/// The perturbation recursion requires the zero diagonal of `B`; the
/// scalar part rigidly shifts every eigenvalue and is added back at
/// evaluation time.
#[derive(Clone, Debug)]
pub struct HoppingDecomposition {
    pub scalar: LaurentPoly,
    pub hopping: LaurentMatrix,
}

/// Eigenvalue labeling carried by a [`BandSpectrum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Labeling {
    /// Ascending by real part (the band functions `λ₁ ≤ … ≤ λ_P`).
    Sorted,
    /// Indexed by the cell offset whose potential value the eigenvalue
    /// continues from.
    ByPotential,
}

/// Spectrum of one Floquet fiber.
#[derive(Clone, Debug)]
pub struct BandSpectrum {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Option<DMatrix<C64>>,
    pub labeling: Labeling,
}

impl BandSpectrum {
    /// Real parts, meaningful for Hermitian fibers.
    pub fn energies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.re).collect()
    }
}

/// Membership test for the annulus `𝒜(ρ)`: all `|log|z_j|| < ρ`.
#[derive(Clone, Copy, Debug)]
pub struct AnnulusSpec {
    pub rho: f64,
}

impl AnnulusSpec {
    pub fn contains(&self, z: &[C64]) -> bool {
        z.iter().all(|zj| {
            let r = zj.norm();
            r > 0.0 && r.ln().abs() < self.rho
        })
    }
}

/// Labeled diagonalization `Q^{-1} A Q = diag(η_n)` with columns
/// normalized so the `n`-th component of the `n`-th column equals 1.
#[derive(Clone, Debug)]
pub struct Diagonalizer {
    pub q: DMatrix<C64>,
    pub q_inv: DMatrix<C64>,
    /// Eigenvalues indexed by cell offset.
    pub eta: Vec<C64>,
}

/// Symbolic Floquet Laplacian `Δ(z)`.
pub fn floquet_laplacian(model: &LatticeModel) -> LaurentMatrix {
    let p_count = model.cell_size();
    let d = model.dims();
    let mut delta = LaurentMatrix::zeros(p_count, d);
    for row in 0..p_count {
        let w = model.index_offset(row);
        for j in 0..d {
            let pj = model.period(j) as i64;
            // neighbor in +j
            let mut wp = w.clone();
            let (col_p, mono_p): (usize, i64) = if w[j] + 1 < pj {
                wp[j] += 1;
                (model.offset_index(&wp), 0)
            } else {
                wp[j] = 0;
                (model.offset_index(&wp), 1)
            };
            add_monomial(&mut delta, row, col_p, j, mono_p);
            // neighbor in −j
            let mut wm = w.clone();
            let (col_m, mono_m): (usize, i64) = if w[j] > 0 {
                wm[j] -= 1;
                (model.offset_index(&wm), 0)
            } else {
                wm[j] = pj - 1;
                (model.offset_index(&wm), -1)
            };
            add_monomial(&mut delta, row, col_m, j, mono_m);
        }
    }
    delta
}

fn add_monomial(m: &mut LaurentMatrix, row: usize, col: usize, j: usize, exp: i64) {
    let vars = m.vars();
    let term = if exp == 0 {
        LaurentPoly::one(vars)
    } else {
        LaurentPoly::variable(vars, j, exp)
    };
    let cur = m.at(row, col).add(&term).expect("same vars");
    *m.at_mut(row, col) = cur;
}

/// Scalar/off-diagonal split of the Floquet Laplacian.
pub fn decompose(model: &LatticeModel) -> Result<HoppingDecomposition> {
    let delta = floquet_laplacian(model);
    let d = model.dims();
    let mut scalar = LaurentPoly::zero(d);
    for j in 0..d {
        if model.period(j) == 1 {
            scalar = scalar
                .add(&LaurentPoly::variable(d, j, 1))?
                .add(&LaurentPoly::variable(d, j, -1))?;
        }
    }
    let mut hopping = delta;
    for i in 0..hopping.dim() {
        let resid = hopping.at(i, i).sub(&scalar)?;
        *hopping.at_mut(i, i) = resid;
        if !hopping.at(i, i).is_zero() {
            return Err(Error::NonzeroDiagonalResidual(i));
        }
    }
    Ok(HoppingDecomposition { scalar, hopping })
}

fn check_nonzero_z(z: &[C64]) -> Result<()> {
    for (j, zj) in z.iter().enumerate() {
        if zj.norm() == 0.0 {
            return Err(Error::ZeroVariable(j));
        }
    }
    Ok(())
}

/// Numeric `A_ε(z) = ε·Δ(z) + diag V`.
pub fn assemble(model: &LatticeModel, eps: f64, z: &[C64]) -> Result<DMatrix<C64>> {
    check_nonzero_z(z)?;
    let delta = floquet_laplacian(model).evaluate(z)?;
    let p_count = model.cell_size();
    let mut a = delta * C64::new(eps, 0.0);
    for i in 0..p_count {
        a[(i, i)] += C64::new(model.potential_f64(i), 0.0);
    }
    Ok(a)
}

/// Numeric `H_μ(z) = Δ(z) + μ·diag V`.
pub fn assemble_coupled(model: &LatticeModel, mu: f64, z: &[C64]) -> Result<DMatrix<C64>> {
    check_nonzero_z(z)?;
    let delta = floquet_laplacian(model).evaluate(z)?;
    let p_count = model.cell_size();
    let mut h = delta;
    for i in 0..p_count {
        h[(i, i)] += C64::new(mu * model.potential_f64(i), 0.0);
    }
    Ok(h)
}

pub fn torus_point(theta: &[f64]) -> Vec<C64> {
    theta.iter().map(|&t| C64::from_polar(1.0, t)).collect()
}

/// Sorted real bands of the Hermitian fiber `H_μ(e^{iθ})` with
/// orthonormal eigenvectors.
pub fn hermitian_bands(model: &LatticeModel, mu: f64, theta: &[f64]) -> Result<BandSpectrum> {
    let z = torus_point(theta);
    let h = assemble_coupled(model, mu, &z)?;
    let scale = h.norm().max(1.0);
    let herm_defect = (&h - h.adjoint()).norm();
    if herm_defect > 1e-12 * scale {
        return Err(Error::EigensolverFailure(format!(
            "fiber not Hermitian on the torus, defect {herm_defect:.3e}"
        )));
    }
    let (vals, vecs) = linalg::eigh_complex(&h)?;
    for (i, &lam) in vals.iter().enumerate() {
        let v = vecs.column(i);
        let r = (&h * v) - v * C64::new(lam, 0.0);
        if r.norm() > 1e-10 * scale {
            return Err(Error::EigensolverFailure(format!(
                "residual {:.3e} for band {i}",
                r.norm()
            )));
        }
    }
    Ok(BandSpectrum {
        eigenvalues: vals.into_iter().map(|l| C64::new(l, 0.0)).collect(),
        eigenvectors: Some(vecs),
        labeling: Labeling::Sorted,
    })
}

/// Complex spectrum of the general (non-Hermitian) fiber `A_ε(z)`,
/// sorted by real part for determinism.
pub fn general_spectrum(model: &LatticeModel, eps: f64, z: &[C64]) -> Result<BandSpectrum> {
    let a = assemble(model, eps, z)?;
    let vals = linalg::eigenvalues_complex(&a)?;
    Ok(BandSpectrum {
        eigenvalues: vals,
        eigenvectors: None,
        labeling: Labeling::Sorted,
    })
}

/// Gershgorin disc data of `A_ε(z)`: center `V(w)` and radius
/// `|ε|·Σ_c |Δ(z)_{w,c}|` per cell offset. The row sum includes the
/// diagonal `|s(z)|` contribution present when some `p_j = 1`.
fn gershgorin_discs(model: &LatticeModel, eps: f64, z: &[C64]) -> Result<Vec<(f64, f64)>> {
    let delta = floquet_laplacian(model).evaluate(z)?;
    let p_count = model.cell_size();
    let mut discs = Vec::with_capacity(p_count);
    for w in 0..p_count {
        let radius: f64 = (0..p_count).map(|c| delta[(w, c)].norm()).sum();
        discs.push((model.potential_f64(w), eps.abs() * radius));
    }
    Ok(discs)
}

/// Assign each eigenvalue of `A_ε(z)` to the unique cell offset whose
/// Gershgorin disc contains it. Fails with [`Error::DiscOverlap`] when
/// the discs are not pairwise disjoint and with
/// [`Error::AmbiguousAssignment`] when the assignment is not a bijection.
pub fn label_by_potential(model: &LatticeModel, eps: f64, z: &[C64]) -> Result<Vec<C64>> {
    let discs = gershgorin_discs(model, eps, z)?;
    let p_count = model.cell_size();
    for a in 0..p_count {
        for b in (a + 1)..p_count {
            let gap = (discs[a].0 - discs[b].0).abs();
            if gap <= discs[a].1 + discs[b].1 {
                return Err(Error::DiscOverlap(format!(
                    "cells {a} and {b}: centers gap {gap:.6e} ≤ radii {:.6e} + {:.6e}",
                    discs[a].1, discs[b].1
                )));
            }
        }
    }
    let spectrum = general_spectrum(model, eps, z)?;
    let mut labeled: Vec<Option<C64>> = vec![None; p_count];
    for &lam in &spectrum.eigenvalues {
        let mut hits = (0..p_count).filter(|&w| {
            (lam - C64::new(discs[w].0, 0.0)).norm() <= discs[w].1 * (1.0 + 1e-12) + 1e-14
        });
        let w = match (hits.next(), hits.next()) {
            (Some(w), None) => w,
            (None, _) => {
                return Err(Error::AmbiguousAssignment(format!(
                    "eigenvalue {lam} lies in no disc"
                )))
            }
            (Some(_), Some(_)) => {
                return Err(Error::AmbiguousAssignment(format!(
                    "eigenvalue {lam} lies in several discs"
                )))
            }
        };
        if labeled[w].is_some() {
            return Err(Error::AmbiguousAssignment(format!(
                "two eigenvalues assigned to cell {w}"
            )));
        }
        labeled[w] = Some(lam);
    }
    Ok(labeled.into_iter().map(|l| l.expect("bijection")).collect())
}

/// Labeled diagonalization of `A_ε(z)` with the `(u_n)_n ≡ 1` column
/// normalization.
pub fn diagonalizer(model: &LatticeModel, eps: f64, z: &[C64]) -> Result<Diagonalizer> {
    let a = assemble(model, eps, z)?;
    let eta = label_by_potential(model, eps, z)?;
    let p_count = model.cell_size();
    let mut q = DMatrix::<C64>::zeros(p_count, p_count);
    let mut eta_refined = Vec::with_capacity(p_count);
    for w in 0..p_count {
        let (lam, v) = linalg::inverse_iteration(&a, eta[w], w)?;
        let pivot = v[w];
        if pivot.norm() < 1e-8 {
            return Err(Error::SingularQ(format!(
                "eigenvector for cell {w} has vanishing {w}-component"
            )));
        }
        let col = DVector::from_iterator(p_count, v.iter().map(|x| x / pivot));
        q.set_column(w, &col);
        eta_refined.push(lam);
    }
    let q_inv = linalg::invert(&q)?;
    let d = DMatrix::from_diagonal(&DVector::from_vec(eta_refined.clone()));
    let recon = &q * d * &q_inv;
    let scale = a.norm().max(1.0);
    if (recon - &a).norm() > 1e-9 * scale {
        return Err(Error::EigensolverFailure(
            "diagonalizer reconstruction residual too large".into(),
        ));
    }
    Ok(Diagonalizer {
        q,
        q_inv,
        eta: eta_refined,
    })
}

/// Points on the distinguished boundary of `𝒜(ρ₀)`: all sign patterns
/// `|z_j| = e^{±ρ₀}` times a uniform phase grid.
pub fn annulus_boundary_points(d: usize, rho0: f64, n_theta: usize) -> Vec<Vec<C64>> {
    let mut points = Vec::new();
    let sign_patterns = 1usize << d;
    for mask in 0..sign_patterns {
        let radii: Vec<f64> = (0..d)
            .map(|j| {
                if mask & (1 << j) != 0 {
                    (-rho0).exp()
                } else {
                    rho0.exp()
                }
            })
            .collect();
        let mut idx = vec![0usize; d];
        loop {
            let z: Vec<C64> = (0..d)
                .map(|j| {
                    C64::from_polar(
                        radii[j],
                        2.0 * std::f64::consts::PI * idx[j] as f64 / n_theta as f64,
                    )
                })
                .collect();
            points.push(z);
            let mut j = 0;
            loop {
                if j == d {
                    break;
                }
                idx[j] += 1;
                if idx[j] < n_theta {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == d {
                break;
            }
        }
    }
    points
}

/// `max_n |Im η_n(ε, z)|` over the distinguished boundary of `𝒜(ρ₀)`.
pub fn max_im_eta_on_boundary(
    model: &LatticeModel,
    eps: f64,
    rho0: f64,
    n_theta: usize,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for z in annulus_boundary_points(model.dims(), rho0, n_theta) {
        let spec = general_spectrum(model, eps, &z)?;
        for lam in spec.eigenvalues {
            best = best.max(lam.im.abs());
        }
    }
    Ok(best)
}

/// Frobenius-norm deviations `(max ‖I−Q‖, max ‖I−Q^{-1}‖)` over the
/// distinguished boundary of `𝒜(ρ₀)`.
pub fn q_deviation_on_boundary(
    model: &LatticeModel,
    eps: f64,
    rho0: f64,
    n_theta: usize,
) -> Result<(f64, f64)> {
    let p_count = model.cell_size();
    let eye = DMatrix::<C64>::identity(p_count, p_count);
    let mut dev_q: f64 = 0.0;
    let mut dev_qi: f64 = 0.0;
    for z in annulus_boundary_points(model.dims(), rho0, n_theta) {
        let diag = diagonalizer(model, eps, &z)?;
        dev_q = dev_q.max((&diag.q - &eye).norm());
        dev_qi = dev_qi.max((&diag.q_inv - &eye).norm());
    }
    Ok((dev_q, dev_qi))
}
