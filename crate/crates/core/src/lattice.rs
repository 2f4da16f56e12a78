//! Periodic potentials on `ℤ^d` and fundamental-cell bookkeeping.
//!
//! A `p`-periodic potential is stored by its values on the fundamental
//! cell `W = [p₁]×…×[p_d]` in row-major (lexicographic) order; that index
//! map is the single canonical ordering used for matrices and file
//! columns throughout the crate. Values are exact rationals so that the
//! perturbation coefficients downstream stay exact.

use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::laurent::{rat_to_f64, Rat};

/// A non-degenerate periodic potential together with derived constants.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    dims: usize,
    periods: Vec<usize>,
    values: Vec<Rat>,
    strides: Vec<usize>,
    cell_size: usize,
    min_period: usize,
    separation: Rat,
}

/// Unique splitting `n = w + x⊙p` of a lattice site into a cell index `x`
/// and an offset `w` in the fundamental cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellCoordinate {
    pub cell: Vec<i64>,
    pub offset: Vec<i64>,
}

impl LatticeModel {
    /// Build a model from periods and row-major potential values.
    ///
    /// Fails with [`Error::ShapeMismatch`] if the value count is not
    /// `∏ p_j` and with [`Error::DegeneratePotential`] if two values
    /// coincide (the potential must be injective on the cell).
    pub fn build(dims: usize, periods: &[usize], values: Vec<Rat>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if periods.len() != dims {
            return Err(Error::InvalidParameter(format!(
                "expected {dims} periods, got {}",
                periods.len()
            )));
        }
        if periods.contains(&0) {
            return Err(Error::InvalidParameter("periods must be ≥ 1".into()));
        }
        let cell_size: usize = periods.iter().product();
        if values.len() != cell_size {
            return Err(Error::ShapeMismatch {
                expected: cell_size,
                got: values.len(),
            });
        }
        // injectivity: sort a copy and look for adjacent duplicates
        let mut sorted = values.clone();
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DegeneratePotential(
                    pair[0].to_string(),
                    pair[1].to_string(),
                ));
            }
        }
        let mut separation: Option<Rat> = None;
        for pair in sorted.windows(2) {
            let gap = (&pair[1] - &pair[0]).abs();
            separation = Some(match separation {
                None => gap,
                Some(s) => {
                    if gap < s {
                        gap
                    } else {
                        s
                    }
                }
            });
        }
        // P = 1 has no pairs; separation is +∞ conceptually, stored as 0
        // is wrong, use 1 — nothing downstream consumes it for P = 1
        // except ε₀, where any positive value gives a valid gate.
        let separation = separation.unwrap_or_else(|| Rat::from_integer(BigInt::from(1)));

        let mut strides = vec![1usize; dims];
        for j in (0..dims.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * periods[j + 1];
        }
        let min_period = *periods.iter().min().expect("dims ≥ 1");
        Ok(LatticeModel {
            dims,
            periods: periods.to_vec(),
            values,
            strides,
            cell_size,
            min_period,
            separation,
        })
    }

    /// Convenience constructor with integer potential values.
    pub fn from_integers(dims: usize, periods: &[usize], values: &[i64]) -> Result<Self> {
        let vals = values
            .iter()
            .map(|&v| Rat::from_integer(BigInt::from(v)))
            .collect();
        Self::build(dims, periods, vals)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    pub fn period(&self, j: usize) -> usize {
        self.periods[j]
    }

    /// Cell size `P = ∏ p_j`.
    pub fn cell_size(&self) -> usize {
        self.cell_size
    }

    /// `p₀ = min_j p_j`.
    pub fn min_period(&self) -> usize {
        self.min_period
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Potential value at a cell offset given by its canonical index.
    pub fn potential(&self, index: usize) -> &Rat {
        &self.values[index]
    }

    pub fn potential_f64(&self, index: usize) -> f64 {
        rat_to_f64(&self.values[index])
    }

    /// Minimal gap between distinct potential values on the cell.
    pub fn separation(&self) -> &Rat {
        &self.separation
    }

    pub fn separation_f64(&self) -> f64 {
        rat_to_f64(&self.separation)
    }

    /// Canonical row-major index of an offset `w ∈ W`.
    pub fn offset_index(&self, w: &[i64]) -> usize {
        debug_assert_eq!(w.len(), self.dims);
        let mut idx = 0usize;
        for j in 0..self.dims {
            debug_assert!(w[j] >= 0 && (w[j] as usize) < self.periods[j]);
            idx += (w[j] as usize) * self.strides[j];
        }
        idx
    }

    /// Offset vector for a canonical index.
    pub fn index_offset(&self, index: usize) -> Vec<i64> {
        debug_assert!(index < self.cell_size);
        let mut w = vec![0i64; self.dims];
        let mut rem = index;
        for j in 0..self.dims {
            w[j] = (rem / self.strides[j]) as i64;
            rem %= self.strides[j];
        }
        w
    }

    /// Split a lattice site as `n = w + x⊙p` with floor-division
    /// semantics for negative coordinates.
    pub fn split_coordinate(&self, site: &[i64]) -> CellCoordinate {
        debug_assert_eq!(site.len(), self.dims);
        let mut cell = vec![0i64; self.dims];
        let mut offset = vec![0i64; self.dims];
        for j in 0..self.dims {
            let p = self.periods[j] as i64;
            cell[j] = site[j].div_euclid(p);
            offset[j] = site[j].rem_euclid(p);
        }
        CellCoordinate { cell, offset }
    }

    /// Inverse of [`split_coordinate`](Self::split_coordinate).
    pub fn site_of(&self, coord: &CellCoordinate) -> Vec<i64> {
        (0..self.dims)
            .map(|j| coord.offset[j] + coord.cell[j] * self.periods[j] as i64)
            .collect()
    }

    /// Admissibility radius `ε₀ = sep V / (8d(1 + cosh 2ρ₀))`.
    ///
    /// For `|ε| < 2ε₀` the Gershgorin discs of `A_ε(z)` stay disjoint on
    /// the annulus of width `2ρ₀`, so the spectrum is simple there.
    pub fn epsilon0(&self, rho0: f64) -> f64 {
        self.separation_f64() / (8.0 * self.dims as f64 * (1.0 + (2.0 * rho0).cosh()))
    }

    /// The model with all potential values scaled by an exact rational.
    pub fn scaled(&self, factor: &Rat) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self::build(self.dims, &self.periods, values)
    }
}
