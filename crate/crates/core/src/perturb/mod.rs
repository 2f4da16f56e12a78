//! Rayleigh–Schrödinger expansion of the Floquet eigenvalues and
//! eigenvectors in the hopping strength.
//!
//! With `D = diag V` (pairwise distinct) and `B(z)` the zero-diagonal
//! hopping matrix from [`crate::floquet::decompose`], the eigenvalue
//! continued from `V(n)` expands as `η_n(ε,z) = Σ_r η_n^{(r)}(z) ε^r`
//! with
//!
//! ```text
//! η^(0) = D_n,  η^(1) = 0,  (u^(1))_m = B_{mn}/(D_n−D_m),
//! η^(r) = Σ_{m≠n} B_{nm} (u^(r−1))_m,
//! (u^(r))_m = [ Σ_{ℓ≠n} B_{mℓ}(u^(r−1))_ℓ − Σ_{s=2}^{r−1} η^(s)(u^(r−s))_m ] / (D_n−D_m),
//! ```
//!
//! where the eigenvector is normalized by `(u_n)_n ≡ 1`, so
//! `(u^(r))_n = 0` for `r ≥ 1`. Everything is carried out exactly over
//! rational Laurent polynomials. Directions with period 1 contribute the
//! scalar `s(z) = Σ (z_j + z_j^{-1})` on the diagonal; it commutes with
//! everything, so it is pulled out before the recursion and the term
//! `ε·s(z)` is restored at evaluation time.
//!
//! The low orders have independent closed forms and a loop-counting
//! interpretation (see [`loops`]) used as oracles in the test suite.

pub mod loops;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::floquet::{decompose, LaurentMatrix};
use crate::lattice::LatticeModel;
use crate::laurent::{ComplexRat, LaurentPoly, Rat};
use crate::linalg::C64;

/// Truncated eigenvalue/eigenvector series for every cell offset.
#[derive(Clone, Debug)]
pub struct RsExpansion {
    model: LatticeModel,
    order: usize,
    scalar: LaurentPoly,
    /// `eta[n][r]`
    eta: Vec<Vec<LaurentPoly>>,
    /// `u[n][r][m]`
    u: Vec<Vec<Vec<LaurentPoly>>>,
}

/// Run the recursion up to and including order `order`.
pub fn rs_expand(model: &LatticeModel, order: usize) -> Result<RsExpansion> {
    let dec = decompose(model)?;
    let b = &dec.hopping;
    let p_count = model.cell_size();
    let d = model.dims();
    let values = model.values();

    let mut eta: Vec<Vec<LaurentPoly>> = Vec::with_capacity(p_count);
    let mut u: Vec<Vec<Vec<LaurentPoly>>> = Vec::with_capacity(p_count);

    for n in 0..p_count {
        let mut eta_n: Vec<LaurentPoly> = Vec::with_capacity(order + 1);
        let mut u_n: Vec<Vec<LaurentPoly>> = Vec::with_capacity(order + 1);

        eta_n.push(LaurentPoly::constant_rat(d, values[n].clone()));
        let mut e_n = vec![LaurentPoly::zero(d); p_count];
        e_n[n] = LaurentPoly::one(d);
        u_n.push(e_n);

        if order >= 1 {
            eta_n.push(LaurentPoly::zero(d));
            let mut u1 = vec![LaurentPoly::zero(d); p_count];
            for m in 0..p_count {
                if m == n {
                    continue;
                }
                let denom = &values[n] - &values[m];
                u1[m] = b.at(m, n).scale(&denom.recip());
            }
            u_n.push(u1);
        }

        for r in 2..=order {
            // η^(r) = Σ_m B_{nm} (u^(r−1))_m
            let mut eta_r = LaurentPoly::zero(d);
            for m in 0..p_count {
                if m == n {
                    continue;
                }
                eta_r = eta_r.add(&b.at(n, m).mul(&u_n[r - 1][m])?)?;
            }
            eta_n.push(eta_r);

            let mut u_r = vec![LaurentPoly::zero(d); p_count];
            for m in 0..p_count {
                if m == n {
                    continue;
                }
                let mut acc = LaurentPoly::zero(d);
                for l in 0..p_count {
                    if l == n {
                        continue;
                    }
                    acc = acc.add(&b.at(m, l).mul(&u_n[r - 1][l])?)?;
                }
                for s in 2..r {
                    acc = acc.sub(&eta_n[s].mul(&u_n[r - s][m])?)?;
                }
                let denom = &values[n] - &values[m];
                u_r[m] = acc.scale(&denom.recip());
            }
            u_n.push(u_r);
        }

        eta.push(eta_n);
        u.push(u_n);
    }

    Ok(RsExpansion {
        model: model.clone(),
        order,
        scalar: dec.scalar,
        eta,
        u,
    })
}

impl RsExpansion {
    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Scalar shift polynomial `s(z)` (zero when `p₀ ≥ 2`).
    pub fn scalar(&self) -> &LaurentPoly {
        &self.scalar
    }

    /// Eigenvalue coefficient `η_n^{(r)}` of the shifted recursion.
    pub fn eta(&self, n: usize, r: usize) -> &LaurentPoly {
        &self.eta[n][r]
    }

    /// Eigenvalue coefficient of the full operator: the shifted
    /// coefficient plus the scalar `s(z)` at order 1.
    pub fn eta_total(&self, n: usize, r: usize) -> LaurentPoly {
        if r == 1 {
            self.eta[n][1].add(&self.scalar).expect("same vars")
        } else {
            self.eta[n][r].clone()
        }
    }

    /// Eigenvector coefficient `(u_n^{(r)})_m`.
    pub fn u(&self, n: usize, r: usize, m: usize) -> &LaurentPoly {
        &self.u[n][r][m]
    }

    /// Truncated series `Σ_{r ≤ R} η_n^{(r)}(z) ε^r + ε·s(z)` per cell.
    pub fn eval(&self, eps: f64, z: &[C64]) -> Result<Vec<C64>> {
        let zc: Vec<Complex64> = z.iter().map(|c| Complex64::new(c.re, c.im)).collect();
        let shift = self.scalar.evaluate(&zc)? * eps;
        let mut out = Vec::with_capacity(self.eta.len());
        for n in 0..self.eta.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut pow = 1.0;
            for r in 0..=self.order {
                acc += self.eta[n][r].evaluate(&zc)? * pow;
                pow *= eps;
            }
            acc += shift;
            out.push(C64::new(acc.re, acc.im));
        }
        Ok(out)
    }

    /// Every stored `η_n^{(r)}` is conjugate-symmetric, hence real on
    /// the torus.
    pub fn all_real_on_torus(&self) -> bool {
        self.eta
            .iter()
            .flatten()
            .all(|poly| poly.is_real_on_torus())
    }

    pub fn to_json(&self) -> Value {
        let bands: Vec<Value> = (0..self.eta.len())
            .map(|n| {
                json!({
                    "cell": self.model.index_offset(n),
                    "eta": self.eta[n].iter().map(|p| p.to_json()).collect::<Vec<_>>(),
                    "u": self.u[n]
                        .iter()
                        .map(|row| row.iter().map(|p| p.to_json()).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "order": self.order,
            "scalar": self.scalar.to_json(),
            "bands": bands,
        })
    }
}

/// The same recursion run over complex numbers at a fixed
/// quasimomentum, for orders where the symbolic coefficients grow too
/// large. Returns `eta[n][r]`; the scalar shift is included at order 1.
pub fn rs_expand_at(model: &LatticeModel, z: &[C64], order: usize) -> Result<Vec<Vec<C64>>> {
    let dec = decompose(model)?;
    let p_count = model.cell_size();
    let b = {
        let mut m = vec![vec![C64::new(0.0, 0.0); p_count]; p_count];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                let v = dec.hopping.at(r, c).evaluate(z)?;
                *slot = C64::new(v.re, v.im);
            }
        }
        m
    };
    let shift = {
        let v = dec.scalar.evaluate(z)?;
        C64::new(v.re, v.im)
    };
    let values: Vec<f64> = (0..p_count).map(|i| model.potential_f64(i)).collect();

    let mut out = Vec::with_capacity(p_count);
    for n in 0..p_count {
        let mut eta: Vec<C64> = Vec::with_capacity(order + 1);
        let mut u: Vec<Vec<C64>> = Vec::with_capacity(order + 1);
        eta.push(C64::new(values[n], 0.0));
        let mut e_n = vec![C64::new(0.0, 0.0); p_count];
        e_n[n] = C64::new(1.0, 0.0);
        u.push(e_n);
        if order >= 1 {
            eta.push(shift);
            let mut u1 = vec![C64::new(0.0, 0.0); p_count];
            for m in 0..p_count {
                if m != n {
                    u1[m] = b[m][n] / (values[n] - values[m]);
                }
            }
            u.push(u1);
        }
        for r in 2..=order {
            let mut eta_r = C64::new(0.0, 0.0);
            for m in 0..p_count {
                if m != n {
                    eta_r += b[n][m] * u[r - 1][m];
                }
            }
            eta.push(eta_r);
            let mut u_r = vec![C64::new(0.0, 0.0); p_count];
            for m in 0..p_count {
                if m == n {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..p_count {
                    if l != n {
                        acc += b[m][l] * u[r - 1][l];
                    }
                }
                // the order-1 shift never enters: the sum starts at s=2
                for s in 2..r {
                    acc -= eta[s] * u[r - s][m];
                }
                u_r[m] = acc / (values[n] - values[m]);
            }
            u.push(u_r);
        }
        out.push(eta);
    }
    Ok(out)
}

/// Closed form `η_n^{(2)} = Σ_{m≠n} B_{nm} B_{mn} / (D_n − D_m)`.
pub fn eta2_oracle(model: &LatticeModel, n: usize) -> Result<LaurentPoly> {
    let dec = decompose(model)?;
    closed_form_eta2(&dec.hopping, model.values(), n)
}

fn closed_form_eta2(b: &LaurentMatrix, values: &[Rat], n: usize) -> Result<LaurentPoly> {
    let mut acc = LaurentPoly::zero(b.vars());
    for m in 0..b.dim() {
        if m == n {
            continue;
        }
        let denom = &values[n] - &values[m];
        acc = acc.add(&b.at(n, m).mul(b.at(m, n))?.scale(&denom.recip()))?;
    }
    Ok(acc)
}

/// Closed form
/// `η_n^{(3)} = Σ B_{nm} B_{mm₁} B_{m₁n} / ((D_n−D_m)(D_n−D_{m₁}))`.
pub fn eta3_oracle(model: &LatticeModel, n: usize) -> Result<LaurentPoly> {
    let dec = decompose(model)?;
    let b = &dec.hopping;
    let values = model.values();
    let mut acc = LaurentPoly::zero(b.vars());
    for m in 0..b.dim() {
        if m == n {
            continue;
        }
        for m1 in 0..b.dim() {
            if m1 == n {
                continue;
            }
            let denom = (&values[n] - &values[m]) * (&values[n] - &values[m1]);
            if b.at(n, m).is_zero() || b.at(m, m1).is_zero() || b.at(m1, n).is_zero() {
                continue;
            }
            let prod = b.at(n, m).mul(b.at(m, m1))?.mul(b.at(m1, n))?;
            acc = acc.add(&prod.scale(&denom.recip()))?;
        }
    }
    Ok(acc)
}

/// Straight-loop constant
/// `c_{j,n} = Π_{k=1}^{p_j−1} (V(n) − V(n + k e_j))^{-1}`,
/// the weight of the unique irreducible loop winding once in direction
/// `j`; equals 1 when `p_j = 1`.
pub fn straight_loop_constant(model: &LatticeModel, n: usize, j: usize) -> Rat {
    let pj = model.period(j);
    let mut c = Rat::from_integer(1.into());
    if pj == 1 {
        return c;
    }
    let w = model.index_offset(n);
    for k in 1..pj {
        let mut wk = w.clone();
        wk[j] = (wk[j] + k as i64).rem_euclid(pj as i64);
        let idx = model.offset_index(&wk);
        let diff = model.potential(n) - model.potential(idx);
        c *= diff.recip();
    }
    c
}

/// One line of the low-order verification report.
#[derive(Clone, Debug)]
pub struct LowOrderCheck {
    pub name: String,
    pub n: usize,
    pub r: usize,
    pub j: usize,
    pub ok: bool,
    pub detail: String,
}

/// Exact verification of the low-order structure of the series.
#[derive(Clone, Debug)]
pub struct LowOrderReport {
    pub checks: Vec<LowOrderCheck>,
}

impl LowOrderReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// Error out on the first failing check.
    pub fn ensure(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.ok) {
            None => Ok(()),
            Some(c) => Err(Error::InvariantViolation {
                n: c.n,
                r: c.r,
                j: c.j,
                detail: format!("{}: {}", c.name, c.detail),
            }),
        }
    }
}

/// Check, exactly in rational arithmetic: `η^(0) = V(n)`, `η^(1) = 0`,
/// independence of `z_j` for orders below `p_j`, torus-reality of every
/// coefficient, and at order `r = p_j` the `z_j^{±1}` coefficient equals
/// the straight-loop constant with the residual supported on variables
/// of strictly smaller period.
pub fn verify_low_order(expansion: &RsExpansion) -> LowOrderReport {
    let model = expansion.model();
    let d = model.dims();
    let p_count = model.cell_size();
    let order = expansion.order();
    let mut checks = Vec::new();
    let mut push = |name: &str, n: usize, r: usize, j: usize, ok: bool, detail: String| {
        checks.push(LowOrderCheck {
            name: name.to_string(),
            n,
            r,
            j,
            ok,
            detail,
        });
    };

    for n in 0..p_count {
        // order 0 and 1
        let e0 = expansion.eta_total(n, 0);
        let ok0 = e0.is_constant()
            && e0.coefficient(&vec![0; d]) == ComplexRat::from_rat(model.potential(n).clone());
        push("eta0_is_potential", n, 0, 0, ok0, format!("η^(0) = {e0}"));
        if order >= 1 {
            let ok1 = expansion.eta(n, 1).is_zero();
            push(
                "eta1_vanishes",
                n,
                1,
                0,
                ok1,
                format!("η^(1) = {}", expansion.eta(n, 1)),
            );
        }

        // torus-reality of every computed order
        for r in 0..=order {
            let ok = expansion.eta_total(n, r).is_real_on_torus();
            push("real_on_torus", n, r, 0, ok, String::new());
        }

        // independence below the period in each direction
        for j in 0..d {
            for r in 0..model.period(j).min(order + 1) {
                let ok = !expansion.eta_total(n, r).depends_on(j);
                push(
                    "independent_below_period",
                    n,
                    r,
                    j,
                    ok,
                    format!("η^({r}) depends on z_{}", j + 1),
                );
            }
        }

        // order r = p_j structure, handled per distinct period value
        let mut periods: Vec<usize> = model.periods().to_vec();
        periods.sort_unstable();
        periods.dedup();
        for &q in &periods {
            if q > order {
                continue;
            }
            let total = expansion.eta_total(n, q);
            let mut residual = total.clone();
            for j in 0..d {
                if model.period(j) != q {
                    continue;
                }
                let c = straight_loop_constant(model, n, j);
                let cplus = total.coefficient(&unit_exp(d, j, 1));
                let cminus = total.coefficient(&unit_exp(d, j, -1));
                let ok = cplus == ComplexRat::from_rat(c.clone())
                    && cminus == ComplexRat::from_rat(c.clone());
                push(
                    "straight_loop_coefficient",
                    n,
                    q,
                    j,
                    ok,
                    format!("coefficient of z_{}^± is ({cplus:?}, {cminus:?}), want {c}", j + 1),
                );
                let cosine = LaurentPoly::variable(d, j, 1)
                    .add(&LaurentPoly::variable(d, j, -1))
                    .expect("same vars")
                    .scale(&c);
                residual = residual.sub(&cosine).expect("same vars");
            }
            for i in 0..d {
                if model.period(i) >= q {
                    let ok = !residual.depends_on(i);
                    push(
                        "residual_smaller_periods_only",
                        n,
                        q,
                        i,
                        ok,
                        format!("residual at order {q} depends on z_{}", i + 1),
                    );
                }
            }
        }
    }

    LowOrderReport { checks }
}

fn unit_exp(d: usize, j: usize, e: i64) -> Vec<i64> {
    let mut k = vec![0i64; d];
    k[j] = e;
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn m1() -> LatticeModel {
        LatticeModel::from_integers(1, &[2], &[0, 1]).unwrap()
    }

    fn m2() -> LatticeModel {
        LatticeModel::from_integers(1, &[3], &[0, 1, 2]).unwrap()
    }

    #[test]
    fn second_order_closed_form_p2() {
        // η_0^(2) = −(2 + z + z⁻¹), η_1^(2) = +(2 + z + z⁻¹)
        let exp = rs_expand(&m1(), 2).unwrap();
        let e02 = exp.eta(0, 2);
        assert_eq!(e02.coefficient(&[0]), ComplexRat::from_int(-2));
        assert_eq!(e02.coefficient(&[1]), ComplexRat::from_int(-1));
        assert_eq!(e02.coefficient(&[-1]), ComplexRat::from_int(-1));
        let e12 = exp.eta(1, 2);
        assert_eq!(e12, &e02.neg());
    }

    #[test]
    fn first_order_vanishes() {
        for m in [m1(), m2()] {
            let exp = rs_expand(&m, 1).unwrap();
            for n in 0..m.cell_size() {
                assert!(exp.eta(n, 1).is_zero());
            }
        }
    }

    #[test]
    fn fourth_order_series_at_one() {
        // z = 1 series of (1 − √(1+16ε²))/2: coefficients (0, 0, −4, 0, 16)
        let exp = rs_expand(&m1(), 4).unwrap();
        let expect = [rat(0, 1), rat(0, 1), rat(-4, 1), rat(0, 1), rat(16, 1)];
        for (r, want) in expect.iter().enumerate() {
            let at_one = exp.eta(0, r).coefficient_sum();
            assert_eq!(at_one, ComplexRat::from_rat(want.clone()), "order {r}");
        }
    }

    #[test]
    fn eval_truncation_error() {
        // R = 4 at ε = 0.1, z = 1: η₀ ≈ −0.0384 vs exact −0.0385165,
        // difference carried by the −128 ε⁶ term
        let exp = rs_expand(&m1(), 4).unwrap();
        let z = [C64::new(1.0, 0.0)];
        let eta = exp.eval(0.1, &z).unwrap();
        let exact = 0.5 * (1.0 - (1.0 + 16.0 * 0.01f64).sqrt());
        assert!((eta[0].re - (-0.0384)).abs() < 1e-10);
        assert!((exact - (-0.0385164807)).abs() < 1e-9);
        let diff = (eta[0].re - exact).abs();
        assert!((diff - 128.0 * 0.1f64.powi(6)).abs() < 3e-5, "diff {diff}");

        // ε = 0 returns the potential exactly
        let eta0 = exp.eval(0.0, &z).unwrap();
        assert!((eta0[0].re).abs() < 1e-16 && (eta0[1].re - 1.0).abs() < 1e-16);
    }

    #[test]
    fn dual_oracle_orders_two_and_three() {
        for m in [
            m1(),
            m2(),
            LatticeModel::from_integers(2, &[1, 2], &[0, 1]).unwrap(),
            LatticeModel::from_integers(2, &[2, 3], &[0, 1, 2, 3, 4, 5]).unwrap(),
            LatticeModel::from_integers(1, &[4], &[0, 3, 1, 7]).unwrap(),
        ] {
            let exp = rs_expand(&m, 3).unwrap();
            for n in 0..m.cell_size() {
                assert_eq!(exp.eta(n, 2), &eta2_oracle(&m, n).unwrap(), "eta2 at {n}");
                assert_eq!(exp.eta(n, 3), &eta3_oracle(&m, n).unwrap(), "eta3 at {n}");
            }
        }
    }

    #[test]
    fn eta3_vanishes_on_bipartite_cell() {
        // p = 2 quotient graph is bipartite: no odd loops
        let exp = rs_expand(&m1(), 3).unwrap();
        assert!(exp.eta(0, 3).is_zero());
        assert!(exp.eta(1, 3).is_zero());
        assert!(eta3_oracle(&m1(), 0).unwrap().is_zero());
    }

    #[test]
    fn eta3_straight_loop_p3() {
        // coefficient of z in η_0^(3) equals 1/((0−1)(0−2)) = 1/2
        let exp = rs_expand(&m2(), 3).unwrap();
        assert_eq!(
            exp.eta(0, 3).coefficient(&[1]),
            ComplexRat::from_rat(rat(1, 2))
        );
    }

    #[test]
    fn straight_loop_constants() {
        let m = m2();
        let want = [rat(1, 2), rat(-1, 1), rat(1, 2)];
        for n in 0..3 {
            assert_eq!(straight_loop_constant(&m, n, 0), want[n]);
        }
        let m = m1();
        assert_eq!(straight_loop_constant(&m, 0, 0), rat(-1, 1));
        assert_eq!(straight_loop_constant(&m, 1, 0), rat(1, 1));
        // p_j = 1 gives 1
        let free = LatticeModel::from_integers(2, &[1, 2], &[0, 1]).unwrap();
        assert_eq!(straight_loop_constant(&free, 0, 0), rat(1, 1));
    }

    #[test]
    fn low_order_report_fixtures() {
        for (m, order) in [
            (m1(), 2usize),
            (m2(), 3usize),
            (
                LatticeModel::from_integers(2, &[2, 3], &[0, 1, 2, 3, 4, 5]).unwrap(),
                3usize,
            ),
        ] {
            let exp = rs_expand(&m, order).unwrap();
            let report = verify_low_order(&exp);
            assert!(
                report.passed(),
                "failures: {:?}",
                report
                    .checks
                    .iter()
                    .filter(|c| !c.ok)
                    .map(|c| format!("{} (n={}, r={}, j={}): {}", c.name, c.n, c.r, c.j, c.detail))
                    .collect::<Vec<_>>()
            );
            report.ensure().unwrap();
        }
    }

    #[test]
    fn low_order_d2_mixed_periods() {
        // p=(2,3): η^(2) independent of z₂, coefficient of z₁ nonzero
        let m = LatticeModel::from_integers(2, &[2, 3], &[0, 1, 2, 3, 4, 5]).unwrap();
        let exp = rs_expand(&m, 3).unwrap();
        for n in 0..6 {
            let e2 = exp.eta(n, 2);
            assert!(!e2.depends_on(1));
            assert!(!e2.coefficient(&[1, 0]).is_zero());
        }
    }

    #[test]
    fn scalar_shift_for_unit_periods() {
        // p = (1,2): evaluation includes ε(z₁+z₁⁻¹)
        let m = LatticeModel::from_integers(2, &[1, 2], &[0, 1]).unwrap();
        let exp = rs_expand(&m, 4).unwrap();
        assert!(exp.scalar().depends_on(0));
        let theta1 = 0.8;
        let z = [C64::from_polar(1.0, theta1), C64::new(1.0, 0.0)];
        let eps = 0.01;
        let eta = exp.eval(eps, &z).unwrap();
        // fiber at z₂=1: A = ε(z₁+z₁⁻¹)I + [[0, 2ε],[2ε, 1]]; truncation
        // at R=4 leaves the −128ε⁶ term
        let shift = 2.0 * eps * theta1.cos();
        let exact0 = shift + 0.5 * (1.0 - (1.0 + 16.0 * eps * eps).sqrt());
        assert!((eta[0].re - exact0).abs() < 5e-10, "{} vs {exact0}", eta[0].re);
    }

    #[test]
    fn low_order_with_nonzero_residual() {
        // p = (2,4): at order 4 the straight z₂ loops coexist with
        // genuine z₁-dependent terms (two wrapping steps in direction 1
        // plus a closed pair elsewhere), so the residual Φ is nonzero
        // and must involve only the smaller-period variable
        let m = LatticeModel::from_integers(2, &[2, 4], &[0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        let exp = rs_expand(&m, 4).unwrap();
        let report = verify_low_order(&exp);
        assert!(
            report.passed(),
            "failures: {:?}",
            report.checks.iter().filter(|c| !c.ok).collect::<Vec<_>>()
        );
        for n in 0..8 {
            let c2 = straight_loop_constant(&m, n, 1);
            let total = exp.eta_total(n, 4);
            assert_eq!(total.coefficient(&[0, 1]), ComplexRat::from_rat(c2));
            let cosine = LaurentPoly::variable(2, 1, 1)
                .add(&LaurentPoly::variable(2, 1, -1))
                .unwrap()
                .scale(&straight_loop_constant(&m, n, 1));
            let residual = total.sub(&cosine).unwrap();
            assert!(residual.depends_on(0), "Φ should carry z₁ terms at n={n}");
            assert!(!residual.depends_on(1));
        }
    }

    #[test]
    fn conjugate_symmetry_all_orders() {
        for m in [m1(), m2()] {
            let exp = rs_expand(&m, 6).unwrap();
            assert!(exp.all_real_on_torus());
        }
    }

    #[test]
    fn numeric_mode_matches_symbolic_coefficients() {
        let m = m2();
        let z = [C64::from_polar(1.0, 1.3)];
        let exp = rs_expand(&m, 6).unwrap();
        let numeric = rs_expand_at(&m, &z, 12).unwrap();
        for n in 0..3 {
            for r in 0..=6usize {
                let sym = exp.eta_total(n, r).evaluate(&z).unwrap();
                let diff = (numeric[n][r] - C64::new(sym.re, sym.im)).norm();
                assert!(diff < 1e-12, "n={n}, r={r}: {diff:e}");
            }
        }
        // higher orders stay finite and real on the torus
        for n in 0..3 {
            for r in 7..=12 {
                assert!(numeric[n][r].norm().is_finite());
                assert!(numeric[n][r].im.abs() < 1e-9 * (1.0 + numeric[n][r].norm()));
            }
        }
    }

    #[test]
    fn numeric_mode_ratio_test_high_order() {
        // truncation at R=8 on the p=3 chain: error order ≥ 9
        let m = m2();
        let z = [C64::new(1.0, 0.0)];
        let coeffs = rs_expand_at(&m, &z, 8).unwrap();
        let mut errs = Vec::new();
        for k in 0..2 {
            let eps = 0.02 / (1 << k) as f64;
            let labeled = crate::floquet::label_by_potential(&m, eps, &z).unwrap();
            let mut series = C64::new(0.0, 0.0);
            let mut pw = 1.0;
            for r in 0..=8 {
                series += coeffs[0][r] * pw;
                pw *= eps;
            }
            errs.push((series - labeled[0]).norm());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 8.8, "observed order {order:.2}");
    }

    #[test]
    fn expansion_json_shape() {
        let exp = rs_expand(&m1(), 2).unwrap();
        let v = exp.to_json();
        assert_eq!(v["order"], 2);
        assert!(v["bands"].as_array().unwrap().len() == 2);
        let eta02 = &v["bands"][0]["eta"][2];
        let poly = LaurentPoly::from_json(eta02).unwrap();
        assert_eq!(poly, exp.eta(0, 2).clone());
    }
}
