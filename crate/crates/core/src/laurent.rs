//! Exact multivariate Laurent polynomials over complex rationals.
//!
//! Terms are indexed by exponent vectors `k ∈ ℤ^d` and carry coefficients
//! with arbitrary-precision rational real and imaginary parts, so the
//! denominators built from products of potential differences in the
//! perturbation series stay exact. Real polynomials are simply the ones
//! with vanishing imaginary parts; the imaginary channel is used by
//! [`LaurentPoly::theta_derivative`], which multiplies each term by
//! `i·k_i`.
//!
//! Canonical form: no zero coefficients are stored and terms are kept in
//! lexicographic exponent order, so equality is term-map equality and
//! serialization is deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Arbitrary-precision rational.
pub type Rat = BigRational;

/// Complex number with exact rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ComplexRat {
    pub re: Rat,
    pub im: Rat,
}

impl ComplexRat {
    pub fn zero() -> Self {
        ComplexRat {
            re: Rat::zero(),
            im: Rat::zero(),
        }
    }

    pub fn one() -> Self {
        ComplexRat {
            re: Rat::one(),
            im: Rat::zero(),
        }
    }

    pub fn from_rat(re: Rat) -> Self {
        ComplexRat {
            re,
            im: Rat::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexRat {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        ComplexRat {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        ComplexRat {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        ComplexRat {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn neg(&self) -> Self {
        ComplexRat {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Exact reciprocal `(a - bi) / (a² + b²)`. Panics on zero.
    pub fn inv(&self) -> Self {
        let norm2 = &self.re * &self.re + &self.im * &self.im;
        assert!(!norm2.is_zero(), "inverse of zero complex rational");
        ComplexRat {
            re: &self.re / &norm2,
            im: -(&self.im / &norm2),
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

/// Convert a big rational to the nearest f64.
pub fn rat_to_f64(r: &Rat) -> f64 {
    // Scale into f64 range by splitting off a power of two when the
    // numerator or denominator exceeds what f64 can represent directly.
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    if nb < 1000 && db < 1000 {
        let nf = bigint_to_f64(num);
        let df = bigint_to_f64(den);
        return nf / df;
    }
    let shift = (nb.max(db) - 500).max(0) as u64;
    let num_s = num >> shift;
    let den_s = den >> shift;
    bigint_to_f64(&num_s) / bigint_to_f64(&den_s)
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(f64::NAN)
}

/// Multivariate Laurent polynomial in canonical form.
#[derive(Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    vars: usize,
    terms: BTreeMap<Vec<i64>, ComplexRat>,
}

impl LaurentPoly {
    /// The zero polynomial in `vars` variables.
    pub fn zero(vars: usize) -> Self {
        LaurentPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    /// Constant polynomial.
    pub fn constant(vars: usize, c: ComplexRat) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars], c);
        }
        p
    }

    pub fn constant_rat(vars: usize, c: Rat) -> Self {
        Self::constant(vars, ComplexRat::from_rat(c))
    }

    pub fn one(vars: usize) -> Self {
        Self::constant(vars, ComplexRat::one())
    }

    /// Single term `c · z^k`.
    pub fn monomial(vars: usize, k: &[i64], c: ComplexRat) -> Self {
        assert_eq!(k.len(), vars);
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(k.to_vec(), c);
        }
        p
    }

    /// `z_j` or `z_j^{-1}` as a polynomial.
    pub fn variable(vars: usize, j: usize, exponent: i64) -> Self {
        let mut k = vec![0i64; vars];
        k[j] = exponent;
        Self::monomial(vars, &k, ComplexRat::one())
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterate terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &ComplexRat)> {
        self.terms.iter()
    }

    /// Stored coefficient of `z^k`, or zero.
    pub fn coefficient(&self, k: &[i64]) -> ComplexRat {
        self.terms.get(k).cloned().unwrap_or_else(ComplexRat::zero)
    }

    /// True iff some stored exponent has `k_j ≠ 0`.
    pub fn depends_on(&self, j: usize) -> bool {
        self.terms.keys().any(|k| k[j] != 0)
    }

    pub fn is_constant(&self) -> bool {
        !(0..self.vars).any(|j| self.depends_on(j))
    }

    fn check_vars(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::DimensionMismatch(self.vars, other.vars));
        }
        Ok(())
    }

    fn insert_term(&mut self, k: Vec<i64>, c: ComplexRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert_term(k.clone(), c.neg());
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = Self::zero(self.vars);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k: Vec<i64> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.insert_term(k, ca.mul(cb));
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.vars);
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), c.neg());
        }
        out
    }

    /// Scale by an exact rational.
    pub fn scale(&self, s: &Rat) -> Self {
        self.scale_complex(&ComplexRat::from_rat(s.clone()))
    }

    pub fn scale_complex(&self, s: &ComplexRat) -> Self {
        let mut out = Self::zero(self.vars);
        if s.is_zero() {
            return out;
        }
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), c.mul(s));
        }
        out
    }

    /// Floating evaluation `Σ c_k z^k` with the multi-index convention
    /// `z^k = z₁^{k₁}…z_d^{k_d}`.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<Complex64> {
        assert_eq!(z.len(), self.vars);
        for (j, zj) in z.iter().enumerate() {
            if zj.norm() == 0.0 {
                return Err(Error::ZeroVariable(j));
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut m = c.to_c64();
            for (j, &kj) in k.iter().enumerate() {
                if kj != 0 {
                    m *= z[j].powi(kj as i32);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    /// Exact evaluation at a complex-rational point.
    pub fn evaluate_exact(&self, z: &[ComplexRat]) -> Result<ComplexRat> {
        assert_eq!(z.len(), self.vars);
        for (j, zj) in z.iter().enumerate() {
            if zj.is_zero() {
                return Err(Error::ZeroVariable(j));
            }
        }
        let mut acc = ComplexRat::zero();
        for (k, c) in &self.terms {
            let mut m = c.clone();
            for (j, &kj) in k.iter().enumerate() {
                let base = if kj >= 0 { z[j].clone() } else { z[j].inv() };
                for _ in 0..kj.unsigned_abs() {
                    m = m.mul(&base);
                }
            }
            acc = acc.add(&m);
        }
        Ok(acc)
    }

    /// Derivative in `θ_i` after substituting `z = e^{iθ}`: maps each
    /// term `c·z^k` to `(i·k_i)·c·z^k`.
    pub fn theta_derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.vars);
        for (k, c) in &self.terms {
            let ki = k[i];
            if ki == 0 {
                continue;
            }
            let f = Rat::from_integer(BigInt::from(ki));
            let rotated = ComplexRat {
                re: -(&c.im * &f),
                im: &c.re * &f,
            };
            out.terms.insert(k.clone(), rotated);
        }
        out
    }

    /// A polynomial is real-valued on the torus `z_j = e^{iθ_j}` iff
    /// `c_{-k} = conj(c_k)` for every exponent vector.
    pub fn is_real_on_torus(&self) -> bool {
        self.terms.iter().all(|(k, c)| {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            self.coefficient(&neg) == c.conj()
        })
    }

    /// Sum of all coefficients, i.e. the value at `z = (1,…,1)`.
    pub fn coefficient_sum(&self) -> ComplexRat {
        let mut acc = ComplexRat::zero();
        for c in self.terms.values() {
            acc = acc.add(c);
        }
        acc
    }

    /// Deterministic JSON form with decimal strings for big integers.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let mut obj = serde_json::Map::new();
                obj.insert("k".into(), json!(k));
                obj.insert("num".into(), json!(c.re.numer().to_string()));
                obj.insert("den".into(), json!(c.re.denom().to_string()));
                if !c.im.is_zero() {
                    obj.insert("im_num".into(), json!(c.im.numer().to_string()));
                    obj.insert("im_den".into(), json!(c.im.denom().to_string()));
                }
                Value::Object(obj)
            })
            .collect();
        json!({ "vars": self.vars, "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("laurent json: {m}"));
        let vars = v
            .get("vars")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing vars"))? as usize;
        let mut poly = Self::zero(vars);
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing terms"))?;
        for t in terms {
            let k: Vec<i64> = t
                .get("k")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing k"))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| bad("bad exponent")))
                .collect::<Result<_>>()?;
            if k.len() != vars {
                return Err(Error::DimensionMismatch(k.len(), vars));
            }
            let parse_int = |key: &str| -> Result<BigInt> {
                t.get(key)
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("missing coefficient"))?
                    .parse::<BigInt>()
                    .map_err(|_| bad("bad integer"))
            };
            let re = Rat::new(parse_int("num")?, parse_int("den")?);
            let im = if t.get("im_num").is_some() {
                Rat::new(parse_int("im_num")?, parse_int("im_den")?)
            } else {
                Rat::zero()
            };
            poly.insert_term(k, ComplexRat { re, im });
        }
        Ok(poly)
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let coeff = if c.is_real() {
                format!("{}", c.re)
            } else if c.re.is_zero() {
                format!("({})i", c.im)
            } else {
                format!("({}+{}i)", c.re, c.im)
            };
            write!(f, "{}", coeff)?;
            for (j, &kj) in k.iter().enumerate() {
                if kj == 1 {
                    write!(f, "*z{}", j + 1)?;
                } else if kj != 0 {
                    write!(f, "*z{}^{}", j + 1, kj)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn z_plus_zinv() -> LaurentPoly {
        LaurentPoly::variable(1, 0, 1)
            .add(&LaurentPoly::variable(1, 0, -1))
            .unwrap()
    }

    #[test]
    fn square_of_z_plus_zinv() {
        let p = z_plus_zinv();
        let sq = p.mul(&p).unwrap();
        // z² + 2 + z⁻²
        assert_eq!(sq.coefficient(&[2]), ComplexRat::from_int(1));
        assert_eq!(sq.coefficient(&[0]), ComplexRat::from_int(2));
        assert_eq!(sq.coefficient(&[-2]), ComplexRat::from_int(1));
        assert_eq!(sq.num_terms(), 3);
    }

    #[test]
    fn add_zero_is_identity() {
        let p = z_plus_zinv();
        assert_eq!(p.add(&LaurentPoly::zero(1)).unwrap(), p);
    }

    #[test]
    fn loop_product_expansion() {
        // (1+z)·(1+z⁻¹) = 2 + z + z⁻¹
        let a = LaurentPoly::one(1).add(&LaurentPoly::variable(1, 0, 1)).unwrap();
        let b = LaurentPoly::one(1).add(&LaurentPoly::variable(1, 0, -1)).unwrap();
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.coefficient(&[0]), ComplexRat::from_int(2));
        assert_eq!(prod.coefficient(&[1]), ComplexRat::from_int(1));
        assert_eq!(prod.coefficient(&[-1]), ComplexRat::from_int(1));
        assert_eq!(prod.num_terms(), 3);
    }

    #[test]
    fn evaluate_on_torus() {
        let p = z_plus_zinv();
        let theta = std::f64::consts::PI / 3.0;
        let z = [Complex64::from_polar(1.0, theta)];
        let v = p.evaluate(&z).unwrap();
        assert!((v.re - 1.0).abs() < 1e-14);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn evaluate_constant() {
        let p = LaurentPoly::constant_rat(1, rat(5, 1));
        let z = [Complex64::new(0.3, -2.1)];
        let v = p.evaluate(&z).unwrap();
        assert!((v - Complex64::new(5.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn evaluate_off_torus_cosh() {
        // 2 + z + z⁻¹ at z = e^{0.5} → 2 + 2cosh(0.5)
        let p = LaurentPoly::constant_rat(1, rat(2, 1)).add(&z_plus_zinv()).unwrap();
        let z = [Complex64::new(0.5f64.exp(), 0.0)];
        let v = p.evaluate(&z).unwrap();
        assert!((v.re - (2.0 + 2.0 * 0.5f64.cosh())).abs() < 1e-12);
        assert!((v.re - 4.25526).abs() < 1e-5);
    }

    #[test]
    fn evaluate_rejects_zero_variable() {
        let p = z_plus_zinv();
        assert!(matches!(
            p.evaluate(&[Complex64::new(0.0, 0.0)]),
            Err(Error::ZeroVariable(0))
        ));
    }

    #[test]
    fn coefficient_lookup() {
        let p = LaurentPoly::constant_rat(1, rat(2, 1)).add(&z_plus_zinv()).unwrap();
        assert_eq!(p.coefficient(&[1]), ComplexRat::from_int(1));
        assert_eq!(p.coefficient(&[0]), ComplexRat::from_int(2));
        assert_eq!(p.coefficient(&[7]), ComplexRat::zero());
    }

    #[test]
    fn depends_on_variables() {
        let p = LaurentPoly::variable(2, 1, 1)
            .add(&LaurentPoly::variable(2, 1, -1))
            .unwrap();
        assert!(!p.depends_on(0));
        assert!(p.depends_on(1));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = LaurentPoly::one(1);
        let b = LaurentPoly::one(2);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn theta_derivative_matches_calculus() {
        // d/dθ (z + z⁻¹) = i(z − z⁻¹) = −2 sinθ on the torus
        let p = z_plus_zinv();
        let dp = p.theta_derivative(0);
        for &theta in &[0.3, 1.2, 2.9] {
            let z = [Complex64::from_polar(1.0, theta)];
            let v = dp.evaluate(&z).unwrap();
            assert!((v.re + 2.0 * theta.sin()).abs() < 1e-13);
            assert!(v.im.abs() < 1e-13);
        }
        assert!(LaurentPoly::constant_rat(1, rat(3, 1))
            .theta_derivative(0)
            .is_zero());
    }

    #[test]
    fn theta_derivative_matches_finite_differences() {
        let p = LaurentPoly::constant_rat(1, rat(2, 1)).add(&z_plus_zinv()).unwrap();
        let dp = p.theta_derivative(0);
        let theta = std::f64::consts::FRAC_PI_2;
        let v = dp.evaluate(&[Complex64::from_polar(1.0, theta)]).unwrap();
        assert!((v.re + 2.0).abs() < 1e-10);
        let h = 1e-6;
        let f = |t: f64| {
            p.evaluate(&[Complex64::from_polar(1.0, t)]).unwrap().re
        };
        let fd = (f(theta + h) - f(theta - h)) / (2.0 * h);
        assert!((v.re - fd).abs() < 1e-8);
    }

    #[test]
    fn reality_checker() {
        assert!(z_plus_zinv().is_real_on_torus());
        // z alone is not real on the torus
        assert!(!LaurentPoly::variable(1, 0, 1).is_real_on_torus());
        // i(z − z⁻¹) is real on the torus (it is −2 sinθ)
        assert!(z_plus_zinv().theta_derivative(0).is_real_on_torus());
    }

    #[test]
    fn json_round_trip() {
        let p = z_plus_zinv()
            .scale(&rat(3, 7))
            .add(&LaurentPoly::constant_rat(1, rat(-2, 5)))
            .unwrap()
            .add(&LaurentPoly::monomial(
                1,
                &[2],
                ComplexRat {
                    re: Rat::zero(),
                    im: rat(1, 3),
                },
            ))
            .unwrap();
        let back = LaurentPoly::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec(((-3i64..=3), (-20i64..=20), (1i64..=9)), 0..6).prop_map(
            |terms| {
                let mut p = LaurentPoly::zero(1);
                for (k, n, d) in terms {
                    p = p
                        .add(&LaurentPoly::monomial(
                            1,
                            &[k],
                            ComplexRat::from_rat(Rat::new(BigInt::from(n), BigInt::from(d))),
                        ))
                        .unwrap();
                }
                p
            },
        )
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
            let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
            let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        }

        #[test]
        fn mul_evaluate_homomorphism_exact(a in arb_poly(), b in arb_poly()) {
            // exact rational evaluation at z = 3/2 + (1/3)i
            let z = [ComplexRat {
                re: Rat::new(BigInt::from(3), BigInt::from(2)),
                im: Rat::new(BigInt::from(1), BigInt::from(3)),
            }];
            let lhs = a.mul(&b).unwrap().evaluate_exact(&z).unwrap();
            let rhs = a.evaluate_exact(&z).unwrap().mul(&b.evaluate_exact(&z).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn mul_evaluate_homomorphism_float(a in arb_poly(), b in arb_poly()) {
            let z = [Complex64::from_polar(1.1, 0.7)];
            let lhs = a.mul(&b).unwrap().evaluate(&z).unwrap();
            let rhs = a.evaluate(&z).unwrap() * b.evaluate(&z).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn coefficient_sum_is_value_at_one() {
        let p = z_plus_zinv().scale(&rat(2, 3));
        let s = p.coefficient_sum();
        assert_eq!(s, ComplexRat::from_rat(rat(4, 3)));
        let v = p.evaluate(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((v.re - rat_to_f64(&s.re)).abs() < 1e-15);
    }

    #[test]
    fn rat_to_f64_large_values() {
        let big = Rat::new(BigInt::from(10).pow(400), BigInt::from(3) * BigInt::from(10).pow(398));
        let f = rat_to_f64(&big);
        assert!((f - 100.0 / 3.0).abs() < 1e-10);
        let _ = FromPrimitive::from_f64(0.5).map(|r: Rat| r);
    }
}
