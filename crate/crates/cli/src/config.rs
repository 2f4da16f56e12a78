//! TOML run configuration: a `[model]` block shared by every command, a
//! command-specific `[task]` block, and an optional `[output]` block.
//! Unknown keys are rejected everywhere.

use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use blochlab_core::lattice::LatticeModel;

use crate::AppError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub task: Option<toml::Value>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub p: Vec<usize>,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(format!("config: {e}")))
    }

    pub fn build_model(&self) -> Result<LatticeModel, AppError> {
        let values = self
            .model
            .values
            .iter()
            .map(parse_rational_value)
            .collect::<Result<Vec<_>, _>>()?;
        LatticeModel::build(self.model.d, &self.model.p, values)
            .map_err(|e| AppError::Config(format!("model: {e}")))
    }

    /// Deserialize the `[task]` block into the command's parameter
    /// struct, treating a missing block as an empty table.
    pub fn task<T: serde::de::DeserializeOwned>(&self) -> Result<T, AppError> {
        let value = match &self.task {
            Some(v) => v.clone(),
            None => toml::Value::Table(Default::default()),
        };
        value
            .try_into()
            .map_err(|e| AppError::Config(format!("task: {e}")))
    }
}

/// Exact rationalization of a TOML potential entry. Integers and
/// fraction/decimal strings are parsed directly; floats go through
/// their shortest round-trip decimal representation, so a literal like
/// `0.1` becomes exactly 1/10.
fn parse_rational_value(v: &toml::Value) -> Result<BigRational, AppError> {
    match v {
        toml::Value::Integer(i) => Ok(BigRational::from_integer(BigInt::from(*i))),
        toml::Value::Float(f) => {
            if !f.is_finite() {
                return Err(AppError::Config("potential value must be finite".into()));
            }
            parse_rational(&format!("{f}"))
        }
        toml::Value::String(s) => parse_rational(s),
        other => Err(AppError::Config(format!(
            "potential value must be a number or string, got {other}"
        ))),
    }
}

/// Parse `"3"`, `"-2/7"`, `"0.125"`, `"1e-3"`, `"2.5e2"` into an exact
/// rational.
pub fn parse_rational(text: &str) -> Result<BigRational, AppError> {
    let s = text.trim();
    let bad = || AppError::Config(format!("cannot parse rational from {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    // decimal with optional exponent: m[.f][e±x]
    let (mantissa, exp10) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let negative = int_part.starts_with('-');
    let digits: String = int_part
        .trim_start_matches(['+', '-'])
        .chars()
        .chain(frac_part.chars())
        .collect();
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut numer: BigInt = digits.parse().map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let shift = exp10 - frac_part.len() as i64;
    let rational = if shift >= 0 {
        BigRational::from_integer(numer * BigInt::from(10).pow(shift as u32))
    } else {
        BigRational::new(numer, BigInt::from(10).pow((-shift) as u32))
    };
    Ok(rational)
}

/// Parse `"geometric:start:stop:count"` or `"linear:start:stop:count"`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, AppError> {
    let bad = |m: &str| AppError::Config(format!("grid {text:?}: {m}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(bad("expected kind:start:stop:count"));
    }
    let start: f64 = parts[1].parse().map_err(|_| bad("bad start"))?;
    let stop: f64 = parts[2].parse().map_err(|_| bad("bad stop"))?;
    let count: usize = parts[3].parse().map_err(|_| bad("bad count"))?;
    if count < 2 {
        return Err(bad("count must be ≥ 2"));
    }
    match parts[0] {
        "geometric" => {
            if start <= 0.0 || stop <= start {
                return Err(bad("need 0 < start < stop"));
            }
            let ratio = (stop / start).powf(1.0 / (count as f64 - 1.0));
            Ok((0..count).map(|k| start * ratio.powi(k as i32)).collect())
        }
        "linear" => {
            if stop <= start {
                return Err(bad("need start < stop"));
            }
            let step = (stop - start) / (count as f64 - 1.0);
            Ok((0..count).map(|k| start + step * k as f64).collect())
        }
        other => Err(bad(&format!("unknown kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rational_forms() {
        assert_eq!(parse_rational("3").unwrap(), rat(3, 1));
        assert_eq!(parse_rational("-2/7").unwrap(), rat(-2, 7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("2.5e2").unwrap(), rat(250, 1));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("geometric:10:1000:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[0] - 10.0).abs() < 1e-12);
        assert!((g[1] - 100.0).abs() < 1e-9);
        assert!((g[2] - 1000.0).abs() < 1e-9);
        let l = parse_grid("linear:0:10:5").unwrap();
        assert_eq!(l, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert!(parse_grid("geometric:10:1000").is_err());
        assert!(parse_grid("fancy:1:2:3").is_err());
    }

    #[test]
    fn config_parses_and_rejects_unknown_keys() {
        let good = r#"
            [model]
            d = 1
            p = [2]
            values = [0, "1/2"]

            [task]
            mu = 10.0
        "#;
        let cfg = RawConfig::parse(good).unwrap();
        let model = cfg.build_model().unwrap();
        assert_eq!(model.cell_size(), 2);
        assert_eq!(model.values()[1], rat(1, 2));

        let unknown = r#"
            [model]
            d = 1
            p = [2]
            values = [0, 1]
            extra = 3
        "#;
        assert!(RawConfig::parse(unknown).is_err());
    }

    #[test]
    fn degenerate_model_rejected() {
        let cfg = RawConfig::parse(
            r#"
            [model]
            d = 1
            p = [2]
            values = [1, 1]
        "#,
        )
        .unwrap();
        assert!(matches!(cfg.build_model(), Err(AppError::Config(_))));
    }

    #[test]
    fn float_values_rationalize_via_decimal_literal() {
        let cfg = RawConfig::parse(
            r#"
            [model]
            d = 1
            p = [2]
            values = [0.1, 2]
        "#,
        )
        .unwrap();
        let model = cfg.build_model().unwrap();
        assert_eq!(model.values()[0], rat(1, 10));
    }
}
