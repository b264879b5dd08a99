//! Key-value problem configuration files.
//!
//! Format: one `key = value` pair per line, `#` comments, blank lines
//! ignored. Unknown keys are rejected. Schema:
//!
//! ```text
//! p                = 2.0          # exponent in (1, 4)
//! lambda_plus      = 2.0          # positive-phase constant
//! lambda_minus     = 1.0          # negative-phase constant (λ₊^p − λ₋^p > 0)
//! domain_center_x  = 0.5
//! domain_center_y  = 0.5
//! domain_half_side = 0.5
//! resolution       = 256          # grid cells per side
//! seed             = 0
//! datum            = strip        # strip | two_plane | cone_trace | table
//! # strip:     datum_a, datum_b  (boundary values ±; breakpoint from the 1D oracle)
//! # two_plane: datum_alpha, datum_beta, datum_angle
//! # cone_trace: datum_omega
//! # table:     datum_table = x1:v1; x2:v2; ...
//! ```

use std::collections::BTreeMap;

use crate::energy::{BoundaryDatum, ProblemSpec, SquareDomain};
use crate::error::{Error, Result};
use crate::grid::Vec2;
use crate::minimize::strip_datum;

/// A parsed problem file: the spec plus run parameters.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub spec: ProblemSpec,
    pub resolution: usize,
    pub seed: u64,
}

pub fn parse_problem_config(text: &str) -> Result<ProblemConfig> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
        };
        let key = key.trim().to_string();
        if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key '{key}'")));
        }
    }

    let known = [
        "p",
        "lambda_plus",
        "lambda_minus",
        "domain_center_x",
        "domain_center_y",
        "domain_half_side",
        "resolution",
        "seed",
        "datum",
        "datum_a",
        "datum_b",
        "datum_alpha",
        "datum_beta",
        "datum_angle",
        "datum_omega",
        "datum_table",
    ];
    for key in pairs.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
    }

    let get_f64 = |key: &str, default: Option<f64>| -> Result<f64> {
        match pairs.get(key) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("key '{key}': {e}"))),
            None => default.ok_or_else(|| Error::Config(format!("missing key '{key}'"))),
        }
    };

    let p = get_f64("p", None)?;
    let lambda_plus = get_f64("lambda_plus", None)?;
    let lambda_minus = get_f64("lambda_minus", None)?;
    let domain = SquareDomain {
        center: Vec2::new(get_f64("domain_center_x", Some(0.5))?, get_f64("domain_center_y", Some(0.5))?),
        half_side: get_f64("domain_half_side", Some(0.5))?,
    };
    let resolution = match pairs.get("resolution") {
        Some(v) => v
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("key 'resolution': {e}")))?,
        None => 256,
    };
    let seed = match pairs.get("seed") {
        Some(v) => v.parse::<u64>().map_err(|e| Error::Config(format!("key 'seed': {e}")))?,
        None => 0,
    };

    let family = pairs
        .get("datum")
        .ok_or_else(|| Error::Config("missing key 'datum'".into()))?
        .as_str();
    let datum = match family {
        "strip" => {
            let a = get_f64("datum_a", Some(1.0))?;
            let b = get_f64("datum_b", Some(1.0))?;
            let lambda = lambda_plus.powf(p) - lambda_minus.powf(p);
            if !(lambda > 0.0) {
                return Err(Error::Config("strip datum needs Lambda > 0".into()));
            }
            let rect = domain.rect();
            strip_datum(p, a, b, lambda, rect.lo.x, rect.hi.x)?
        }
        "two_plane" => BoundaryDatum::TwoPlane {
            alpha: get_f64("datum_alpha", Some(1.0))?,
            beta: get_f64("datum_beta", Some(1.0))?,
            angle: get_f64("datum_angle", Some(0.0))?,
        },
        "cone_trace" => BoundaryDatum::ConeTrace { omega: get_f64("datum_omega", None)? },
        "table" => {
            let raw = pairs
                .get("datum_table")
                .ok_or_else(|| Error::Config("table datum needs 'datum_table'".into()))?;
            let mut points = Vec::new();
            for item in raw.split(';') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let Some((x, v)) = item.split_once(':') else {
                    return Err(Error::Config(format!("bad table entry '{item}'")));
                };
                let x: f64 =
                    x.trim().parse().map_err(|e| Error::Config(format!("table x: {e}")))?;
                let v: f64 =
                    v.trim().parse().map_err(|e| Error::Config(format!("table v: {e}")))?;
                points.push((x, v));
            }
            BoundaryDatum::Table { points }
        }
        other => return Err(Error::Config(format!("unknown datum family '{other}'"))),
    };

    let spec = ProblemSpec::new(p, lambda_plus, lambda_minus, domain, datum)
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(ProblemConfig { spec, resolution, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRIP: &str = "\
# strip experiment
p = 2.0
lambda_plus = 2.0
lambda_minus = 1.0
domain_center_x = 0.5
domain_center_y = 0.5
domain_half_side = 0.5
resolution = 128
datum = strip
datum_a = 1.0
datum_b = 1.0
";

    #[test]
    fn parses_strip_config() {
        let cfg = parse_problem_config(STRIP).unwrap();
        assert_eq!(cfg.resolution, 128);
        assert_eq!(cfg.seed, 0);
        assert!((cfg.spec.big_lambda() - 3.0).abs() < 1e-12);
        match &cfg.spec.datum {
            BoundaryDatum::Table { points } => {
                assert_eq!(points.len(), 3);
                assert!((points[1].0 - 0.588).abs() < 1e-2);
            }
            other => panic!("unexpected datum {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(parse_problem_config("p = 2\nwat = 3\n").is_err());
        assert!(parse_problem_config("p 2\n").is_err());
        assert!(parse_problem_config("p = 2\np = 3\n").is_err());
    }

    #[test]
    fn rejects_negative_bernoulli_constant() {
        let bad = "p = 2\nlambda_plus = 1\nlambda_minus = 1\ndatum = two_plane\n";
        assert!(parse_problem_config(bad).is_err());
    }

    #[test]
    fn parses_table_datum() {
        let cfg = parse_problem_config(
            "p = 2\nlambda_plus = 2\nlambda_minus = 1\ndatum = table\ndatum_table = 0:-1; 0.5:0; 1:1\n",
        )
        .unwrap();
        match &cfg.spec.datum {
            BoundaryDatum::Table { points } => assert_eq!(points.len(), 3),
            other => panic!("unexpected datum {other:?}"),
        }
    }
}
