//! JSON run configuration.
//!
//! ```json
//! {
//!   "grid":     {"nx": 33, "ny": 33, "width": 1.0, "height": 1.0},
//!   "boundary": {"kind": "winding-director", "s": 0.4, "k": 1, "theta0": 0.0},
//!   "bulk":     {"T": 4.0, "kappa": 5.0, "quad_order": 32},
//!   "elastic":  {"L1": 1.0, "L2": 0.1, "L3": 0.1, "L4": 0.1, "L5": 0.0},
//!   "solver":   {"max_iters": 20000, "grad_tol": 1e-6, "armijo_c": 1e-4,
//!                "step_init": 1e-3, "seed": 0}
//! }
//! ```
//!
//! Only `grid.nx`, `grid.ny` and `boundary.s` are required; every other key
//! falls back to the value shown by [`RunConfig::defaults_table`]. Unknown
//! keys are rejected.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::elastic::ElasticConstants;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::field::{make_field, BoundaryKind, BoundarySpec, Field, GridSpec, InteriorInit};
use crate::maier_saupe::{BulkParams, BulkPotential, DEFAULT_QUAD_ORDER};
use crate::minimizer::SolverOptions;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub boundary: BoundarySpec,
    pub bulk: BulkParams,
    pub elastic: ElasticConstants,
    pub solver: SolverOptions,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config("<root>", format!("invalid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let mut root = Section::new(value, "")?;
        let grid = {
            let mut s = root.section("grid", true)?.expect("required");
            let g = GridSpec {
                nx: s.usize("nx", None)?,
                ny: s.usize("ny", None)?,
                width: s.f64("width", Some(1.0))?,
                height: s.f64("height", Some(1.0))?,
            };
            s.finish()?;
            g
        };
        let boundary = {
            let mut s = root.section("boundary", true)?.expect("required");
            let kind = match s.str("kind", Some("winding-director"))?.as_str() {
                "winding-director" => BoundaryKind::WindingDirector,
                "uniform-uniaxial" => BoundaryKind::UniformUniaxial,
                other => {
                    return Err(Error::config(
                        s.path("kind"),
                        format!("unknown kind `{other}` (expected `winding-director` or `uniform-uniaxial`)"),
                    ))
                }
            };
            let b = BoundarySpec {
                kind,
                s: s.f64("s", None)?,
                k: s.f64("k", Some(1.0))?,
                theta0: s.f64("theta0", Some(0.0))?,
            };
            s.finish()?;
            b
        };
        let bulk = match root.section("bulk", false)? {
            Some(mut s) => {
                let b = BulkParams {
                    temperature: s.f64("T", Some(4.0))?,
                    kappa: s.f64("kappa", Some(5.0))?,
                    quad_order: s.usize("quad_order", Some(DEFAULT_QUAD_ORDER))?,
                };
                s.finish()?;
                b
            }
            None => BulkParams::new(4.0, 5.0),
        };
        let elastic = match root.section("elastic", false)? {
            Some(mut s) => {
                let d = [1.0, 0.0, 0.0, 0.0, 0.0];
                let mut l = [0.0; 5];
                for (k, v) in l.iter_mut().enumerate() {
                    *v = s.f64(&format!("L{}", k + 1), Some(d[k]))?;
                }
                s.finish()?;
                ElasticConstants(l)
            }
            None => ElasticConstants::one_constant(1.0),
        };
        let solver = match root.section("solver", false)? {
            Some(mut s) => {
                let d = SolverOptions::default();
                let o = SolverOptions {
                    max_iters: s.usize("max_iters", Some(d.max_iters))?,
                    grad_tol: s.f64("grad_tol", Some(d.grad_tol))?,
                    armijo_c: s.f64("armijo_c", Some(d.armijo_c))?,
                    step_init: s.f64("step_init", Some(d.step_init))?,
                    seed: s.u64("seed", Some(d.seed))?,
                    ..d
                };
                s.finish()?;
                o
            }
            None => SolverOptions::default(),
        };
        root.finish()?;

        let cfg = RunConfig {
            grid,
            boundary,
            bulk,
            elastic,
            solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks, reported against the offending key.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nx < 3 {
            return Err(Error::config("grid.nx", format!("must be at least 3, got {}", g.nx)));
        }
        if g.ny < 3 {
            return Err(Error::config("grid.ny", format!("must be at least 3, got {}", g.ny)));
        }
        if !(g.width > 0.0) {
            return Err(Error::config("grid.width", format!("must be positive, got {}", g.width)));
        }
        if !(g.height > 0.0) {
            return Err(Error::config("grid.height", format!("must be positive, got {}", g.height)));
        }
        let b = &self.boundary;
        if !(b.s > -0.5 && b.s < 1.0) {
            return Err(Error::config("boundary.s", format!("must lie in (-1/2, 1), got {}", b.s)));
        }
        if b.kind == BoundaryKind::WindingDirector && (2.0 * b.k).fract() != 0.0 {
            return Err(Error::config("boundary.k", format!("must be a half-integer, got {}", b.k)));
        }
        let p = &self.bulk;
        if !(p.temperature > 0.0) {
            return Err(Error::config("bulk.T", format!("must be positive, got {}", p.temperature)));
        }
        if !(p.kappa >= 0.0) {
            return Err(Error::config("bulk.kappa", format!("must be non-negative, got {}", p.kappa)));
        }
        if p.quad_order < crate::maier_saupe::MIN_ORDER {
            return Err(Error::config(
                "bulk.quad_order",
                format!("must be at least {}, got {}", crate::maier_saupe::MIN_ORDER, p.quad_order),
            ));
        }
        self.solver.validate()
    }

    pub fn model(&self) -> Result<EnergyModel> {
        Ok(EnergyModel::new(BulkPotential::new(self.bulk)?, self.elastic))
    }

    pub fn initial_field(&self, init: InteriorInit) -> Result<Field> {
        make_field(self.grid, &self.boundary, init)
    }

    /// Same configuration on an `nx × ny` grid.
    pub fn with_grid(&self, nx: usize, ny: usize) -> RunConfig {
        let mut c = self.clone();
        c.grid.nx = nx;
        c.grid.ny = ny;
        c
    }

    pub fn to_value(&self) -> Value {
        let l = self.elastic.0;
        json!({
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny, "width": self.grid.width, "height": self.grid.height},
            "boundary": {"kind": self.boundary.kind.as_str(), "s": self.boundary.s, "k": self.boundary.k, "theta0": self.boundary.theta0},
            "bulk": {"T": self.bulk.temperature, "kappa": self.bulk.kappa, "quad_order": self.bulk.quad_order},
            "elastic": {"L1": l[0], "L2": l[1], "L3": l[2], "L4": l[3], "L5": l[4]},
            "solver": {
                "max_iters": self.solver.max_iters,
                "grad_tol": self.solver.grad_tol,
                "armijo_c": self.solver.armijo_c,
                "step_init": self.solver.step_init,
                "seed": self.solver.seed,
            },
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("plain values serialize")
    }

    /// `(key, default)` for every optional key.
    pub fn defaults_table() -> Vec<(&'static str, String)> {
        let d = SolverOptions::default();
        vec![
            ("grid.width", "1".into()),
            ("grid.height", "1".into()),
            ("boundary.kind", "winding-director".into()),
            ("boundary.k", "1".into()),
            ("boundary.theta0", "0".into()),
            ("bulk.T", "4".into()),
            ("bulk.kappa", "5".into()),
            ("bulk.quad_order", DEFAULT_QUAD_ORDER.to_string()),
            ("elastic.L1", "1".into()),
            ("elastic.L2..L5", "0".into()),
            ("solver.max_iters", d.max_iters.to_string()),
            ("solver.grad_tol", format!("{:e}", d.grad_tol)),
            ("solver.armijo_c", format!("{:e}", d.armijo_c)),
            ("solver.step_init", format!("{:e}", d.step_init)),
            ("solver.seed", d.seed.to_string()),
        ]
    }
}

/// Object being read, with the keys consumed so far.
struct Section<'a> {
    map: &'a Map<String, Value>,
    prefix: String,
    seen: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(value: &'a Value, prefix: &str) -> Result<Self> {
        let map = value.as_object().ok_or_else(|| {
            let key = if prefix.is_empty() { "<root>" } else { prefix };
            Error::config(key, format!("expected an object, found {}", type_name(value)))
        })?;
        Ok(Section {
            map,
            prefix: prefix.to_string(),
            seen: Vec::new(),
        })
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.prefix, key)
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        self.seen.push(key.to_string());
        self.map.get(key)
    }

    fn section(&mut self, key: &str, required: bool) -> Result<Option<Section<'a>>> {
        let path = self.path(key);
        match self.get(key) {
            Some(v) => Section::new(v, &path).map(Some),
            None if required => Err(Error::config(path, "missing required section")),
            None => Ok(None),
        }
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let path = self.path(key);
        match (self.get(key), default) {
            (Some(v), _) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(x),
                _ => Err(Error::config(path, format!("expected a number, found {}", type_name(v)))),
            },
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::config(path, "missing required key")),
        }
    }

    fn u64(&mut self, key: &str, default: Option<u64>) -> Result<u64> {
        let path = self.path(key);
        match (self.get(key), default) {
            (Some(v), _) => v
                .as_u64()
                .ok_or_else(|| Error::config(path, format!("expected a non-negative integer, found {}", type_name(v)))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::config(path, "missing required key")),
        }
    }

    fn usize(&mut self, key: &str, default: Option<usize>) -> Result<usize> {
        let path = self.path(key);
        let v = self.u64(key, default.map(|d| d as u64))?;
        usize::try_from(v).map_err(|_| Error::config(path, "value too large"))
    }

    fn str(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        let path = self.path(key);
        match (self.get(key), default) {
            (Some(v), _) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::config(path, format!("expected a string, found {}", type_name(v)))),
            (None, Some(d)) => Ok(d.to_string()),
            (None, None) => Err(Error::config(path, "missing required key")),
        }
    }

    /// Rejects keys that were never asked for.
    fn finish(self) -> Result<()> {
        let mut unknown: Vec<&String> = self.map.keys().filter(|k| !self.seen.contains(k)).collect();
        unknown.sort();
        if let Some(key) = unknown.first() {
            let mut message = "unknown key".to_string();
            if let Some(s) = suggest(key, &self.seen) {
                message.push_str(&format!("; did you mean `{s}`?"));
            }
            return Err(Error::config(self.path(key), message));
        }
        Ok(())
    }
}

fn suggest<'s>(key: &str, candidates: &'s [String]) -> Option<&'s str> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(&key.to_lowercase(), &c.to_lowercase()), c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c.as_str())
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"grid": {"nx": 9, "ny": 7}, "boundary": {"s": 0.4}}"#;

    fn key_of(e: Error) -> (String, String) {
        match e {
            Error::Config { key, message } => (key, message),
            e => panic!("expected config error, got {e:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.grid, GridSpec { nx: 9, ny: 7, width: 1.0, height: 1.0 });
        assert_eq!(c.boundary, BoundarySpec::winding(0.4, 1.0, 0.0));
        assert_eq!(c.bulk, BulkParams::new(4.0, 5.0));
        assert_eq!(c.elastic, ElasticConstants::one_constant(1.0));
        assert_eq!(c.solver, SolverOptions::default());
    }

    #[test]
    fn round_trip_through_json() {
        let mut c = RunConfig::from_json_str(MINIMAL).unwrap();
        c.elastic = ElasticConstants::new(1.0, 0.1, 0.2, 0.3, 0.4);
        c.boundary = BoundarySpec::uniform(-0.2, 0.5);
        c.solver.seed = 17;
        assert_eq!(RunConfig::from_json_str(&c.to_json_string()).unwrap(), c);
    }

    #[test]
    fn negative_temperature_names_key() {
        let text = r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "bulk": {"T": -1}}"#;
        let (key, _) = key_of(RunConfig::from_json_str(text).unwrap_err());
        assert_eq!(key, "bulk.T");
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let text = r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "elastc": {"L1": 1}}"#;
        let (key, message) = key_of(RunConfig::from_json_str(text).unwrap_err());
        assert_eq!(key, "elastc");
        assert!(message.contains("`elastic`"), "{message}");

        let text = r#"{"grid": {"nx": 9, "ny": 9, "witdh": 2}, "boundary": {"s": 0.4}}"#;
        let (key, message) = key_of(RunConfig::from_json_str(text).unwrap_err());
        assert_eq!(key, "grid.witdh");
        assert!(message.contains("`width`"));

        let text = r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "zzzzzz": 1}"#;
        let (_, message) = key_of(RunConfig::from_json_str(text).unwrap_err());
        assert!(!message.contains("did you mean"));
    }

    #[test]
    fn type_and_range_errors() {
        let cases = [
            (r#"{"grid": {"nx": 9}, "boundary": {"s": 0.4}}"#, "grid.ny"),
            (r#"{"grid": {"nx": 2, "ny": 9}, "boundary": {"s": 0.4}}"#, "grid.nx"),
            (r#"{"grid": {"nx": "9", "ny": 9}, "boundary": {"s": 0.4}}"#, "grid.nx"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 1.0}}"#, "boundary.s"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4, "k": 0.3}}"#, "boundary.k"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4, "kind": "hedgehog"}}"#, "boundary.kind"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "bulk": {"quad_order": 4}}"#, "bulk.quad_order"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "bulk": {"kappa": -1}}"#, "bulk.kappa"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "solver": {"armijo_c": 2}}"#, "solver.armijo_c"),
            (r#"{"grid": {"nx": 9, "ny": 9}, "boundary": {"s": 0.4}, "solver": {"seed": -3}}"#, "solver.seed"),
            (r#"{"grid": 3, "boundary": {"s": 0.4}}"#, "grid"),
            (r#"{"boundary": {"s": 0.4}}"#, "grid"),
            (r#"[1, 2]"#, "<root>"),
            (r#"{"grid": "#, "<root>"),
        ];
        for (text, want) in cases {
            let (key, _) = key_of(RunConfig::from_json_str(text).unwrap_err());
            assert_eq!(key, want, "{text}");
        }
    }
}
