//! Run configuration: built-in defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use cyclharm::eigen::RESIDUAL_TOL;
use cyclharm::expansion::DEFAULT_ORDER;
use cyclharm::geometry::Params;
use cyclharm::hexfloat;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub a: [f64; 4],
    pub quad_order: usize,
    pub tol: f64,
    pub cache: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            a: [0.0, 1.0, 2.0, 3.0],
            quad_order: DEFAULT_ORDER,
            tol: RESIDUAL_TOL,
            cache: None,
            format: Format::Csv,
            threads: 0,
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub a: Option<[f64; 4]>,
    pub quad_order: Option<usize>,
    pub tol: Option<f64>,
    pub cache: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format {s:?}; expected csv or json")),
    }
}

/// A real given as a JSON number or as a decimal or hex-float string.
fn real(v: &Value, what: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ConfigError(format!("{what}: not a real number"))),
        Value::String(s) => hexfloat::parse(s).map_err(|e| ConfigError(format!("{what}: {e}"))),
        _ => Err(ConfigError(format!("{what}: expected a number"))),
    }
}

fn count(v: &Value, what: &str) -> Result<usize, ConfigError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| ConfigError(format!("{what}: expected a non-negative integer")))
}

impl Config {
    fn apply_file(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let obj = v
            .as_object()
            .ok_or_else(|| ConfigError(format!("{}: expected a JSON object", path.display())))?;
        for (key, val) in obj {
            match key.as_str() {
                "a" => {
                    let arr = val
                        .as_array()
                        .filter(|x| x.len() == 4)
                        .ok_or_else(|| ConfigError("a: expected four reals".into()))?;
                    for (k, x) in arr.iter().enumerate() {
                        self.a[k] = real(x, "a")?;
                    }
                }
                "quad_order" => self.quad_order = count(val, key)?,
                "tol" => self.tol = real(val, key)?,
                "cache" => {
                    let p = val
                        .as_str()
                        .ok_or_else(|| ConfigError("cache: expected a path".into()))?;
                    self.cache = Some(PathBuf::from(p));
                }
                "format" => {
                    let s = val
                        .as_str()
                        .ok_or_else(|| ConfigError("format: expected a string".into()))?;
                    self.format = parse_format(s).map_err(ConfigError)?;
                }
                "threads" => self.threads = count(val, key)?,
                _ => return Err(ConfigError(format!("unknown config field {key:?}"))),
            }
        }
        Ok(())
    }

    fn check(&self) -> Result<(), ConfigError> {
        Params::new(self.a).map_err(|e| ConfigError(e.to_string()))?;
        if self.quad_order < 8 {
            return Err(ConfigError(format!(
                "quad_order must be at least 8, got {}",
                self.quad_order
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(ConfigError(format!(
                "tol must lie in (0, 1e-2), got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Defaults, then `path` (or ./cyclharm.json when present), then CYCLHARM_CACHE, then flags.
    pub fn resolve(
        path: Option<&Path>,
        env_cache: Option<PathBuf>,
        o: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        let implicit = Path::new("cyclharm.json");
        let file = match path {
            Some(p) => Some(p),
            None if implicit.is_file() => Some(implicit),
            None => None,
        };
        if let Some(p) = file {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
            c.apply_file(&text, p)?;
        }
        if env_cache.is_some() {
            c.cache = env_cache;
        }
        if let Some(a) = o.a {
            c.a = a;
        }
        if let Some(q) = o.quad_order {
            c.quad_order = q;
        }
        if let Some(t) = o.tol {
            c.tol = t;
        }
        if o.cache.is_some() {
            c.cache = o.cache.clone();
        }
        if let Some(f) = o.format {
            c.format = f;
        }
        if let Some(t) = o.threads {
            c.threads = t;
        }
        c.check()?;
        Ok(c)
    }

    pub fn params(&self) -> Params<f64> {
        Params::new(self.a).expect("checked in resolve")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_file(text: &str, o: &Overrides) -> Result<Config, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, text).unwrap();
        Config::resolve(Some(&p), None, o)
    }

    #[test]
    fn hex_and_decimal_reals() {
        let c = with_file(
            r#"{"a": ["0x0p+0", 1, "2.0", "0x1.8p+1"], "tol": "1e-9"}"#,
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(c.a, [0.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.tol, 1e-9);
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = r#"{"quad_order": 20, "threads": 2}"#;
        let c = with_file(file, &Overrides::default()).unwrap();
        assert_eq!((c.quad_order, c.threads, c.format), (20, 2, Format::Csv));
        let o = Overrides {
            quad_order: Some(30),
            ..Default::default()
        };
        let c = with_file(file, &o).unwrap();
        assert_eq!((c.quad_order, c.threads), (30, 2));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(with_file(r#"{"a": [0, 2, 1, 3]}"#, &Overrides::default()).is_err());
        assert!(with_file(r#"{"quad_order": 4}"#, &Overrides::default()).is_err());
        assert!(with_file(r#"{"tol": 0.5}"#, &Overrides::default()).is_err());
        assert!(with_file(r#"{"colour": 1}"#, &Overrides::default()).is_err());
        assert!(with_file("not json", &Overrides::default()).is_err());
    }
}
