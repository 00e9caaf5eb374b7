//! Parameter resolution: command-line flags over the `--config` file over
//! built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Master seed used when neither the flags nor the config file set one.
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUT: &str = "slekit-out";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys or parameter values: exit code 2.
    Config(String),
    /// Failure while running: exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<slekit::Error> for CliError {
    fn from(e: slekit::Error) -> Self {
        match e {
            slekit::Error::Domain(_) | slekit::Error::Invalid(_) | slekit::Error::EmptyInterior => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Contents of a `--config` file:
/// `{"subcommand"?, "seed"?, "threads"?, "out"?, "params"?: {...}}`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub subcommand: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub params: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config is not JSON: {e}")))?;
        let Value::Object(map) = v else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        let mut cfg = ConfigFile::default();
        for (k, v) in map {
            let bad = |what: &str| CliError::Config(format!("config key `{k}` must be {what}"));
            match k.as_str() {
                "subcommand" => {
                    cfg.subcommand = Some(v.as_str().ok_or_else(|| bad("a string"))?.to_string())
                }
                "seed" => cfg.seed = Some(v.as_u64().ok_or_else(|| bad("an unsigned integer"))?),
                "threads" => {
                    cfg.threads =
                        Some(v.as_u64().ok_or_else(|| bad("an unsigned integer"))? as usize)
                }
                "out" => cfg.out = Some(PathBuf::from(v.as_str().ok_or_else(|| bad("a string"))?)),
                "params" => match v {
                    Value::Object(p) => cfg.params = p,
                    _ => return Err(bad("an object")),
                },
                _ => return Err(CliError::Config(format!("unknown config key `{k}`"))),
            }
        }
        Ok(cfg)
    }
}

/// Overlay the flags that were given on top of the config parameters and
/// read the result back, rejecting keys the subcommand does not know.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    config: &Map<String, Value>,
) -> CliResult<T> {
    let mut merged = config.clone();
    match serde_json::to_value(flags).map_err(|e| CliError::Runtime(e.to_string()))? {
        Value::Object(m) => {
            for (k, v) in m {
                if !v.is_null() {
                    merged.insert(k, v);
                }
            }
        }
        _ => unreachable!("parameter structs serialize to objects"),
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Config(format!("parameter {e}")))
}

/// The value of a required parameter.
pub fn required<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("missing required parameter `{name}` (--{name})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct P {
        kappa: Option<f64>,
        trials: Option<u64>,
    }

    #[test]
    fn flags_override_config() {
        let cfg: Map<String, Value> =
            serde_json::from_str(r#"{"kappa": 2.0, "trials": 5}"#).unwrap();
        let m = merge(
            &P {
                kappa: Some(6.0),
                trials: None,
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(
            m,
            P {
                kappa: Some(6.0),
                trials: Some(5)
            }
        );
    }

    #[test]
    fn unknown_keys_are_named() {
        let cfg: Map<String, Value> = serde_json::from_str(r#"{"kapa": 2.0}"#).unwrap();
        let e = merge(&P::default(), &cfg).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("kapa"));
    }

    #[test]
    fn missing_value_names_the_key() {
        let e = required::<f64>(None, "kappa").unwrap_err();
        assert!(e.to_string().contains("kappa"));
    }
}
