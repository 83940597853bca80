use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Schema(String),
    Compute(soft_floer::Error),
}

impl From<soft_floer::Error> for CliError {
    fn from(e: soft_floer::Error) -> Self {
        match e {
            // validation of the input data itself
            soft_floer::Error::InvalidInput(msg) => CliError::Schema(msg),
            other => CliError::Compute(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let (kind, message) = match self {
            CliError::Usage(m) => ("UsageError".to_string(), m.clone()),
            CliError::Schema(m) => ("SchemaError".to_string(), m.clone()),
            CliError::Compute(e) => (e.kind().to_string(), e.to_string()),
        };
        json!({ "error": kind, "message": message, "exit_code": self.exit_code() })
    }
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Parses JSON, reporting the path to the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema(format!("at {path}: {}", e.into_inner()))
    })
}

pub fn require_positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

/// sha256 over the subcommand, the input bytes, the seed, the resolved
/// parameters and the tolerances.
pub fn config_hash(subcommand: &str, input: &str, seed: u64, params: &Value, tolerances: &Value) -> String {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update([0]);
    h.update(Sha256::digest(input.as_bytes()));
    h.update(seed.to_le_bytes());
    h.update(params.to_string().as_bytes());
    h.update(tolerances.to_string().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Wraps a result with the reproducibility fields every report carries.
pub fn envelope(
    subcommand: &str,
    input: &str,
    seed: u64,
    params: Value,
    tolerances: Value,
    result: impl Serialize,
) -> Result<Value, CliError> {
    let result = serde_json::to_value(result).map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))?;
    Ok(json!({
        "subcommand": subcommand,
        "version": VERSION,
        "config_hash": config_hash(subcommand, input, seed, &params, &tolerances),
        "seed": seed,
        "tolerances": tolerances,
        "params": params,
        "result": result,
    }))
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Usage(format!("cannot write stdout: {e}")))
        }
    }
}

pub fn write_json(path: Option<&Path>, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("json values serialize");
    text.push('\n');
    write_text(path, &text)
}
