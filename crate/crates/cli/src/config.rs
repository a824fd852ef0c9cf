//! JSON config files merged underneath command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Overlays the non-null fields of `flags` on the JSON object in `file`.
/// Keys in the file that the command does not know are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, file: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = file else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let parsed: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut merged) = parsed else {
        return Err(CliError::Invalid(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    };
    let Value::Object(given) = serde_json::to_value(&flags).map_err(|e| CliError::Other(e.to_string()))? else {
        unreachable!("command arguments serialize to an object");
    };
    if let Some(unknown) = merged.keys().find(|k| !given.contains_key(*k)) {
        return Err(CliError::Invalid(format!("unknown config key `{unknown}`")));
    }
    overlay(&mut merged, given);
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use std::io::Write;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Demo {
        a: Option<f64>,
        b: Option<String>,
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flags_win() {
        let f = file(r#"{"a": 1.0, "b": "x"}"#);
        let got = merge(Demo { a: Some(2.0), b: None }, Some(f.path())).unwrap();
        assert_eq!(
            got,
            Demo {
                a: Some(2.0),
                b: Some("x".into())
            }
        );
    }

    #[test]
    fn unknown_key_rejected() {
        let f = file(r#"{"c": 1}"#);
        assert!(matches!(
            merge(Demo { a: None, b: None }, Some(f.path())),
            Err(CliError::Invalid(_))
        ));
    }
}
