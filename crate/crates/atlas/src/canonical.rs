//! Canonical JSON: object keys sorted, no insignificant whitespace, floats
//! in shortest round-trip form. Equal values always produce equal bytes.

use serde::Serialize;
use serde_json::{Map, Value};

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Value {
    sort_keys(serde_json::to_value(value).expect("in-memory values serialize"))
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(&to_value(value)).expect("values serialize")
}

/// Re-encode arbitrary JSON text canonically.
pub fn canonicalize(text: &str) -> Result<String, serde_json::Error> {
    let v: Value = serde_json::from_str(text)?;
    Ok(to_string(&v))
}

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, sort_keys(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_sorted_without_whitespace() {
        let map: HashMap<&str, f64> = [("z", 1.5), ("a", 0.1), ("m", 3.0)].into_iter().collect();
        assert_eq!(to_string(&map), r#"{"a":0.1,"m":3.0,"z":1.5}"#);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let once = canonicalize(r#"{ "b" : [ {"y":1, "x":2} ], "a": 0.30000000000000004 }"#).unwrap();
        assert_eq!(once, r#"{"a":0.30000000000000004,"b":[{"x":2,"y":1}]}"#);
        assert_eq!(canonicalize(&once).unwrap(), once);
    }
}
