use std::io::Write;

use serde_json::Value;

use crate::Format;

/// Writes to stdout, ignoring a closed pipe.
pub fn put(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

pub fn emit(v: &Value, format: Format) {
    match format {
        Format::Json => put(&format!("{}\n", serde_json::to_string_pretty(v).expect("json"))),
        Format::Text => put(&text(v)),
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// One `key: value` line per top-level field; nested structures are
/// flattened with dotted keys, arrays of scalars joined by spaces.
pub fn text(v: &Value) -> String {
    let mut out = String::new();
    walk("", v, &mut out);
    out
}

fn walk(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                walk(&key, x, out);
            }
        }
        Value::Array(items) if items.iter().all(|x| scalar(x).is_some()) => {
            let parts: Vec<String> = items.iter().filter_map(scalar).collect();
            out.push_str(&format!("{prefix}: {}\n", parts.join(" ")));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                walk(&format!("{prefix}[{i}]"), x, out);
            }
        }
        _ => out.push_str(&format!("{prefix}: {}\n", scalar(v).unwrap_or_default())),
    }
}
