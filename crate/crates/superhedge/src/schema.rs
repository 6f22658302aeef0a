//! Structural validation of JSON reports against the shipped schema files.
//! Supports the subset of keywords those files use: type, required,
//! properties, additionalProperties, items, enum, plus an x-rational
//! extension checking number strings ("finite" or "extended" with inf).

use crate::rational::parse_rational;
use serde_json::Value;

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_i64() || n.is_u64() => "integer",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn check_type(expected: &Value, value: &Value, at: &str) -> Result<(), String> {
    let actual = type_name(value);
    let matches = |t: &str| t == actual || (t == "number" && actual == "integer");
    let ok = match expected {
        Value::String(t) => matches(t),
        Value::Array(ts) => ts.iter().any(|t| t.as_str().is_some_and(matches)),
        _ => return Err(format!("{at}: malformed type keyword")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{at}: expected type {expected}, found {actual}"))
    }
}

fn check_rational(kind: &str, value: &Value, at: &str) -> Result<(), String> {
    let Value::String(s) = value else {
        return Err(format!("{at}: rational values are strings"));
    };
    let finite_ok = parse_rational(s).is_ok();
    let ok = match kind {
        "finite" => finite_ok,
        "extended" => finite_ok || s == "inf" || s == "-inf",
        other => return Err(format!("{at}: unknown x-rational kind {other:?}")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{at}: {s:?} is not a valid {kind} rational"))
    }
}

/// Checks `value` against `schema`, naming the offending location on
/// failure.
pub fn validate(schema: &Value, value: &Value) -> Result<(), String> {
    validate_at(schema, value, "$")
}

fn validate_at(schema: &Value, value: &Value, at: &str) -> Result<(), String> {
    let Value::Object(schema) = schema else {
        return Err(format!("{at}: schema nodes must be objects"));
    };
    if let Some(expected) = schema.get("type") {
        check_type(expected, value, at)?;
    }
    if let Some(kind) = schema.get("x-rational") {
        let kind = kind.as_str().ok_or_else(|| format!("{at}: malformed x-rational"))?;
        if !value.is_null() {
            check_rational(kind, value, at)?;
        }
    }
    if let Some(allowed) = schema.get("enum") {
        let allowed = allowed.as_array().ok_or_else(|| format!("{at}: malformed enum"))?;
        if !allowed.contains(value) {
            return Err(format!("{at}: {value} is not one of {allowed:?}"));
        }
    }
    if let Value::Object(fields) = value {
        if let Some(required) = schema.get("required") {
            let required = required.as_array().ok_or_else(|| format!("{at}: malformed required"))?;
            for name in required {
                let name = name.as_str().ok_or_else(|| format!("{at}: malformed required"))?;
                if !fields.contains_key(name) {
                    return Err(format!("{at}: missing required field {name:?}"));
                }
            }
        }
        let empty = serde_json::Map::new();
        let properties = match schema.get("properties") {
            Some(Value::Object(p)) => p,
            Some(_) => return Err(format!("{at}: malformed properties")),
            None => &empty,
        };
        for (name, field) in fields {
            let here = format!("{at}.{name}");
            if let Some(sub) = properties.get(name) {
                validate_at(sub, field, &here)?;
            } else {
                match schema.get("additionalProperties") {
                    None | Some(Value::Bool(true)) => {}
                    Some(Value::Bool(false)) => {
                        return Err(format!("{at}: unexpected field {name:?}"));
                    }
                    Some(sub) => validate_at(sub, field, &here)?,
                }
            }
        }
    }
    if let Value::Array(entries) = value {
        if let Some(items) = schema.get("items") {
            for (i, entry) in entries.iter().enumerate() {
                validate_at(items, entry, &format!("{at}[{i}]"))?;
            }
        }
    }
    Ok(())
}
