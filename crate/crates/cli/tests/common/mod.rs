#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

pub fn adiabatic(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_adiabatic")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates `doc` against the keyword subset the shipped schemas use:
/// `type`, `properties`, `required`, `additionalProperties`, `items`, `$ref`
/// into `$defs`, `enum`, `const`, `oneOf`, `minimum`, `minItems`.
pub fn validate(schema: &Value, doc: &Value) -> Result<(), String> {
    check(schema, schema, doc, "$")
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.as_f64().is_some_and(|x| x.fract() == 0.0),
        other => panic!("unsupported type {other}"),
    }
}

fn check(root: &Value, s: &Value, v: &Value, at: &str) -> Result<(), String> {
    let s = s.as_object().expect("schema is an object");
    for key in s.keys() {
        assert!(
            [
                "$schema", "$id", "title", "$defs", "type", "properties", "required", "additionalProperties", "items", "$ref", "enum",
                "const", "oneOf", "minimum", "minItems"
            ]
            .contains(&key.as_str()),
            "unsupported keyword {key}"
        );
    }
    if let Some(r) = s.get("$ref") {
        let name = r.as_str().unwrap().strip_prefix("#/$defs/").expect("local ref");
        return check(root, &root["$defs"][name], v, at);
    }
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(n) => type_matches(n, v),
            Value::Array(ns) => ns.iter().any(|n| type_matches(n.as_str().unwrap(), v)),
            _ => panic!("bad type"),
        };
        if !ok {
            return Err(format!("{at}: expected type {t}, got {v}"));
        }
    }
    if let Some(c) = s.get("const") {
        if c != v {
            return Err(format!("{at}: expected {c}, got {v}"));
        }
    }
    if let Some(e) = s.get("enum") {
        if !e.as_array().unwrap().contains(v) {
            return Err(format!("{at}: {v} not in {e}"));
        }
    }
    if let (Some(m), Some(x)) = (s.get("minimum"), v.as_f64()) {
        if x < m.as_f64().unwrap() {
            return Err(format!("{at}: {x} below minimum {m}"));
        }
    }
    if let Some(options) = s.get("oneOf") {
        let matching = options.as_array().unwrap().iter().filter(|o| check(root, o, v, at).is_ok()).count();
        if matching != 1 {
            return Err(format!("{at}: {matching} oneOf branches match"));
        }
    }
    if let Value::Object(map) = v {
        let props = s.get("properties").and_then(Value::as_object);
        for req in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !map.contains_key(req.as_str().unwrap()) {
                return Err(format!("{at}: missing {req}"));
            }
        }
        for (k, child) in map {
            match props.and_then(|p| p.get(k)) {
                Some(ps) => check(root, ps, child, &format!("{at}.{k}"))?,
                None => match s.get("additionalProperties") {
                    Some(Value::Bool(false)) => return Err(format!("{at}: unexpected property {k}")),
                    Some(ap @ Value::Object(_)) => check(root, ap, child, &format!("{at}.{k}"))?,
                    _ => {}
                },
            }
        }
    }
    if let Value::Array(items) = v {
        if let Some(m) = s.get("minItems") {
            if (items.len() as u64) < m.as_u64().unwrap() {
                return Err(format!("{at}: fewer than {m} items"));
            }
        }
        if let Some(is) = s.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(root, is, item, &format!("{at}[{i}]"))?;
            }
        }
    }
    Ok(())
}
