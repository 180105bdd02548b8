//! Presets and emitted configs checked against the JSON schemas in `schemas/`
//! with a small structural validator (types, required keys, closed objects,
//! enums, oneOf and local references).

use std::path::PathBuf;

use cca_cli::config::{RunConfig, CHAIN4_PRESET, KITAEV_PRESET};
use serde_json::Value;

fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

struct Validator {
    run: Value,
    lattice: Value,
}

impl Validator {
    fn new() -> Self {
        Self {
            run: schema("run_config.schema.json"),
            lattice: schema("lattice.schema.json"),
        }
    }

    fn resolve<'a>(&'a self, reference: &str, current: &'a Value) -> &'a Value {
        let (doc, pointer) = reference.split_once('#').unwrap_or((reference, ""));
        let root = match doc {
            "" => current,
            "lattice.schema.json" => &self.lattice,
            other => panic!("unknown schema {other}"),
        };
        root.pointer(pointer).unwrap_or_else(|| panic!("dangling ref {reference}"))
    }

    fn check(&self, v: &Value, s: &Value, root: &Value, at: &str) -> Result<(), String> {
        if let Some(r) = s.get("$ref").and_then(Value::as_str) {
            let next_root = if r.starts_with('#') { root } else { &self.lattice };
            return self.check(v, self.resolve(r, root), next_root, at);
        }
        if let Some(options) = s.get("oneOf").and_then(Value::as_array) {
            let hits = options.iter().filter(|o| self.check(v, o, root, at).is_ok()).count();
            return if hits == 1 { Ok(()) } else { Err(format!("{at}: {hits} oneOf branches match")) };
        }
        if let Some(allowed) = s.get("enum").and_then(Value::as_array) {
            if !allowed.contains(v) {
                return Err(format!("{at}: {v} not in enum"));
            }
        }
        if let Some(t) = s.get("type") {
            let types: Vec<&str> = match t {
                Value::String(t) => vec![t.as_str()],
                Value::Array(ts) => ts.iter().filter_map(Value::as_str).collect(),
                _ => vec![],
            };
            let ok = types.iter().any(|t| match *t {
                "object" => v.is_object(),
                "array" => v.is_array(),
                "number" => v.is_number(),
                "integer" => v.is_u64() || v.is_i64(),
                "boolean" => v.is_boolean(),
                "string" => v.is_string(),
                "null" => v.is_null(),
                _ => false,
            });
            if !ok {
                return Err(format!("{at}: expected {types:?}, got {v}"));
            }
        }
        if let (Some(obj), Some(props)) = (v.as_object(), s.get("properties").and_then(Value::as_object)) {
            for req in s.get("required").and_then(Value::as_array).into_iter().flatten() {
                let key = req.as_str().unwrap();
                if !obj.contains_key(key) {
                    return Err(format!("{at}: missing {key}"));
                }
            }
            for (key, child) in obj {
                match props.get(key) {
                    Some(cs) => self.check(child, cs, root, &format!("{at}.{key}"))?,
                    None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                        return Err(format!("{at}: unexpected key {key}"));
                    }
                    None => {}
                }
            }
        }
        if let (Some(items), Some(schema)) = (v.as_array(), s.get("items")) {
            for (k, item) in items.iter().enumerate() {
                self.check(item, schema, root, &format!("{at}[{k}]"))?;
            }
        }
        Ok(())
    }

    fn run_config(&self, v: &Value) -> Result<(), String> {
        self.check(v, &self.run, &self.run, "$")
    }
}

/// Serialized `Option::None` fields appear as `null`; the schema models them
/// as absent.
fn strip_nulls(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|_, x| !x.is_null());
            map.values_mut().for_each(strip_nulls);
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_nulls),
        _ => {}
    }
}

#[test]
fn presets_validate() {
    let v = Validator::new();
    for text in [CHAIN4_PRESET, KITAEV_PRESET] {
        v.run_config(&serde_json::from_str(text).unwrap()).unwrap();
    }
}

#[test]
fn serialized_configs_validate() {
    let v = Validator::new();
    let mut cfg = RunConfig::parse(CHAIN4_PRESET).unwrap();
    let mut value = serde_json::to_value(&cfg).unwrap();
    strip_nulls(&mut value);
    v.run_config(&value).unwrap();

    cfg.lattice = Some(cca_cli::config::LatticeSpec::Inline(
        cca_core::lattice::honeycomb(1, 1, [cca_core::lattice::BondCoupling::new(1e-5, 0.0); 3]).unwrap(),
    ));
    let mut value = serde_json::to_value(&cfg).unwrap();
    strip_nulls(&mut value);
    v.run_config(&value).unwrap();
}

#[test]
fn schema_lists_every_config_field() {
    let cfg = serde_json::to_value(RunConfig::parse(CHAIN4_PRESET).unwrap()).unwrap();
    let fields: Vec<&String> = cfg.as_object().unwrap().keys().collect();
    let props = Validator::new().run["properties"].as_object().unwrap().clone();
    let listed: Vec<&String> = props.keys().collect();
    let mut a = fields.clone();
    let mut b = listed.clone();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn invalid_documents_rejected() {
    let v = Validator::new();
    let bad = [
        r#"{ "site": { "omega0": 0, "g": 1 } }"#,
        r#"{ "site": { "omega0": 0, "g": 1, "delta_a": 0, "delta_b": 0 }, "method": "qr" }"#,
        r#"{ "site": { "omega0": 0, "g": 1, "delta_a": 0, "delta_b": 0 }, "lattice": { "ring": {} } }"#,
        r#"{ "site": { "omega0": 0, "g": 1, "delta_a": 0, "delta_b": 0 }, "extra": 1 }"#,
    ];
    for text in bad {
        assert!(v.run_config(&serde_json::from_str(text).unwrap()).is_err(), "{text}");
    }
}
