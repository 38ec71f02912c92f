//! JSON checkpoints: `{"m": .., "N": .., "subnets": [{"n": [..], "A": [..], "b": [..]}, ..]}`.
//!
//! Floats are written in shortest round-trip form and parsed back exactly, so
//! a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{FlmError, Result};
use crate::lexi::MAX_DIM;
use crate::model::{FlmModel, SubNetwork};

#[derive(Debug, Serialize, Deserialize)]
struct SubnetRecord {
    n: Vec<f64>,
    #[serde(rename = "A")]
    amp: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CheckpointRecord {
    m: usize,
    #[serde(rename = "N")]
    n_sub: usize,
    subnets: Vec<SubnetRecord>,
}

const SECTIONS: [&str; 3] = ["m", "N", "subnets"];
const SUBNET_SECTIONS: [&str; 3] = ["n", "A", "b"];

pub fn to_json_string(model: &FlmModel) -> Result<String> {
    if let Some(p) = model.params().iter().position(|v| !v.is_finite()) {
        return Err(FlmError::Invariant(format!("parameter {p} is not finite")));
    }
    let record = CheckpointRecord {
        m: model.dim(),
        n_sub: model.n_sub(),
        subnets: model
            .subnets()
            .map(|s| SubnetRecord {
                n: s.freq.to_vec(),
                amp: s.amp.to_vec(),
                b: s.bias.to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).map_err(|e| FlmError::Parse(e.to_string()))
}

pub fn from_json_str(text: &str) -> Result<FlmModel> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Eof {
            FlmError::Parse(format!(
                "unexpected end of file inside section `{}`",
                last_section(text)
            ))
        } else {
            FlmError::Parse(e.to_string())
        }
    })?;
    let obj = root
        .as_object()
        .ok_or_else(|| FlmError::Parse("top level must be an object".into()))?;
    for key in SECTIONS {
        if !obj.contains_key(key) {
            return Err(FlmError::MissingSection(key.to_string()));
        }
    }
    let m = as_count(&obj["m"], "m")?;
    if m == 0 || m > MAX_DIM {
        return Err(FlmError::InvalidDimension { m, max: MAX_DIM });
    }
    let n_sub = as_count(&obj["N"], "N")?;
    let list = obj["subnets"]
        .as_array()
        .ok_or_else(|| FlmError::Parse("`subnets` must be an array".into()))?;
    if list.len() != n_sub {
        return Err(FlmError::Invariant(format!(
            "N = {n_sub} but {} sub-networks are listed",
            list.len()
        )));
    }
    if n_sub == 0 {
        return Err(FlmError::Invariant("N must be at least 1".into()));
    }
    let mut subnets = Vec::with_capacity(n_sub);
    for (s, entry) in list.iter().enumerate() {
        let sub = entry
            .as_object()
            .ok_or_else(|| FlmError::Parse(format!("subnets[{s}] must be an object")))?;
        for key in SUBNET_SECTIONS {
            if !sub.contains_key(key) {
                return Err(FlmError::MissingSection(format!("subnets[{s}].{key}")));
            }
        }
        subnets.push(SubNetwork {
            freq: as_floats(&sub["n"], s, "n")?,
            amp: as_floats(&sub["A"], s, "A")?,
            bias: as_floats(&sub["b"], s, "b")?,
        });
    }
    FlmModel::from_subnets(m, &subnets)
}

pub fn save(model: &FlmModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(model)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<FlmModel> {
    from_json_str(&fs::read_to_string(path)?)
}

fn as_count(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| FlmError::Parse(format!("`{key}` must be a non-negative integer")))
}

fn as_floats(v: &Value, s: usize, key: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| FlmError::Parse(format!("subnets[{s}].{key} must be an array")))?;
    arr.iter()
        .map(|x| {
            x.as_f64().filter(|f| f.is_finite()).ok_or_else(|| {
                FlmError::Parse(format!("subnets[{s}].{key} holds a non-numeric entry"))
            })
        })
        .collect()
}

/// The last known section key that appears in a truncated document.
fn last_section(text: &str) -> String {
    let mut best: Option<(usize, String)> = None;
    let top = SECTIONS.iter().map(|k| k.to_string());
    let inner = SUBNET_SECTIONS.iter().map(|k| format!("subnets.{k}"));
    for name in top.chain(inner) {
        let key = name.rsplit('.').next().unwrap_or(&name);
        if let Some(pos) = text.rfind(&format!("\"{key}\"")) {
            if best.as_ref().is_none_or(|(p, _)| pos > *p) {
                best = Some((pos, name));
            }
        }
    }
    best.map(|(_, name)| name)
        .unwrap_or_else(|| SECTIONS[0].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model;

    fn trained_like() -> FlmModel {
        let mut model = init_model(3, 4, 11).unwrap();
        for (k, p) in model.params_mut().iter_mut().enumerate() {
            *p += (k as f64 * 0.37).sin() / 3.0;
        }
        model
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = trained_like();
        let text = to_json_string(&model).unwrap();
        let back = from_json_str(&text).unwrap();
        assert_eq!(back, model);
        let bits = |m: &FlmModel| m.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&model));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("flm-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        let model = trained_like();
        save(&model, &path).unwrap();
        assert_eq!(load(&path).unwrap(), model);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn truncated_file_names_section() {
        let text = to_json_string(&trained_like()).unwrap();
        let cut = &text[..text.len() / 2];
        match from_json_str(cut) {
            Err(FlmError::Parse(msg)) => assert!(msg.contains("section `subnets"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        match from_json_str("{\"m\": 2, \"N\": 1}") {
            Err(FlmError::MissingSection(s)) => assert_eq!(s, "subnets"),
            other => panic!("unexpected {other:?}"),
        }
        match from_json_str("{\"m\": 1, \"N\": 1, \"subnets\": [{\"n\": [0], \"b\": [0]}]}") {
            Err(FlmError::MissingSection(s)) => assert_eq!(s, "subnets[0].A"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn amplitude_length_violation() {
        let text =
            r#"{"m": 3, "N": 1, "subnets": [{"n": [0, 1, 2], "A": [1, 2, 3], "b": [0, 0, 0, 0]}]}"#;
        assert!(matches!(from_json_str(text), Err(FlmError::Invariant(_))));
        let text = r#"{"m": 2, "N": 2, "subnets": [{"n": [0, 1], "A": [1, 2], "b": [0, 0]}]}"#;
        assert!(matches!(from_json_str(text), Err(FlmError::Invariant(_))));
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_json_str("").is_err());
        assert!(from_json_str("[1,2]").is_err());
        assert!(from_json_str(r#"{"m": 0, "N": 1, "subnets": []}"#).is_err());
        assert!(from_json_str(
            r#"{"m": 1, "N": 1, "subnets": [{"n": ["x"], "A": [1], "b": [0]}]}"#
        )
        .is_err());
    }
}
