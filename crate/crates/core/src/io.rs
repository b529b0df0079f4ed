//! JSON formats for channels and processes.
//!
//! Complex matrices are arrays of rows; each entry is either a real number or
//! a `[re, im]` pair.
//!
//! ```json
//! {"in_dim": 2, "out_dim": 2, "kraus": [[[1, 0], [0, 1]]]}
//! {"kind": "sdpp", "terms": [{"order": "AB", "T": [[1, 0], [0, 1]], "U": ..., "V": ...}]}
//! ```

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::channels::{choi_max_diff, QuantumChannel};
use crate::error::{Error, Result};
use crate::processes::{
    build_direct_pure_process, build_sdpp, build_switch, CausalOrder, DirectPureProcessSpec, PureProcessVector,
    SdppSpec,
};
use crate::tensor::{c, CMatrix};

/// Kraus and Choi descriptions in one file must agree to this tolerance.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

/// Serde adapter storing a matrix as rows of `[re, im]` pairs.
pub mod complex_matrix {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::tensor::CMatrix;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        super::rows_of(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        super::matrix_from_json(&value, "$").map_err(D::Error::custom)
    }
}

fn rows_of(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    json!(rows_of(m))
}

fn number(value: &Value, path: &str) -> Result<f64> {
    value
        .as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::schema(path, format!("expected a finite number, got {value}")))
}

/// Parses a complex matrix, reporting the JSON path of the first bad entry.
pub fn matrix_from_json(value: &Value, path: &str) -> Result<CMatrix> {
    let rows = value.as_array().ok_or_else(|| Error::schema(path, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(Error::schema(path, "matrix has no rows"));
    }
    let mut ncols = None;
    let mut data = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let entries = row.as_array().ok_or_else(|| Error::schema(&rpath, "expected an array of entries"))?;
        match ncols {
            None if entries.is_empty() => return Err(Error::schema(&rpath, "row is empty")),
            None => ncols = Some(entries.len()),
            Some(n) if n != entries.len() => {
                return Err(Error::schema(&rpath, format!("row has {} entries, expected {n}", entries.len())))
            }
            _ => {}
        }
        for (j, entry) in entries.iter().enumerate() {
            let epath = format!("{rpath}[{j}]");
            let z = match entry {
                Value::Array(parts) if parts.len() == 2 => {
                    c(number(&parts[0], &format!("{epath}[0]"))?, number(&parts[1], &format!("{epath}[1]"))?)
                }
                Value::Array(parts) => {
                    return Err(Error::schema(
                        &epath,
                        format!("complex entry must be [re, im], got {} components", parts.len()),
                    ))
                }
                other => c(number(other, &epath)?, 0.0),
            };
            data.push(z);
        }
    }
    Ok(CMatrix::from_row_slice(rows.len(), ncols.unwrap_or(0), &data))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    value.as_object().ok_or_else(|| Error::schema(path, "expected an object"))
}

fn dim_field(obj: &Map<String, Value>, key: &str) -> Result<Option<usize>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .filter(|&d| d > 0)
            .map(|d| Some(d as usize))
            .ok_or_else(|| Error::schema(format!("$.{key}"), "expected a positive integer")),
    }
}

pub fn channel_to_json(ch: &QuantumChannel) -> Value {
    json!({
        "in_dim": ch.in_dim(),
        "out_dim": ch.out_dim(),
        "kraus": ch.kraus().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

pub fn channel_from_json(value: &Value) -> Result<QuantumChannel> {
    let obj = object(value, "$")?;
    let in_dim = dim_field(obj, "in_dim")?;
    let out_dim = dim_field(obj, "out_dim")?;
    let from_kraus = match obj.get("kraus") {
        None => None,
        Some(list) => {
            let items = list.as_array().ok_or_else(|| Error::schema("$.kraus", "expected an array"))?;
            if items.is_empty() {
                return Err(Error::schema("$.kraus", "no Kraus operators"));
            }
            let kraus = items
                .iter()
                .enumerate()
                .map(|(k, m)| matrix_from_json(m, &format!("$.kraus[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            let (o, i) = kraus[0].shape();
            for (k, m) in kraus.iter().enumerate() {
                if m.shape() != (o, i) {
                    return Err(Error::schema(format!("$.kraus[{k}]"), "Kraus operators have unequal shapes"));
                }
            }
            check_dims(in_dim, out_dim, i, o, "$.kraus")?;
            Some(QuantumChannel::from_kraus(kraus).map_err(invariant)?)
        }
    };
    let from_choi = match obj.get("choi") {
        None => None,
        Some(m) => {
            let choi = matrix_from_json(m, "$.choi")?;
            let (Some(i), Some(o)) = (in_dim, out_dim) else {
                return Err(Error::schema("$", "`choi` requires `in_dim` and `out_dim`"));
            };
            if choi.shape() != (i * o, i * o) {
                return Err(Error::schema("$.choi", format!("expected a {0}x{0} matrix", i * o)));
            }
            Some(QuantumChannel::from_choi_matrix(i, o, choi).map_err(invariant)?)
        }
    };
    match (from_kraus, from_choi) {
        (Some(k), Some(j)) => {
            let diff = choi_max_diff(&k, &j);
            if diff > AGREEMENT_TOLERANCE {
                return Err(Error::Invariant(format!("`kraus` and `choi` disagree by {diff:.3e}")));
            }
            Ok(k)
        }
        (Some(k), None) => Ok(k),
        (None, Some(j)) => Ok(j),
        (None, None) => Err(Error::schema("$", "expected `kraus` or `choi`")),
    }
}

fn check_dims(in_dim: Option<usize>, out_dim: Option<usize>, i: usize, o: usize, path: &str) -> Result<()> {
    if in_dim.is_some_and(|d| d != i) || out_dim.is_some_and(|d| d != o) {
        return Err(Error::schema(path, format!("operators are {o}x{i}, which contradicts in_dim/out_dim")));
    }
    Ok(())
}

/// Physical constraint failures from well-formed input.
fn invariant(e: Error) -> Error {
    match e {
        Error::Schema { .. } | Error::Parse(_) | Error::Io(_) => e,
        other => Error::Invariant(other.to_string()),
    }
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<QuantumChannel> {
    channel_from_json(&read_json(path.as_ref())?)
}

pub fn save_channel(ch: &QuantumChannel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&channel_to_json(ch)).expect("json") + "\n")?;
    Ok(())
}

fn order_name(order: CausalOrder) -> &'static str {
    match order {
        CausalOrder::AThenB => "AB",
        CausalOrder::BThenA => "BA",
    }
}

fn term_to_json(t: &DirectPureProcessSpec) -> Value {
    json!({
        "order": order_name(t.order),
        "T": matrix_to_json(&t.t),
        "U": matrix_to_json(&t.u),
        "V": matrix_to_json(&t.v),
    })
}

pub fn sdpp_spec_to_json(spec: &SdppSpec) -> Value {
    json!({"kind": "sdpp", "terms": spec.terms().iter().map(term_to_json).collect::<Vec<_>>()})
}

pub fn direct_spec_to_json(spec: &DirectPureProcessSpec) -> Value {
    let mut v = term_to_json(spec);
    v["kind"] = json!("direct");
    v
}

fn term_from_json(value: &Value, path: &str) -> Result<DirectPureProcessSpec> {
    let obj = object(value, path)?;
    let order = match obj.get("order").and_then(Value::as_str) {
        Some("AB") => CausalOrder::AThenB,
        Some("BA") => CausalOrder::BThenA,
        _ => return Err(Error::schema(format!("{path}.order"), "expected \"AB\" or \"BA\"")),
    };
    let mut mats = Vec::with_capacity(3);
    for key in ["T", "U", "V"] {
        let m = obj.get(key).ok_or_else(|| Error::schema(path, format!("missing `{key}`")))?;
        mats.push(matrix_from_json(m, &format!("{path}.{key}"))?);
    }
    let v = mats.pop().unwrap();
    let u = mats.pop().unwrap();
    let t = mats.pop().unwrap();
    DirectPureProcessSpec::new(order, t, u, v).map_err(invariant)
}

pub fn process_from_json(value: &Value) -> Result<PureProcessVector> {
    let obj = object(value, "$")?;
    match obj.get("kind").and_then(Value::as_str) {
        Some("switch") => Ok(build_switch()),
        Some("direct") => build_direct_pure_process(&term_from_json(value, "$")?).map_err(invariant),
        Some("sdpp") => {
            let terms = obj
                .get("terms")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::schema("$.terms", "expected an array of terms"))?;
            let terms = terms
                .iter()
                .enumerate()
                .map(|(i, t)| term_from_json(t, &format!("$.terms[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            build_sdpp(&SdppSpec::new(terms).map_err(invariant)?).map_err(invariant)
        }
        _ => Err(Error::schema("$.kind", "expected \"switch\", \"direct\" or \"sdpp\"")),
    }
}

pub fn load_process(path: impl AsRef<Path>) -> Result<PureProcessVector> {
    process_from_json(&read_json(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, random_cptp, xy_channel};
    use crate::processes::{build_switch, salek_sdpp_spec};

    #[test]
    fn channel_round_trip() {
        let ch = random_cptp(2, 3, 2, 5).unwrap();
        let back = channel_from_json(&channel_to_json(&ch)).unwrap();
        assert!(choi_max_diff(&ch, &back) < 1e-14);
    }

    #[test]
    fn choi_only_and_both() {
        let ch = xy_channel();
        let mut v = json!({"in_dim": 2, "out_dim": 2, "choi": matrix_to_json(ch.choi_matrix())});
        let from_choi = channel_from_json(&v).unwrap();
        assert!(choi_max_diff(&ch, &from_choi) < 1e-12);
        v["kraus"] = channel_to_json(&ch)["kraus"].clone();
        assert!(channel_from_json(&v).is_ok());
        v["choi"] = matrix_to_json(depolarizing(2).unwrap().choi_matrix());
        assert!(matches!(channel_from_json(&v), Err(Error::Invariant(_))));
    }

    #[test]
    fn malformed_entry_reports_path() {
        let v = json!({"in_dim": 2, "out_dim": 2, "kraus": [[[1, 0], [[0, 0, 0], 1]]]});
        match channel_from_json(&v) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.kraus[0][1][0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_cptp_is_invariant_error() {
        let v = json!({"kraus": [[[1, 0], [0, 0.5]]]});
        assert!(matches!(channel_from_json(&v), Err(Error::Invariant(_))));
    }

    #[test]
    fn bad_json_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        std::fs::write(&p, "{not json").unwrap();
        assert!(matches!(load_channel(&p), Err(Error::Parse(_))));
        assert!(matches!(load_channel(dir.path().join("missing.json")), Err(Error::Io(_))));
    }

    #[test]
    fn process_formats() {
        let sw = process_from_json(&json!({"kind": "switch"})).unwrap();
        assert_eq!(sw, build_switch());
        let spec = salek_sdpp_spec();
        let w = process_from_json(&sdpp_spec_to_json(&spec)).unwrap();
        assert_eq!(w, build_sdpp(&spec).unwrap());
        let direct = DirectPureProcessSpec::identity(CausalOrder::BThenA, 2);
        let w = process_from_json(&direct_spec_to_json(&direct)).unwrap();
        assert!(!w.has_control());
        let bad = json!({"kind": "sdpp", "terms": [{"order": "AC"}]});
        match process_from_json(&bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.terms[0].order"),
            other => panic!("unexpected {other:?}"),
        }
        let nonunitary = json!({"kind": "direct", "order": "AB", "T": [[1, 1], [0, 1]], "U": [[1, 0], [0, 1]], "V": [[1, 0], [0, 1]]});
        assert!(matches!(process_from_json(&nonunitary), Err(Error::Invariant(_))));
    }
}
