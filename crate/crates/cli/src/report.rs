use crate::config::Format;
use serde_json::{Map, Number, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Field order of every serialized record.
pub const FIELDS: [&str; 8] = ["experiment", "anchor", "lhs", "rhs", "match", "diagnostics", "seed", "version"];

#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Integer(i64),
    Real(f64),
    /// Non-integral rationals such as `7/8`.
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub experiment: String,
    pub anchor: String,
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub matches: bool,
    pub diagnostics: BTreeMap<String, f64>,
    pub seed: u64,
    pub version: String,
}

/// Seventeen significant digits with a signed exponent, e.g. `2.0000000000000000e+0`.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.16e}");
        match s.split_once('e') {
            Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
            _ => s,
        }
    } else {
        x.to_string()
    }
}

fn real_value(x: f64) -> Value {
    match format_real(x).parse::<Number>() {
        Ok(n) if x.is_finite() => Value::Number(n),
        _ => Value::String(x.to_string()),
    }
}

impl Quantity {
    fn to_json(&self) -> Value {
        match self {
            Quantity::Integer(i) => Value::from(*i),
            Quantity::Real(x) => real_value(*x),
            Quantity::Text(s) => Value::String(s.clone()),
        }
    }

    fn from_json(v: &Value) -> Option<Quantity> {
        match v {
            Value::Number(n) => {
                let s = n.to_string();
                if s.contains(['.', 'e', 'E']) {
                    s.parse().ok().map(Quantity::Real)
                } else {
                    s.parse().ok().map(Quantity::Integer)
                }
            }
            Value::String(s) => Some(Quantity::Text(s.clone())),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Quantity::Integer(i) => i.to_string(),
            Quantity::Real(x) => format_real(*x),
            Quantity::Text(s) => s.clone(),
        }
    }
}

impl VerificationRecord {
    pub fn new(experiment: impl Into<String>, anchor: &str, lhs: Quantity, rhs: Quantity, matches: bool, seed: u64) -> Self {
        VerificationRecord {
            experiment: experiment.into(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            matches,
            diagnostics: BTreeMap::new(),
            seed,
            version: VERSION.to_string(),
        }
    }

    pub fn diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("experiment".into(), Value::String(self.experiment.clone()));
        m.insert("anchor".into(), Value::String(self.anchor.clone()));
        m.insert("lhs".into(), self.lhs.to_json());
        m.insert("rhs".into(), self.rhs.to_json());
        m.insert("match".into(), Value::Bool(self.matches));
        let diags = self.diagnostics.iter().map(|(k, v)| (k.clone(), real_value(*v))).collect();
        m.insert("diagnostics".into(), Value::Object(diags));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("version".into(), Value::String(self.version.clone()));
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Option<VerificationRecord> {
        let o = v.as_object()?;
        let diagnostics = o
            .get("diagnostics")?
            .as_object()?
            .iter()
            .map(|(k, v)| Some((k.clone(), v.as_number()?.to_string().parse().ok()?)))
            .collect::<Option<BTreeMap<_, _>>>()?;
        Some(VerificationRecord {
            experiment: o.get("experiment")?.as_str()?.to_string(),
            anchor: o.get("anchor")?.as_str()?.to_string(),
            lhs: Quantity::from_json(o.get("lhs")?)?,
            rhs: Quantity::from_json(o.get("rhs")?)?,
            matches: o.get("match")?.as_bool()?,
            diagnostics,
            seed: o.get("seed")?.as_u64()?,
            version: o.get("version")?.as_str()?.to_string(),
        })
    }
}

/// Parse a JSON report back into records.
pub fn parse_json_report(bytes: &[u8]) -> Result<Vec<VerificationRecord>, String> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    v.as_array()
        .ok_or("report is not an array")?
        .iter()
        .map(|r| VerificationRecord::from_json(r).ok_or_else(|| format!("malformed record {r}")))
        .collect()
}

fn emit_json(records: &[VerificationRecord]) -> Vec<u8> {
    let arr = Value::Array(records.iter().map(VerificationRecord::to_json).collect());
    let mut out = if records.is_empty() {
        b"[]".to_vec()
    } else {
        serde_json::to_vec_pretty(&arr).expect("records serialize")
    };
    out.push(b'\n');
    out
}

fn diagnostic_keys(records: &[VerificationRecord]) -> Vec<String> {
    let keys: BTreeSet<&String> = records.iter().flat_map(|r| r.diagnostics.keys()).collect();
    keys.into_iter().cloned().collect()
}

fn emit_csv(records: &[VerificationRecord]) -> Vec<u8> {
    let keys = diagnostic_keys(records);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["experiment", "anchor", "lhs", "rhs", "match", "seed", "version"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(keys.iter().cloned());
    w.write_record(&header).expect("in-memory csv");
    for r in records {
        let mut row = vec![
            r.experiment.clone(),
            r.anchor.clone(),
            r.lhs.render(),
            r.rhs.render(),
            r.matches.to_string(),
            r.seed.to_string(),
            r.version.clone(),
        ];
        row.extend(keys.iter().map(|k| r.diagnostics.get(k).map(|v| format_real(*v)).unwrap_or_default()));
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn emit_text(records: &[VerificationRecord]) -> Vec<u8> {
    let header = ["experiment", "anchor", "lhs", "rhs", "match"];
    let rows: Vec<[String; 5]> = records
        .iter()
        .map(|r| {
            [
                r.experiment.clone(),
                r.anchor.clone(),
                r.lhs.render(),
                r.rhs.render(),
                if r.matches { "yes".into() } else { "NO".into() },
            ]
        })
        .collect();
    let mut width = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header.map(String::from), &mut out);
    line(&width.map(|w| "-".repeat(w)), &mut out);
    for row in &rows {
        line(row, &mut out);
    }
    let passed = records.iter().filter(|r| r.matches).count();
    let _ = writeln!(out, "\n{passed}/{} records match", records.len());
    out.into_bytes()
}

pub fn emit_report(records: &[VerificationRecord], format: Format) -> Vec<u8> {
    match format {
        Format::Json => emit_json(records),
        Format::Csv => emit_csv(records),
        Format::Text => emit_text(records),
    }
}

/// 0 when every record matches, 1 otherwise.
pub fn exit_code(records: &[VerificationRecord]) -> u8 {
    u8::from(!records.iter().all(|r| r.matches))
}
