//! Report containers and the canonical JSON/CSV encodings.
//!
//! JSON output has sorted keys and writes every float as `{:.16e}`
//! (17 significant digits, round-trip exact), so identical inputs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};
use serde_json::{json, Value};

pub const FORMAT_VERSION: u32 = 1;

/// Fixed float formatting on top of the compact formatter.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// `{:.16e}` with −0 folded into 0; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Canonical encoding of any serializable value, newline-terminated.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // round-trip through Value to sort map keys
    let v = serde_json::to_value(value).expect("report values serialize");
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, CanonicalFormatter);
    v.serialize(&mut ser).expect("writing to memory");
    let mut s = String::from_utf8(buf).expect("serde_json writes UTF-8");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Pass,
    Fail,
    /// The numerics could not certify the measured values to the tolerance.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r
                .iter()
                .map(|&x| if x.is_finite() { format_float(x) } else { "nan".into() })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub status: VerifyStatus,
    pub tolerance: f64,
    pub measured: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub table: Table,
}

impl VerifyReport {
    pub fn new(name: &str, tolerance: f64, table: Table) -> Self {
        VerifyReport {
            name: name.into(),
            status: VerifyStatus::Fail,
            tolerance,
            measured: BTreeMap::new(),
            flags: BTreeMap::new(),
            table,
        }
    }

    pub fn measure(&mut self, key: &str, value: f64) -> &mut Self {
        self.measured.insert(key.into(), value);
        self
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        self.flags.insert(key.into(), value);
        self
    }

    pub fn pass(&self) -> bool {
        self.status == VerifyStatus::Pass
    }

    pub fn to_value(&self) -> Value {
        json!({
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "status": self.status,
            "pass": self.pass(),
            "tolerance": self.tolerance,
            "measured": self.measured,
            "flags": self.flags,
            "table": self.table,
        })
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(&self.to_value())
    }

    pub fn to_csv(&self) -> String {
        format!(
            "# spectorus {} format_version={}\n{}",
            self.name,
            FORMAT_VERSION,
            self.table.to_csv()
        )
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let status = match self.status {
            VerifyStatus::Pass => "PASS",
            VerifyStatus::Fail => "FAIL",
            VerifyStatus::Inconclusive => "INCONCLUSIVE",
        };
        let measured: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        format!(
            "{} {} (tol {:e}) {}",
            self.name,
            status,
            self.tolerance,
            measured.join(" ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_fixed_width_and_keys_sorted() {
        let v = json!({"b": 1.5, "a": [0.1, -0.0, 3], "c": f64::NAN});
        let s = to_canonical_json(&v);
        assert_eq!(
            s,
            "{\"a\":[1.0000000000000001e-1,0.0000000000000000e0,3],\"b\":1.5000000000000000e0,\"c\":null}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][0].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn report_roundtrip_is_stable() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![1.0, 2.0]);
        let mut r = VerifyReport::new("demo", 1e-6, t);
        r.measure("spread", 1e-9).flag("ok", true);
        r.status = VerifyStatus::Pass;
        let a = r.to_json();
        assert_eq!(a, r.clone().to_json());
        assert!(a.contains("\"format_version\":1"));
        assert!(r.to_csv().ends_with("x,y\n1.0000000000000000e0,2.0000000000000000e0\n"));
    }
}
