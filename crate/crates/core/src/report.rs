//! Machine-readable verification records. One record per named identity
//! check; the serialized form is a single JSON-compatible line with a fixed
//! field order and 17-significant-digit numeric formatting so CI diffs are
//! byte-stable.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check_name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub params: BTreeMap<String, String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check_name: name.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    /// Fixed-format number: 17 significant digits, scientific.
    pub fn fmt_num(x: f64) -> String {
        format!("{x:.16e}")
    }

    /// One structured record per line: fixed field set and order.
    pub fn to_record_line(&self) -> String {
        let mut params = String::new();
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                params.push(',');
            }
            params.push_str(&format!("\"{}\":\"{}\"", escape(k), escape(v)));
        }
        format!(
            "{{\"check_name\":\"{}\",\"residual\":{},\"tolerance\":{},\"pass\":{},\"params\":{{{}}}}}",
            escape(&self.check_name),
            Self::fmt_num(self.residual),
            Self::fmt_num(self.tolerance),
            self.pass,
            params
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
