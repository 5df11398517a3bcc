//! Key/value reports with canonical (sorted) key order.

use std::collections::BTreeMap;
use std::fmt;

/// Fixed scientific notation, 9 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Debug, Default)]
pub struct Report {
    entries: BTreeMap<String, String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.entries.insert(key.into(), sci(value));
        self
    }

    pub fn int(&mut self, key: &str, value: impl Into<u64>) -> &mut Self {
        self.entries.insert(key.into(), value.into().to_string());
        self
    }

    pub fn text(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.entries.insert(key.into(), format!("\"{value}\""));
        self
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
