use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

pub const TOOL: &str = concat!("deformq ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, witness: Option<String>) -> Self {
        Check { name: name.into(), pass, witness }
    }

    pub fn pass(name: impl Into<String>) -> Self {
        Self::new(name, true, None)
    }

    /// Passes iff `value <= tol`; the witness records both.
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::new(name, value <= tol, Some(format!("{value:.3e} (tolerance {tol:.0e})")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub scenario: Value,
    pub seed: u64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<String>,
    pub data: Value,
}

impl Report {
    pub fn new(scenario: Value, seed: u64) -> Self {
        Report { tool: TOOL.into(), scenario, seed, checks: Vec::new(), tables: Vec::new(), data: Value::Null }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Markdown,
}

pub fn emit_report(r: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("reports serialize");
            s.push('\n');
            s.into_bytes()
        }
        Format::Markdown => markdown(r).into_bytes(),
    }
}

fn markdown(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", r.scenario.get("kind").and_then(Value::as_str).unwrap_or("report"));
    let _ = writeln!(s, "- tool: {}", r.tool);
    let _ = writeln!(s, "- seed: {}", r.seed);
    let _ = writeln!(s, "- status: {}\n", if r.passed() { "pass" } else { "FAIL" });
    if !r.checks.is_empty() {
        s.push_str("| check | status | witness |\n|---|---|---|\n");
        for c in &r.checks {
            let _ = writeln!(
                s,
                "| {} | {} | {} |",
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.witness.as_deref().unwrap_or("").replace('|', "\\|")
            );
        }
        s.push('\n');
    }
    for t in &r.tables {
        s.push_str(t);
        s.push('\n');
    }
    s
}
