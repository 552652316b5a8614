//! Structured diagnostic reports: named checks with explicit tolerances,
//! an environment echo, JSON and aligned-text rendering.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub config_hash: String,
    pub seed: u64,
    pub alpha: f64,
    pub phi: f64,
    pub resolution: usize,
    pub mesh_nodes: usize,
    pub zeta: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    /// Optional secondary values (fit quality, counts, ...).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<(String, f64)>,
    pub tolerance: f64,
    /// "<=" when value must stay below tolerance, ">=" when above.
    pub direction: String,
    pub pass: bool,
    /// Which field the check ran on.
    pub field: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub environment: Environment,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl Report {
    pub fn new(environment: Environment) -> Report {
        Report {
            schema_version: 1,
            environment,
            checks: Vec::new(),
            all_pass: true,
        }
    }

    pub fn check_upper(&mut self, name: &str, field: &str, value: f64, tolerance: f64) -> bool {
        let pass = value <= tolerance;
        self.push(name, field, value, tolerance, "<=", pass, Vec::new());
        pass
    }

    pub fn check_lower(&mut self, name: &str, field: &str, value: f64, tolerance: f64) -> bool {
        let pass = value >= tolerance;
        self.push(name, field, value, tolerance, ">=", pass, Vec::new());
        pass
    }

    pub fn check_upper_with(
        &mut self,
        name: &str,
        field: &str,
        value: f64,
        tolerance: f64,
        extra: Vec<(String, f64)>,
    ) -> bool {
        let pass = value <= tolerance;
        self.push(name, field, value, tolerance, "<=", pass, extra);
        pass
    }

    fn push(
        &mut self,
        name: &str,
        field: &str,
        value: f64,
        tolerance: f64,
        direction: &str,
        pass: bool,
        extra: Vec<(String, f64)>,
    ) {
        if !pass {
            self.all_pass = false;
        }
        self.checks.push(CheckResult {
            name: name.to_string(),
            value,
            extra,
            tolerance,
            direction: direction.to_string(),
            pass,
            field: field.to_string(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Aligned text table for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(8)
            .max(8);
        out.push_str(&format!(
            "{:name_w$}  {:>13}  {:>2}  {:>10}  {}\n",
            "check", "value", "", "tolerance", "status"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:name_w$}  {:>13.6e}  {:>2}  {:>10.3e}  {}\n",
                c.name,
                c.value,
                c.direction,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.all_pass { "pass" } else { "FAIL" }
        ));
        out
    }
}
