//! Report rendering: structured text with stable key ordering, plus a JSON
//! variant. Reports carry a fixed version string and no timestamps so that
//! identical inputs give byte-identical output.

use fracvar::eqgen::{ElOperator, EquationsOfMotion};
use fracvar::helmholtz::HelmholtzReport;
use serde_json::{json, Value};

pub const REPORT_VERSION: &str = "fracvar report v1";

pub struct ClassifyReport {
    pub alpha: f64,
    pub deriv: String,
    pub coords: Vec<String>,
    pub hamiltonian: String,
    pub forces_g: Vec<String>,
    pub forces_f: Vec<String>,
    pub classical: HelmholtzReport,
    pub fractional: HelmholtzReport,
}

fn push_verdict(out: &mut String, label: &str, rep: &HelmholtzReport) {
    out.push_str(&format!("{label}:\n"));
    out.push_str(&format!("  satisfied: {}\n", rep.satisfied));
    out.push_str(&format!("  violations: {}\n", rep.violations.len()));
    for v in &rep.violations {
        out.push_str(&format!("  - {v}\n"));
    }
}

impl ClassifyReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_VERSION);
        out.push('\n');
        out.push_str("command: classify\n");
        out.push_str(&format!("alpha: {}\n", self.alpha));
        out.push_str(&format!("deriv: {}\n", self.deriv));
        out.push_str(&format!("coords: {}\n", self.coords.join(", ")));
        out.push_str(&format!("hamiltonian: {}\n", self.hamiltonian));
        for (i, g) in self.forces_g.iter().enumerate() {
            out.push_str(&format!("force_G_{}: {}\n", i + 1, g));
        }
        for (i, f) in self.forces_f.iter().enumerate() {
            out.push_str(&format!("force_F_{}: {}\n", i + 1, f));
        }
        push_verdict(&mut out, "classical", &self.classical);
        push_verdict(&mut out, &format!("fractional(alpha={})", self.alpha), &self.fractional);
        out
    }

    pub fn render_json(&self) -> String {
        let verdict = |rep: &HelmholtzReport| -> Value {
            json!({
                "satisfied": rep.satisfied,
                "violations": rep
                    .violations
                    .iter()
                    .map(|v| {
                        json!({
                            "condition": v.condition,
                            "indices": v.indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                            "residual": v.residual.to_string(),
                        })
                    })
                    .collect::<Vec<_>>(),
            })
        };
        let doc = json!({
            "version": REPORT_VERSION,
            "command": "classify",
            "alpha": self.alpha,
            "deriv": self.deriv,
            "coords": self.coords,
            "hamiltonian": self.hamiltonian,
            "forces_G": self.forces_g,
            "forces_F": self.forces_f,
            "classical": verdict(&self.classical),
            "fractional": verdict(&self.fractional),
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json rendering");
        text.push('\n');
        text
    }
}

pub struct DeriveReport {
    pub alpha: f64,
    pub deriv: String,
    pub coords: Vec<String>,
    pub source: String,
    pub eom: EquationsOfMotion,
    pub el_operators: Vec<ElOperator>,
}

impl DeriveReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_VERSION);
        out.push('\n');
        out.push_str("command: derive\n");
        out.push_str(&format!("alpha: {}\n", self.alpha));
        out.push_str(&format!("deriv: {}\n", self.deriv));
        out.push_str(&format!("coords: {}\n", self.coords.join(", ")));
        out.push_str(&format!("source: {}\n", self.source));
        out.push_str(&format!("origin: {}\n", self.eom.origin));
        out.push_str("equations:\n");
        for law in &self.eom.laws {
            out.push_str(&format!("  {law}\n"));
        }
        for c in &self.eom.constraints {
            out.push_str(&format!("  constraint: {c}\n"));
        }
        for op in &self.el_operators {
            out.push_str(&format!("  operator {op}\n"));
        }
        out
    }

    pub fn render_json(&self) -> String {
        let doc = json!({
            "version": REPORT_VERSION,
            "command": "derive",
            "alpha": self.alpha,
            "deriv": self.deriv,
            "coords": self.coords,
            "source": self.source,
            "origin": self.eom.origin,
            "equations": self.eom.laws.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "constraints": self.eom.constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "operators": self.el_operators.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json rendering");
        text.push('\n');
        text
    }
}
