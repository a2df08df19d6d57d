//! Fixed-order JSON document for a stability report.

use serde::Serialize;

use crate::stability::{StabilityReport, Verdict};

#[derive(Debug, Clone, Serialize)]
pub struct BlockDocument {
    pub label: String,
    pub hessian_eigs: Vec<f64>,
    pub lin_eigs_re: Vec<f64>,
    pub lin_eigs_im: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub verdict: Option<Verdict>,
    pub kappa: Option<f64>,
    pub xi: Option<f64>,
    pub mu_z: Option<f64>,
    pub blocks: Vec<BlockDocument>,
    pub analytic_verdict: Option<Verdict>,
    pub agreement: Option<bool>,
    pub verdict_code: Option<char>,
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
}

impl ReportDocument {
    pub fn from_report(r: &StabilityReport) -> Self {
        let blocks = r
            .blocks
            .iter()
            .map(|b| BlockDocument {
                label: b.label.clone(),
                hessian_eigs: b.hessian_eigenvalues.clone(),
                lin_eigs_re: b.linearization_eigenvalues.iter().map(|e| e.re).collect(),
                lin_eigs_im: b.linearization_eigenvalues.iter().map(|e| e.im).collect(),
                margin: b.margin(&r.tolerances),
            })
            .collect();
        Self {
            verdict: Some(r.verdict),
            kappa: r.kappa,
            xi: Some(r.xi),
            mu_z: Some(r.mu_z),
            blocks,
            analytic_verdict: r.analytic_verdict,
            agreement: r.agreement,
            verdict_code: Some(r.verdict.code()),
            margin: Some(r.margin),
            kappa_status: None,
            run_config: None,
        }
    }

    /// Report for a two-ring point whose vorticity ratio is not determined by the equilibrium condition.
    /// `status` is "degenerate", "near-degenerate" (not determined at the input precision) or "none".
    pub fn undetermined_kappa(status: &str) -> Self {
        let degenerate = status != "none";
        Self {
            verdict: Some(Verdict::Degenerate).filter(|_| degenerate),
            kappa: None,
            xi: None,
            mu_z: None,
            blocks: vec![],
            analytic_verdict: None,
            agreement: None,
            verdict_code: Some('D').filter(|_| degenerate),
            margin: None,
            kappa_status: Some(status.to_string()),
            run_config: None,
        }
    }

    pub fn with_kappa_status(mut self, status: &str) -> Self {
        self.kappa_status = Some(status.to_string());
        self
    }

    pub fn with_run_config(mut self, config: serde_json::Value) -> Self {
        self.run_config = Some(config);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
