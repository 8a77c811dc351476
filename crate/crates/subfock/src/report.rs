//! Deterministic CSV/JSON report emission. Identical configurations must
//! produce byte-identical output, so floats are printed with a fixed format
//! and headers carry the seed instead of timestamps.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Human-readable name of the identity or quantity tabulated.
    pub identity: String,
    pub system: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.15e}")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Text(v) => v.clone(),
            Cell::Bool(v) => v.to_string(),
        }
    }
}

impl Report {
    pub fn new(
        identity: impl Into<String>,
        system: impl Into<String>,
        columns: &[&str],
    ) -> Self {
        Report {
            identity: identity.into(),
            system: system.into(),
            seed: None,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# identity: {}\n", self.identity));
        out.push_str(&format!("# system: {}\n", self.system));
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed:#x}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// A machine-readable pass/fail summary of an invariant suite.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub system: String,
    pub seed: u64,
    pub pass: bool,
    pub rows: Vec<SummaryRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub identity: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut report = Report::new(
            "invariant suite",
            self.system.clone(),
            &["identity", "residual", "threshold", "pass", "note"],
        )
        .with_seed(self.seed);
        for row in &self.rows {
            report.push(vec![
                Cell::Text(row.identity.clone()),
                Cell::Float(row.residual),
                Cell::Float(row.threshold),
                Cell::Bool(row.pass),
                Cell::Text(row.note.clone().unwrap_or_default()),
            ]);
        }
        report.to_csv()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}
