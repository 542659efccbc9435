//! Report model and its CSV / JSON renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use amred_core::oracle::ComparisonReport;
use amred_core::{Error, Result};
use serde::Serialize;

use crate::config::Format;

pub const HISTOGRAM_HEADER: [&str; 5] = [
    "counter_index",
    "counter_bits",
    "count",
    "frequency",
    "exact_probability",
];

#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub counter_index: usize,
    /// Counter value in binary, most significant bit first.
    pub counter_bits: String,
    pub count: u64,
    pub frequency: f64,
    pub exact_probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub p_target: f64,
    pub brute_force: f64,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", content = "rows", rename_all = "kebab-case")]
pub enum Table {
    Histogram(Vec<HistogramRow>),
    Iteration(Vec<IterationRow>),
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    /// Which prediction the histogram was tested against.
    pub oracle: String,
    #[serde(flatten)]
    pub report: ComparisonReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Panel {
    pub name: Option<String>,
    pub config: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub comparison: Option<Comparison>,
    pub table: Table,
}

impl Panel {
    pub fn new(config: serde_json::Value, table: Table) -> Self {
        Self {
            name: None,
            config,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            comparison: None,
            table,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn histogram_rows(&self) -> Option<&[HistogramRow]> {
        match &self.table {
            Table::Histogram(rows) => Some(rows),
            Table::Iteration(_) => None,
        }
    }

    pub fn iteration_rows(&self) -> Option<&[IterationRow]> {
        match &self.table {
            Table::Iteration(rows) => Some(rows),
            Table::Histogram(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub figure: Option<String>,
    pub panels: Vec<Panel>,
}

impl Report {
    pub fn new(panels: Vec<Panel>) -> Self {
        Self {
            version: amred_core::VERSION,
            figure: None,
            panels,
        }
    }

    pub fn panel(&self, name: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.name.as_deref() == Some(name))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => serde_json::to_string_pretty(self)
                .map(|mut s| {
                    s.push('\n');
                    s
                })
                .map_err(|e| Error::Invariant(format!("report serialization failed: {e}"))),
            Format::Csv => self.to_csv(),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        let io = |e: std::io::Error| Error::Invariant(format!("csv rendering failed: {e}"));
        writeln!(buf, "# amred {}", self.version).map_err(io)?;
        if let Some(fig) = &self.figure {
            writeln!(buf, "# figure {fig}").map_err(io)?;
        }
        let multi = self.panels.len() > 1;
        for p in &self.panels {
            let prefix = p
                .name
                .as_ref()
                .map(|n| format!("panel {n} "))
                .unwrap_or_default();
            writeln!(buf, "# {prefix}config {}", p.config).map_err(io)?;
            for (k, v) in &p.metrics {
                writeln!(buf, "# {prefix}metric {k}={v}").map_err(io)?;
            }
            for note in &p.notes {
                writeln!(buf, "# {prefix}note {note}").map_err(io)?;
            }
            if let Some(c) = &p.comparison {
                let json = serde_json::to_string(c).map_err(|e| Error::Invariant(e.to_string()))?;
                writeln!(buf, "# {prefix}comparison {json}").map_err(io)?;
            }
        }

        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(buf);
        let csv_err = |e: csv::Error| Error::Invariant(format!("csv rendering failed: {e}"));
        let lead = |p: &Panel| {
            if multi {
                vec![p.name.clone().unwrap_or_default()]
            } else {
                Vec::new()
            }
        };
        let head = |cols: Vec<String>| {
            if multi {
                [vec!["panel".to_string()], cols].concat()
            } else {
                cols
            }
        };

        match self.panels.first().map(|p| &p.table) {
            None => {}
            Some(Table::Histogram(_)) => {
                w.write_record(head(
                    HISTOGRAM_HEADER.iter().map(|s| s.to_string()).collect(),
                ))
                .map_err(csv_err)?;
                for p in &self.panels {
                    let rows = p.histogram_rows().ok_or_else(mixed_tables)?;
                    for r in rows {
                        let mut rec = lead(p);
                        rec.extend([
                            r.counter_index.to_string(),
                            r.counter_bits.clone(),
                            r.count.to_string(),
                            r.frequency.to_string(),
                            r.exact_probability.to_string(),
                        ]);
                        w.write_record(rec).map_err(csv_err)?;
                    }
                }
            }
            Some(Table::Iteration(_)) => {
                let width = self
                    .panels
                    .iter()
                    .filter_map(|p| p.iteration_rows())
                    .flat_map(|rows| rows.iter().map(|r| r.probabilities.len()))
                    .max()
                    .unwrap_or(0);
                let mut cols: Vec<String> = ["iteration", "p_target", "brute_force"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                cols.extend((0..width).map(|k| format!("p_{k}")));
                w.write_record(head(cols)).map_err(csv_err)?;
                for p in &self.panels {
                    let rows = p.iteration_rows().ok_or_else(mixed_tables)?;
                    for r in rows {
                        let mut rec = lead(p);
                        rec.extend([
                            r.iteration.to_string(),
                            r.p_target.to_string(),
                            r.brute_force.to_string(),
                        ]);
                        rec.extend((0..width).map(|k| {
                            r.probabilities
                                .get(k)
                                .map(|x| x.to_string())
                                .unwrap_or_default()
                        }));
                        w.write_record(rec).map_err(csv_err)?;
                    }
                }
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Invariant(format!("csv rendering failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
    }

    /// Writes to `out`, or to stdout when no path is given.
    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let text = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write to stdout: {e}"))),
        }
    }
}

fn mixed_tables() -> Error {
    Error::Invariant("a report cannot mix histogram and iteration tables".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist_panel(name: &str) -> Panel {
        Panel::new(
            serde_json::json!({"mode": "search"}),
            Table::Histogram(vec![HistogramRow {
                counter_index: 1,
                counter_bits: "01".into(),
                count: 7,
                frequency: 0.7,
                exact_probability: 0.75,
            }]),
        )
        .named(name)
    }

    #[test]
    fn single_panel_csv_has_the_plain_header() {
        let mut p = hist_panel("x");
        p.name = None;
        let csv = Report::new(vec![p.metric("a", 1.5)])
            .render(Format::Csv)
            .unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# amred "));
        assert_eq!(lines[1], r#"# config {"mode":"search"}"#);
        assert_eq!(lines[2], "# metric a=1.5");
        assert_eq!(
            lines[3],
            "counter_index,counter_bits,count,frequency,exact_probability"
        );
        assert_eq!(lines[4], "1,01,7,0.7,0.75");
    }

    #[test]
    fn multi_panel_csv_gains_a_panel_column() {
        let csv = Report::new(vec![hist_panel("a"), hist_panel("b")])
            .render(Format::Csv)
            .unwrap();
        assert!(csv.contains("panel,counter_index,"));
        assert!(csv.contains("\nb,1,01,7,0.7,0.75\n"));
    }

    #[test]
    fn iteration_tables_pad_shorter_panels() {
        let row = |n: usize| IterationRow {
            iteration: 1,
            p_target: 0.5,
            brute_force: 0.25,
            probabilities: vec![0.25; n],
        };
        let a = Panel::new(serde_json::Value::Null, Table::Iteration(vec![row(2)])).named("small");
        let b = Panel::new(serde_json::Value::Null, Table::Iteration(vec![row(4)])).named("large");
        let csv = Report::new(vec![a, b]).render(Format::Csv).unwrap();
        assert!(csv.contains("panel,iteration,p_target,brute_force,p_0,p_1,p_2,p_3\n"));
        assert!(csv.contains("small,1,0.5,0.25,0.25,0.25,,\n"));
    }

    #[test]
    fn json_mirrors_the_table() {
        let json = Report::new(vec![hist_panel("a")])
            .render(Format::Json)
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["panels"][0]["table"]["kind"], "histogram");
        assert_eq!(v["panels"][0]["table"]["rows"][0]["counter_bits"], "01");
    }
}
