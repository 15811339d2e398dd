//! Rendering of command results as CSV (with `# key=value` metadata lines)
//! or JSON.

use clap::ValueEnum;
use rfm_core::fusion::Timing;
use rfm_core::sim::BreakdownTable;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub enum Body {
    Estimate {
        /// Row length of `values` (1 row for vectors).
        width: usize,
        values: Vec<f64>,
        depths: Vec<f64>,
        chosen: Vec<usize>,
        grid: Option<Vec<f64>>,
        timing: Option<Timing>,
    },
    Labels {
        labels: Vec<usize>,
        centers: Vec<f64>,
        dim: usize,
        timing: Option<Timing>,
    },
    Table {
        columns: Vec<String>,
        row: Vec<Option<f64>>,
    },
    Breakdown(BreakdownTable),
}

pub struct Report {
    pub command: &'static str,
    pub config: Vec<(String, String)>,
    pub body: Body,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), num)
}

fn csv_line<I: IntoIterator<Item = String>>(out: &mut String, fields: I) {
    let fields: Vec<String> = fields.into_iter().collect();
    out.push_str(&fields.join(","));
    out.push('\n');
}

#[derive(Serialize)]
struct TimingJson<'a> {
    per_subsample: &'a [f64],
    fuse: f64,
}

impl Report {
    /// One-row table with leading configuration columns.
    pub fn table(
        command: &'static str,
        config: Vec<(String, String)>,
        lead: Vec<(String, f64)>,
        columns: Vec<String>,
        values: Vec<Option<f64>>,
    ) -> Report {
        let mut cols: Vec<String> = lead.iter().map(|(c, _)| c.clone()).collect();
        let mut row: Vec<Option<f64>> = lead.iter().map(|(_, v)| Some(*v)).collect();
        cols.extend(columns);
        row.extend(values);
        Report {
            command,
            config,
            body: Body::Table { columns: cols, row },
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("serializable");
                s.push('\n');
                s
            }
        }
    }

    fn csv(&self) -> String {
        let mut out = format!("# command={}\n", self.command);
        for (k, v) in &self.config {
            out.push_str(&format!("# {k}={v}\n"));
        }
        match &self.body {
            Body::Estimate { width, values, depths, chosen, grid, timing } => {
                if let Some(g) = grid {
                    out.push_str("# grid\n");
                    csv_line(&mut out, g.iter().map(|v| num(*v)));
                }
                out.push_str("# estimate\n");
                for row in values.chunks(*width) {
                    csv_line(&mut out, row.iter().map(|v| num(*v)));
                }
                out.push_str("# depths\n");
                csv_line(&mut out, ["subsample", "depth", "chosen"].map(String::from));
                for (j, d) in depths.iter().enumerate() {
                    csv_line(&mut out, [j.to_string(), num(*d), u8::from(chosen.contains(&j)).to_string()]);
                }
                if let Some(t) = timing {
                    out.push_str(&format!("# fuse_seconds={}\n", t.fuse));
                    out.push_str(&format!("# subsample_seconds={:?}\n", t.per_subsample));
                }
            }
            Body::Labels { labels, centers, dim, timing } => {
                for (j, c) in centers.chunks(*dim).enumerate() {
                    let c: Vec<String> = c.iter().map(|v| num(*v)).collect();
                    out.push_str(&format!("# center{}={}\n", j + 1, c.join(" ")));
                }
                if let Some(t) = timing {
                    out.push_str(&format!("# fuse_seconds={}\n", t.fuse));
                    out.push_str(&format!("# subsample_seconds={:?}\n", t.per_subsample));
                }
                for l in labels {
                    out.push_str(&format!("{l}\n"));
                }
            }
            Body::Table { columns, row } => {
                csv_line(&mut out, columns.iter().cloned());
                csv_line(&mut out, row.iter().map(|v| opt(*v)));
            }
            Body::Breakdown(t) => {
                let mut header = vec!["m".to_string(), "l".to_string()];
                header.extend(t.p_values.iter().map(|p| format!("p={p}")));
                csv_line(&mut out, header);
                for (i, m) in t.m_values.iter().enumerate() {
                    let mut row = vec![m.to_string(), t.l_values[i].to_string()];
                    row.extend(t.freq[i].iter().map(|f| num(*f)));
                    csv_line(&mut out, row);
                }
            }
        }
        out
    }

    fn json(&self) -> Value {
        let mut config = Map::new();
        for (k, v) in &self.config {
            config.insert(k.clone(), Value::String(v.clone()));
        }
        let result = match &self.body {
            Body::Estimate { width, values, depths, chosen, grid, timing } => json!({
                "estimate": values.chunks(*width).collect::<Vec<_>>(),
                "grid": grid,
                "depths": depths,
                "chosen": chosen,
                "timing": timing.as_ref().map(|t| TimingJson { per_subsample: &t.per_subsample, fuse: t.fuse }),
            }),
            Body::Labels { labels, centers, dim, timing } => json!({
                "labels": labels,
                "centers": centers.chunks(*dim).collect::<Vec<_>>(),
                "timing": timing.as_ref().map(|t| TimingJson { per_subsample: &t.per_subsample, fuse: t.fuse }),
            }),
            Body::Table { columns, row } => {
                let mut m = Map::new();
                for (c, v) in columns.iter().zip(row) {
                    m.insert(c.clone(), v.map_or(Value::Null, |x| json!(x)));
                }
                Value::Object(m)
            }
            Body::Breakdown(t) => serde_json::to_value(t).expect("serializable"),
        };
        json!({ "command": self.command, "config": config, "result": result })
    }
}
