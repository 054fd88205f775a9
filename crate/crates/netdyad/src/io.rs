//! File formats and table rendering.
//!
//! Two input formats are supported:
//!
//! - **Edge list CSV**: header `i,j`, one undirected edge per row, 0-based
//!   integer node ids. Duplicates (in either orientation) and self-loops are
//!   rejected with their line number.
//! - **Dyadic data CSV**: header `dyad_id,i,j,y,<covariates...>[,group]`,
//!   one row per active dyad of the accompanying edge list. Every dyad must
//!   appear exactly once; missing or non-numeric cells are rejected.
//!
//! Output tables render either as RFC-4180 CSV (full float precision, so
//! values re-parse exactly) or as aligned fixed-width text with four
//! decimals.

use crate::dyad::{DyadIndex, NodeGraph};
use crate::error::{Error, Result};
use crate::regression::RegressionData;
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

/// Output rendering for tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Text,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// A rectangular table with headers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// RFC-4180 CSV; floats at full (shortest round-trip) precision.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.headers).expect("csv header");
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Text(s) => s.clone(),
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) => format!("{v}"),
                })
                .collect();
            w.write_record(&fields).expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
    }

    /// Aligned fixed-width text; floats at four decimals.
    pub fn to_text_string(&self) -> String {
        let render = |c: &Cell| match c {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.4}"),
        };
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let s = render(c);
                        widths[i] = widths[i].max(s.len());
                        s
                    })
                    .collect()
            })
            .collect();
        let mut out = String::new();
        let line = |fields: &[String], widths: &[usize], out: &mut String| {
            for (i, f) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(&format!("{f:>width$}", width = widths[i]));
            }
            out.push('\n');
        };
        line(&self.headers, &widths, &mut out);
        line(
            &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>(),
            &widths,
            &mut out,
        );
        for row in &rendered {
            line(row, &widths, &mut out);
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv_string(),
            OutputFormat::Text => self.to_text_string(),
        }
    }

    /// Writes the rendered table to `path`, or to stdout when `None`.
    pub fn emit(&self, path: Option<&Path>, format: OutputFormat) -> Result<()> {
        let rendered = self.render(format);
        match path {
            Some(p) => std::fs::write(p, rendered)
                .map_err(|e| Error::io(&p.display().to_string(), e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(rendered.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))
            }
        }
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(&path.display().to_string(), std::io::Error::other(e)))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads an `i,j` edge list into a validated [`NodeGraph`].
///
/// The node count is one past the largest id seen.
pub fn parse_edge_csv(path: &Path) -> Result<NodeGraph> {
    let path_str = path.display().to_string();
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(&path_str, 1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "i" || &headers[1] != "j" {
        return Err(Error::parse(
            &path_str,
            1,
            format!("expected header 'i,j', found '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut max_node = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(&path_str, 0, e.to_string()))?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(Error::parse(&path_str, line, format!("expected 2 fields, found {}", record.len())));
        }
        let parse_node = |field: &str| -> Result<usize> {
            field
                .parse::<usize>()
                .map_err(|_| Error::parse(&path_str, line, format!("invalid node id '{field}'")))
        };
        let u = parse_node(&record[0])?;
        let v = parse_node(&record[1])?;
        if u == v {
            return Err(Error::parse(&path_str, line, format!("self-loop ({u},{v})")));
        }
        let key = (u.min(v), u.max(v));
        if let Some(first) = seen.insert(key, line) {
            return Err(Error::parse(
                &path_str,
                line,
                format!("duplicate edge ({u},{v}), first seen at line {first}"),
            ));
        }
        max_node = max_node.max(u).max(v);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(Error::parse(&path_str, 1, "edge list has no rows"));
    }
    NodeGraph::new(max_node + 1, edges)
}

/// Writes a graph back out in canonical `(min,max)` sorted order.
pub fn write_edge_csv(g: &NodeGraph, path: &Path) -> Result<()> {
    let mut out = String::from("i,j\n");
    for &(u, v) in g.edges() {
        out.push_str(&format!("{u},{v}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(&path.display().to_string(), e))
}

/// Reads dyad-level outcomes and covariates, aligning rows to `idx`.
///
/// Covariate columns are everything between `y` and the optional trailing
/// `group` column. Rows are reordered into dyad-id order.
pub fn parse_dyadic_csv(path: &Path, idx: &DyadIndex) -> Result<RegressionData> {
    let path_str = path.display().to_string();
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(&path_str, 1, e.to_string()))?
        .clone();
    let cols: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
    if cols.len() < 4 || cols[0] != "dyad_id" || cols[1] != "i" || cols[2] != "j" || cols[3] != "y"
    {
        return Err(Error::parse(
            &path_str,
            1,
            format!(
                "expected header 'dyad_id,i,j,y,<covariates...>[,group]', found '{}'",
                cols.join(",")
            ),
        ));
    }
    let has_group = cols.last().map(|c| c == "group").unwrap_or(false);
    let k = cols.len() - 4 - usize::from(has_group);
    let names: Vec<String> = cols[4..4 + k].to_vec();
    let m = idx.len();

    let mut y = vec![f64::NAN; m];
    let mut x = vec![f64::NAN; m * k];
    let mut groups = vec![0i64; m];
    let mut filled = vec![false; m];
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(&path_str, 0, e.to_string()))?;
        let line = record_line(&record);
        if record.len() != cols.len() {
            return Err(Error::parse(
                &path_str,
                line,
                format!("expected {} fields, found {}", cols.len(), record.len()),
            ));
        }
        let num = |pos: usize| -> Result<f64> {
            let field = &record[pos];
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(
                    &path_str,
                    line,
                    format!("invalid numeric value '{field}' in column '{}'", cols[pos]),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    &path_str,
                    line,
                    format!("non-finite value '{field}' in column '{}'", cols[pos]),
                ));
            }
            Ok(v)
        };
        let node = |pos: usize| -> Result<usize> {
            record[pos].parse::<usize>().map_err(|_| {
                Error::parse(&path_str, line, format!("invalid node id '{}'", &record[pos]))
            })
        };
        let i = node(1)?;
        let j = node(2)?;
        let d = idx.id(i, j).ok_or_else(|| {
            Error::parse(&path_str, line, format!("dyad ({i},{j}) is not an edge of the graph"))
        })?;
        if filled[d] {
            return Err(Error::parse(&path_str, line, format!("dyad ({i},{j}) appears twice")));
        }
        filled[d] = true;
        y[d] = num(3)?;
        for c in 0..k {
            x[d * k + c] = num(4 + c)?;
        }
        if has_group {
            let field = &record[cols.len() - 1];
            groups[d] = field.parse().map_err(|_| {
                Error::parse(&path_str, line, format!("invalid group id '{field}'"))
            })?;
        }
        n_rows += 1;
    }
    if n_rows != m {
        return Err(Error::parse(
            &path_str,
            0,
            format!("row count mismatch: file has {n_rows} dyad rows, the edge list has {m}"),
        ));
    }
    let y = DVector::from_vec(y);
    let x = DMatrix::from_fn(m, k, |r, c| x[r * k + c]);
    RegressionData::new(
        y,
        x,
        (0..m).collect(),
        names,
        None,
        has_group.then_some(groups),
    )
}

/// Writes dyad-level data in the `dyad_id,i,j,y,...[,group]` layout.
pub fn write_dyadic_csv(data: &RegressionData, idx: &DyadIndex, path: &Path) -> Result<()> {
    let mut header = vec!["dyad_id".to_string(), "i".into(), "j".into(), "y".into()];
    header.extend(data.names.iter().cloned());
    if data.group_ids.is_some() {
        header.push("group".into());
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in 0..data.n_rows() {
        let d = data.dyad_ids[r];
        let (i, j) = idx.pair(d)?;
        let mut fields = vec![d.to_string(), i.to_string(), j.to_string(), format!("{}", data.y[r])];
        for c in 0..data.n_cols() {
            fields.push(format!("{}", data.x[(r, c)]));
        }
        if let Some(g) = &data.group_ids {
            fields.push(g[r].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(&path.display().to_string(), e))
}

/// Coefficient report: one row per (coefficient, estimator) with the shared
/// point estimate, the standard error, and the confidence interval.
pub fn estimate_table(
    fit: &crate::regression::OlsFit,
    estimates: &[crate::variance::VarianceEstimate],
    level: f64,
) -> Result<Table> {
    let mut table = Table::new(&["coef", "estimate", "estimator", "se", "ci_lo", "ci_hi"]);
    for k in 0..fit.beta.len() {
        for est in estimates {
            let (lo, hi) = crate::variance::confidence_interval(fit, est, k, level)?;
            let se = est.std_error(k).expect("interval construction checked v_kk >= 0");
            table.push_row(vec![
                fit.data.names[k].clone().into(),
                fit.beta[k].into(),
                est.kind.to_string().into(),
                se.into(),
                lo.into(),
                hi.into(),
            ]);
        }
    }
    Ok(table)
}

/// Aggregated study table: `estimator,coverage,avg_length,mean_se,bias_pct`.
pub fn mc_table(table: &crate::montecarlo::McTable) -> Table {
    let mut out = Table::new(&["estimator", "coverage", "avg_length", "mean_se", "bias_pct"]);
    for row in &table.rows {
        out.push_row(vec![
            row.kind.to_string().into(),
            row.coverage.into(),
            row.avg_ci_length.into(),
            row.mean_se.into(),
            row.bias_pct.into(),
        ]);
    }
    out
}

/// Per-replication export (for external plotting of the SE distributions).
pub fn mc_records_table(records: &[crate::montecarlo::ReplicationRecord]) -> Table {
    let mut out = Table::new(&[
        "rep",
        "beta_hat",
        "resampled",
        "se_ehw",
        "len_ehw",
        "covered_ehw",
        "se_dyadic",
        "len_dyadic",
        "covered_dyadic",
        "se_network",
        "len_network",
        "covered_network",
        "psd_repaired",
    ]);
    for r in records {
        let repaired = r.estimators.iter().any(|e| e.psd_repaired);
        let mut row: Vec<Cell> = vec![r.rep.into(), r.beta_hat.into(), (r.resampled as usize).into()];
        for e in &r.estimators {
            row.push(e.se.into());
            row.push(e.ci_length.into());
            row.push(i64::from(e.covered).into());
        }
        row.push(i64::from(repaired).into());
        out.push_row(row);
    }
    out
}

/// Degree statistics over nodes and over dyads (`d_act` = dyad count).
pub fn graph_stats_table(g: &NodeGraph, net: &crate::dyad::DyadNetwork) -> Table {
    let mut out = Table::new(&["level", "count", "d_max", "d_ave"]);
    out.push_row(vec![
        "nodes".into(),
        g.n_nodes().into(),
        g.max_degree().into(),
        g.average_degree().into(),
    ]);
    out.push_row(vec![
        "dyads".into(),
        net.n_dyads().into(),
        net.max_degree().into(),
        net.average_degree().into(),
    ]);
    out
}

/// Denseness diagnostics, one row per shell radius.
pub fn denseness_table(report: &crate::diagnostics::DensenessReport) -> Table {
    let mut out = Table::new(&["s", "shell_density", "delta_density", "composite"]);
    for row in &report.rows {
        out.push_row(vec![
            row.s.into(),
            row.shell_density.into(),
            row.delta_density.into(),
            row.composite.into(),
        ]);
    }
    out
}
