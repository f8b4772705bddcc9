//! On-disk formats. Every file starts with a provenance header: a
//! `"provenance"` key in JSON, `#` comment lines in CSV, a first line in
//! JSON-lines and a leading comment in SVG.

use std::fs;
use std::path::Path;

use anyhow::Context;
use newton_atlas_core::experiment::{
    AuditRow, DegreeSummary, ExperimentReport, ExperimentRow, ScalingFit, SweepRow,
};
use newton_atlas_core::orbit::OrbitStep;
use newton_atlas_core::{ComplexPoint, Polynomial, RootFindingReport, StartingGrid};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TOOL: &str = "newton-atlas";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(config: &RunConfig) -> Self {
        Provenance {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
        }
    }

    fn one_line(&self) -> String {
        serde_json::to_string(self).expect("provenance serializes")
    }
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn json_string<T: Serialize>(provenance: &Provenance, body: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&WithProvenance { provenance, body }).context("encoding JSON")?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> Result<()> {
    write_bytes(path, json_string(provenance, body)?.as_bytes())
}

pub fn csv_string<T: Serialize>(provenance: &Provenance, rows: &[T]) -> Result<String> {
    let mut out = format!("# {} {}\n# {}\n", TOOL, provenance.version, provenance.one_line());
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).context("encoding CSV")?;
    }
    let body = writer.into_inner().map_err(|e| anyhow::anyhow!("encoding CSV: {e}"))?;
    out.push_str(std::str::from_utf8(&body).context("CSV is UTF-8")?);
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, provenance: &Provenance, rows: &[T]) -> Result<()> {
    write_bytes(path, csv_string(provenance, rows)?.as_bytes())
}

/// Reads CSV written by [`write_csv`], skipping the header comments.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn svg_with_provenance(provenance: &Provenance, svg: &str) -> String {
    // "--" may not appear inside an XML comment
    let header = provenance.one_line().replace("--", "- -");
    format!("<!-- {header} -->\n{svg}")
}

pub fn write_svg(path: &Path, provenance: &Provenance, svg: &str) -> Result<()> {
    write_bytes(path, svg_with_provenance(provenance, svg).as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn point(pair: [f64; 2]) -> ComplexPoint {
    ComplexPoint::new(pair[0], pair[1])
}

/// `{"degree": d, "roots": [[re, im], ...], "coeffs": [[re, im], ...]}` with
/// at least one of the lists; coefficients run constant term first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialFile {
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing)]
    pub provenance: Option<serde_json::Value>,
}

impl PolynomialFile {
    pub fn from_polynomial(p: &Polynomial) -> Self {
        let pairs = |v: &[ComplexPoint]| v.iter().map(|z| [z.re, z.im]).collect();
        PolynomialFile {
            degree: p.degree(),
            roots: p.roots().map(pairs),
            coeffs: p.coeffs().map(pairs),
            provenance: None,
        }
    }

    /// Checks list lengths against `degree`, then the polynomial invariants.
    /// Messages name the offending field and entry.
    pub fn to_polynomial(&self) -> std::result::Result<Polynomial, String> {
        let d = self.degree;
        if d < 1 {
            return Err("degree: must be at least 1".into());
        }
        if let Some(roots) = &self.roots {
            if roots.len() != d {
                return Err(format!("roots: expected {d} entries for degree {d}, found {}", roots.len()));
            }
        }
        if let Some(coeffs) = &self.coeffs {
            if coeffs.len() != d + 1 {
                return Err(format!("coeffs: expected {} entries for degree {d}, found {}", d + 1, coeffs.len()));
            }
        }
        let roots = self.roots.as_ref().map(|r| r.iter().copied().map(point).collect::<Vec<_>>());
        let coeffs = self.coeffs.as_ref().map(|c| c.iter().copied().map(point).collect::<Vec<_>>());
        let built = match (coeffs, roots) {
            (Some(c), Some(r)) => Polynomial::from_parts(c, r),
            (None, Some(r)) => Polynomial::from_roots(r),
            (Some(c), None) => Polynomial::from_coeffs(c),
            (None, None) => return Err("at least one of \"roots\" or \"coeffs\" is required".into()),
        };
        built.map_err(|e| e.to_string())
    }
}

pub fn parse_polynomial(text: &str) -> std::result::Result<Polynomial, String> {
    let file: PolynomialFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.to_polynomial()
}

pub fn read_polynomial(path: &Path) -> Result<Polynomial> {
    let text = read_text(path)?;
    parse_polynomial(&text).map_err(|msg| CliError::validation(format!("{}: {msg}", path.display())))
}

pub fn write_polynomial(path: &Path, provenance: &Provenance, p: &Polynomial) -> Result<()> {
    write_json(path, provenance, &PolynomialFile::from_polynomial(p))
}

pub fn parse_grid(text: &str) -> std::result::Result<StartingGrid, String> {
    let grid: StartingGrid = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if grid.degree < 2 {
        return Err(format!("degree: {} is below 2", grid.degree));
    }
    if grid.radii.len() != grid.num_circles {
        return Err(format!("radii: expected {} entries, found {}", grid.num_circles, grid.radii.len()));
    }
    if grid.phases.len() != grid.num_circles {
        return Err(format!("phases: expected {} entries, found {}", grid.num_circles, grid.phases.len()));
    }
    let expected = grid.num_circles * grid.points_per_circle;
    if grid.points.len() != expected {
        return Err(format!("points: expected {expected} entries, found {}", grid.points.len()));
    }
    if let Some(i) = grid.points.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(format!("points[{i}] is not finite"));
    }
    Ok(grid)
}

pub fn read_grid(path: &Path) -> Result<StartingGrid> {
    let text = read_text(path)?;
    parse_grid(&text).map_err(|msg| CliError::validation(format!("{}: {msg}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPointRow {
    pub circle: usize,
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

pub fn grid_rows(grid: &StartingGrid) -> Vec<GridPointRow> {
    grid.points
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let (circle, index) = grid.locate(i);
            GridPointRow { circle, index, re: z.re, im: z.im }
        })
        .collect()
}

/// One trace step as written to JSON-lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub n: usize,
    pub re: f64,
    pub im: f64,
    pub k: Option<i32>,
    pub regime: Option<String>,
    pub disp: Option<f64>,
}

pub fn trace_lines(steps: &[OrbitStep]) -> Vec<TraceLine> {
    steps
        .iter()
        .enumerate()
        .map(|(n, s)| TraceLine {
            n,
            re: s.z.re,
            im: s.z.im,
            k: s.k_index,
            regime: s.regime.map(|r| r.name().to_string()),
            disp: s.displacement,
        })
        .collect()
}

pub fn jsonl_string(provenance: &Provenance, steps: &[OrbitStep]) -> Result<String> {
    #[derive(Serialize)]
    struct Header<'a> {
        provenance: &'a Provenance,
    }
    let mut out = serde_json::to_string(&Header { provenance }).context("encoding trace")?;
    out.push('\n');
    for line in trace_lines(steps) {
        out.push_str(&serde_json::to_string(&line).context("encoding trace")?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trace(path: &Path, provenance: &Provenance, steps: &[OrbitStep]) -> Result<()> {
    write_bytes(path, jsonl_string(provenance, steps)?.as_bytes())
}

pub fn write_report(path: &Path, provenance: &Provenance, report: &RootFindingReport) -> Result<()> {
    write_json(path, provenance, report)
}

/// One `verify` trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub seed: u64,
    pub dc_holds: bool,
    pub dc_min: f64,
    #[serde(rename = "ac_fitted_Cd")]
    pub ac_fitted_cd: f64,
    pub digit_max_mult: usize,
}

/// `summary.json`: everything in the experiment report except the rows,
/// which go to `rows.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub per_degree: Vec<DegreeSummary>,
    pub fit: Option<ScalingFit>,
    pub raw_fit: Option<ScalingFit>,
    pub epsilon_sweep: Vec<SweepRow>,
    pub audit: Vec<AuditRow>,
    pub rows_file: String,
}

impl ExperimentSummary {
    pub fn from_report(report: &ExperimentReport, rows_file: &str) -> Self {
        ExperimentSummary {
            per_degree: report.per_degree.clone(),
            fit: report.fit,
            raw_fit: report.raw_fit,
            epsilon_sweep: report.epsilon_sweep.clone(),
            audit: report.audit.clone(),
            rows_file: rows_file.to_string(),
        }
    }
}

pub fn write_rows(path: &Path, provenance: &Provenance, rows: &[ExperimentRow]) -> Result<()> {
    write_csv(path, provenance, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_file_errors_name_the_field() {
        let err = parse_polynomial(r#"{"degree": 2, "roots": [[0.5, 0], [2, 0]]}"#).unwrap_err();
        assert!(err.contains("roots[1]"), "{err}");
        let err = parse_polynomial(r#"{"degree": 3, "roots": [[0.5, 0], [0.1, 0]]}"#).unwrap_err();
        assert!(err.starts_with("roots: expected 3"), "{err}");
        let err = parse_polynomial(r#"{"degree": 2, "coeffs": [[-0.25, 0], [0, 0], [2, 0]]}"#).unwrap_err();
        assert!(err.contains("leading coefficient"), "{err}");
        let err = parse_polynomial(r#"{"degree": 2}"#).unwrap_err();
        assert!(err.contains("at least one"), "{err}");
        let err = parse_polynomial("{\n  \"degree\": 2,\n  \"roots\": [[0.5, 0], [0.1]]\n}").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_polynomial(r#"{"degree": 1, "roots": [[0, 0]], "extra": 1}"#).unwrap_err();
        assert!(err.contains("extra"), "{err}");
        let err = parse_polynomial(
            r#"{"degree": 2, "roots": [[0.5, 0], [-0.5, 0]], "coeffs": [[-0.2, 0], [0, 0], [1, 0]]}"#,
        )
        .unwrap_err();
        assert!(err.contains("coeffs[0]"), "{err}");
    }

    #[test]
    fn polynomial_file_accepts_both_forms() {
        let p = parse_polynomial(
            r#"{"degree": 2, "roots": [[0.5, 0], [-0.5, 0]], "coeffs": [[-0.25, 0], [0, 0], [1, 0]]}"#,
        )
        .unwrap();
        assert_eq!(p.degree(), 2);
        assert!(p.roots().is_some() && p.coeffs().is_some());
        let back = PolynomialFile::from_polynomial(&p).to_polynomial().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn csv_carries_a_comment_header() {
        let prov = Provenance::new(&RunConfig::new("verify", 3));
        let rows = vec![ConditionRow { seed: 1, dc_holds: true, dc_min: 0.01, ac_fitted_cd: 4.0, digit_max_mult: 3 }];
        let text = csv_string(&prov, &rows).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# newton-atlas"));
        assert!(lines.next().unwrap().starts_with("# {\"tool\""));
        assert_eq!(lines.next().unwrap(), "seed,dc_holds,dc_min,ac_fitted_Cd,digit_max_mult");
    }

    #[test]
    fn grid_json_round_trips_and_is_checked() {
        let grid = newton_atlas_core::build_grid(12, 4).unwrap();
        let prov = Provenance::new(&RunConfig::new("grid", 1));
        let text = json_string(&prov, &grid).unwrap();
        assert!(text.starts_with("{\n  \"provenance\""));
        assert_eq!(parse_grid(&text).unwrap(), grid);
        let mut broken = grid.clone();
        broken.points.pop();
        let err = parse_grid(&json_string(&prov, &broken).unwrap()).unwrap_err();
        assert!(err.starts_with("points: expected"), "{err}");
    }
}
