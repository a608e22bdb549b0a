//! Reading datasets and writing estimation results.
//!
//! Data files are comma-separated with the header `x,a,z1,...,zq`. Results
//! are a JSON document (`result.json`) next to comma-separated tables:
//! `hazard.csv`, one `curve_<k>.csv` per requested covariate vector and,
//! with bootstrap draws, `replicates.csv`. Table numbers carry 17
//! significant digits, so every value reads back bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{confidence_intervals, Intervals, MultiplierDraws, WeightLaw};
use crate::config::Theta;
use crate::data::{validate, Dataset, Model, Status};
use crate::error::{Error, Result};
use crate::estimator::{conditional_curve, FitResult, FitWarning};
use crate::step::StepFunction;

/// Formats `v` with 17 significant digits, in fixed notation for moderate
/// exponents and scientific notation otherwise, without trailing zeros.
pub fn fmt17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn schema(path: &Path, line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.display().to_string(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, e),
        _ => schema(path, line, "", e.to_string()),
    }
}

/// Reads and validates a data file.
pub fn read_dataset(path: &Path, model: Model) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 || header[0] != "x" || header[1] != "a" {
        return Err(schema(
            path,
            1,
            header.first().map_or("", |s| s),
            "header must start with `x,a`",
        ));
    }
    if header.len() == 2 {
        return Err(schema(
            path,
            1,
            "a",
            "at least one covariate column `z1` is required",
        ));
    }
    for (j, name) in header.iter().enumerate().skip(2) {
        if *name != format!("z{}", j - 1) {
            return Err(schema(
                path,
                1,
                name,
                format!("expected column `z{}`", j - 1),
            ));
        }
    }
    let q = header.len() - 2;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != q + 2 {
            return Err(schema(
                path,
                line,
                "",
                format!("{} cells, expected {}", record.len(), q + 2),
            ));
        }
        let number = |j: usize| -> Result<f64> {
            let cell = &record[j];
            if cell.is_empty() {
                return Err(schema(path, line, &header[j], "missing value"));
            }
            cell.parse::<f64>()
                .map_err(|_| schema(path, line, &header[j], format!("`{cell}` is not a number")))
        };
        let x = number(0)?;
        let a = record[1].parse::<i64>().map_err(|_| {
            schema(
                path,
                line,
                "a",
                format!("`{}` is not an integer status", &record[1]),
            )
        })?;
        let z = (2..q + 2).map(number).collect::<Result<Vec<_>>>()?;
        rows.push((x, a, z));
    }
    validate(rows, model)
}

/// Writes `dataset` in the data file format.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
    let mut header = vec!["x".to_string(), "a".to_string()];
    header.extend((1..=dataset.q()).map(|j| format!("z{j}")));
    w.write_record(&header).map_err(|e| Error::io(path, e))?;
    for i in 0..dataset.n() {
        let mut row = vec![fmt17(dataset.x(i)), dataset.status(i).code().to_string()];
        row.extend(dataset.z(i).iter().map(|v| fmt17(*v)));
        w.write_record(&row).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub exact: usize,
    pub above: usize,
    pub below: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub z: Vec<f64>,
    pub file: String,
    /// Jump times where a product-integral factor was clamped at zero.
    pub clamped_at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub failed: usize,
    pub seed: u64,
    pub weight_law: WeightLaw,
    pub level: f64,
    pub p_interval: (f64, f64),
    pub beta_intervals: Vec<(f64, f64)>,
    pub p_sd: f64,
    pub beta_sd: Vec<f64>,
    pub file: String,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub model: Model,
    pub n: usize,
    pub q: usize,
    pub counts: Counts,
    pub theta_hat: Theta,
    pub truncation: f64,
    pub loglik_at_max: f64,
    pub score_norm_at_max: f64,
    pub iterations: usize,
    pub converged: bool,
    pub dropped_terms: usize,
    pub warnings: Vec<FitWarning>,
    pub hazard_file: String,
    pub curves: Vec<CurveFile>,
    pub bootstrap: Option<BootstrapSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    /// Covariate vectors for `curve_<k>.csv`.
    pub curve_z: Vec<Vec<f64>>,
    /// Confidence level for bootstrap intervals.
    pub level: f64,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions {
            curve_z: Vec::new(),
            level: 0.95,
        }
    }
}

fn write_table(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
    w.write_record(header).map_err(|e| Error::io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Writes the result document and tables into `dir`, creating it if needed.
pub fn write_results(
    dir: &Path,
    dataset: &Dataset,
    fit: &FitResult,
    draws: Option<&MultiplierDraws>,
    options: &OutputOptions,
) -> Result<ResultDocument> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let intervals: Option<Intervals> = draws
        .map(|d| confidence_intervals(d, options.level))
        .transpose()?;
    let grid = fit.hazard.times();

    let mut header = strings(&["time", "increment", "cumulative"]);
    if intervals.is_some() {
        header.extend(strings(&["lower", "upper"]));
    }
    let hazard_file = "hazard.csv".to_string();
    write_table(
        &dir.join(&hazard_file),
        &header,
        fit.hazard.jumps().enumerate().map(|(k, (t, d))| {
            let mut row = vec![fmt17(t), fmt17(d), fmt17(fit.cumulative(t))];
            if let Some(ci) = &intervals {
                row.push(fmt17(ci.hazard[k].0));
                row.push(fmt17(ci.hazard[k].1));
            }
            row
        }),
    )?;

    let mut curves = Vec::new();
    for (k, z) in options.curve_z.iter().enumerate() {
        let curve = conditional_curve(fit, z, grid)?;
        let band = match (draws, &intervals) {
            (Some(d), Some(ci)) => d.curve_z.iter().position(|c| c == z).map(|c| &ci.curves[c]),
            _ => None,
        };
        let mut header = strings(&["time", "value"]);
        if band.is_some() {
            header.extend(strings(&["lower", "upper"]));
        }
        let file = format!("curve_{}.csv", k + 1);
        write_table(
            &dir.join(&file),
            &header,
            curve
                .times
                .iter()
                .zip(&curve.values)
                .enumerate()
                .map(|(i, (t, v))| {
                    let mut row = vec![fmt17(*t), fmt17(*v)];
                    if let Some(b) = band {
                        row.push(fmt17(b[i].0));
                        row.push(fmt17(b[i].1));
                    }
                    row
                }),
        )?;
        curves.push(CurveFile {
            z: z.clone(),
            file,
            clamped_at: curve.clamped,
        });
    }

    let bootstrap = match (draws, intervals) {
        (Some(d), Some(ci)) => {
            let file = "replicates.csv".to_string();
            write_replicates(&dir.join(&file), d, dataset.q())?;
            let (p_sd, beta_sd) = d.standard_errors();
            Some(BootstrapSummary {
                replicates: d.replicates.len(),
                failed: d.failed(),
                seed: d.seed,
                weight_law: d.weight_law,
                level: ci.level,
                p_interval: ci.p,
                beta_intervals: ci.beta,
                p_sd,
                beta_sd,
                file,
            })
        }
        _ => None,
    };

    let doc = ResultDocument {
        model: fit.model,
        n: dataset.n(),
        q: dataset.q(),
        counts: Counts {
            exact: dataset.count(Status::Exact),
            above: dataset.count(Status::Above),
            below: dataset.count(Status::Below),
        },
        theta_hat: fit.theta_hat.clone(),
        truncation: fit.truncation,
        loglik_at_max: fit.loglik_at_max,
        score_norm_at_max: fit.score_norm_at_max,
        iterations: fit.iterations,
        converged: fit.converged,
        dropped_terms: fit.dropped_terms,
        warnings: fit.warnings.clone(),
        hazard_file,
        curves,
        bootstrap,
    };
    let path = dir.join("result.json");
    let text = serde_json::to_string_pretty(&doc).expect("result document serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(doc)
}

fn write_replicates(path: &Path, draws: &MultiplierDraws, q: usize) -> Result<()> {
    let mut header = strings(&["index", "converged", "p"]);
    header.extend((1..=q).map(|j| format!("beta{j}")));
    header.push("error".into());
    write_table(
        path,
        &header,
        draws.replicates.iter().map(|r| {
            let mut row = vec![r.index.to_string(), r.converged.to_string()];
            match &r.theta {
                Some(t) => {
                    row.push(fmt17(t.p));
                    row.extend(t.beta.iter().map(|b| fmt17(*b)));
                }
                None => row.extend(std::iter::repeat_n(String::new(), q + 1)),
            }
            row.push(r.error.clone().unwrap_or_default());
            row
        }),
    )
}

pub fn read_result_document(path: &Path) -> Result<ResultDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| schema(path, e.line() as u64, "", e.to_string()))
}

/// Reads the `time` and `increment` columns of a hazard table.
pub fn read_hazard_table(path: &Path) -> Result<StepFunction> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(path, 1, name, "missing column"))
    };
    let (ti, di) = (col("time")?, col("increment")?);
    let (mut times, mut incs) = (Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |j: usize, name: &str| {
            record
                .get(j)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| schema(path, line, name, "not a number"))
        };
        times.push(get(ti, "time")?);
        incs.push(get(di, "increment")?);
    }
    StepFunction::new(times, incs)
}
