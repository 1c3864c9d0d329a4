use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::config::SystemConfig;
use crate::features::Method;

pub const CSV_HEADER: &str = "noise,snr_db,method,correct,total,rate";

/// Identification rate for one noise, SNR and feature method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub noise: String,
    pub snr_db: f64,
    pub method: Method,
    pub correct: usize,
    pub total: usize,
    /// Percent, full precision.
    pub rate: f64,
}

impl Cell {
    pub fn new(noise: &str, snr_db: f64, method: Method, correct: usize, total: usize) -> Self {
        let rate = if total == 0 { 0.0 } else { 100.0 * correct as f64 / total as f64 };
        Self {
            noise: noise.to_string(),
            snr_db,
            method,
            correct,
            total,
            rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAverage {
    pub noise: String,
    pub method: Method,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAverage {
    pub method: Method,
    pub rate: f64,
}

/// Mean over SNRs per noise and method, then mean of those over noises per
/// method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub per_noise: Vec<NoiseAverage>,
    pub per_method: Vec<MethodAverage>,
}

/// A test utterance whose pipeline failed under some condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub noise: String,
    pub snr_db: f64,
    pub method: Method,
    pub utterance_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: SystemConfig,
    pub stage_seeds: BTreeMap<String, u64>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<Cell>,
    pub averages: Option<Averages>,
    pub run_meta: Option<RunMeta>,
}

impl EvalReport {
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        Self {
            cells,
            averages: None,
            run_meta: None,
        }
    }

    /// Methods, noises and SNRs in first-appearance order.
    fn axes(&self) -> (Vec<Method>, Vec<&str>, Vec<f64>) {
        let mut methods = Vec::new();
        let mut noises = Vec::new();
        let mut snrs: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !methods.contains(&c.method) {
                methods.push(c.method);
            }
            if !noises.contains(&c.noise.as_str()) {
                noises.push(c.noise.as_str());
            }
            if !snrs.contains(&c.snr_db) {
                snrs.push(c.snr_db);
            }
        }
        (methods, noises, snrs)
    }

    /// Mean of every cell's rate.
    pub fn mean_rate(&self) -> Result<f64, EvalError> {
        if self.cells.is_empty() {
            return Err(EvalError::EmptyReport);
        }
        Ok(self.cells.iter().map(|c| c.rate).sum::<f64>() / self.cells.len() as f64)
    }
}

/// Fills in the averages. Cells are summed in report order, so the result
/// is reproducible from the cells alone.
pub fn average_rates(report: &EvalReport) -> Result<EvalReport, EvalError> {
    if report.cells.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let (methods, noises, _) = report.axes();
    let mut per_noise = Vec::new();
    let mut per_method = Vec::new();
    for &method in &methods {
        let mut noise_rates = Vec::new();
        for &noise in &noises {
            let rates: Vec<f64> = report
                .cells
                .iter()
                .filter(|c| c.method == method && c.noise == noise)
                .map(|c| c.rate)
                .collect();
            if rates.is_empty() {
                continue;
            }
            let rate = rates.iter().sum::<f64>() / rates.len() as f64;
            noise_rates.push(rate);
            per_noise.push(NoiseAverage {
                noise: noise.to_string(),
                method,
                rate,
            });
        }
        per_method.push(MethodAverage {
            method,
            rate: noise_rates.iter().sum::<f64>() / noise_rates.len() as f64,
        });
    }
    Ok(EvalReport {
        averages: Some(Averages { per_noise, per_method }),
        ..report.clone()
    })
}

/// Two decimals, halves rounded up, judged on the value's six-decimal form
/// so that e.g. 79.805 prints as 79.81 although its binary value is a hair
/// below.
pub fn format_rate(rate: f64) -> String {
    let micro = (rate * 1e6).round() as i64;
    let cents = (micro.abs() + 5_000) / 10_000;
    let sign = if micro < 0 && cents > 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", cents / 100, cents % 100)
}

fn format_snr(snr: f64) -> String {
    format!("{snr} dB")
}

pub fn render_csv(report: &EvalReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        writeln!(out, "{},{},{},{},{},{}", c.noise, c.snr_db, c.method, c.correct, c.total, c.rate).unwrap();
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<Cell>, EvalError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(EvalError::Parse("missing report header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| EvalError::Parse(format!("row {}: bad {what}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad("field count"));
            }
            Ok(Cell {
                noise: f[0].to_string(),
                snr_db: f[1].parse().map_err(|_| bad("snr_db"))?,
                method: f[2].parse().map_err(|_| bad("method"))?,
                correct: f[3].parse().map_err(|_| bad("correct"))?,
                total: f[4].parse().map_err(|_| bad("total"))?,
                rate: f[5].parse().map_err(|_| bad("rate"))?,
            })
        })
        .collect()
}

/// One table per noise (SNR rows from highest to lowest, then the average
/// row) followed by an overall table of per-noise averages.
pub fn render_markdown(report: &EvalReport) -> Result<String, EvalError> {
    let averages = report.averages.as_ref().ok_or(EvalError::EmptyReport)?;
    if report.cells.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let (methods, noises, mut snrs) = report.axes();
    snrs.sort_by(|a, b| b.total_cmp(a));
    let header = |first: &str| {
        let mut s = format!("| {first} |");
        methods.iter().for_each(|m| s += &format!(" {} |", m.label()));
        s += "\n|---|";
        methods.iter().for_each(|_| s += "---:|");
        s + "\n"
    };
    let noise_avg = |noise: &str, method: Method| {
        averages
            .per_noise
            .iter()
            .find(|a| a.noise == noise && a.method == method)
            .map_or("-".to_string(), |a| format_rate(a.rate))
    };

    let mut out = String::new();
    for &noise in &noises {
        writeln!(out, "### {noise} noise: identification rate (%)\n").unwrap();
        out += &header("SNR");
        for &snr in &snrs {
            let mut row = format!("| {} |", format_snr(snr));
            for &m in &methods {
                let cell = report.cells.iter().find(|c| c.noise == noise && c.snr_db == snr && c.method == m);
                row += &format!(" {} |", cell.map_or("-".to_string(), |c| format_rate(c.rate)));
            }
            out += &row;
            out.push('\n');
        }
        let mut row = "| Average |".to_string();
        methods.iter().for_each(|&m| row += &format!(" {} |", noise_avg(noise, m)));
        out += &row;
        out += "\n\n";
    }
    out += "### Overall identification rate (%)\n\n";
    out += &header("Noise");
    for &noise in &noises {
        let mut row = format!("| {noise} |");
        methods.iter().for_each(|&m| row += &format!(" {} |", noise_avg(noise, m)));
        out += &row;
        out.push('\n');
    }
    let mut row = "| Average |".to_string();
    for &m in &methods {
        let v = averages.per_method.iter().find(|a| a.method == m);
        row += &format!(" {} |", v.map_or("-".to_string(), |a| format_rate(a.rate)));
    }
    out += &row;
    out.push('\n');
    Ok(out)
}

/// `x,rate` rows of a parameter sweep.
pub fn render_curve(param: &str, curve: &[(usize, f64)]) -> String {
    let mut out = format!("{param},rate\n");
    for (x, rate) in curve {
        writeln!(out, "{x},{rate}").unwrap();
    }
    out
}
