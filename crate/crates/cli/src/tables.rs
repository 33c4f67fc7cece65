//! CSV tables written by `analyze` and read back by `report`.
//!
//! Every header names its unit in brackets. Dimensionless variances are in
//! shot-noise units, where the vacuum sum `Var(x) + Var(p)` is 2.

use std::path::{Path, PathBuf};

use rase_core::analysis::AnalysisReport;
use rase_core::cv_gaussian::{epr_variance_sum, minimize_epr_sum};
use rase_core::linalg::Mat4;
use rase_core::Error;

use crate::CliError;

pub const VARIANCE_TRACE: &str = "variance_trace.csv";
pub const CROSSCORR: &str = "crosscorr.csv";
pub const INSEPARABILITY: &str = "inseparability.csv";
pub const SUMMARY: &str = "summary.csv";
pub const COVARIANCE: &str = "covariance.csv";

pub fn spectrum_file(label: &str) -> String {
    format!("spectrum_{label}.csv")
}

pub const TRACE_COLUMNS: [&str; 5] = [
    "t [us]",
    "variance_sum [shot-noise units]",
    "start [sample]",
    "end [sample]",
    "pulse [bool]",
];
pub const SPECTRUM_COLUMNS: [&str; 3] = ["frequency [kHz]", "power [shot-noise units]", "power_se [shot-noise units]"];
pub const CROSSCORR_COLUMNS: [&str; 6] = [
    "tau [us]",
    "re [shot-noise units]",
    "im [shot-noise units]",
    "magnitude [shot-noise units]",
    "se [shot-noise units]",
    "intensity [shot-noise units^2]",
];
pub const INSEPARABILITY_COLUMNS: [&str; 6] = [
    "b [1]",
    "s_hat [shot-noise units]",
    "ci_low [shot-noise units]",
    "ci_high [shot-noise units]",
    "sigma [shot-noise units]",
    "s_design [shot-noise units]",
];
pub const SUMMARY_COLUMNS: [&str; 3] = ["key", "value", "unit"];
pub const COVARIANCE_COLUMNS: [&str; 6] = [
    "mode [index]",
    "row [x1 p1 x2 p2]",
    "col [x1 p1 x2 p2]",
    "estimate [shot-noise units]",
    "se [shot-noise units]",
    "design [shot-noise units]",
];

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source: io,
        }),
        other => CliError::Table(format!("{}: {other:?}", path.display())),
    }
}

/// Writer that knows its path for error messages.
pub struct Table {
    path: PathBuf,
    out: csv::Writer<std::fs::File>,
}

impl Table {
    pub fn create(path: impl AsRef<Path>, header: &[&str]) -> Result<Self, CliError> {
        let path = path.as_ref().to_path_buf();
        let mut out = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        out.write_record(header).map_err(|e| csv_err(&path, e))?;
        Ok(Self { path, out })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.out.write_record(fields).map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::Core(Error::Io {
            path: self.path.clone(),
            source: e,
        }))
    }
}

/// Shortest decimal that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_variance_trace(dir: &Path, report: &AnalysisReport) -> Result<(), CliError> {
    let mut t = Table::create(dir.join(VARIANCE_TRACE), &TRACE_COLUMNS)?;
    for b in &report.trace.bins {
        t.row([
            num(b.t_center * 1e6),
            num(b.value),
            b.start.to_string(),
            b.end.to_string(),
            b.sentinel.to_string(),
        ])?;
    }
    t.finish()
}

pub fn write_spectra(dir: &Path, report: &AnalysisReport) -> Result<(), CliError> {
    for (kind, s) in &report.spectra {
        let mut t = Table::create(dir.join(spectrum_file(kind.label())), &SPECTRUM_COLUMNS)?;
        for k in 0..s.frequencies.len() {
            t.row([num(s.frequencies[k] * 1e-3), num(s.power[k]), num(s.power_se[k])])?;
        }
        t.finish()?;
    }
    Ok(())
}

pub fn write_crosscorr(dir: &Path, report: &AnalysisReport) -> Result<(), CliError> {
    let xc = &report.xcorr;
    let intensity = xc.intensity();
    let mut t = Table::create(dir.join(CROSSCORR), &CROSSCORR_COLUMNS)?;
    for k in 0..xc.tau.len() {
        let c = xc.value[k];
        t.row([
            num(xc.tau[k] * 1e6),
            num(c.re),
            num(c.im),
            num(c.norm()),
            num(xc.se[k]),
            num(intensity[k]),
        ])?;
    }
    t.finish()
}

/// `design` is the expected measured covariance of the primary mode pair.
pub fn write_inseparability(dir: &Path, report: &AnalysisReport, design: &Mat4<f64>) -> Result<(), CliError> {
    let c = &report.inseparability;
    let mut t = Table::create(dir.join(INSEPARABILITY), &INSEPARABILITY_COLUMNS)?;
    for k in 0..c.b_grid.len() {
        t.row([
            num(c.b_grid[k]),
            num(c.s_values[k]),
            num(c.ci_low[k]),
            num(c.ci_high[k]),
            num(c.sigma_band[k]),
            num(epr_variance_sum(design, c.b_grid[k])),
        ])?;
    }
    t.finish()
}

pub fn write_covariance(dir: &Path, report: &AnalysisReport, designs: &[Mat4<f64>]) -> Result<(), CliError> {
    const NAMES: [&str; 4] = ["x1", "p1", "x2", "p2"];
    let mut t = Table::create(dir.join(COVARIANCE), &COVARIANCE_COLUMNS)?;
    for (m, design) in report.modes.iter().zip(designs) {
        for i in 0..4 {
            for j in 0..4 {
                t.row([
                    m.mode.to_string(),
                    NAMES[i].to_string(),
                    NAMES[j].to_string(),
                    num(m.cov[i][j]),
                    num(m.cov_se[i][j]),
                    num(design[i][j]),
                ])?;
            }
        }
    }
    t.finish()
}

/// Key/value/unit rows; fits that failed are recorded as `NaN` with the
/// reason in a `*_error` row.
pub fn summary_rows(report: &AnalysisReport, design: &Mat4<f64>) -> Vec<[String; 3]> {
    let mut rows: Vec<[String; 3]> = Vec::new();
    let mut put = |k: &str, v: String, u: &str| rows.push([k.to_string(), v, u.to_string()]);
    put("n_shots", report.n_shots.to_string(), "shots");
    put("normalization_scale", num(report.scale), "1/ADC unit");
    put("vacuum_variance_sum", num(report.vacuum_variance_sum), "shot-noise units");
    put("phase_referenced_shots", report.phase_referenced.to_string(), "shots");
    match &report.decay {
        Ok(d) => {
            put("decay_tau", num(d.tau * 1e6), "us");
            put("decay_tau_se", num(d.tau_se * 1e6), "us");
            put("decay_amplitude", num(d.amplitude), "shot-noise units");
        }
        Err(e) => {
            put("decay_tau", num(f64::NAN), "us");
            put("decay_error", e.to_string(), "");
        }
    }
    match &report.ase_width {
        Ok(w) => {
            put("ase_fwhm", num(w.fwhm * 1e-3), "kHz");
            put("ase_fwhm_se", num(w.fwhm_se * 1e-3), "kHz");
            put("ase_peak_frequency", num(w.peak_frequency * 1e-3), "kHz");
        }
        Err(e) => {
            put("ase_fwhm", num(f64::NAN), "kHz");
            put("ase_fwhm_error", e.to_string(), "");
        }
    }
    put("spectrum_taper", "none".into(), "");
    put("correlation_metric", "magnitude".into(), "");
    let z = report.xcorr.zero_index();
    put("xcorr_zero_magnitude", num(report.xcorr.value[z].norm()), "shot-noise units");
    put("xcorr_zero_se", num(report.xcorr.se[z]), "shot-noise units");
    match &report.xcorr_width {
        Ok(w) => {
            put("xcorr_fwhm", num(w.fwhm * 1e6), "us");
            put("xcorr_fwhm_magnitude", num(w.fwhm_magnitude * 1e6), "us");
            put("xcorr_peak_tau", num(w.peak_tau * 1e6), "us");
            put("xcorr_peak_magnitude", num(w.peak_magnitude), "shot-noise units");
        }
        Err(e) => {
            put("xcorr_fwhm", num(f64::NAN), "us");
            put("xcorr_error", e.to_string(), "");
        }
    }
    let c = &report.inseparability;
    let i = c.argmin();
    put("primary_mode", report.primary_mode.to_string(), "index");
    put("b_star", num(c.b_grid[i]), "1");
    put("s_star", num(c.s_values[i]), "shot-noise units");
    put("s_star_sigma", num(c.sigma_band[i]), "shot-noise units");
    let dip = minimize_epr_sum(design);
    put("design_b_star", num(dip.b), "1");
    put("design_s_star", num(dip.s), "shot-noise units");
    put("dip_b", num(report.dip.b), "1");
    put("dip_s_hat", num(report.dip.s_hat), "shot-noise units");
    put("dip_sigma", num(report.dip.sigma), "shot-noise units");
    put("dip_confidence_below_2", num(report.dip.confidence_below_bound), "probability");
    put("confidence_level", num(c.confidence_level), "probability");
    rows
}

pub fn write_summary(dir: &Path, rows: &[[String; 3]]) -> Result<(), CliError> {
    let mut t = Table::create(dir.join(SUMMARY), &SUMMARY_COLUMNS)?;
    for r in rows {
        t.row(r)?;
    }
    t.finish()
}

/// Numeric CSV loaded for plotting.
#[derive(Debug)]
pub struct NumericTable {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    /// Cells that are not numbers (`true`, `false`) load as 1 and 0.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref().to_path_buf();
        let mut rdr = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_err(&path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(&path, e))?;
            let row = rec
                .iter()
                .map(|cell| match cell {
                    "true" => Ok(1.0),
                    "false" => Ok(0.0),
                    _ => cell.parse::<f64>().map_err(|_| {
                        CliError::Table(format!("{}: row {}: '{cell}' is not a number", path.display(), line + 2))
                    }),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        Ok(Self { path, headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Table(format!("{}: missing column '{name}'", self.path.display())))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}
