//! SVG figures drawn from the CSV tables. Rendering only; no statistics are
//! computed here, and identical tables give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::tables::{self, NumericTable};
use crate::CliError;

/// Tables that must exist before `report` runs.
pub const REQUIRED: [&str; 4] = [
    tables::VARIANCE_TRACE,
    "spectrum_ase.csv",
    tables::CROSSCORR,
    tables::INSEPARABILITY,
];

pub const FIGURES: [&str; 4] = [
    "fig1a_variance_trace.svg",
    "fig1b_spectrum.svg",
    "fig2a_crosscorr.svg",
    "fig3_inseparability.svg",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

#[derive(Clone, Copy)]
enum Stroke {
    Solid(&'static str),
    Dashed(&'static str),
}

struct Line {
    x: Vec<f64>,
    y: Vec<f64>,
    stroke: Stroke,
    label: &'static str,
}

struct Band {
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    fill: &'static str,
}

struct Plot {
    title: &'static str,
    x_label: &'static str,
    y_label: &'static str,
    lines: Vec<Line>,
    bands: Vec<Band>,
    h_rules: Vec<f64>,
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((a, b)) => Some((a.min(v), b.max(v))),
        })
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// About five round-numbered ticks spanning `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

impl Plot {
    fn render(&self) -> String {
        let xs = self
            .lines
            .iter()
            .flat_map(|l| l.x.iter().copied())
            .chain(self.bands.iter().flat_map(|b| b.x.iter().copied()));
        let ys = self
            .lines
            .iter()
            .flat_map(|l| l.y.iter().copied())
            .chain(self.bands.iter().flat_map(|b| b.lo.iter().chain(&b.hi).copied()))
            .chain(self.h_rules.iter().copied());
        let (x0, x1) = padded(extent(xs).unwrap_or((0.0, 1.0)));
        let (y0, y1) = padded(extent(ys).unwrap_or((0.0, 1.0)));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            self.title
        );

        let (xt, xd) = ticks(x0, x1);
        for t in xt {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##,
                TOP,
                TOP + ph
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#,
                TOP + ph + 16.0
            );
        }
        let (yt, yd) = ticks(y0, y1);
        for t in yt {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#,
                LEFT - 6.0,
                y + 4.0
            );
        }

        for b in &self.bands {
            let mut pts: Vec<String> = Vec::new();
            let ok: Vec<usize> = (0..b.x.len())
                .filter(|&i| b.x[i].is_finite() && b.lo[i].is_finite() && b.hi[i].is_finite())
                .collect();
            for &i in &ok {
                pts.push(format!("{:.2},{:.2}", sx(b.x[i]), sy(b.hi[i])));
            }
            for &i in ok.iter().rev() {
                pts.push(format!("{:.2},{:.2}", sx(b.x[i]), sy(b.lo[i])));
            }
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.35" stroke="none"/>"#,
                pts.join(" "),
                b.fill
            );
        }
        for &r in &self.h_rules {
            let y = sy(r);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#888" stroke-dasharray="2 3"/>"##,
                LEFT + pw
            );
        }
        for (k, l) in self.lines.iter().enumerate() {
            let (color, dash) = match l.stroke {
                Stroke::Solid(c) => (c, ""),
                Stroke::Dashed(c) => (c, r#" stroke-dasharray="6 4""#),
            };
            // Non-finite points split the line into separate segments.
            let mut d = String::new();
            let mut pen_down = false;
            for (&x, &y) in l.x.iter().zip(&l.y) {
                if x.is_finite() && y.is_finite() {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                    pen_down = true;
                } else {
                    pen_down = false;
                }
            }
            let _ = writeln!(
                s,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                d.trim_end()
            );
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let lx = LEFT + pw - 150.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                ly - 4.0,
                lx + 24.0,
                ly - 4.0
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 30.0, l.label);
        }

        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            self.y_label
        );
        s.push_str("</svg>\n");
        s
    }
}

fn write(dir: &Path, name: &str, plot: &Plot) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, plot.render()).map_err(|e| {
        CliError::Core(rase_core::Error::Io {
            path: path.clone(),
            source: e,
        })
    })
}

fn variance_trace(dir: &Path) -> Result<Plot, CliError> {
    let t = NumericTable::read(dir.join(tables::VARIANCE_TRACE))?;
    Ok(Plot {
        title: "Variance trace",
        x_label: "t (us)",
        y_label: "Var(x) + Var(p) (shot-noise units)",
        lines: vec![Line {
            x: t.column(tables::TRACE_COLUMNS[0])?,
            y: t.column(tables::TRACE_COLUMNS[1])?,
            stroke: Stroke::Solid("#1f4e9c"),
            label: "measured",
        }],
        bands: Vec::new(),
        h_rules: vec![2.0],
    })
}

fn spectrum(dir: &Path) -> Result<Plot, CliError> {
    let load = |label: &str| -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let t = NumericTable::read(dir.join(tables::spectrum_file(label)))?;
        Ok((t.column(tables::SPECTRUM_COLUMNS[0])?, t.column(tables::SPECTRUM_COLUMNS[1])?))
    };
    // Show the central ±1 MHz where the signal lives.
    let clip = |(f, p): (Vec<f64>, Vec<f64>)| -> (Vec<f64>, Vec<f64>) {
        f.into_iter().zip(p).filter(|(f, _)| f.abs() <= 1000.0).unzip()
    };
    let (fa, pa) = clip(load("ase")?);
    let mut lines = vec![Line {
        x: fa,
        y: pa,
        stroke: Stroke::Solid("#c0392b"),
        label: "ASE window",
    }];
    if dir.join(tables::spectrum_file("vacuum")).exists() {
        let (fv, pv) = clip(load("vacuum")?);
        lines.push(Line {
            x: fv,
            y: pv,
            stroke: Stroke::Solid("#555"),
            label: "vacuum window",
        });
    }
    Ok(Plot {
        title: "Power spectrum",
        x_label: "frequency (kHz)",
        y_label: "power (shot-noise units)",
        lines,
        bands: Vec::new(),
        h_rules: vec![2.0],
    })
}

fn crosscorr(dir: &Path) -> Result<Plot, CliError> {
    let t = NumericTable::read(dir.join(tables::CROSSCORR))?;
    let tau = t.column(tables::CROSSCORR_COLUMNS[0])?;
    let mag = t.column(tables::CROSSCORR_COLUMNS[3])?;
    let se = t.column(tables::CROSSCORR_COLUMNS[4])?;
    let three_se: Vec<f64> = se.iter().map(|s| 3.0 * s).collect();
    Ok(Plot {
        title: "ASE/RASE cross-correlation",
        x_label: "tau (us)",
        y_label: "|C(tau)| (shot-noise units)",
        lines: vec![
            Line {
                x: tau.clone(),
                y: mag,
                stroke: Stroke::Solid("#1f4e9c"),
                label: "|C|",
            },
            Line {
                x: tau,
                y: three_se,
                stroke: Stroke::Dashed("#888"),
                label: "3 standard errors",
            },
        ],
        bands: Vec::new(),
        h_rules: Vec::new(),
    })
}

fn inseparability(dir: &Path) -> Result<Plot, CliError> {
    let t = NumericTable::read(dir.join(tables::INSEPARABILITY))?;
    let c = &tables::INSEPARABILITY_COLUMNS;
    let b = t.column(c[0])?;
    Ok(Plot {
        title: "Inseparability",
        x_label: "b",
        y_label: "S(b) (shot-noise units)",
        bands: vec![Band {
            x: b.clone(),
            lo: t.column(c[2])?,
            hi: t.column(c[3])?,
            fill: "#9fb8e0",
        }],
        lines: vec![
            Line {
                x: b.clone(),
                y: t.column(c[1])?,
                stroke: Stroke::Solid("#1f4e9c"),
                label: "estimate",
            },
            Line {
                x: b,
                y: t.column(c[5])?,
                stroke: Stroke::Dashed("#c0392b"),
                label: "design",
            },
        ],
        h_rules: vec![2.0],
    })
}

/// Render the four figures into `dir`, next to their tables.
pub fn render_all(dir: &Path) -> Result<Vec<String>, CliError> {
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!(
            "{} is missing {}; report expects {}",
            dir.display(),
            missing.join(", "),
            REQUIRED.join(", ")
        )));
    }
    let plots = [variance_trace(dir)?, spectrum(dir)?, crosscorr(dir)?, inseparability(dir)?];
    for (name, plot) in FIGURES.iter().zip(&plots) {
        write(dir, name, plot)?;
    }
    Ok(FIGURES.iter().map(|s| s.to_string()).collect())
}
