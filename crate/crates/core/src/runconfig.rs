//! Plain-text `key = value` run configuration.
//!
//! Physical quantities carry their unit in the key name (`t2_us`,
//! `signal_bandwidth_khz`). Unknown or repeated keys are errors. `#` starts a
//! comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::AnalysisOptions;
use crate::cv_gaussian::calibrate_eta;
use crate::error::{Error, Result};
use crate::sequence::{SequenceConfig, Synthesizer, Window, WindowKind};

/// Shipped operating points, named after the figure they reproduce.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1_thick", include_str!("../presets/fig1_thick.conf")),
    ("fig1_thick_no_pi2", include_str!("../presets/fig1_thick_no_pi2.conf")),
    ("fig2_od025", include_str!("../presets/fig2_od025.conf")),
    ("fig2_od047", include_str!("../presets/fig2_od047.conf")),
    ("fig2_od078", include_str!("../presets/fig2_od078.conf")),
    ("fig2_warm", include_str!("../presets/fig2_warm.conf")),
    ("fig3_thin", include_str!("../presets/fig3_thin.conf")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sequence: SequenceConfig,
    pub analysis: AnalysisOptions,
    /// When set, `eta` was calibrated so the primary mode pair reaches this dip.
    pub target_dip: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceConfig::default(),
            analysis: AnalysisOptions::default(),
            target_dip: None,
        }
    }
}

fn parse_f64(key: &str, v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("line {line}: {key} expects a number, got '{v}'")))
}

/// `v × 10^exp`, parsed as the decimal literal `{v}e{exp}` when possible so
/// the value matches a literal written directly in SI units.
fn parse_scaled(key: &str, v: &str, line: usize, exp: i32) -> Result<f64> {
    let plain = parse_f64(key, v, line)?;
    if v.contains(['e', 'E']) {
        return Ok(plain * 10f64.powi(exp));
    }
    Ok(format!("{v}e{exp}").parse().expect("valid literal"))
}

fn parse_usize(key: &str, v: &str, line: usize) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Config(format!("line {line}: {key} expects a non-negative integer, got '{v}'")))
}

fn parse_bool(key: &str, v: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("line {line}: {key} expects true or false, got '{v}'"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected 'key = value'")))?;
            let key = key.trim().to_string();
            if entries.contains_key(&key) {
                return Err(Error::Config(format!("line {line}: duplicate key '{key}'")));
            }
            entries.insert(key, (value.trim().to_string(), line));
        }

        let mut cfg = RunConfig::default();
        let seq = &mut cfg.sequence;
        let ana = &mut cfg.analysis;
        let mut eta_given = false;
        for (key, (v, line)) in &entries {
            let (v, line) = (v.as_str(), *line);
            let f = || parse_f64(key, v, line);
            let scaled = |exp: i32| parse_scaled(key, v, line, exp);
            match key.as_str() {
                "sample_rate_mhz" => seq.sample_rate = scaled(6)?,
                "reference_us" => seq.layout.reference = scaled(-6)?,
                "vacuum_us" => seq.layout.vacuum = scaled(-6)?,
                "guard_us" => seq.layout.guard = scaled(-6)?,
                "tail_us" => seq.layout.tail = scaled(-6)?,
                "alpha_l" => seq.physics.alpha_l = f()?,
                "eta" => {
                    seq.physics.eta = f()?;
                    eta_given = true;
                }
                "target_dip" => cfg.target_dip = Some(f()?),
                "excess" => seq.physics.excess = f()?,
                "ase_decay_tau_us" => seq.ase_decay_tau = scaled(-6)?,
                "signal_bandwidth_khz" => seq.signal_bandwidth = scaled(3)?,
                "t2_us" => seq.t2 = scaled(-6)?,
                "pulse_width_us" => seq.pulse_width = scaled(-6)?,
                "n_modes" => {
                    seq.n_modes = parse_usize(key, v, line)?;
                    ana.n_modes = seq.n_modes;
                }
                "n_shots" => seq.n_shots = parse_usize(key, v, line)?,
                "seed" => {
                    seq.seed = v
                        .parse()
                        .map_err(|_| Error::Config(format!("line {line}: seed expects a u64, got '{v}'")))?
                }
                "warm" => seq.warm = parse_bool(key, v, line)?,
                "pi2_enabled" => seq.pi2_enabled = parse_bool(key, v, line)?,
                "lo_phase_drift_rad" => seq.lo_phase_drift = f()?,
                "reference_amplitude_sigma" => seq.reference_amplitude = f()?,
                "bin_width_us" => ana.bin_width = scaled(-6)?,
                "b_step" => ana.b_step = f()?,
                "bootstrap_resamples" => ana.bootstrap.resamples = parse_usize(key, v, line)?,
                "bootstrap_seed" => {
                    ana.bootstrap.seed = v.parse().map_err(|_| {
                        Error::Config(format!("line {line}: bootstrap_seed expects a u64, got '{v}'"))
                    })?
                }
                "confidence_level" => ana.confidence_level = f()?,
                "dip_b" => ana.dip_b = f()?,
                "max_lag_us" => ana.xcorr.max_lag = Some(scaled(-6)?),
                "tau_step_us" => ana.xcorr.tau_step = Some(scaled(-6)?),
                "phase_reference" => ana.phase_reference = parse_bool(key, v, line)?,
                other => match window_override_key(other) {
                    Some(kind) => ana.window_overrides.push(parse_window(kind, v, line)?),
                    None => return Err(Error::Config(format!("line {line}: unknown key '{other}'"))),
                },
            }
        }
        if eta_given && cfg.target_dip.is_some() {
            return Err(Error::Config("give either eta or target_dip, not both".into()));
        }
        cfg.sequence.validate()?;
        if let Some(target) = cfg.target_dip {
            cfg.sequence.physics.eta = calibrate_primary_mode(&cfg.sequence, target)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                Error::Config(format!("unknown preset '{name}'; available: {}", names.join(", ")))
            })?;
        Self::parse(text)
    }

    /// Canonical text form; parsing it yields an equal configuration
    /// (with `eta` in place of any `target_dip`).
    pub fn to_text(&self) -> String {
        let s = &self.sequence;
        let a = &self.analysis;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("sample_rate_mhz", fmt_scaled(s.sample_rate, 6));
        put("reference_us", fmt_scaled(s.layout.reference, -6));
        put("vacuum_us", fmt_scaled(s.layout.vacuum, -6));
        put("guard_us", fmt_scaled(s.layout.guard, -6));
        put("tail_us", fmt_scaled(s.layout.tail, -6));
        put("alpha_l", fmt(s.physics.alpha_l));
        put("eta", fmt(s.physics.eta));
        put("excess", fmt(s.physics.excess));
        put("ase_decay_tau_us", fmt_scaled(s.ase_decay_tau, -6));
        put("signal_bandwidth_khz", fmt_scaled(s.signal_bandwidth, 3));
        put("t2_us", fmt_scaled(s.t2, -6));
        put("pulse_width_us", fmt_scaled(s.pulse_width, -6));
        put("n_modes", s.n_modes.to_string());
        put("n_shots", s.n_shots.to_string());
        put("seed", s.seed.to_string());
        put("warm", s.warm.to_string());
        put("pi2_enabled", s.pi2_enabled.to_string());
        put("lo_phase_drift_rad", fmt(s.lo_phase_drift));
        put("reference_amplitude_sigma", fmt(s.reference_amplitude));
        put("bin_width_us", fmt_scaled(a.bin_width, -6));
        put("b_step", fmt(a.b_step));
        put("bootstrap_resamples", a.bootstrap.resamples.to_string());
        put("bootstrap_seed", a.bootstrap.seed.to_string());
        put("confidence_level", fmt(a.confidence_level));
        put("dip_b", fmt(a.dip_b));
        if let Some(v) = a.xcorr.max_lag {
            put("max_lag_us", fmt_scaled(v, -6));
        }
        if let Some(v) = a.xcorr.tau_step {
            put("tau_step_us", fmt_scaled(v, -6));
        }
        put("phase_reference", a.phase_reference.to_string());
        for w in &a.window_overrides {
            put(&format!("window_{}_samples", w.kind.label()), format!("{}, {}", w.start, w.end));
        }
        out
    }
}

/// Value in units of `10^exp`, rounded to nine decimals to shed conversion noise.
fn fmt_scaled(v: f64, exp: i32) -> String {
    let x = v / 10f64.powi(exp);
    fmt((x * 1e9).round() / 1e9)
}

/// Shortest decimal form that parses back to the same value.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn window_override_key(key: &str) -> Option<WindowKind> {
    key.strip_prefix("window_")?
        .strip_suffix("_samples")?
        .parse()
        .ok()
}

fn parse_window(kind: WindowKind, v: &str, line: usize) -> Result<Window> {
    let bad = || Error::Config(format!("line {line}: window override expects 'start, end' sample indices"));
    let (a, b) = v.split_once(',').ok_or_else(bad)?;
    let start = a.trim().parse().map_err(|_| bad())?;
    let end = b.trim().parse().map_err(|_| bad())?;
    if start >= end {
        return Err(bad());
    }
    Ok(Window { kind, start, end })
}

/// Recall efficiency that gives the primary (last, nearest π₂) mode pair a
/// minimum inseparability of `target`, after its gain decay and dephasing.
pub fn calibrate_primary_mode(sequence: &SequenceConfig, target: f64) -> Result<f64> {
    if sequence.warm || !sequence.pi2_enabled {
        return Err(Error::Config("target_dip needs a correlated run (warm = false, pi2_enabled = true)".into()));
    }
    let mut probe = sequence.clone();
    probe.physics.eta = 1.0;
    probe.n_shots = 1;
    let synth = Synthesizer::new(&probe)?;
    let primary = &synth.modes()[probe.n_modes - 1].params;
    let eta_mode: f64 = calibrate_eta(primary.alpha_l, target)?;
    let eta = eta_mode / primary.eta;
    if eta > 1.0 {
        return Err(Error::Calibration {
            alpha_l: primary.alpha_l,
            target,
            attainable_min: crate::cv_gaussian::ideal_dip(primary.alpha_l, primary.eta)?.s,
            attainable_max: 2.0,
        });
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            assert_eq!(cfg.analysis.n_modes, cfg.sequence.n_modes, "{name}");
        }
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(RunConfig::parse("alpha_l = 0.5\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("alpha_l = 0.5\nalpha_l = 0.6\n").is_err());
        assert!(RunConfig::parse("t2 = 13\n").is_err());
    }

    #[test]
    fn units_are_applied() {
        let cfg = RunConfig::parse("t2_us = 13 # coherence\nsignal_bandwidth_khz = 150\n").unwrap();
        assert!((cfg.sequence.t2 - 13e-6).abs() < 1e-18);
        assert!((cfg.sequence.signal_bandwidth - 150e3).abs() < 1e-9);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::preset("fig2_od078").unwrap();
        cfg.analysis.window_overrides.push(Window {
            kind: WindowKind::Tail,
            start: 1400,
            end: 1420,
        });
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn window_override_parsed() {
        let cfg = RunConfig::parse("window_vacuum_samples = 120, 480\n").unwrap();
        assert_eq!(
            cfg.analysis.window_overrides,
            vec![Window {
                kind: WindowKind::Vacuum,
                start: 120,
                end: 480
            }]
        );
    }

    #[test]
    fn target_dip_calibrates_primary_mode() {
        let cfg = RunConfig::preset("fig3_thin").unwrap();
        let synth = Synthesizer::new(&cfg.sequence).unwrap();
        let mode = synth.modes().last().unwrap();
        let dip = crate::cv_gaussian::min_inseparability(&mode.measured).unwrap();
        assert!((dip.s - cfg.target_dip.unwrap()).abs() < 1e-9);
    }
}
