use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use rase_core::analysis::{analyze as run_analysis, uniform_b_grid, ShotSource};
use rase_core::cv_gaussian::{
    ase_rase_state, calibrate_eta, heterodyne_map, min_inseparability, theory_curve, RasePhysicsParams,
};
use rase_core::runconfig::RunConfig;
use rase_core::sequence::Synthesizer;
use rase_core::shotfile::{ShotFile, ShotWriter};
use rase_core::Error;
use sha2::{Digest, Sha256};

use crate::tables::{self, num, Table};
use crate::{report as render, AnalyzeArgs, CliError, ReportArgs, SimulateArgs, TheoryArgs};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_config(config: Option<&Path>, preset: Option<&str>) -> Result<RunConfig, CliError> {
    Ok(match (config, preset) {
        (Some(p), None) => RunConfig::load(p)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        _ => return Err(CliError::Usage("give exactly one of --config or --preset".into())),
    })
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let mut f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut hasher = Sha256::new();
    let bytes = std::io::copy(&mut f, &mut hasher).map_err(|e| io_err(path, e))?;
    Ok((hex::encode(hasher.finalize()), bytes))
}

/// Shots are synthesized in parallel batches and written in index order;
/// each shot depends only on `(seed, index)`, so the file is independent of
/// the thread count.
fn write_shots(path: &Path, synth: &Synthesizer) -> Result<(), CliError> {
    let n = synth.config().n_shots;
    let mut writer = ShotWriter::create(path, synth.timeline(), n)?;
    let batch = 64 * rayon::current_num_threads().max(1);
    for start in (0..n).step_by(batch) {
        let shots: Vec<_> = (start..(start + batch).min(n))
            .into_par_iter()
            .map(|i| synth.shot(i))
            .collect();
        for s in &shots {
            writer.write_shot(s)?;
        }
    }
    writer.finish()?;
    Ok(())
}

fn write_debug_csv(path: &Path, synth: &Synthesizer) -> Result<(), CliError> {
    let dt_us = synth.timeline().dt() * 1e6;
    let mut t = Table::create(path, &["shot [index]", "sample [index]", "t [us]", "re [ADC units]", "im [ADC units]"])?;
    for i in 0..synth.config().n_shots {
        let shot = synth.shot(i);
        for (k, z) in shot.samples.iter().enumerate() {
            t.row([i.to_string(), k.to_string(), num(k as f64 * dt_us), num(z.re), num(z.im)])?;
        }
    }
    t.finish()
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.sequence.seed = seed;
    }
    let synth = Synthesizer::new(&cfg.sequence)?;
    write_shots(&args.out, &synth)?;
    if let Some(csv) = &args.csv {
        write_debug_csv(csv, &synth)?;
    }
    let (hash, bytes) = sha256_file(&args.out)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "# rase simulate manifest");
    let _ = write!(out, "{}", cfg.to_text());
    let _ = writeln!(out, "# output = {}", args.out.display());
    let _ = writeln!(out, "# samples_per_shot = {}", synth.timeline().n_samples());
    let _ = writeln!(out, "# bytes = {bytes}");
    let _ = writeln!(out, "# sha256 = {hash}");
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
    let file = ShotFile::open(&args.shots)?;
    let recorded = file.timeline();
    let designed = cfg.sequence.timeline()?;
    if recorded.n_samples() != designed.n_samples() || recorded.sample_rate() != designed.sample_rate() {
        return Err(CliError::Core(Error::Config(format!(
            "{} holds {} samples at {} Hz per shot but the configuration describes {} at {} Hz",
            args.shots.display(),
            recorded.n_samples(),
            recorded.sample_rate(),
            designed.n_samples(),
            designed.sample_rate()
        ))));
    }
    let synth = Synthesizer::new(&cfg.sequence)?;
    let designs: Vec<_> = synth.modes().iter().map(|m| *m.measured.cov()).collect();
    let report = run_analysis(&file, &cfg.analysis)?;
    let design = designs
        .get(report.primary_mode)
        .copied()
        .ok_or_else(|| CliError::Core(Error::Config("analysis uses more modes than the configuration".into())))?;

    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    tables::write_variance_trace(dir, &report)?;
    tables::write_spectra(dir, &report)?;
    tables::write_crosscorr(dir, &report)?;
    tables::write_inseparability(dir, &report, &design)?;
    if args.covariance {
        tables::write_covariance(dir, &report, &designs)?;
    }
    let rows = tables::summary_rows(&report, &design);
    tables::write_summary(dir, &rows)?;

    let mut out = std::io::stdout().lock();
    for [k, v, u] in &rows {
        if k.ends_with("_error") {
            eprintln!("rase: warning: {v}");
        } else {
            let _ = writeln!(out, "{k} = {v} {u}");
        }
    }
    Ok(())
}

pub fn theory(args: &TheoryArgs) -> Result<(), CliError> {
    let b_grid = uniform_b_grid(args.b_step)?;
    let eta = match (args.eta, args.target_dip) {
        (Some(eta), None) => eta,
        (None, Some(target)) => calibrate_eta(args.alpha_l, target)?,
        _ => return Err(CliError::Usage("give exactly one of --eta or --target-dip".into())),
    };
    let params = RasePhysicsParams::new(args.alpha_l, eta, args.excess)?;
    let state = heterodyne_map(&ase_rase_state(&params)?)?;
    let curve = theory_curve(&state, &b_grid)?;
    let dip = min_inseparability(&state)?;

    let header = ["b [1]", "s [shot-noise units]"];
    let mut summary = vec![
        format!("alpha_l = {}", num(args.alpha_l)),
        format!("eta = {}", num(eta)),
        format!("excess = {}", num(args.excess)),
        format!("b_star = {}", num(dip.b)),
        format!("s_star = {}", num(dip.s)),
    ];
    if args.target_dip.is_some() {
        summary.insert(1, "eta_calibrated = true".into());
    }
    match &args.out {
        Some(path) => {
            let mut t = Table::create(path, &header)?;
            for (b, s) in b_grid.iter().zip(&curve) {
                t.row([num(*b), num(*s)])?;
            }
            t.finish()?;
            let mut out = std::io::stdout().lock();
            for line in &summary {
                let _ = writeln!(out, "{line}");
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = csv::Writer::from_writer(BufWriter::new(stdout.lock()));
            let fail = |e: csv::Error| CliError::Usage(format!("cannot write to standard output: {e}"));
            w.write_record(header).map_err(fail)?;
            for (b, s) in b_grid.iter().zip(&curve) {
                w.write_record([num(*b), num(*s)]).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Usage(format!("cannot write to standard output: {e}")))?;
            for line in &summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let written = render::render_all(&args.dir)?;
    let mut out = std::io::stdout().lock();
    for name in written {
        let _ = writeln!(out, "{}", args.dir.join(name).display());
    }
    Ok(())
}
