use rase_core::analysis::{analyze, apply_phase_reference, AnalysisOptions, AnalysisReport};
use rase_core::sequence::{synthesize_run, SequenceConfig, Synthesizer, WindowKind};
use rase_core::shotfile::{write_shot_file, ShotFile};
use statrs::distribution::{ContinuousCDF, Normal};

fn config(alpha_l: f64, eta: f64, n_modes: usize, n_shots: usize, seed: u64) -> SequenceConfig {
    let mut c = SequenceConfig::default();
    c.physics.alpha_l = alpha_l;
    c.physics.eta = eta;
    c.n_modes = n_modes;
    c.n_shots = n_shots;
    c.seed = seed;
    c
}

fn options(n_modes: usize) -> AnalysisOptions {
    AnalysisOptions {
        n_modes,
        bootstrap: rase_core::analysis::BootstrapOptions { resamples: 200, seed: 3 },
        ..AnalysisOptions::default()
    }
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn projected_covariances_match_the_design() {
    let cfg = config(0.78, 1.0 - (-0.78f64).exp(), 4, 20_000, 77);
    let synth = Synthesizer::new(&cfg).unwrap();
    let report = analyze(&synth, &options(4)).unwrap();
    for (stats, design) in report.modes.iter().zip(synth.modes()) {
        let d = design.measured.cov();
        for i in 0..4 {
            for j in 0..4 {
                let z = (stats.cov[i][j] - d[i][j]) / stats.cov_se[i][j];
                assert!(z.abs() < 4.0, "mode {} cov[{i}][{j}]: z = {z:.2}", stats.mode);
            }
        }
    }
}

#[test]
fn zero_lag_correlation_equals_the_mode_cross_covariance() {
    // With one mode, the mirrored sample pairs summed at zero lag carry
    // ⟨a r*⟩ = Cov(x1,x2) − Cov(p1,p2) + i(Cov(x1,p2) + Cov(p1,x2)).
    let cfg = config(0.78, 0.6, 1, 20_000, 5);
    let synth = Synthesizer::new(&cfg).unwrap();
    let report = analyze(&synth, &options(1)).unwrap();
    let d = synth.modes()[0].measured.cov();
    let z = report.xcorr.zero_index();
    assert_eq!(report.xcorr.tau[z], 0.0);
    let c = report.xcorr.value[z];
    let se = report.xcorr.se[z];
    let want_re = d[0][2] - d[1][3];
    let want_im = d[0][3] + d[1][2];
    assert!((c.re - want_re).abs() < 4.0 * se, "{} vs {want_re} (se {se})", c.re);
    assert!((c.im - want_im).abs() < 4.0 * se);
    assert!(c.norm() > 5.0 * se, "|C(0)| {} se {se}", c.norm());
}

fn same_results(a: &AnalysisReport, b: &AnalysisReport) {
    assert_eq!(a.scale.to_bits(), b.scale.to_bits());
    for (x, y) in a.modes.iter().zip(&b.modes) {
        assert_eq!(x.cov, y.cov);
    }
    assert_eq!(a.inseparability.s_values, b.inseparability.s_values);
    assert_eq!(a.inseparability.ci_low, b.inseparability.ci_low);
    assert_eq!(a.xcorr.value, b.xcorr.value);
    let bits = |r: &AnalysisReport| r.trace.bins.iter().map(|b| b.value.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a), bits(b));
    assert_eq!(a.dip, b.dip);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = config(0.47, 0.3, 4, 1500, 8);
    let synth = Synthesizer::new(&cfg).unwrap();
    let one = in_pool(1, || analyze(&synth, &options(4)).unwrap());
    let three = in_pool(3, || analyze(&synth, &options(4)).unwrap());
    same_results(&one, &three);
    let small_chunks = AnalysisOptions {
        chunk_size: 7,
        ..options(4)
    };
    let chunked = analyze(&synth, &small_chunks).unwrap();
    for (x, y) in one.modes.iter().zip(&chunked.modes) {
        for i in 0..4 {
            for j in 0..4 {
                assert!((x.cov[i][j] - y.cov[i][j]).abs() < 1e-12);
            }
        }
    }

    let r1 = in_pool(1, || synthesize_run(&cfg).unwrap());
    let r4 = in_pool(4, || synthesize_run(&cfg).unwrap());
    assert_eq!(r1, r4);
}

#[test]
fn analysis_of_a_file_equals_analysis_in_memory() {
    let cfg = config(0.25, 0.2, 4, 400, 21);
    let synth = Synthesizer::new(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.bin");
    write_shot_file(&path, &synth).unwrap();
    let file = ShotFile::open(&path).unwrap();
    assert_eq!(file.read_all().unwrap(), synthesize_run(&cfg).unwrap());
    same_results(&analyze(&synth, &options(4)).unwrap(), &analyze(&file, &options(4)).unwrap());
}

/// One-sample Kolmogorov–Smirnov statistic against the standard normal.
fn ks_standard_normal(mut xs: Vec<f64>) -> f64 {
    let n = Normal::standard();
    xs.sort_by(f64::total_cmp);
    let len = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = n.cdf(x);
            (f - i as f64 / len).abs().max(((i + 1) as f64 / len - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn warm_and_gainless_records_are_vacuum() {
    let mut warm = config(0.78, 0.5, 4, 300, 14);
    warm.warm = true;
    let gainless = config(0.0, 0.5, 4, 300, 15);
    for cfg in [warm, gainless] {
        let synth = Synthesizer::new(&cfg).unwrap();
        let tl = synth.timeline().clone();
        let mut x = Vec::new();
        for i in 0..cfg.n_shots {
            let shot = synth.shot(i);
            for kind in [WindowKind::Ase, WindowKind::Rase] {
                x.extend(tl.require(kind).unwrap().range().map(|k| shot.samples[k].re));
                x.extend(tl.require(kind).unwrap().range().map(|k| shot.samples[k].im));
            }
        }
        // Critical value for a 0.1% test is 1.95 / √n.
        let d = ks_standard_normal(x.clone());
        assert!(d < 1.95 / (x.len() as f64).sqrt(), "warm {} gainless KS D = {d}", cfg.warm);
    }
}

#[test]
fn interferometer_drift_is_referenced_out() {
    let mut cfg = config(0.78, 0.6, 4, 20_000, 31);
    cfg.lo_phase_drift = 1.5;
    let synth = Synthesizer::new(&cfg).unwrap();
    let reference = synth.timeline().require(WindowKind::Reference).unwrap().range();

    let mut shot = synth.shot(3);
    let raw_phase = shot.samples[reference.clone()].iter().sum::<num_complex::Complex64>().arg();
    let est = apply_phase_reference(&mut shot, reference.clone());
    assert!(est.applied);
    assert!((est.phase - raw_phase).abs() < 1e-12);
    let after = shot.samples[reference].iter().sum::<num_complex::Complex64>();
    assert!(after.im.abs() < 1e-9 * after.re.abs());

    // A common rotation of both windows leaves the phase-insensitive
    // cross-covariances unchanged, with or without referencing.
    let on = analyze(&synth, &options(4)).unwrap();
    assert_eq!(on.phase_referenced, cfg.n_shots);
    let off = analyze(
        &synth,
        &AnalysisOptions {
            phase_reference: false,
            ..options(4)
        },
    )
    .unwrap();
    let d = synth.modes()[3].measured.cov();
    for report in [&on, &off] {
        let m = &report.modes[3];
        for (i, j) in [(0, 2), (1, 3)] {
            assert!(((m.cov[i][j] - d[i][j]) / m.cov_se[i][j]).abs() < 4.0);
        }
    }
}

#[test]
fn global_gain_is_normalized_away() {
    let cfg = config(0.47, 0.3, 4, 600, 2);
    let synth = Synthesizer::new(&cfg).unwrap();
    let mut shots = synthesize_run(&cfg).unwrap();
    for s in &mut shots {
        for z in &mut s.samples {
            *z *= 3.0;
        }
    }
    let scaled = analyze(&shots, &options(4)).unwrap();
    let plain = analyze(&synth, &options(4)).unwrap();
    assert!((scaled.scale * 3.0 / plain.scale - 1.0).abs() < 1e-12);
    assert!((scaled.vacuum_variance_sum - plain.vacuum_variance_sum).abs() < 1e-9);
    assert!((scaled.vacuum_variance_sum - 2.0).abs() < 0.02);
}
