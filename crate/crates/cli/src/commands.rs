use std::fs;
use std::path::{Path, PathBuf};

use pilotsynth::config::SynthesisConfig;
use pilotsynth::correlation::CorrelationProfile;
use pilotsynth::evaluator::{
    channel_overlap_profiles, evaluate as evaluate_set, mixture_profiles, slot_savings, time_conversions,
    EvalOptions, EvalReport,
};
use pilotsynth::io::{read_subspace_cache, write_atomic, write_subspace_cache, PilotFile, PilotMetrics};
use pilotsynth::optimizer::{Method, PilotSet};
use pilotsynth::papr::PaprConfig;
use pilotsynth::subspace::ZeroTailSubspace;
use pilotsynth::Result;
use serde::Serialize;

use crate::output::{self, PROFILE_HEADER};
use crate::{channels, EvaluateArgs, InfoArgs, MethodArg, Switch, SynthesizeArgs};

#[derive(Serialize)]
struct RunReport<'a> {
    converged: bool,
    /// Set when the iteration budget ran out before convergence.
    warning: Option<&'static str>,
    iterations: usize,
    metrics: &'a PilotMetrics,
    evaluation: &'a EvalReport,
}

const NOT_CONVERGED: &str = "iteration budget exhausted before convergence; best set so far was kept";

fn subspace_for(config: &SynthesisConfig, cache: Option<&Path>) -> Result<ZeroTailSubspace> {
    let Some(path) = cache else {
        return config.build_subspace();
    };
    if path.exists() {
        let sub = read_subspace_cache(path)?;
        let carriers = config.placement()?.resolve(&config.dims()?)?;
        if sub.dims() == config.dims()? && sub.carriers() == carriers.as_slice() {
            return Ok(sub);
        }
        eprintln!("warning: subspace cache {} does not match the config, rebuilding", path.display());
    }
    let sub = config.build_subspace()?;
    write_subspace_cache(&sub, path)?;
    Ok(sub)
}

fn full_report(sub: &ZeroTailSubspace, config: &SynthesisConfig, set: &PilotSet, opts: &EvalOptions) -> Result<EvalReport> {
    let mut report = evaluate_set(&sub.dims(), set, &config.window, opts)?;
    report.time = Some(time_conversions(&sub.dims(), &config.window, config.grid.delta_f));
    Ok(report)
}

fn write_report(dir: &Path, stem: &str, report: &RunReport, table: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.json")), serde_json::to_string_pretty(report)?.as_bytes())?;
    output::write_text(&dir.join(format!("{stem}.txt")), table)
}

pub fn synthesize(args: SynthesizeArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)?;
    let mut config = SynthesisConfig::from_toml_str(&text)?;
    if let Some(seed) = args.seed {
        config.optimizer.seed = seed;
    }
    if let Some(n) = args.max_iters {
        config.optimizer.max_iters = n;
    }
    if let Some(m) = args.method {
        config.optimizer.method = match m {
            MethodArg::Maxpeak => Method::MaxPeak,
            MethodArg::Weighted => Method::Weighted,
        };
    }
    match args.papr {
        Some(Switch::On) if config.papr.is_none() => config.papr = Some(PaprConfig::default()),
        Some(Switch::Off) => config.papr = None,
        _ => {}
    }
    if let Some(dir) = args.out_dir {
        config.output.dir = dir;
    }
    config.validate()?;

    let sub = subspace_for(&config, args.subspace_cache.as_deref())?;
    eprintln!("subspace {} ready ({})", sub.dims(), if sub.is_dense() { "dense" } else { "factored" });
    let synthesis = config.run(&sub)?;
    let metrics = PilotMetrics::compute(&sub, &synthesis, &config.window)?;

    let dir = &config.output.dir;
    fs::create_dir_all(dir)?;
    PilotFile::new(&config, &synthesis, metrics.clone()).write(&dir.join("pilots.json"))?;
    let mut trace = Vec::new();
    synthesis.trace.write_csv(&mut trace)?;
    write_atomic(&dir.join("trace.csv"), &trace)?;

    let opts = EvalOptions { sanity_check: true, ..Default::default() };
    let report = full_report(&sub, &config, &synthesis.pilots, &opts)?;
    let warning = (!synthesis.converged).then_some(NOT_CONVERGED);
    let mut table = format!(
        "{} iterations, converged: {}\nworst side peak {:.2} -> {:.2} dB\n",
        synthesis.iterations, synthesis.converged, metrics.initial_worst_peak_db, metrics.worst_peak_db
    );
    table.push_str(&report.to_table());
    let run = RunReport { converged: synthesis.converged, warning, iterations: synthesis.iterations, metrics: &metrics, evaluation: &report };
    write_report(dir, "report", &run, &table)?;
    print!("{table}");
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let file = PilotFile::read(&args.pilots)?;
    let config = &file.header.config;
    let sub = subspace_for(config, args.subspace_cache.as_deref())?;
    let set = file.to_pilot_set(&sub)?;
    let n = set.len();
    let window = &config.window;
    let channels = match &args.channels {
        Some(path) => Some(channels::load(path, n, window)?),
        None => None,
    };
    let opts = EvalOptions {
        mixture_weights: args.mixture_weights.clone(),
        mixture_delays: None,
        channels: channels.clone(),
        sanity_check: true,
    };
    let report = full_report(&sub, config, &set, &opts)?;
    let initial = 10f64.powf(file.header.metrics.initial_worst_peak_db / 10.0);
    let metrics = PilotMetrics::for_set(&sub, &set, window, initial)?;
    let drift = metrics.max_abs_diff_db(&file.header.metrics);

    let dir = match &args.out_dir {
        Some(d) => d.clone(),
        None => args.pilots.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir)?;
    output::write_text(&dir.join("fd_magnitude.csv"), &output::fd_magnitude(&sub, &set))?;
    output::write_text(&dir.join("td_magnitude.csv"), &output::td_magnitude(&sub, &set))?;

    let tds = set.td_pilots();
    let mut corr = String::from(PROFILE_HEADER);
    for p in 0..n {
        output::push_profile(&mut corr, p, "acf", &CorrelationProfile::acf(&tds[p], window)?);
        for q in (0..n).filter(|&q| q != p) {
            output::push_profile(&mut corr, p, &format!("mcf-{q}"), &CorrelationProfile::cross(&tds[p], &tds[q], window)?);
        }
    }
    output::write_text(&dir.join("correlation_profiles.csv"), &corr)?;

    let weights = args.mixture_weights.clone().unwrap_or_else(|| vec![1.0; n]);
    let mut mix = String::from(PROFILE_HEADER);
    for (p, prof) in mixture_profiles(&set, window, &weights, None)?.iter().enumerate() {
        output::push_profile(&mut mix, p, "mixture", prof);
    }
    output::write_text(&dir.join("mixture_profiles.csv"), &mix)?;
    if let Some(ch) = &channels {
        let mut s = String::from(PROFILE_HEADER);
        for (p, prof) in channel_overlap_profiles(&set, ch, window)?.iter().enumerate() {
            output::push_profile(&mut s, p, "channel", prof);
        }
        output::write_text(&dir.join("channel_profiles.csv"), &s)?;
    }

    let mut table = format!("stored vs recomputed metrics: max difference {drift:.2e} dB\n");
    table.push_str(&report.to_table());
    let warning = (!file.header.converged).then_some(NOT_CONVERGED);
    let run = RunReport {
        converged: file.header.converged,
        warning,
        iterations: file.header.iterations,
        metrics: &metrics,
        evaluation: &report,
    };
    write_report(&dir, "eval_report", &run, &table)?;
    print!("{table}");
    Ok(())
}

pub fn info(args: InfoArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let config = if text.trim_start().starts_with('{') {
        PilotFile::from_json(&text)?.header.config
    } else {
        SynthesisConfig::from_toml_str(&text)?
    };
    let dims = config.dims()?;
    let t = time_conversions(&dims, &config.window, config.grid.delta_f);
    println!(
        "grid: n_fft {}, n_sc {}, t_zero {}, delta_f {} Hz",
        dims.n_fft, dims.n_sc, dims.t_zero, config.grid.delta_f
    );
    println!("window: t_min {}, t_max {}", config.window.t_min, config.window.t_max);
    println!("timing precision: {:.1} ns", t.precision_ns);
    println!("max initial clock offset: {:.3} us", t.max_offset_us);
    println!("zero tail: {:.2} us", t.tail_us);
    if config.n_pilots >= 3 {
        println!(
            "slot savings ({} pilots vs 3 pairs per slot): {:.1}%",
            config.n_pilots,
            slot_savings(config.n_pilots)
        );
    } else {
        println!("slot savings: n/a (fewer than 3 pilots)");
    }
    Ok(())
}
