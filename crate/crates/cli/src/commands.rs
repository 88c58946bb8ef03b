use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qvibe_core::estimate::{classical_pipeline, quantum_pipeline, Analysis};
use qvibe_core::metrology::{
    advantage_csv, qcrb_delay_std, run_advantage_experiment, run_amplitude_table, run_frequency_sweep,
    static_delay_study, sweep_csv, trials_csv, AdvantageSetup, Mode, QcrbQuery, Scenario, StaticDelayStudy,
};
use qvibe_core::{fringe::delay_to_displacement, GeometryFactor, TimestampStream};
use serde::Serialize;

use crate::config::{ScenarioConfig, StreamFormat};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

pub struct Context {
    pub config: ScenarioConfig,
    pub out: PathBuf,
    pub format: ReportFormat,
}

impl Context {
    fn scenario(&self) -> Scenario {
        let c = &self.config;
        Scenario {
            mode: c.mode,
            pair: c.pair,
            fringe: c.fringe,
            signal: c.signal.clone(),
            channel: c.channel,
            t_exp: c.t_exp,
            tick_ps: c.tick_ps,
            analysis: c.analysis,
        }
    }

    fn prepare_out(&self) -> CliResult<()> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Writes `<stem>.json` or, in csv format, `<stem>.csv` from `csv`.
    fn write_report<T: Serialize>(&self, stem: &str, value: &T, csv: impl FnOnce() -> String) -> CliResult<PathBuf> {
        match self.format {
            ReportFormat::Json => {
                let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
                self.write(&format!("{stem}.json"), &text)
            }
            ReportFormat::Csv => self.write(&format!("{stem}.csv"), &csv()),
        }
    }
}

fn io_at(path: &Path) -> impl Fn(qvibe_core::Error) -> CliError + '_ {
    move |e| CliError::from(e).context(path.display())
}

pub fn simulate(ctx: &Context) -> CliResult<()> {
    let scenario = ctx.scenario();
    let run = scenario.simulate(ctx.config.seed)?;
    ctx.prepare_out()?;
    let ext = ctx.config.stream_format.extension();
    for stream in [&run.first, &run.second] {
        let path = ctx.out.join(format!("{}.{ext}", stream.tag));
        match ctx.config.stream_format {
            StreamFormat::Text => stream.save_text(&path).map_err(io_at(&path))?,
            StreamFormat::Binary => stream.save_binary(&path).map_err(io_at(&path))?,
        }
        println!("{}: {} events", path.display(), stream.len());
    }
    let truth = ctx.write("truth.json", &run.truth.to_json()?)?;
    println!("{}", truth.display());
    Ok(())
}

pub fn estimate(ctx: &Context, first: &Path, second: &Path) -> CliResult<()> {
    let c = TimestampStream::load(first).map_err(io_at(first))?;
    let a = TimestampStream::load(second).map_err(io_at(second))?;
    let cfg = &ctx.config;
    let g: GeometryFactor = cfg.channel.geometry;
    let analysis: Analysis = match cfg.mode {
        Mode::Quantum => quantum_pipeline(&c, &a, &cfg.pair, g, &cfg.analysis)?,
        Mode::Classical => classical_pipeline(&c, &a, &cfg.fringe, g, &cfg.analysis)?,
    };
    ctx.prepare_out()?;
    let spectrum = match ctx.format {
        ReportFormat::Csv => {
            let path = ctx.out.join("spectrum.csv");
            let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            analysis.spectrum.write_csv(BufWriter::new(file)).map_err(io_at(&path))?;
            path
        }
        ReportFormat::Json => ctx.write("spectrum.json", &analysis.spectrum.to_json()?)?,
    };
    println!(
        "{}: {} grid frequencies, kappa {:.6e}",
        spectrum.display(),
        analysis.spectrum.grid.count,
        analysis.spectrum.threshold_kappa
    );
    match &analysis.reconstruction {
        Some(rec) => {
            let path = ctx.write("reconstruction.json", &rec.to_json()?)?;
            for (k, pp) in rec.components.iter().zip(&rec.component_pp) {
                println!("  {:.6} Hz  phase {:+.4} rad  {:.3} nm pp", k.f_hat, k.theta_hat, pp * 1e9);
            }
            println!("{}: displacement {:.3} nm pp", path.display(), rec.displacement_pp * 1e9);
        }
        None => println!("no component crossed the threshold"),
    }
    Ok(())
}

pub fn trials(ctx: &Context) -> CliResult<()> {
    let t =
        ctx.config.trials.as_ref().ok_or_else(|| CliError::config("the trials command needs a [trials] section"))?;
    if t.count < 2 {
        return Err(CliError::config("trials.count must be at least 2"));
    }
    let table = run_amplitude_table(&ctx.scenario(), t.frequency, &t.amplitudes, t.count, ctx.config.seed)?;
    ctx.prepare_out()?;
    let path = ctx.write_report("trials", &table, || trials_csv(&table))?;
    for s in &table {
        println!(
            "{:>6.1} nm: mean {:.2} nm  sigma {:.2} nm  accuracy {:.2} nm  f {:.4} +- {:.4} Hz  detected {:.0}%",
            s.truth_pp * 1e9,
            s.mean_pp * 1e9,
            s.std_pp * 1e9,
            s.accuracy * 1e9,
            s.mean_frequency,
            s.std_frequency,
            s.detection_fraction * 100.0
        );
    }
    println!("{}", path.display());
    Ok(())
}

pub fn sweep(ctx: &Context) -> CliResult<()> {
    let s = ctx.config.sweep.as_ref().ok_or_else(|| CliError::config("the sweep command needs a [sweep] section"))?;
    let report = run_frequency_sweep(
        &s.frequencies,
        s.amplitude,
        s.exposure,
        &ctx.scenario(),
        s.playback_scale,
        ctx.config.seed,
    )?;
    ctx.prepare_out()?;
    let path = ctx.write_report("sweep", &report, || sweep_csv(&report))?;
    for p in &report.points {
        match (p.f_hat, p.relative_offset) {
            (Some(f), Some(o)) => println!("{:>10.1} Hz -> {:.4} Hz  offset {:+.5}%", p.f_set, f, o * 100.0),
            _ => println!("{:>10.1} Hz -> undetected", p.f_set),
        }
    }
    println!("{}", path.display());
    Ok(())
}

pub fn advantage(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config;
    let a =
        cfg.advantage.as_ref().ok_or_else(|| CliError::config("the advantage command needs an [advantage] section"))?;
    if a.schedule.is_empty() {
        return Err(CliError::config("advantage schedule is empty; add `condition = loss, background` lines"));
    }
    let setup = AdvantageSetup {
        pair: cfg.pair,
        fringe: cfg.fringe,
        signal: cfg.signal.clone(),
        quantum_channel: cfg.channel,
        classical_channel: qvibe_core::ChannelModel { singles_rate: a.classical_singles, ..cfg.channel },
        quantum_exposure: a.quantum_exposure,
        classical_exposure: a.classical_exposure,
        tick_ps: cfg.tick_ps,
        analysis: cfg.analysis,
        equalize_counts: a.equalize,
        seed: cfg.seed,
    };
    let report = run_advantage_experiment(&setup, &a.schedule)?;
    ctx.prepare_out()?;
    let path = ctx.write_report("advantage", &report, || advantage_csv(&report))?;
    println!("truth {:.2} nm pp", report.truth_pp * 1e9);
    for c in &report.conditions {
        println!(
            "L={:.2} B={:.2}: quantum {:.2} nm ({} harmonics)  classical {:.2} nm ({} harmonics)",
            c.condition.loss_b,
            c.condition.background_fraction,
            c.quantum.pp * 1e9,
            c.quantum.harmonics,
            c.classical.pp * 1e9,
            c.classical.harmonics
        );
    }
    println!("note: {}", report.note);
    println!("{}", path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct QcrbReport {
    n_pairs: u64,
    delay_std_bound_s: f64,
    displacement_bound_m: f64,
    study: Option<StaticDelayStudy>,
}

pub fn qcrb(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config;
    let q = cfg.qcrb.as_ref().ok_or_else(|| CliError::config("the qcrb command needs a [qcrb] section"))?;
    let bound = qcrb_delay_std(&QcrbQuery { n_pairs: q.pairs, pair: cfg.pair })?;
    let study =
        if q.trials > 0 { Some(static_delay_study(&cfg.pair, q.pairs as f64, q.trials, cfg.seed)?) } else { None };
    let report = QcrbReport {
        n_pairs: q.pairs,
        delay_std_bound_s: bound,
        displacement_bound_m: delay_to_displacement(bound, GeometryFactor::Single),
        study,
    };
    ctx.prepare_out()?;
    let path = ctx.write_report("qcrb", &report, || {
        let mut s = String::from("n_pairs,bound_s,bound_m,trials,empirical_std_s,ratio,saturation\n");
        let (trials, std, ratio, sat) = match &report.study {
            Some(st) => {
                (st.trials.to_string(), st.empirical_std.to_string(), st.ratio.to_string(), st.saturation.to_string())
            }
            None => Default::default(),
        };
        s.push_str(&format!("{},{},{},{trials},{std},{ratio},{sat}\n", q.pairs, bound, report.displacement_bound_m));
        s
    })?;
    println!("N = {}: sigma_tau >= {:.4e} s ({:.4} nm at g = 1)", q.pairs, bound, report.displacement_bound_m * 1e9);
    if let Some(st) = &report.study {
        println!(
            "  {} trials: empirical {:.4e} s, ratio {:.3}, saturation {:.1}%",
            st.trials,
            st.empirical_std,
            st.ratio,
            st.saturation * 100.0
        );
    }
    println!("{}", path.display());
    Ok(())
}
