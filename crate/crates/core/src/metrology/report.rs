//! CSV tables for trial, sweep and comparison reports. Displacements are in
//! nanometres, frequencies in hertz; a missing estimate is an empty field.

use std::fmt::Write;

use super::advantage::AdvantageReport;
use super::sweep::SweepReport;
use super::trials::TrialStatistics;

fn opt(v: Option<f64>, scale: f64) -> String {
    v.map(|x| format!("{}", x * scale)).unwrap_or_default()
}

fn quoted(s: &Option<String>) -> String {
    s.as_ref().map(|m| format!("\"{}\"", m.replace('"', "'"))).unwrap_or_default()
}

/// `truth_pp_nm,seed,pp_nm,f_hat_hz,components,events,failure`, one row per trial.
pub fn trials_csv(table: &[TrialStatistics]) -> String {
    let mut out = String::from("truth_pp_nm,seed,pp_nm,f_hat_hz,components,events,failure\n");
    for stats in table {
        for t in &stats.trials {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                stats.truth_pp * 1e9,
                t.seed,
                opt(t.amplitude_pp, 1e9),
                opt(t.f_hat, 1.0),
                t.n_components,
                t.events,
                quoted(&t.failure)
            )
            .unwrap();
        }
    }
    out
}

/// `f_set_hz,f_true_hz,f_hat_hz,pp_nm,relative_offset,failure`.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("f_set_hz,f_true_hz,f_hat_hz,pp_nm,relative_offset,failure\n");
    for p in &report.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.f_set,
            p.f_true,
            opt(p.f_hat, 1.0),
            opt(p.amplitude_pp, 1e9),
            opt(p.relative_offset, 1.0),
            quoted(&p.failure)
        )
        .unwrap();
    }
    out
}

/// `loss,background,mode,exposure_s,events,pp_nm,harmonics,harmonic_sum_pp_nm,fundamental_pp_nm`.
pub fn advantage_csv(report: &AdvantageReport) -> String {
    let mut out =
        String::from("loss,background,mode,exposure_s,events,pp_nm,harmonics,harmonic_sum_pp_nm,fundamental_pp_nm\n");
    for c in &report.conditions {
        for (mode, r) in [("quantum", &c.quantum), ("classical", &c.classical)] {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.condition.loss_b,
                c.condition.background_fraction,
                mode,
                r.exposure,
                r.events,
                r.pp * 1e9,
                r.harmonics,
                r.harmonic_sum_pp * 1e9,
                r.fundamental_pp * 1e9
            )
            .unwrap();
        }
    }
    out
}
