//! CSV and newline-delimited JSON output. Reals go out with 17 significant
//! digits so a table reloads to the same `f64` values.

use std::io::Write;

use serde::Serialize;

use crate::estimation::Flag;

use super::{ExperimentRow, SweepRow, SweepSummary};

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn real_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(";")
}

pub fn flag_list(flags: &[Flag]) -> String {
    flags
        .iter()
        .map(|f| f.as_str())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_experiment_csv<W: Write>(w: W, rows: &[ExperimentRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "receiver",
        "freq",
        "omega",
        "true_delta",
        "c_hat",
        "principal_delta",
        "delta_candidates",
        "std_error",
        "n_sets_used",
        "flags",
        "resolved_delta",
    ])?;
    for r in rows {
        out.write_record([
            r.receiver.to_string(),
            r.freq.to_string(),
            real(r.omega),
            opt_real(r.true_delta),
            opt_real(r.c_hat),
            opt_real(r.principal_delta),
            real_list(&r.delta_candidates),
            opt_real(r.std_error),
            r.n_sets_used.to_string(),
            flag_list(&r.flags),
            opt_real(r.resolved_delta),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "axis",
        "value",
        "trial",
        "seed",
        "n_parties",
        "n_sets",
        "freq",
        "omega",
        "true_delta",
        "c_hat",
        "principal_delta",
        "error",
        "predicted_sigma",
        "flags",
    ])?;
    for r in rows {
        out.write_record([
            r.axis.to_string(),
            real(r.value),
            r.trial.to_string(),
            r.seed.to_string(),
            r.n_parties.to_string(),
            r.n_sets.to_string(),
            r.freq.to_string(),
            real(r.omega),
            real(r.true_delta),
            opt_real(r.c_hat),
            opt_real(r.principal_delta),
            opt_real(r.error),
            opt_real(r.predicted_sigma),
            flag_list(&r.flags),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SweepSummary]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "value",
        "freq",
        "trials",
        "rmse",
        "mean_error",
        "predicted_sigma",
        "near_singular",
        "clamped",
    ])?;
    for r in rows {
        out.write_record([
            real(r.value),
            r.freq.to_string(),
            r.trials.to_string(),
            real(r.rmse),
            real(r.mean_error),
            opt_real(r.predicted_sigma),
            r.near_singular.to_string(),
            r.clamped.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(any(test, feature = "oracle"))]
pub fn write_checks_csv<W: Write>(w: W, checks: &[super::Check]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "passed", "observed", "expected"])?;
    for c in checks {
        out.write_record([
            c.name.clone(),
            c.passed.to_string(),
            real(c.observed),
            real(c.expected),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_records<W: Write, T: Serialize>(mut w: W, rows: &[T]) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_at_17_digits() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            std::f64::consts::PI,
        ] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn lists_and_flags() {
        assert_eq!(real_list(&[]), "");
        assert_eq!(
            flag_list(&[Flag::Clamped, Flag::NearSingular]),
            "clamped;near_singular"
        );
        assert_eq!(opt_real(None), "");
    }
}
