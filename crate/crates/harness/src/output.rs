//! JSON and CSV output.
//!
//! Statistics are printed in scientific notation with 17 significant
//! digits so every `f64` survives a round trip unchanged.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::experiment::Format;
use crate::runner::{Sweep, TrialStats};

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub mod sig17 {
    use serde::de::Error as _;
    use serde::ser::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if !x.is_finite() {
            return Err(S::Error::custom(format!("cannot serialize {x}")));
        }
        RawValue::from_string(super::format_f64(*x))
            .map_err(S::Error::custom)?
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let x = f64::deserialize(d)?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(D::Error::custom("non-finite number"))
        }
    }
}

pub mod sig17_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::sig17::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Report {
    Single(TrialStats),
    Sweep(Sweep),
}

impl Report {
    fn rows(&self) -> &[TrialStats] {
        match self {
            Self::Single(s) => std::slice::from_ref(s),
            Self::Sweep(s) => &s.rows,
        }
    }
}

pub fn to_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Column order of the CSV output, before the per-verdict columns.
pub const CSV_SPEC_COLUMNS: [&str; 12] = [
    "protocol",
    "state",
    "oracle",
    "backend",
    "config",
    "efficiency",
    "dark_count_prob",
    "number_resolving",
    "cnot",
    "oracle_impl",
    "trials",
    "seed",
];

/// Columns after the per-verdict columns.
pub const CSV_TAIL_COLUMNS: [&str; 3] = [
    "conditional_fidelity_mean",
    "conditional_fidelity_min",
    "wall_time_seconds",
];

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

/// Header, then one row per [`TrialStats`]: spec columns, counts, rate,
/// half-width, one `verdict_<name>` column per verdict, fidelities, time.
pub fn to_csv(report: &Report) -> Result<String> {
    let rows = report.rows();
    let mut w = csv::Writer::from_writer(Vec::new());
    let verdict_names: Vec<String> = rows
        .first()
        .map(|r| r.verdicts.keys().cloned().collect())
        .unwrap_or_default();

    let mut header: Vec<String> = CSV_SPEC_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(
        [
            "n_trials",
            "n_accepted",
            "acceptance_rate",
            "acceptance_halfwidth",
        ]
        .map(String::from),
    );
    header.extend(verdict_names.iter().map(|v| format!("verdict_{v}")));
    header.extend(CSV_TAIL_COLUMNS.map(String::from));
    w.write_record(&header).map_err(csv_error)?;

    let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
    for r in rows {
        let s = &r.spec;
        let mut rec = vec![
            enum_name(&s.protocol),
            s.state.clone().unwrap_or_default(),
            s.oracle.map(|o| o.name().to_string()).unwrap_or_default(),
            enum_name(&s.backend),
            enum_name(&s.config),
            format_f64(s.detectors.efficiency),
            format_f64(s.detectors.dark_count_prob),
            s.detectors.number_resolving.to_string(),
            enum_name(&s.cnot),
            enum_name(&s.oracle_impl),
            s.trials.to_string(),
            s.seed.to_string(),
            r.n_trials.to_string(),
            r.n_accepted.to_string(),
            format_f64(r.acceptance_rate),
            format_f64(r.acceptance_halfwidth),
        ];
        rec.extend(
            verdict_names
                .iter()
                .map(|v| r.verdicts.get(v).copied().unwrap_or(0).to_string()),
        );
        rec.push(opt(r.conditional_fidelity_mean));
        rec.push(opt(r.conditional_fidelity_min));
        rec.push(format_f64(r.wall_time_seconds));
        w.write_record(&rec).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report).map(|mut s| {
            s.push('\n');
            s
        }),
        Format::Csv => to_csv(report),
    }
}

/// Writes the report to `out`, or standard output when `None`.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<()> {
    let text = render(report, format)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| HarnessError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
