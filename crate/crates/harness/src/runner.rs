//! Seeded trial execution, aggregation and parameter sweeps.

use std::collections::BTreeMap;
use std::time::Instant;

use ensemble_core::bell::{ideal_bell_measure, physical_bell_protocol, prepare_bell};
use ensemble_core::dj::run_dj;
use ensemble_core::fock::{vacuum_state, EnsembleId, ModeRegister, DEFAULT_CUTOFF};
use ensemble_core::qubit::{prepare_logical_register, subsystem_fidelity};
use ensemble_core::teleport::{
    chi_amplitudes, cnot_via_teleportation, matrix_cnot_reference, prepare_chi, prepare_resources,
    ChiEnsembles, MeasurementBackend,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::{Backend, ExperimentSpec, Plan, Protocol};

/// z-score of the reported 95% binomial interval.
pub const Z_95: f64 = 1.96;

/// Result of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub verdict: &'static str,
    pub accepted: bool,
    /// Fidelity of the accepted output with its ideal reference.
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub spec: ExperimentSpec,
    pub n_trials: u64,
    pub n_accepted: u64,
    #[serde(with = "crate::output::sig17")]
    pub acceptance_rate: f64,
    #[serde(with = "crate::output::sig17")]
    pub acceptance_halfwidth: f64,
    pub verdicts: BTreeMap<String, u64>,
    /// `None` when no trial was accepted.
    #[serde(with = "crate::output::sig17_opt")]
    pub conditional_fidelity_mean: Option<f64>,
    #[serde(with = "crate::output::sig17_opt")]
    pub conditional_fidelity_min: Option<f64>,
    #[serde(with = "crate::output::sig17")]
    pub wall_time_seconds: f64,
}

impl TrialStats {
    /// Copy with the wall time zeroed, for bit-exact comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_seconds: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Generator for trial `index`: the master seed selects the key and the
/// trial index the stream, so no trial depends on another.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Normal-approximation half-width `z·√(p(1 − p)/n)` of a binomial rate.
pub fn binomial_halfwidth(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = successes as f64 / n as f64;
    Z_95 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Every verdict name a protocol can produce; all appear in the output,
/// with zero counts where needed.
pub fn verdict_classes(protocol: Protocol) -> &'static [&'static str] {
    match protocol {
        Protocol::Bell | Protocol::Chi => &[
            "PhiPlus",
            "PhiMinus",
            "PsiPlus",
            "PsiMinus",
            "PhiSubspace",
            "Discard",
        ],
        Protocol::Cnot => &["Accepted", "PhiSubspace", "Discard"],
        Protocol::Dj => &["Constant", "Balanced", "Discard"],
    }
}

pub fn run_trial(plan: &Plan, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    match *plan {
        Plan::Bell { input, backend } => {
            let (a, b) = (EnsembleId(1), EnsembleId(2));
            let reg = ModeRegister::with_ensembles(&[a, b], DEFAULT_CUTOFF)?;
            let state = prepare_bell(&vacuum_state(reg), a, b, input)?;
            let (verdict, outcome) = match backend {
                MeasurementBackend::Ideal => {
                    let (outcome, _, _) = ideal_bell_measure(&state, a, b, rng)?;
                    (outcome.name(), Some(outcome))
                }
                MeasurementBackend::Physical { config, detectors } => {
                    let run = physical_bell_protocol(&state, a, b, config, &detectors, rng)?;
                    match run.bell_outcome {
                        Some(o) => (o.name(), Some(o)),
                        None => (run.classification.name(), None),
                    }
                }
            };
            Ok(TrialOutcome {
                verdict,
                accepted: outcome.is_some(),
                // Bell states are orthonormal
                fidelity: outcome.map(|o| if o == input { 1.0 } else { 0.0 }),
            })
        }
        Plan::Chi { backend } => {
            let ens = ChiEnsembles::standard();
            let resources =
                prepare_resources(&vacuum_state(ModeRegister::new(DEFAULT_CUTOFF)?), &ens)?;
            let (state, log) = prepare_chi(&resources, &ens, backend, rng)?;
            let record = &log.outcomes[0];
            if let Some(o) = record.outcome {
                let f = subsystem_fidelity(&state, &ens.chi_support(), &chi_amplitudes())?;
                Ok(TrialOutcome {
                    verdict: o.name(),
                    accepted: true,
                    fidelity: Some(f),
                })
            } else {
                Ok(rejected(
                    log.first_rejection().map_or("Discard", |c| c.name()),
                ))
            }
        }
        Plan::Cnot {
            control,
            target,
            backend,
        } => {
            let (c, t) = (EnsembleId(7), EnsembleId(8));
            let reg = ModeRegister::with_ensembles(&[c, t], DEFAULT_CUTOFF)?;
            let joint = [
                control[0] * target[0],
                control[0] * target[1],
                control[1] * target[0],
                control[1] * target[1],
            ];
            let state = prepare_logical_register(&vacuum_state(reg), &[c, t], &joint)?;
            let (out, log) = cnot_via_teleportation(&state, c, t, backend, rng)?;
            if !log.accepted {
                return Ok(rejected(
                    log.first_rejection().map_or("Discard", |c| c.name()),
                ));
            }
            let expected = matrix_cnot_reference(control, target);
            let f = subsystem_fidelity(&out.state, &[out.control_out, out.target_out], &expected)?;
            Ok(TrialOutcome {
                verdict: "Accepted",
                accepted: true,
                fidelity: Some(f),
            })
        }
        Plan::Dj { oracle, setup } => {
            let run = run_dj(oracle, &setup, rng)?;
            match (run.verdict, run.is_correct()) {
                (Some(v), Some(correct)) => Ok(TrialOutcome {
                    verdict: v.kind.name(),
                    accepted: true,
                    fidelity: Some(if correct { 1.0 } else { 0.0 }),
                }),
                _ => Ok(rejected("Discard")),
            }
        }
    }
}

fn rejected(verdict: &'static str) -> TrialOutcome {
    TrialOutcome {
        verdict,
        accepted: false,
        fidelity: None,
    }
}

/// Folds trial outcomes in index order.
pub fn aggregate(
    spec: &ExperimentSpec,
    outcomes: &[TrialOutcome],
    wall_time_seconds: f64,
) -> TrialStats {
    let mut verdicts: BTreeMap<String, u64> = verdict_classes(spec.protocol)
        .iter()
        .map(|v| (v.to_string(), 0))
        .collect();
    let mut n_accepted = 0u64;
    let mut fid_sum = 0.0;
    let mut fid_min: Option<f64> = None;
    for o in outcomes {
        *verdicts.entry(o.verdict.to_string()).or_default() += 1;
        if o.accepted {
            n_accepted += 1;
            if let Some(f) = o.fidelity {
                fid_sum += f;
                fid_min = Some(fid_min.map_or(f, |m| m.min(f)));
            }
        }
    }
    let n = outcomes.len() as u64;
    TrialStats {
        spec: spec.clone(),
        n_trials: n,
        n_accepted,
        acceptance_rate: n_accepted as f64 / n as f64,
        acceptance_halfwidth: binomial_halfwidth(n_accepted, n),
        verdicts,
        conditional_fidelity_mean: (n_accepted > 0).then(|| fid_sum / n_accepted as f64),
        conditional_fidelity_min: fid_min,
        wall_time_seconds,
    }
}

pub fn run_trials(spec: &ExperimentSpec) -> Result<TrialStats> {
    run_trials_with(spec, Execution::default())
}

pub fn run_trials_with(spec: &ExperimentSpec, execution: Execution) -> Result<TrialStats> {
    let plan = spec.plan()?;
    let start = Instant::now();
    let one = |i: u64| run_trial(&plan, &mut trial_rng(spec.seed, i));
    let outcomes: Vec<TrialOutcome> = match execution {
        Execution::Serial => (0..spec.trials).map(one).collect::<Result<_>>()?,
        Execution::Parallel => (0..spec.trials)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?,
    };
    Ok(aggregate(spec, &outcomes, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Efficiency,
    DarkCountProb,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::Efficiency => "efficiency",
            Self::DarkCountProb => "dark_count_prob",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// `start, start + step, …` up to and including `stop` (within 1e-9).
    pub fn points(&self) -> Result<Vec<f64>> {
        let Grid { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(HarnessError::config("grid values must be finite"));
        }
        if stop < start {
            return Err(HarnessError::config(format!(
                "grid stop {stop} is below start {start}"
            )));
        }
        if step <= 0.0 && stop > start {
            return Err(HarnessError::config("grid step must be positive"));
        }
        let n = if stop == start {
            1
        } else {
            ((stop - start) / step + 1e-9).floor() as usize + 1
        };
        Ok((0..n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub rows: Vec<TrialStats>,
}

/// One [`TrialStats`] row per grid point, every row using the base seed.
pub fn run_sweep(
    base: &ExperimentSpec,
    parameter: SweepParameter,
    grid: Grid,
    execution: Execution,
) -> Result<Sweep> {
    if base.backend != Backend::Physical {
        return Err(HarnessError::config(
            "sweeps vary detector parameters and need --backend physical",
        ));
    }
    let specs = grid
        .points()?
        .into_iter()
        .map(|v| {
            let mut spec = base.clone();
            match parameter {
                SweepParameter::Efficiency => spec.detectors.efficiency = v,
                SweepParameter::DarkCountProb => spec.detectors.dark_count_prob = v,
            }
            spec.plan().map(|_| spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = specs
        .iter()
        .map(|s| run_trials_with(s, execution))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { parameter, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfwidth_hand_case() {
        // p = 0.25, n = 400: 1.96 · √(0.1875 / 400) = 0.0424352447...
        let hw = binomial_halfwidth(100, 400);
        assert!((hw - 0.042_435_244_8).abs() < 1e-9, "{hw}");
        assert_eq!(binomial_halfwidth(0, 10), 0.0);
        assert_eq!(binomial_halfwidth(10, 10), 0.0);
    }

    #[test]
    fn grid_points() {
        let g = Grid {
            start: 0.5,
            stop: 1.0,
            step: 0.1,
        };
        assert_eq!(g.points().unwrap(), vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
        let single = Grid {
            start: 0.3,
            stop: 0.3,
            step: 0.1,
        };
        assert_eq!(single.points().unwrap(), vec![0.3]);
        let bad = Grid {
            start: 0.5,
            stop: 0.4,
            step: 0.1,
        };
        assert!(bad.points().is_err());
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        use rand::Rng;
        let a: u64 = trial_rng(1, 5).random();
        let _ = trial_rng(1, 4).random::<u64>();
        let b: u64 = trial_rng(1, 5).random();
        assert_eq!(a, b);
        assert_ne!(a, trial_rng(1, 6).random::<u64>());
    }

    #[test]
    fn aggregate_counts_and_fidelity() {
        let spec = ExperimentSpec::new(Protocol::Dj, 3, 0);
        let outcomes = [
            TrialOutcome {
                verdict: "Constant",
                accepted: true,
                fidelity: Some(1.0),
            },
            TrialOutcome {
                verdict: "Balanced",
                accepted: true,
                fidelity: Some(0.0),
            },
            rejected("Discard"),
        ];
        let stats = aggregate(&spec, &outcomes, 0.0);
        assert_eq!(stats.n_accepted, 2);
        assert_eq!(stats.verdicts.values().sum::<u64>(), 3);
        assert_eq!(stats.conditional_fidelity_mean, Some(0.5));
        assert_eq!(stats.conditional_fidelity_min, Some(0.0));
        let none = aggregate(&spec, &[rejected("Discard")], 0.0);
        assert_eq!(none.conditional_fidelity_mean, None);
        assert_eq!(none.verdicts["Constant"], 0);
    }
}
