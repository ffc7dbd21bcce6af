//! Exact checks run before trials when `--self-check` is given.

use ensemble_core::bell::{acceptance_probability, verify_oracle_agreement, DetectorModel};
use ensemble_core::dj::{verify_oracle_equivalence, OracleId};
use ensemble_core::teleport::{
    chi_correction_frame, cnot_correction_frame, search_chi_corrections, search_cnot_corrections,
};

use crate::error::Result;

/// Returns one message per failed check; empty when everything holds.
pub fn run_self_check() -> Result<Vec<String>> {
    let mut failures = Vec::new();

    for case in verify_oracle_agreement()? {
        if case.disagreeing_prob != 0.0 {
            failures.push(format!(
                "bell {:?} {}: wrong outcome with probability {:e}",
                case.config, case.input, case.disagreeing_prob
            ));
        }
        let expected = acceptance_probability(case.input, case.config, &DetectorModel::ideal());
        if (case.accepted_prob - expected).abs() > 1e-12 {
            failures.push(format!(
                "bell {:?} {}: acceptance {} differs from {}",
                case.config, case.input, case.accepted_prob, expected
            ));
        }
    }

    for entry in search_chi_corrections()? {
        if entry.valid.first() != Some(&chi_correction_frame(entry.outcome)) {
            failures.push(format!(
                "resource correction for {} does not verify",
                entry.outcome
            ));
        }
    }

    for entry in search_cnot_corrections()? {
        let frozen = cnot_correction_frame(entry.outcome_target, entry.outcome_control);
        if entry.valid != [frozen] {
            failures.push(format!(
                "C-NOT correction for ({}, {}) does not verify",
                entry.outcome_target, entry.outcome_control
            ));
        }
    }

    for id in OracleId::ALL {
        let eq = verify_oracle_equivalence(id);
        if !eq.holds() {
            failures.push(format!(
                "oracle {id} decomposition deviates by {:e}",
                eq.max_deviation
            ));
        }
    }
    Ok(failures)
}

#[cfg(test)]
mod tests {
    #[test]
    fn self_check_passes() {
        assert_eq!(super::run_self_check().unwrap(), Vec::<String>::new());
    }
}
