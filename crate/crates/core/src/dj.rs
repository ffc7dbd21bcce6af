//! Two-qubit Deutsch-Jozsa on a query ensemble and an auxiliary ensemble.
//!
//! The query starts in `(|0⟩ + |1⟩)/√2` and the auxiliary in
//! `(|0⟩ − |1⟩)/√2`. Each oracle `|x, y⟩ → |x, y ⊕ f(x)⟩` exists both as a
//! direct 4×4 unitary and as a sequence of query rotations and C-NOTs; the
//! C-NOTs can be applied directly or teleported through fresh resources.
//! A final Hadamard on the query leaves `|f(0) ⊕ f(1)⟩`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::DetectorModel;
use crate::error::Result;
use crate::fock::{h_label, vacuum_state, EnsembleId, FockState, ModeRegister, DEFAULT_CUTOFF};
use crate::qubit::{
    anti_pump, apply_logical_gate, hadamard, identity, kron, logical_view, pi_swap,
    prepare_logical_register, r_minus, r_plus, raman_rotation, LogicalQubitView, Mat2,
};
use crate::teleport::{
    cnot_matrix, cnot_via_teleportation_with, BackendMeasurer, BellMeasurer, MeasurementBackend,
    TeleportationLog,
};

pub const QUERY: EnsembleId = EnsembleId(9);
pub const AUXILIARY: EnsembleId = EnsembleId(10);

/// Tolerance for the decomposition check.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OracleId {
    /// `f(0) = f(1) = 0`
    F1,
    /// `f(0) = f(1) = 1`
    F2,
    /// `f(0) = 0, f(1) = 1`
    F3,
    /// `f(0) = 1, f(1) = 0`
    F4,
}

impl OracleId {
    pub const ALL: [OracleId; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];

    pub fn eval(self, x: u8) -> u8 {
        match (self, x) {
            (Self::F1, _) => 0,
            (Self::F2, _) => 1,
            (Self::F3, x) => x & 1,
            (Self::F4, x) => 1 - (x & 1),
        }
    }

    pub fn kind(self) -> DjKind {
        if self.eval(0) == self.eval(1) {
            DjKind::Constant
        } else {
            DjKind::Balanced
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::F3 => "F3",
            Self::F4 => "F4",
        }
    }
}

impl fmt::Display for OracleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(Self::F1),
            "F2" => Ok(Self::F2),
            "F3" => Ok(Self::F3),
            "F4" => Ok(Self::F4),
            _ => Err(format!("unknown oracle `{s}`, expected F1, F2, F3 or F4")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DjKind {
    Constant,
    Balanced,
}

impl DjKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "Constant",
            Self::Balanced => "Balanced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DjVerdict {
    pub kind: DjKind,
    /// Query qubit just before readout.
    pub query_state: LogicalQubitView,
}

/// `|x, y⟩ → |x, y ⊕ f(x)⟩` over basis index `2x + y`.
pub fn oracle_unitary(id: OracleId) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(4, 4, Complex64::default());
    for x in 0..2u8 {
        for y in 0..2u8 {
            let out = 2 * x + (y ^ id.eval(x));
            m[(usize::from(out), usize::from(2 * x + y))] = Complex64::new(1.0, 0.0);
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryRotation {
    RPlus,
    RMinus,
}

impl QueryRotation {
    pub fn matrix(self) -> Mat2 {
        match self {
            Self::RPlus => r_plus(),
            Self::RMinus => r_minus(),
        }
    }
}

/// One hardware step; C-NOTs use the query as control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStep {
    Cnot,
    RotateQuery(QueryRotation),
}

/// Steps in application order.
pub fn decomposition(id: OracleId) -> Vec<OracleStep> {
    use OracleStep::{Cnot, RotateQuery};
    use QueryRotation::{RMinus, RPlus};
    match id {
        OracleId::F1 => vec![],
        OracleId::F2 => vec![Cnot, RotateQuery(RPlus), Cnot, RotateQuery(RMinus)],
        OracleId::F3 => vec![Cnot],
        OracleId::F4 => vec![RotateQuery(RPlus), Cnot, RotateQuery(RMinus)],
    }
}

fn step_matrix(step: OracleStep) -> DMatrix<Complex64> {
    match step {
        OracleStep::Cnot => cnot_matrix(),
        OracleStep::RotateQuery(r) => kron(&[r.matrix(), identity()]),
    }
}

/// The decomposition multiplied out as a 4×4 matrix.
pub fn decomposition_matrix(id: OracleId) -> DMatrix<Complex64> {
    decomposition(id)
        .into_iter()
        .fold(DMatrix::identity(4, 4), |acc, step| step_matrix(step) * acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEquivalence {
    pub id: OracleId,
    /// `decomposed = phase · direct`
    pub phase: Complex64,
    /// Largest entrywise deviation after removing the phase.
    pub max_deviation: f64,
}

impl OracleEquivalence {
    pub fn holds(&self) -> bool {
        self.max_deviation <= EQUIVALENCE_TOLERANCE
            && (self.phase.norm() - 1.0).abs() <= EQUIVALENCE_TOLERANCE
    }
}

pub fn verify_oracle_equivalence(id: OracleId) -> OracleEquivalence {
    let direct = oracle_unitary(id);
    let decomposed = decomposition_matrix(id);
    let (r, c) = direct
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| (i % 4, i / 4))
        .expect("matrix is nonempty");
    let phase = decomposed[(r, c)] / direct[(r, c)];
    let max_deviation = (&decomposed - direct.map(|z| z * phase))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    OracleEquivalence {
        id,
        phase,
        max_deviation,
    }
}

/// Vacuum register holding the query and auxiliary ensembles.
pub fn dj_register() -> Result<FockState> {
    Ok(vacuum_state(ModeRegister::with_ensembles(
        &[QUERY, AUXILIARY],
        DEFAULT_CUTOFF,
    )?))
}

/// `(h_q + v_q)(h_a − v_a)|vac⟩/2`.
pub fn prepare_dj_input(
    state: &FockState,
    query: EnsembleId,
    aux: EnsembleId,
) -> Result<FockState> {
    let half = Complex64::new(0.5, 0.0);
    prepare_logical_register(state, &[query, aux], &[half, -half, half, -half])
}

/// How oracle C-NOTs are executed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CnotBackend {
    /// Logical C-NOT applied as a mode transformation.
    Direct,
    /// Teleported through fresh resource ensembles.
    Teleported(MeasurementBackend),
}

#[derive(Debug, Clone)]
pub struct OracleOutput {
    pub state: FockState,
    /// Ensemble currently holding the query qubit.
    pub query: EnsembleId,
    /// Ensemble currently holding the auxiliary qubit.
    pub aux: EnsembleId,
    pub log: TeleportationLog,
}

pub fn apply_oracle_direct(
    state: &FockState,
    id: OracleId,
    query: EnsembleId,
    aux: EnsembleId,
) -> Result<FockState> {
    apply_logical_gate(state, &[query, aux], &oracle_unitary(id))
}

/// Runs the decomposition. Teleported C-NOTs move the qubits onto new
/// ensembles; an unaccepted teleportation stops the sequence with the log
/// flagged.
pub fn apply_oracle_decomposed_with(
    state: &FockState,
    id: OracleId,
    query: EnsembleId,
    aux: EnsembleId,
    backend: CnotBackend,
    measurer: &mut dyn BellMeasurer,
) -> Result<OracleOutput> {
    let mut out = OracleOutput {
        state: state.clone(),
        query,
        aux,
        log: TeleportationLog::default(),
    };
    for step in decomposition(id) {
        match step {
            OracleStep::RotateQuery(r) => {
                out.state = raman_rotation(&out.state, out.query, &r.matrix())?
            }
            OracleStep::Cnot => match backend {
                CnotBackend::Direct => {
                    out.state =
                        apply_logical_gate(&out.state, &[out.query, out.aux], &cnot_matrix())?
                }
                CnotBackend::Teleported(_) => {
                    let (cnot, log) =
                        cnot_via_teleportation_with(&out.state, out.query, out.aux, measurer)?;
                    out.log.extend(log);
                    out.state = cnot.state;
                    if !out.log.accepted {
                        return Ok(out);
                    }
                    out.query = cnot.control_out;
                    out.aux = cnot.target_out;
                }
            },
        }
    }
    Ok(out)
}

pub fn apply_oracle_decomposed<R: Rng + ?Sized>(
    state: &FockState,
    id: OracleId,
    query: EnsembleId,
    aux: EnsembleId,
    backend: CnotBackend,
    rng: &mut R,
) -> Result<OracleOutput> {
    let measurement = match backend {
        CnotBackend::Teleported(m) => m,
        CnotBackend::Direct => MeasurementBackend::Ideal,
    };
    apply_oracle_decomposed_with(
        state,
        id,
        query,
        aux,
        backend,
        &mut BackendMeasurer::new(measurement, rng),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleRepresentation {
    Direct,
    Decomposed,
}

/// Final measurement of the query ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Readout {
    /// Projective `h`/`v` measurement.
    Ideal,
    /// Anti-pump the `h` rail and detect, then swap rails and repeat.
    Physical(DetectorModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DjSetup {
    pub representation: OracleRepresentation,
    pub cnot: CnotBackend,
    pub readout: Readout,
}

impl Default for DjSetup {
    fn default() -> Self {
        Self {
            representation: OracleRepresentation::Decomposed,
            cnot: CnotBackend::Direct,
            readout: Readout::Ideal,
        }
    }
}

/// Why a run produced no verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DjDiscard {
    /// A teleported C-NOT failed to certify a Bell outcome.
    Teleportation,
    /// The readout did not give exactly one click; counts of the `h` and
    /// `v` rounds.
    Readout { h_count: u8, v_count: u8 },
}

#[derive(Debug, Clone)]
pub struct DjRun {
    pub oracle: OracleId,
    pub verdict: Option<DjVerdict>,
    pub discard: Option<DjDiscard>,
    pub log: TeleportationLog,
}

impl DjRun {
    pub fn is_correct(&self) -> Option<bool> {
        self.verdict.map(|v| v.kind == self.oracle.kind())
    }
}

/// Photon number of `label` drawn by the Born rule; the mode is consumed.
fn sample_photons<R: Rng + ?Sized>(
    state: &FockState,
    label: &str,
    rng: &mut R,
) -> Result<(u8, FockState)> {
    let dist = state.occupation_distribution(&[label])?;
    let total: f64 = dist.values().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = 0;
    let last = dist.len().saturating_sub(1);
    for (i, (key, p)) in dist.iter().enumerate() {
        acc += p;
        if u < acc || i == last {
            chosen = key[0];
            break;
        }
    }
    let (_, post) = state.project_occupation(label, chosen)?;
    Ok((chosen, post.consume_mode(label)?))
}

fn read_query<R: Rng + ?Sized>(
    state: &FockState,
    query: EnsembleId,
    readout: Readout,
    rng: &mut R,
) -> Result<std::result::Result<DjKind, DjDiscard>> {
    match readout {
        Readout::Ideal => {
            let dist = state.occupation_distribution(&[&h_label(query)])?;
            let total: f64 = dist.values().sum();
            let p_h = dist.get(&vec![1]).copied().unwrap_or(0.0) / total;
            Ok(Ok(if rng.random::<f64>() < p_h {
                DjKind::Constant
            } else {
                DjKind::Balanced
            }))
        }
        Readout::Physical(detectors) => {
            let (s, photon) = anti_pump(state, query)?;
            let (n_h, s) = sample_photons(&s, &photon, rng)?;
            let h_count = detectors.sample_count(n_h, rng);
            let s = raman_rotation(&s, query, &pi_swap())?;
            let (s, photon) = anti_pump(&s, query)?;
            let (n_v, _) = sample_photons(&s, &photon, rng)?;
            let v_count = detectors.sample_count(n_v, rng);
            Ok(match (h_count > 0, v_count > 0) {
                (true, false) => Ok(DjKind::Constant),
                (false, true) => Ok(DjKind::Balanced),
                _ => Err(DjDiscard::Readout { h_count, v_count }),
            })
        }
    }
}

/// Prepares, queries the oracle once, applies the final Hadamard and reads
/// the query ensemble.
pub fn run_dj<R: Rng + ?Sized>(id: OracleId, setup: &DjSetup, rng: &mut R) -> Result<DjRun> {
    let input = prepare_dj_input(&dj_register()?, QUERY, AUXILIARY)?;
    let oracle = match setup.representation {
        OracleRepresentation::Direct => OracleOutput {
            state: apply_oracle_direct(&input, id, QUERY, AUXILIARY)?,
            query: QUERY,
            aux: AUXILIARY,
            log: TeleportationLog::default(),
        },
        OracleRepresentation::Decomposed => {
            apply_oracle_decomposed(&input, id, QUERY, AUXILIARY, setup.cnot, rng)?
        }
    };
    if !oracle.log.accepted {
        return Ok(DjRun {
            oracle: id,
            verdict: None,
            discard: Some(DjDiscard::Teleportation),
            log: oracle.log,
        });
    }
    let state = raman_rotation(&oracle.state, oracle.query, &hadamard())?;
    let query_state = logical_view(&state, oracle.query)?;
    let (verdict, discard) = match read_query(&state, oracle.query, setup.readout, rng)? {
        Ok(kind) => (Some(DjVerdict { kind, query_state }), None),
        Err(d) => (None, Some(d)),
    };
    Ok(DjRun {
        oracle: id,
        verdict,
        discard,
        log: oracle.log,
    })
}

/// `((−1)^f(0), (−1)^f(1))/√2`, the query qubit after the oracle.
pub fn expected_query_phases(id: OracleId) -> [Complex64; 2] {
    let sign = |x| {
        if id.eval(x) == 0 {
            FRAC_1_SQRT_2
        } else {
            -FRAC_1_SQRT_2
        }
    };
    [Complex64::new(sign(0), 0.0), Complex64::new(sign(1), 0.0)]
}
