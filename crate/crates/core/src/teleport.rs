//! C-NOT by gate teleportation through two GHZ resources.
//!
//! Six resource ensembles are used, named here by their role:
//!
//! 1. Two GHZ states `(hhh + vvv)/√2` are written on `(e1, e2, e3)` and
//!    `(e4, e5, e6)`.
//! 2. Hadamards on `e1, e2, e3` and a Bell measurement on `(e3, e4)`
//!    leave `(e1, e2, e5, e6)` in one of four states; a Pauli-frame
//!    correction turns each into
//!    `χ = [(h₁h₂ + v₁v₂)h₅h₆ + (h₁v₂ + v₁h₂)v₅v₆]|vac⟩/2`.
//! 3. Bell measurements on `(e1, target)` and `(e6, control)` teleport the
//!    inputs through `χ`. After a final Pauli-frame correction `e5` holds
//!    the control output and `e2` the target output.
//!
//! The correction tables are stored as data and re-derived by
//! [`search_chi_corrections`] and [`search_cnot_corrections`].

use std::collections::VecDeque;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{
    ideal_bell_measure, ideal_bell_project, physical_bell_protocol, BellOutcome, Classification,
    DetectorModel, MeasurementConfig,
};
use crate::error::{Error, Result};
use crate::fock::{vacuum_state, EnsembleId, FockState, ModeRegister, DEFAULT_CUTOFF};
use crate::qubit::{hadamard, prepare_logical_register, raman_rotation, subsystem_fidelity, Mat2};

/// Acceptance threshold used by the correction searches.
pub const SEARCH_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    Identity,
    /// `h ↔ v`
    BitFlip,
    /// `v → −v`
    PhaseFlip,
    /// Phase flip followed by bit flip.
    BitPhaseFlip,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [
        Self::Identity,
        Self::BitFlip,
        Self::PhaseFlip,
        Self::BitPhaseFlip,
    ];

    pub fn matrix(self) -> Mat2 {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::default());
        match self {
            Self::Identity => Mat2::new(o, z, z, o),
            Self::BitFlip => Mat2::new(z, o, o, z),
            Self::PhaseFlip => Mat2::new(o, z, z, -o),
            Self::BitPhaseFlip => Mat2::new(z, -o, o, z),
        }
    }

    pub fn is_identity(self) -> bool {
        self == Self::Identity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorrectionOp {
    pub target: EnsembleId,
    pub op: PauliOp,
}

pub fn apply_corrections(state: &FockState, ops: &[CorrectionOp]) -> Result<FockState> {
    ops.iter().try_fold(state.clone(), |s, c| {
        if c.op.is_identity() {
            Ok(s)
        } else {
            raman_rotation(&s, c.target, &c.op.matrix())
        }
    })
}

/// How Bell measurements inside a protocol are carried out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeasurementBackend {
    Ideal,
    Physical {
        config: MeasurementConfig,
        detectors: DetectorModel,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub pair: (EnsembleId, EnsembleId),
    pub outcome: Option<BellOutcome>,
    /// Click verdict, for physical measurements.
    pub classification: Option<Classification>,
    /// Born probability, for ideal measurements.
    pub prob: Option<f64>,
}

impl fmt::Display for MeasurementRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.pair;
        match (self.outcome, self.classification) {
            (Some(o), _) => write!(f, "({a},{b}) -> {o}"),
            (None, Some(c)) => write!(f, "({a},{b}) -> {}", c.name()),
            (None, None) => write!(f, "({a},{b}) -> ?"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportationLog {
    pub outcomes: Vec<MeasurementRecord>,
    pub corrections_applied: Vec<CorrectionOp>,
    pub accepted: bool,
}

impl Default for TeleportationLog {
    fn default() -> Self {
        Self {
            outcomes: Vec::new(),
            corrections_applied: Vec::new(),
            accepted: true,
        }
    }
}

impl TeleportationLog {
    pub fn extend(&mut self, other: TeleportationLog) {
        self.outcomes.extend(other.outcomes);
        self.corrections_applied.extend(other.corrections_applied);
        self.accepted &= other.accepted;
    }

    /// Verdict of the first measurement that failed to certify an outcome.
    pub fn first_rejection(&self) -> Option<Classification> {
        self.outcomes
            .iter()
            .find(|r| r.outcome.is_none())
            .and_then(|r| r.classification)
    }
}

/// Performs one Bell measurement and returns the record with the
/// post-measurement state (both ensembles in vacuum).
pub trait BellMeasurer {
    fn measure(
        &mut self,
        state: &FockState,
        a: EnsembleId,
        b: EnsembleId,
    ) -> Result<(MeasurementRecord, FockState)>;
}

pub struct BackendMeasurer<'a, R: Rng + ?Sized> {
    backend: MeasurementBackend,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> BackendMeasurer<'a, R> {
    pub fn new(backend: MeasurementBackend, rng: &'a mut R) -> Self {
        Self { backend, rng }
    }
}

impl<R: Rng + ?Sized> BellMeasurer for BackendMeasurer<'_, R> {
    fn measure(
        &mut self,
        state: &FockState,
        a: EnsembleId,
        b: EnsembleId,
    ) -> Result<(MeasurementRecord, FockState)> {
        match self.backend {
            MeasurementBackend::Ideal => {
                let (outcome, prob, post) = ideal_bell_measure(state, a, b, self.rng)?;
                let record = MeasurementRecord {
                    pair: (a, b),
                    outcome: Some(outcome),
                    classification: None,
                    prob: Some(prob),
                };
                Ok((record, post))
            }
            MeasurementBackend::Physical { config, detectors } => {
                let run = physical_bell_protocol(state, a, b, config, &detectors, self.rng)?;
                let record = MeasurementRecord {
                    pair: (a, b),
                    outcome: run.bell_outcome,
                    classification: Some(run.classification),
                    prob: None,
                };
                Ok((record, run.post))
            }
        }
    }
}

/// Ideal measurement forced onto a predetermined sequence of outcomes.
#[derive(Debug, Clone)]
pub struct ScriptedMeasurer {
    outcomes: VecDeque<BellOutcome>,
}

impl ScriptedMeasurer {
    pub fn new(outcomes: impl IntoIterator<Item = BellOutcome>) -> Self {
        Self {
            outcomes: outcomes.into_iter().collect(),
        }
    }
}

impl BellMeasurer for ScriptedMeasurer {
    fn measure(
        &mut self,
        state: &FockState,
        a: EnsembleId,
        b: EnsembleId,
    ) -> Result<(MeasurementRecord, FockState)> {
        let outcome = self.outcomes.pop_front().ok_or(Error::ScriptExhausted)?;
        let proj = ideal_bell_project(state, a, b, outcome)?;
        if proj.prob == 0.0 {
            return Err(Error::ImpossibleOutcome(outcome.name()));
        }
        let record = MeasurementRecord {
            pair: (a, b),
            outcome: Some(outcome),
            classification: None,
            prob: Some(proj.prob),
        };
        Ok((record, proj.post))
    }
}

/// The six resource ensembles of one teleported C-NOT, by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiEnsembles {
    pub e1: EnsembleId,
    pub e2: EnsembleId,
    pub e3: EnsembleId,
    pub e4: EnsembleId,
    pub e5: EnsembleId,
    pub e6: EnsembleId,
}

impl ChiEnsembles {
    /// Ensembles numbered 1 through 6.
    pub fn standard() -> Self {
        let e = EnsembleId;
        Self {
            e1: e(1),
            e2: e(2),
            e3: e(3),
            e4: e(4),
            e5: e(5),
            e6: e(6),
        }
    }

    /// Six consecutive ids not yet used by the register.
    pub fn fresh(register: &ModeRegister) -> Self {
        let base = register.fresh_ensemble_id().0;
        let e = |k| EnsembleId(base + k);
        Self {
            e1: e(0),
            e2: e(1),
            e3: e(2),
            e4: e(3),
            e5: e(4),
            e6: e(5),
        }
    }

    pub fn all(&self) -> [EnsembleId; 6] {
        [self.e1, self.e2, self.e3, self.e4, self.e5, self.e6]
    }

    /// The ensembles carrying `χ`, in the order `(e1, e2, e5, e6)`.
    pub fn chi_support(&self) -> [EnsembleId; 4] {
        [self.e1, self.e2, self.e5, self.e6]
    }
}

/// `(hhh + vvv)|vac⟩/√2` on three vacuum ensembles.
pub fn prepare_ghz(
    state: &FockState,
    e1: EnsembleId,
    e2: EnsembleId,
    e3: EnsembleId,
) -> Result<FockState> {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut amps = [Complex64::default(); 8];
    amps[0] = s;
    amps[7] = s;
    prepare_logical_register(state, &[e1, e2, e3], &amps)
}

/// Logical amplitudes of `χ` over `(e1, e2, e5, e6)`.
pub fn chi_amplitudes() -> [Complex64; 16] {
    let mut amps = [Complex64::default(); 16];
    for q1 in 0..2 {
        for q2 in 0..2 {
            let parity = q1 ^ q2;
            let index = (q1 << 3) | (q2 << 2) | (parity << 1) | parity;
            amps[index] = Complex64::new(0.5, 0.0);
        }
    }
    amps
}

/// Registers the six resource ensembles and writes both GHZ states.
pub fn prepare_resources(state: &FockState, ens: &ChiEnsembles) -> Result<FockState> {
    let mut s = state.clone();
    for e in ens.all() {
        s = s.with_ensemble(e)?;
    }
    let s = prepare_ghz(&s, ens.e1, ens.e2, ens.e3)?;
    prepare_ghz(&s, ens.e4, ens.e5, ens.e6)
}

const I: PauliOp = PauliOp::Identity;
const X: PauliOp = PauliOp::BitFlip;
const Z: PauliOp = PauliOp::PhaseFlip;
const Y: PauliOp = PauliOp::BitPhaseFlip;

fn outcome_index(o: BellOutcome) -> usize {
    BellOutcome::ALL
        .iter()
        .position(|&x| x == o)
        .expect("outcome listed in ALL")
}

/// Corrections on `(e1, e2, e5, e6)` after the `(e3, e4)` measurement,
/// indexed like [`BellOutcome::ALL`]. Minimal weight; the search finds 16
/// equivalent frames per outcome because `χ` has a 16-element stabilizer.
const CHI_TABLE: [[PauliOp; 4]; 4] = [
    [I, I, I, I], // PhiPlus
    [I, I, I, Z], // PhiMinus
    [I, X, I, I], // PsiPlus
    [I, I, X, Y], // PsiMinus
];

/// Corrections on `(e2, e5)` indexed by the `(e1, target)` outcome and then
/// the `(e6, control)` outcome.
const CNOT_TABLE: [[[PauliOp; 2]; 4]; 4] = [
    [[I, I], [I, Z], [X, X], [X, Y]], // PhiPlus
    [[Z, Z], [Z, I], [Y, Y], [Y, X]], // PhiMinus
    [[X, I], [X, Z], [I, X], [I, Y]], // PsiPlus
    [[Y, Z], [Y, I], [Z, Y], [Z, X]], // PsiMinus
];

/// Pauli frame on `(e1, e2, e5, e6)` for one `(e3, e4)` outcome.
pub fn chi_correction_frame(outcome: BellOutcome) -> [PauliOp; 4] {
    CHI_TABLE[outcome_index(outcome)]
}

pub fn chi_correction(outcome: BellOutcome, ens: &ChiEnsembles) -> Vec<CorrectionOp> {
    ens.chi_support()
        .into_iter()
        .zip(chi_correction_frame(outcome))
        .map(|(target, op)| CorrectionOp { target, op })
        .collect()
}

/// Pauli frame on `(e2, e5)` for one pair of teleportation outcomes.
pub fn cnot_correction_frame(
    outcome_target: BellOutcome,
    outcome_control: BellOutcome,
) -> [PauliOp; 2] {
    CNOT_TABLE[outcome_index(outcome_target)][outcome_index(outcome_control)]
}

pub fn cnot_correction(
    outcome_target: BellOutcome,
    outcome_control: BellOutcome,
    ens: &ChiEnsembles,
) -> Vec<CorrectionOp> {
    let [op2, op5] = cnot_correction_frame(outcome_target, outcome_control);
    vec![
        CorrectionOp {
            target: ens.e2,
            op: op2,
        },
        CorrectionOp {
            target: ens.e5,
            op: op5,
        },
    ]
}

fn retire_pair(state: &FockState, a: EnsembleId, b: EnsembleId) -> Result<FockState> {
    state.retire_ensemble(a)?.retire_ensemble(b)
}

/// Hadamards on `e1, e2, e3`, Bell measurement on `(e3, e4)` and, when an
/// outcome is certified, the frame correction producing `χ`.
///
/// Expects both GHZ resources to be in place. The measured ensembles are
/// retired. On an uncertified physical run no correction is applied and
/// the log is flagged.
pub fn prepare_chi_with(
    state: &FockState,
    ens: &ChiEnsembles,
    measurer: &mut dyn BellMeasurer,
) -> Result<(FockState, TeleportationLog)> {
    let (s, record) = chi_uncorrected(state, ens, measurer)?;
    let mut log = TeleportationLog::default();
    let outcome = record.outcome;
    log.outcomes.push(record);
    match outcome {
        Some(o) => {
            let ops = chi_correction(o, ens);
            let s = apply_corrections(&s, &ops)?;
            log.corrections_applied.extend(ops);
            Ok((s, log))
        }
        None => {
            log.accepted = false;
            Ok((s, log))
        }
    }
}

fn chi_uncorrected(
    state: &FockState,
    ens: &ChiEnsembles,
    measurer: &mut dyn BellMeasurer,
) -> Result<(FockState, MeasurementRecord)> {
    let mut s = state.clone();
    for e in [ens.e1, ens.e2, ens.e3] {
        s = raman_rotation(&s, e, &hadamard())?;
    }
    let (record, post) = measurer.measure(&s, ens.e3, ens.e4)?;
    Ok((retire_pair(&post, ens.e3, ens.e4)?, record))
}

pub fn prepare_chi<R: Rng + ?Sized>(
    state: &FockState,
    ens: &ChiEnsembles,
    backend: MeasurementBackend,
    rng: &mut R,
) -> Result<(FockState, TeleportationLog)> {
    prepare_chi_with(state, ens, &mut BackendMeasurer::new(backend, rng))
}

/// Where the C-NOT output lives after teleportation.
#[derive(Debug, Clone)]
pub struct CnotOutput {
    pub state: FockState,
    pub control_out: EnsembleId,
    pub target_out: EnsembleId,
}

struct RawTeleport {
    state: FockState,
    log: TeleportationLog,
    outcomes: Option<(BellOutcome, BellOutcome)>,
}

fn teleport_uncorrected(
    state: &FockState,
    control: EnsembleId,
    target: EnsembleId,
    ens: &ChiEnsembles,
    measurer: &mut dyn BellMeasurer,
) -> Result<RawTeleport> {
    let mut log = TeleportationLog::default();

    let (first, post) = measurer.measure(state, ens.e1, target)?;
    let post = retire_pair(&post, ens.e1, target)?;
    let o_target = first.outcome;
    log.outcomes.push(first);
    let Some(o_target) = o_target else {
        log.accepted = false;
        return Ok(RawTeleport {
            state: post,
            log,
            outcomes: None,
        });
    };

    let (second, post) = measurer.measure(&post, ens.e6, control)?;
    let post = retire_pair(&post, ens.e6, control)?;
    let o_control = second.outcome;
    log.outcomes.push(second);
    let Some(o_control) = o_control else {
        log.accepted = false;
        return Ok(RawTeleport {
            state: post,
            log,
            outcomes: None,
        });
    };
    Ok(RawTeleport {
        state: post,
        log,
        outcomes: Some((o_target, o_control)),
    })
}

/// Teleports `control` and `target` through `χ` (already on
/// `ens.chi_support()`) and applies the outcome-dependent frame.
pub fn teleported_cnot_with(
    state: &FockState,
    control: EnsembleId,
    target: EnsembleId,
    ens: &ChiEnsembles,
    measurer: &mut dyn BellMeasurer,
) -> Result<(CnotOutput, TeleportationLog)> {
    let raw = teleport_uncorrected(state, control, target, ens, measurer)?;
    let mut log = raw.log;
    let state = match raw.outcomes {
        Some((ot, oc)) => {
            let ops = cnot_correction(ot, oc, ens);
            let s = apply_corrections(&raw.state, &ops)?;
            log.corrections_applied.extend(ops);
            s
        }
        None => raw.state,
    };
    Ok((
        CnotOutput {
            state,
            control_out: ens.e5,
            target_out: ens.e2,
        },
        log,
    ))
}

pub fn teleported_cnot<R: Rng + ?Sized>(
    state: &FockState,
    control: EnsembleId,
    target: EnsembleId,
    ens: &ChiEnsembles,
    backend: MeasurementBackend,
    rng: &mut R,
) -> Result<(CnotOutput, TeleportationLog)> {
    teleported_cnot_with(
        state,
        control,
        target,
        ens,
        &mut BackendMeasurer::new(backend, rng),
    )
}

/// Full C-NOT: allocates fresh resources, prepares `χ` and teleports.
///
/// Stops at the first uncertified measurement (log flagged, no further
/// measurements); the returned state is then not a C-NOT output.
pub fn cnot_via_teleportation_with(
    state: &FockState,
    control: EnsembleId,
    target: EnsembleId,
    measurer: &mut dyn BellMeasurer,
) -> Result<(CnotOutput, TeleportationLog)> {
    let ens = ChiEnsembles::fresh(state.register());
    let s = prepare_resources(state, &ens)?;
    let (chi, mut log) = prepare_chi_with(&s, &ens, measurer)?;
    if !log.accepted {
        return Ok((
            CnotOutput {
                state: chi,
                control_out: control,
                target_out: target,
            },
            log,
        ));
    }
    let (out, tlog) = teleported_cnot_with(&chi, control, target, &ens, measurer)?;
    log.extend(tlog);
    Ok((out, log))
}

pub fn cnot_via_teleportation<R: Rng + ?Sized>(
    state: &FockState,
    control: EnsembleId,
    target: EnsembleId,
    backend: MeasurementBackend,
    rng: &mut R,
) -> Result<(CnotOutput, TeleportationLog)> {
    cnot_via_teleportation_with(
        state,
        control,
        target,
        &mut BackendMeasurer::new(backend, rng),
    )
}

/// C-NOT as a 4×4 matrix over `|control target⟩`.
pub fn cnot_matrix() -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(4, 4, Complex64::default());
    let one = Complex64::new(1.0, 0.0);
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(3, 2)] = one;
    m[(2, 3)] = one;
    m
}

/// C-NOT on a two-qubit vector `|control target⟩` without Fock machinery.
pub fn cnot_reference_state(input: [Complex64; 4]) -> [Complex64; 4] {
    [input[0], input[1], input[3], input[2]]
}

pub fn matrix_cnot_reference(control: [Complex64; 2], target: [Complex64; 2]) -> [Complex64; 4] {
    cnot_reference_state([
        control[0] * target[0],
        control[0] * target[1],
        control[1] * target[0],
        control[1] * target[1],
    ])
}

/// Valid frames for one outcome, minimal weight first.
#[derive(Debug, Clone)]
pub struct ChiSearchEntry {
    pub outcome: BellOutcome,
    pub prob: f64,
    pub valid: Vec<[PauliOp; 4]>,
}

fn frame_weight(frame: &[PauliOp]) -> usize {
    frame.iter().filter(|op| !op.is_identity()).count()
}

fn all_frames<const N: usize>() -> Vec<[PauliOp; N]> {
    let mut frames: Vec<[PauliOp; N]> = (0..4usize.pow(N as u32))
        .map(|mut code| {
            let mut frame = [PauliOp::Identity; N];
            for slot in frame.iter_mut().rev() {
                *slot = PauliOp::ALL[code % 4];
                code /= 4;
            }
            frame
        })
        .collect();
    frames.sort_by_key(|f| frame_weight(f));
    frames
}

fn standard_resources(extra: &[EnsembleId]) -> Result<FockState> {
    let reg = ModeRegister::with_ensembles(extra, DEFAULT_CUTOFF)?;
    prepare_resources(&vacuum_state(reg), &ChiEnsembles::standard())
}

/// Brute-force search over all 256 Pauli frames on `(e1, e2, e5, e6)` for
/// each `(e3, e4)` outcome.
pub fn search_chi_corrections() -> Result<Vec<ChiSearchEntry>> {
    let ens = ChiEnsembles::standard();
    let resources = standard_resources(&[])?;
    let target = chi_amplitudes();
    let mut entries = Vec::new();
    for outcome in BellOutcome::ALL {
        let (post, record) =
            chi_uncorrected(&resources, &ens, &mut ScriptedMeasurer::new([outcome]))?;
        let mut valid = Vec::new();
        for frame in all_frames::<4>() {
            let ops: Vec<_> = ens
                .chi_support()
                .into_iter()
                .zip(frame)
                .map(|(target, op)| CorrectionOp { target, op })
                .collect();
            let corrected = apply_corrections(&post, &ops)?;
            if subsystem_fidelity(&corrected, &ens.chi_support(), &target)?
                >= 1.0 - SEARCH_TOLERANCE
            {
                valid.push(frame);
            }
        }
        entries.push(ChiSearchEntry {
            outcome,
            prob: record.prob.unwrap_or(0.0),
            valid,
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone)]
pub struct CnotSearchEntry {
    pub outcome_target: BellOutcome,
    pub outcome_control: BellOutcome,
    pub valid: Vec<[PauliOp; 2]>,
}

/// The 16 product inputs built from `{|0⟩, |1⟩, |+⟩, |+i⟩}`; together they
/// span the operator space, so a frame valid on all of them is unique up
/// to global phase.
pub fn tomographic_inputs() -> Vec<([Complex64; 2], [Complex64; 2])> {
    let s = FRAC_1_SQRT_2;
    let c = |re, im| Complex64::new(re, im);
    let singles = [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(s, 0.0), c(s, 0.0)],
        [c(s, 0.0), c(0.0, s)],
    ];
    let mut out = Vec::new();
    for a in singles {
        for b in singles {
            out.push((a, b));
        }
    }
    out
}

/// Resource state with `control` on ensemble 7 and `target` on ensemble 8
/// and `χ` ready on ensembles 1, 2, 5, 6.
pub fn standard_teleport_input(control_target: &[Complex64; 4]) -> Result<FockState> {
    let (c, t) = (EnsembleId(7), EnsembleId(8));
    let ens = ChiEnsembles::standard();
    let s = standard_resources(&[c, t])?;
    let (chi, _) = prepare_chi_with(&s, &ens, &mut ScriptedMeasurer::new([BellOutcome::PhiPlus]))?;
    prepare_logical_register(&chi, &[c, t], control_target)
}

/// Brute-force search over the 16 frames on `(e2, e5)` for every pair of
/// teleportation outcomes, validated on [`tomographic_inputs`].
pub fn search_cnot_corrections() -> Result<Vec<CnotSearchEntry>> {
    let ens = ChiEnsembles::standard();
    let (c, t) = (EnsembleId(7), EnsembleId(8));
    let inputs: Vec<_> = tomographic_inputs()
        .into_iter()
        .map(|(ca, ta)| {
            let joint = [ca[0] * ta[0], ca[0] * ta[1], ca[1] * ta[0], ca[1] * ta[1]];
            (joint, matrix_cnot_reference(ca, ta))
        })
        .collect();
    let prepared = inputs
        .iter()
        .map(|(joint, _)| standard_teleport_input(joint))
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::new();
    for ot in BellOutcome::ALL {
        for oc in BellOutcome::ALL {
            let raws = prepared
                .iter()
                .map(|s| teleport_uncorrected(s, c, t, &ens, &mut ScriptedMeasurer::new([ot, oc])))
                .collect::<Result<Vec<_>>>()?;
            let mut valid = Vec::new();
            for frame in all_frames::<2>() {
                let ops = [
                    CorrectionOp {
                        target: ens.e2,
                        op: frame[0],
                    },
                    CorrectionOp {
                        target: ens.e5,
                        op: frame[1],
                    },
                ];
                let mut ok = true;
                for (raw, (_, expected)) in raws.iter().zip(&inputs) {
                    let out = apply_corrections(&raw.state, &ops)?;
                    if subsystem_fidelity(&out, &[ens.e5, ens.e2], expected)?
                        < 1.0 - SEARCH_TOLERANCE
                    {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    valid.push(frame);
                }
            }
            entries.push(CnotSearchEntry {
                outcome_target: ot,
                outcome_control: oc,
                valid,
            });
        }
    }
    Ok(entries)
}
