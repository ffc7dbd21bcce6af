//! Bell-basis measurement on two ensembles.
//!
//! Two backends are provided:
//!
//! - [`ideal_bell_project`] / [`ideal_bell_measure`]: projective measurement
//!   onto the four Bell states of the single-excitation subspace.
//! - [`physical_bell_protocol`]: two detection rounds. In each round both
//!   ensembles are anti-pumped, the photons interfere on a 50/50 beam
//!   splitter and two detectors `D1`, `D2` watch the output ports. Between
//!   the rounds a π pulse moves the `v` excitations into `h`.
//!
//! With ideal detectors a `ψ` input gives one click per round (same
//! detector for `ψ⁺`, different detectors for `ψ⁻`) while a `φ` input
//! gives a bunched photon pair in a single round.
//!
//! Detector sampling follows photon-number trajectories: the photon numbers
//! reaching each port are drawn by the Born rule, the state is projected on
//! that sector, and then losses and dark counts are drawn classically.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    beam_splitter, vacuum_state, EnsembleId, FockState, ModeRegister, Occupation, DEFAULT_CUTOFF,
};
use crate::qubit::{anti_pump, hadamard, pi_swap, prepare_logical_register, raman_rotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] =
        [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    pub fn name(self) -> &'static str {
        match self {
            Self::PhiPlus => "PhiPlus",
            Self::PhiMinus => "PhiMinus",
            Self::PsiPlus => "PsiPlus",
            Self::PsiMinus => "PsiMinus",
        }
    }

    /// Amplitudes over `|q_a q_b⟩` with index `2·q_a + q_b`.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::default();
        match self {
            Self::PhiPlus => [s, z, z, s],
            Self::PhiMinus => [s, z, z, -s],
            Self::PsiPlus => [z, s, s, z],
            Self::PsiMinus => [z, s, -s, z],
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which pair of Bell states the physical protocol certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementConfig {
    /// No pre-rotation; certifies `ψ⁺` and `ψ⁻`.
    Psi,
    /// Hadamard on both ensembles first; certifies `φ⁻` and `ψ⁻`.
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_count_prob: f64,
    #[serde(default)]
    pub number_resolving: bool,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl DetectorModel {
    pub fn new(
        efficiency: f64,
        dark_count_prob: f64,
        number_resolving: bool,
    ) -> std::result::Result<Self, String> {
        let model = Self {
            efficiency,
            dark_count_prob,
            number_resolving,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob: 0.0,
            number_resolving: false,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(format!("efficiency {} outside [0, 1]", self.efficiency));
        }
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(format!(
                "dark count probability {} outside [0, 1)",
                self.dark_count_prob
            ));
        }
        Ok(())
    }

    fn report(&self, raw: u8) -> u8 {
        if self.number_resolving {
            raw
        } else {
            raw.min(1)
        }
    }

    /// Draws the reading of one detector hit by `photons` photons in one round.
    pub fn sample_count<R: Rng + ?Sized>(&self, photons: u8, rng: &mut R) -> u8 {
        let detected = (0..photons)
            .filter(|_| rng.random::<f64>() < self.efficiency)
            .count() as u8;
        let dark = u8::from(rng.random::<f64>() < self.dark_count_prob);
        self.report(detected + dark)
    }

    /// Exact distribution of the reading for `photons` incident photons.
    pub fn count_distribution(&self, photons: u8) -> BTreeMap<u8, f64> {
        let (eta, d) = (self.efficiency, self.dark_count_prob);
        let n = i32::from(photons);
        let mut dist = BTreeMap::new();
        for k in 0..=photons {
            let binom = (0..k).fold(1.0, |acc, i| {
                acc * f64::from(photons - i) / f64::from(i + 1)
            });
            let pk = binom * eta.powi(i32::from(k)) * (1.0 - eta).powi(n - i32::from(k));
            for (dark, pd) in [(0u8, 1.0 - d), (1u8, d)] {
                let p = pk * pd;
                if p > 0.0 {
                    *dist.entry(self.report(k + dark)).or_insert(0.0) += p;
                }
            }
        }
        dist
    }
}

/// Detector readings of one round.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct RoundClicks {
    pub d1: u8,
    pub d2: u8,
}

impl RoundClicks {
    pub fn new(d1: u8, d2: u8) -> Self {
        Self { d1, d2 }
    }

    fn fired(&self) -> (bool, bool) {
        (self.d1 > 0, self.d2 > 0)
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ClickRecord {
    pub rounds: [RoundClicks; 2],
}

impl ClickRecord {
    pub fn new(first: RoundClicks, second: RoundClicks) -> Self {
        Self {
            rounds: [first, second],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Classification {
    PsiPlus,
    PsiMinus,
    PhiSubspace,
    Discard,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Self::PsiPlus => "PsiPlus",
            Self::PsiMinus => "PsiMinus",
            Self::PhiSubspace => "PhiSubspace",
            Self::Discard => "Discard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RoundShape {
    Empty,
    /// Exactly one detector fired, with a single count.
    Single(u8),
    /// Exactly one detector fired, reporting more than one photon.
    Multi,
    Both,
}

fn round_shape(r: &RoundClicks) -> RoundShape {
    match r.fired() {
        (false, false) => RoundShape::Empty,
        (true, true) => RoundShape::Both,
        (true, false) if r.d1 == 1 => RoundShape::Single(1),
        (false, true) if r.d2 == 1 => RoundShape::Single(2),
        _ => RoundShape::Multi,
    }
}

/// Maps a click record to a verdict.
///
/// Verdicts are stated in the measurement frame; use [`certified_outcome`]
/// to translate them into a Bell outcome of the unrotated input.
pub fn classify_clicks(clicks: &ClickRecord, _config: MeasurementConfig) -> Classification {
    use RoundShape::*;
    match (
        round_shape(&clicks.rounds[0]),
        round_shape(&clicks.rounds[1]),
    ) {
        (Single(a), Single(b)) if a == b => Classification::PsiPlus,
        (Single(_), Single(_)) => Classification::PsiMinus,
        (Single(_) | Multi, Empty) | (Empty, Single(_) | Multi) => Classification::PhiSubspace,
        _ => Classification::Discard,
    }
}

/// The Bell outcome certified by a verdict, if any.
pub fn certified_outcome(
    verdict: Classification,
    config: MeasurementConfig,
) -> Option<BellOutcome> {
    match (verdict, config) {
        (Classification::PsiPlus, MeasurementConfig::Psi) => Some(BellOutcome::PsiPlus),
        (Classification::PsiPlus, MeasurementConfig::Phi) => Some(BellOutcome::PhiMinus),
        (Classification::PsiMinus, _) => Some(BellOutcome::PsiMinus),
        _ => None,
    }
}

/// Result of projecting two ensembles on one Bell state.
#[derive(Debug, Clone)]
pub struct BellProjection {
    /// Born probability relative to the normalized input.
    pub prob: f64,
    /// Renormalized remainder with both ensembles in vacuum (zero if `prob == 0`).
    pub post: FockState,
    /// Weight outside the single-excitation subspace of the two ensembles.
    pub failure_mass: f64,
}

fn distinct_pair(state: &FockState, a: EnsembleId, b: EnsembleId) -> Result<[(usize, usize); 2]> {
    if a == b {
        return Err(Error::DuplicateEnsembleArgument);
    }
    Ok([
        state.register().ensemble_modes(a)?,
        state.register().ensemble_modes(b)?,
    ])
}

fn logical_bit(occ: &Occupation, (h, v): (usize, usize)) -> Option<usize> {
    match (occ[h], occ[v]) {
        (1, 0) => Some(0),
        (0, 1) => Some(1),
        _ => None,
    }
}

pub fn ideal_bell_project(
    state: &FockState,
    a: EnsembleId,
    b: EnsembleId,
    outcome: BellOutcome,
) -> Result<BellProjection> {
    let [ma, mb] = distinct_pair(state, a, b)?;
    let total = state.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let bell = outcome.amplitudes();
    let mut failure = 0.0;
    let projected =
        state.map_terms(
            |occ, amp, out| match (logical_bit(occ, ma), logical_bit(occ, mb)) {
                (Some(qa), Some(qb)) => {
                    let c = bell[2 * qa + qb].conj();
                    if c != Complex64::default() {
                        let mut rest = occ.clone();
                        for i in [ma.0, ma.1, mb.0, mb.1] {
                            rest[i] = 0;
                        }
                        *out.entry(rest).or_default() += c * amp;
                    }
                }
                _ => failure += amp.norm_sqr(),
            },
        );
    let weight = projected.norm_sqr();
    let prob = weight / total;
    let post = if weight == 0.0 {
        projected
    } else {
        projected.normalized()?
    };
    Ok(BellProjection {
        prob,
        post,
        failure_mass: failure / total,
    })
}

/// Samples a Bell outcome by the Born rule (renormalized over the four
/// outcomes) and returns `(outcome, prob, post)`.
pub fn ideal_bell_measure<R: Rng + ?Sized>(
    state: &FockState,
    a: EnsembleId,
    b: EnsembleId,
    rng: &mut R,
) -> Result<(BellOutcome, f64, FockState)> {
    let projections = BellOutcome::ALL
        .iter()
        .map(|&o| ideal_bell_project(state, a, b, o))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = projections.iter().map(|p| p.prob).sum();
    if total <= 0.0 {
        return Err(Error::NoBellSupport(a, b));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, p) in projections.iter().enumerate() {
        if p.prob == 0.0 {
            continue;
        }
        acc += p.prob;
        chosen = Some(i);
        if u < acc {
            break;
        }
    }
    let i = chosen.expect("positive total implies a candidate");
    let p = projections.into_iter().nth(i).expect("index in range");
    Ok((BellOutcome::ALL[i], p.prob, p.post))
}

/// Photon-number sector of one detection round.
#[derive(Debug, Clone)]
struct Sector {
    photons: [u8; 2],
    prob: f64,
    post: FockState,
}

/// Anti-pumps both ensembles, interferes the photons and splits the state
/// by the photon numbers reaching `D1` and `D2`. Photonic modes are consumed.
fn detection_round(state: &FockState, a: EnsembleId, b: EnsembleId) -> Result<Vec<Sector>> {
    let (s, pa) = anti_pump(state, a)?;
    let (s, pb) = anti_pump(&s, b)?;
    let s = s.apply_mode_unitary(&[&pa, &pb], &beam_splitter())?;
    let dist = s.occupation_distribution(&[&pa, &pb])?;
    let mut sectors = Vec::with_capacity(dist.len());
    for (key, _) in dist {
        let (prob, post) = s.project_modes(&[(&pa, key[0]), (&pb, key[1])])?;
        if prob == 0.0 {
            continue;
        }
        let post = post.consume_mode(&pa)?.consume_mode(&pb)?;
        sectors.push(Sector {
            photons: [key[0], key[1]],
            prob,
            post,
        });
    }
    Ok(sectors)
}

fn choose_sector<R: Rng + ?Sized>(sectors: Vec<Sector>, rng: &mut R) -> Sector {
    let total: f64 = sectors.iter().map(|s| s.prob).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let last = sectors.len() - 1;
    for (i, s) in sectors.into_iter().enumerate() {
        acc += s.prob;
        if u < acc || i == last {
            return s;
        }
    }
    unreachable!("sector list is nonempty")
}

fn pre_rotate(
    state: &FockState,
    a: EnsembleId,
    b: EnsembleId,
    config: MeasurementConfig,
) -> Result<FockState> {
    match config {
        MeasurementConfig::Psi => Ok(state.clone()),
        MeasurementConfig::Phi => {
            raman_rotation(&raman_rotation(state, a, &hadamard())?, b, &hadamard())
        }
    }
}

fn swap_rails(state: &FockState, a: EnsembleId, b: EnsembleId) -> Result<FockState> {
    raman_rotation(&raman_rotation(state, a, &pi_swap())?, b, &pi_swap())
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub clicks: ClickRecord,
    pub classification: Classification,
    pub bell_outcome: Option<BellOutcome>,
    /// Remaining state; both measured ensembles are in vacuum.
    pub post: FockState,
}

/// One sampled execution of the two-round detection protocol.
pub fn physical_bell_protocol<R: Rng + ?Sized>(
    state: &FockState,
    a: EnsembleId,
    b: EnsembleId,
    config: MeasurementConfig,
    detectors: &DetectorModel,
    rng: &mut R,
) -> Result<ProtocolRun> {
    distinct_pair(state, a, b)?;
    let rotated = pre_rotate(&state.normalized()?, a, b, config)?;

    let first = choose_sector(detection_round(&rotated, a, b)?, rng);
    let r1 = RoundClicks::new(
        detectors.sample_count(first.photons[0], rng),
        detectors.sample_count(first.photons[1], rng),
    );
    let swapped = swap_rails(&first.post, a, b)?;
    let second = choose_sector(detection_round(&swapped, a, b)?, rng);
    let r2 = RoundClicks::new(
        detectors.sample_count(second.photons[0], rng),
        detectors.sample_count(second.photons[1], rng),
    );

    let clicks = ClickRecord::new(r1, r2);
    let classification = classify_clicks(&clicks, config);
    Ok(ProtocolRun {
        clicks,
        classification,
        bell_outcome: certified_outcome(classification, config),
        post: second.post,
    })
}

/// One exactly weighted branch of the protocol.
#[derive(Debug, Clone)]
pub struct ProtocolBranch {
    pub photons: [[u8; 2]; 2],
    pub clicks: ClickRecord,
    pub classification: Classification,
    pub bell_outcome: Option<BellOutcome>,
    pub prob: f64,
    pub post: FockState,
}

/// Enumerates every photon-number sector and detector reading with its
/// exact probability. Branch probabilities sum to one.
pub fn enumerate_protocol_branches(
    state: &FockState,
    a: EnsembleId,
    b: EnsembleId,
    config: MeasurementConfig,
    detectors: &DetectorModel,
) -> Result<Vec<ProtocolBranch>> {
    distinct_pair(state, a, b)?;
    let rotated = pre_rotate(&state.normalized()?, a, b, config)?;
    let round_readings = |photons: [u8; 2]| {
        let d1 = detectors.count_distribution(photons[0]);
        let d2 = detectors.count_distribution(photons[1]);
        let mut out = Vec::new();
        for (&c1, &p1) in &d1 {
            for (&c2, &p2) in &d2 {
                out.push((RoundClicks::new(c1, c2), p1 * p2));
            }
        }
        out
    };

    let mut branches = Vec::new();
    for first in detection_round(&rotated, a, b)? {
        let swapped = swap_rails(&first.post, a, b)?;
        for second in detection_round(&swapped, a, b)? {
            let base = first.prob * second.prob;
            for (r1, p1) in round_readings(first.photons) {
                for (r2, p2) in round_readings(second.photons) {
                    let clicks = ClickRecord::new(r1, r2);
                    let classification = classify_clicks(&clicks, config);
                    branches.push(ProtocolBranch {
                        photons: [first.photons, second.photons],
                        clicks,
                        classification,
                        bell_outcome: certified_outcome(classification, config),
                        prob: base * p1 * p2,
                        post: second.post.clone(),
                    });
                }
            }
        }
    }
    Ok(branches)
}

/// Closed-form probability that the protocol certifies an outcome for a
/// Bell-state input.
///
/// After the frame rotation a `ψ`-type input sends one photon per round to
/// a single port; a `φ`-type input sends a bunched pair in one round and
/// nothing in the other. A round is accepted when exactly one detector
/// fires with a single count.
pub fn acceptance_probability(
    input: BellOutcome,
    config: MeasurementConfig,
    detectors: &DetectorModel,
) -> f64 {
    let (eta, d) = (detectors.efficiency, detectors.dark_count_prob);
    let quiet = 1.0 - d;
    let lost1 = 1.0 - eta;
    let lost2 = lost1 * lost1;
    let one_dark = 2.0 * d * quiet;

    let single_one_photon = if detectors.number_resolving {
        eta * quiet * quiet + lost1 * one_dark
    } else {
        eta * quiet + lost1 * one_dark
    };
    let single_zero_photons = one_dark;
    let single_two_photons = if detectors.number_resolving {
        2.0 * eta * lost1 * quiet * quiet + lost2 * one_dark
    } else {
        (1.0 - lost2) * quiet + lost2 * one_dark
    };

    let psi_like = match config {
        MeasurementConfig::Psi => matches!(input, BellOutcome::PsiPlus | BellOutcome::PsiMinus),
        MeasurementConfig::Phi => matches!(input, BellOutcome::PhiMinus | BellOutcome::PsiMinus),
    };
    if psi_like {
        single_one_photon * single_one_photon
    } else {
        single_two_photons * single_zero_photons
    }
}

/// Bell state on ensembles `a`, `b` written onto vacuum ensembles.
pub fn prepare_bell(
    state: &FockState,
    a: EnsembleId,
    b: EnsembleId,
    outcome: BellOutcome,
) -> Result<FockState> {
    prepare_logical_register(state, &[a, b], &outcome.amplitudes())
}

/// Per-case summary of [`verify_oracle_agreement`].
#[derive(Debug, Clone)]
pub struct AgreementCase {
    pub input: BellOutcome,
    pub config: MeasurementConfig,
    pub accepted_prob: f64,
    pub disagreeing_prob: f64,
    pub total_prob: f64,
}

/// Exhaustive check that every accepted branch of the physical protocol
/// with ideal detectors names the Bell state that was fed in.
pub fn verify_oracle_agreement() -> Result<Vec<AgreementCase>> {
    let (a, b) = (EnsembleId(1), EnsembleId(2));
    let mut cases = Vec::new();
    for config in [MeasurementConfig::Psi, MeasurementConfig::Phi] {
        for input in BellOutcome::ALL {
            let reg = ModeRegister::with_ensembles(&[a, b], DEFAULT_CUTOFF)?;
            let state = prepare_bell(&vacuum_state(reg), a, b, input)?;
            let branches =
                enumerate_protocol_branches(&state, a, b, config, &DetectorModel::ideal())?;
            let mut case = AgreementCase {
                input,
                config,
                accepted_prob: 0.0,
                disagreeing_prob: 0.0,
                total_prob: 0.0,
            };
            for br in &branches {
                case.total_prob += br.prob;
                if let Some(outcome) = br.bell_outcome {
                    case.accepted_prob += br.prob;
                    if outcome != input {
                        case.disagreeing_prob += br.prob;
                    }
                }
            }
            cases.push(case);
        }
    }
    Ok(cases)
}
