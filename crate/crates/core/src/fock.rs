//! Truncated Fock-space states over a register of bosonic modes.
//!
//! Every atomic ensemble contributes two collective modes (`h` and `v`);
//! photonic modes are appended on demand when an excitation is read out.
//! A [`FockState`] is a sparse map from occupation vectors to complex
//! amplitudes. States are immutable: every operation returns a new state.
//!
//! Ladder conventions:
//!
//! ```text
//! a† |n⟩ = √(n+1) |n+1⟩
//! a  |n⟩ = √n     |n-1⟩
//! ```
//!
//! Passive mode transformations act on creation operators as
//! `a†_i → Σ_j U_ji a†_j`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;
/// Maximum entry-wise deviation of `U†U` from the identity.
pub const UNITARY_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_CUTOFF: u8 = 2;

/// Occupation numbers, one per register mode.
pub type Occupation = Vec<u8>;

/// Identifier of one atomic ensemble (owner of an `h` and a `v` mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EnsembleId(pub u32);

impl fmt::Display for EnsembleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    AtomicH,
    AtomicV,
    Photonic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub label: String,
    pub kind: ModeKind,
    pub owner: Option<EnsembleId>,
}

/// Ordered list of modes sharing one occupation cutoff.
#[derive(Debug, Clone)]
pub struct ModeRegister {
    modes: Vec<Mode>,
    cutoff: u8,
    retired: BTreeSet<EnsembleId>,
    next_photon: u32,
}

impl PartialEq for ModeRegister {
    fn eq(&self, other: &Self) -> bool {
        self.cutoff == other.cutoff && self.modes == other.modes
    }
}

pub fn h_label(e: EnsembleId) -> String {
    format!("h{}", e.0)
}

pub fn v_label(e: EnsembleId) -> String {
    format!("v{}", e.0)
}

impl ModeRegister {
    pub fn new(cutoff: u8) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::CutoffTooSmall(cutoff));
        }
        Ok(Self {
            modes: Vec::new(),
            cutoff,
            retired: BTreeSet::new(),
            next_photon: 0,
        })
    }

    /// Register with one `h`/`v` pair per listed ensemble, in order.
    pub fn with_ensembles(ids: &[EnsembleId], cutoff: u8) -> Result<Self> {
        let mut reg = Self::new(cutoff)?;
        for &id in ids {
            reg.add_ensemble(id)?;
        }
        Ok(reg)
    }

    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.modes.iter().map(|m| m.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn contains_ensemble(&self, id: EnsembleId) -> bool {
        self.modes.iter().any(|m| m.owner == Some(id))
    }

    /// Registered ensembles in register order.
    pub fn ensembles(&self) -> Vec<EnsembleId> {
        let mut seen = Vec::new();
        for m in &self.modes {
            if let Some(id) = m.owner {
                if !seen.contains(&id) {
                    seen.push(id);
                }
            }
        }
        seen
    }

    pub fn is_retired(&self, id: EnsembleId) -> bool {
        self.retired.contains(&id)
    }

    /// Smallest id larger than every ensemble ever registered here.
    pub fn fresh_ensemble_id(&self) -> EnsembleId {
        let live = self.modes.iter().filter_map(|m| m.owner.map(|e| e.0));
        let dead = self.retired.iter().map(|e| e.0);
        EnsembleId(live.chain(dead).max().map_or(1, |m| m + 1))
    }

    /// Indices of the `(h, v)` modes of an ensemble.
    pub fn ensemble_modes(&self, id: EnsembleId) -> Result<(usize, usize)> {
        if self.retired.contains(&id) {
            return Err(Error::RetiredEnsemble(id));
        }
        let find = |kind| {
            self.modes
                .iter()
                .position(|m| m.owner == Some(id) && m.kind == kind)
        };
        match (find(ModeKind::AtomicH), find(ModeKind::AtomicV)) {
            (Some(h), Some(v)) => Ok((h, v)),
            _ => Err(Error::UnknownEnsemble(id)),
        }
    }

    pub fn add_ensemble(&mut self, id: EnsembleId) -> Result<()> {
        if self.retired.contains(&id) {
            return Err(Error::RetiredEnsemble(id));
        }
        if self.contains_ensemble(id) {
            return Err(Error::DuplicateEnsemble(id));
        }
        self.push_mode(h_label(id), ModeKind::AtomicH, Some(id))?;
        self.push_mode(v_label(id), ModeKind::AtomicV, Some(id))
    }

    fn push_mode(
        &mut self,
        label: String,
        kind: ModeKind,
        owner: Option<EnsembleId>,
    ) -> Result<()> {
        if self.modes.iter().any(|m| m.label == label) {
            return Err(Error::DuplicateMode(label));
        }
        self.modes.push(Mode { label, kind, owner });
        Ok(())
    }

    fn push_photon(&mut self) -> String {
        loop {
            let label = format!("p{}", self.next_photon);
            self.next_photon += 1;
            if self.index_of(&label).is_err() {
                self.modes.push(Mode {
                    label: label.clone(),
                    kind: ModeKind::Photonic,
                    owner: None,
                });
                return label;
            }
        }
    }
}

/// Normalization status of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormTag {
    Normalized,
    Unnormalized { weight: f64 },
}

/// Sparse superposition of occupation-number basis states.
#[derive(Debug, Clone)]
pub struct FockState {
    register: Arc<ModeRegister>,
    amps: BTreeMap<Occupation, Complex64>,
    normalized: bool,
    truncated_weight: f64,
}

/// The collective vacuum of a register.
pub fn vacuum_state(register: ModeRegister) -> FockState {
    let zeros = vec![0; register.len()];
    FockState {
        register: Arc::new(register),
        amps: BTreeMap::from([(zeros, Complex64::new(1.0, 0.0))]),
        normalized: true,
        truncated_weight: 0.0,
    }
}

pub fn inner_product(a: &FockState, b: &FockState) -> Result<Complex64> {
    a.inner(b)
}

fn factorial_sqrt(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product::<f64>().sqrt()
}

fn prune(amps: &mut BTreeMap<Occupation, Complex64>) {
    amps.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
}

/// Largest entry-wise deviation of `U†U` from the identity.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn check_unitary(u: &DMatrix<Complex64>, expected: usize) -> Result<()> {
    if u.nrows() != expected || u.ncols() != expected {
        return Err(Error::MatrixShape {
            rows: u.nrows(),
            cols: u.ncols(),
            expected,
        });
    }
    let deviation = unitarity_deviation(u);
    if deviation > UNITARY_TOLERANCE || !deviation.is_finite() {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

impl FockState {
    /// Builds a state from explicit terms. The result is tagged unnormalized.
    pub fn from_terms<I>(register: ModeRegister, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let register = Arc::new(register);
        let mut amps = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.len() != register.len() {
                return Err(Error::OccupationLength {
                    expected: register.len(),
                    actual: occ.len(),
                });
            }
            if let Some(&bad) = occ.iter().find(|&&n| n > register.cutoff) {
                return Err(Error::OccupationOutOfRange {
                    occupation: bad,
                    cutoff: register.cutoff,
                });
            }
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(Error::NonFiniteAmplitude);
            }
            *amps.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        prune(&mut amps);
        Ok(Self {
            register,
            amps,
            normalized: false,
            truncated_weight: 0.0,
        })
    }

    pub fn zero(register: ModeRegister) -> Self {
        Self {
            register: Arc::new(register),
            amps: BTreeMap::new(),
            normalized: false,
            truncated_weight: 0.0,
        }
    }

    fn derive(&self, amps: BTreeMap<Occupation, Complex64>, normalized: bool, lost: f64) -> Self {
        let mut amps = amps;
        prune(&mut amps);
        debug_assert!(amps.values().all(|a| a.re.is_finite() && a.im.is_finite()));
        Self {
            register: Arc::clone(&self.register),
            amps,
            normalized,
            truncated_weight: self.truncated_weight + lost,
        }
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn num_terms(&self) -> usize {
        self.amps.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.amps.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_tag(&self) -> NormTag {
        if self.normalized {
            NormTag::Normalized
        } else {
            NormTag::Unnormalized {
                weight: self.norm_sqr(),
            }
        }
    }

    /// Probability weight discarded by cutoff truncation over this state's history.
    pub fn truncated_weight(&self) -> f64 {
        self.truncated_weight
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let amps = self.amps.iter().map(|(k, a)| (k.clone(), a / n)).collect();
        Ok(self.derive(amps, true, 0.0))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let amps = self
            .amps
            .iter()
            .map(|(k, a)| (k.clone(), a * factor))
            .collect();
        self.derive(amps, false, 0.0)
    }

    /// Sum of two states on the same register (unnormalized).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_register(other)?;
        let mut amps = self.amps.clone();
        for (k, a) in &other.amps {
            *amps.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Ok(self.derive(amps, false, other.truncated_weight))
    }

    fn same_register(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.register, &other.register) || *self.register == *other.register {
            Ok(())
        } else {
            Err(Error::RegisterMismatch)
        }
    }

    pub fn apply_creation(&self, label: &str) -> Result<Self> {
        let idx = self.register.index_of(label)?;
        let cutoff = self.register.cutoff;
        let mut out = BTreeMap::new();
        let mut lost = 0.0;
        for (occ, amp) in &self.amps {
            let n = occ[idx];
            if n >= cutoff {
                lost += amp.norm_sqr();
                continue;
            }
            let mut next = occ.clone();
            next[idx] = n + 1;
            out.insert(next, amp * f64::from(n + 1).sqrt());
        }
        Ok(self.derive(out, false, lost))
    }

    pub fn apply_annihilation(&self, label: &str) -> Result<Self> {
        let idx = self.register.index_of(label)?;
        let mut out = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let n = occ[idx];
            if n == 0 {
                continue;
            }
            let mut next = occ.clone();
            next[idx] = n - 1;
            out.insert(next, amp * f64::from(n).sqrt());
        }
        Ok(self.derive(out, false, 0.0))
    }

    /// Applies a passive linear transformation to the listed modes.
    ///
    /// Each term is rewritten as a product of creation operators acting on
    /// the vacuum, every creation operator is substituted by its image under
    /// `matrix`, and the resulting polynomial is expanded back into Fock
    /// amplitudes. Output terms exceeding the cutoff are dropped and their
    /// weight is added to [`truncated_weight`](Self::truncated_weight).
    pub fn apply_mode_unitary(&self, labels: &[&str], matrix: &DMatrix<Complex64>) -> Result<Self> {
        let k = labels.len();
        let mut idx = Vec::with_capacity(k);
        for &label in labels {
            let i = self.register.index_of(label)?;
            if idx.contains(&i) {
                return Err(Error::RepeatedMode(label.to_string()));
            }
            idx.push(i);
        }
        check_unitary(matrix, k)?;

        let zero = Complex64::new(0.0, 0.0);
        let mut expanded: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let ns: Vec<u8> = idx.iter().map(|&i| occ[i]).collect();
            let norm: f64 = ns.iter().map(|&n| factorial_sqrt(n)).product();
            let mut poly: BTreeMap<Vec<u8>, Complex64> =
                BTreeMap::from([(vec![0u8; k], amp / norm)]);
            for (i, &n) in ns.iter().enumerate() {
                for _ in 0..n {
                    let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
                    for (mono, c) in &poly {
                        for j in 0..k {
                            let u = matrix[(j, i)];
                            if u == zero {
                                continue;
                            }
                            let mut m = mono.clone();
                            m[j] += 1;
                            *next.entry(m).or_insert(zero) += c * u;
                        }
                    }
                    poly = next;
                }
            }
            for (mono, c) in poly {
                let weight: f64 = mono.iter().map(|&n| factorial_sqrt(n)).product();
                let mut out = occ.clone();
                for (pos, &i) in idx.iter().enumerate() {
                    out[i] = mono[pos];
                }
                *expanded.entry(out).or_insert(zero) += c * weight;
            }
        }

        let cutoff = self.register.cutoff;
        let mut lost = 0.0;
        let mut kept = BTreeMap::new();
        for (occ, amp) in expanded {
            if idx.iter().any(|&i| occ[i] > cutoff) {
                lost += amp.norm_sqr();
            } else {
                kept.insert(occ, amp);
            }
        }
        let normalized = self.normalized && lost == 0.0;
        Ok(self.derive(kept, normalized, lost))
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same_register(other)?;
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, true)
        } else {
            (&other.amps, &self.amps, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in small {
            if let Some(b) = large.get(k) {
                acc += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(acc)
    }

    /// `|⟨a|b⟩|² / (‖a‖² ‖b‖²)`; global phase and normalization are ignored.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let denom = self.norm_sqr() * other.norm_sqr();
        if denom == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.inner(other)?.norm_sqr() / denom)
    }

    /// Restriction to terms where the given modes hold the given occupations.
    ///
    /// Returns the Born probability (relative to the normalized input) and
    /// the renormalized post-measurement state, or the zero state when the
    /// probability vanishes.
    pub fn project_modes(&self, pattern: &[(&str, u8)]) -> Result<(f64, Self)> {
        let mut resolved = Vec::with_capacity(pattern.len());
        for &(label, n) in pattern {
            resolved.push((self.register.index_of(label)?, n));
        }
        let total = self.norm_sqr();
        let kept: BTreeMap<_, _> = self
            .amps
            .iter()
            .filter(|(occ, _)| resolved.iter().all(|&(i, n)| occ[i] == n))
            .map(|(k, a)| (k.clone(), *a))
            .collect();
        let weight: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        if total == 0.0 || weight == 0.0 {
            return Ok((0.0, self.derive(BTreeMap::new(), false, 0.0)));
        }
        let scale = weight.sqrt();
        let amps = kept.into_iter().map(|(k, a)| (k, a / scale)).collect();
        Ok((weight / total, self.derive(amps, true, 0.0)))
    }

    pub fn project_occupation(&self, label: &str, n: u8) -> Result<(f64, Self)> {
        self.project_modes(&[(label, n)])
    }

    /// Distribution of the summed occupation over a subset of modes.
    pub fn total_excitation(&self, labels: &[&str]) -> Result<BTreeMap<u32, f64>> {
        if labels.is_empty() {
            return Err(Error::UnknownMode(String::new()));
        }
        let idx = labels
            .iter()
            .map(|l| self.register.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        let total = self.norm_sqr();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let mut dist = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let n: u32 = idx.iter().map(|&i| u32::from(occ[i])).sum();
            *dist.entry(n).or_insert(0.0) += amp.norm_sqr() / total;
        }
        Ok(dist)
    }

    /// Excitation distribution over both modes of one ensemble.
    pub fn ensemble_excitation(&self, e: EnsembleId) -> Result<BTreeMap<u32, f64>> {
        self.total_excitation(&[&h_label(e), &v_label(e)])
    }

    /// Marginal distribution of the occupations of the listed modes.
    pub fn occupation_distribution(&self, labels: &[&str]) -> Result<BTreeMap<Vec<u8>, f64>> {
        let idx = labels
            .iter()
            .map(|l| self.register.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        let total = self.norm_sqr();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let mut dist = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let key: Vec<u8> = idx.iter().map(|&i| occ[i]).collect();
            *dist.entry(key).or_insert(0.0) += amp.norm_sqr() / total;
        }
        Ok(dist)
    }

    /// Rebuilds the state on a modified register. `remap` turns an old
    /// occupation vector into a new one.
    fn with_register<F>(&self, register: ModeRegister, remap: F) -> Self
    where
        F: Fn(&Occupation) -> Occupation,
    {
        let mut amps = BTreeMap::new();
        for (occ, amp) in &self.amps {
            amps.insert(remap(occ), *amp);
        }
        Self {
            register: Arc::new(register),
            amps,
            normalized: self.normalized,
            truncated_weight: self.truncated_weight,
        }
    }

    /// Adds an ensemble (in vacuum) to the register.
    pub fn with_ensemble(&self, id: EnsembleId) -> Result<Self> {
        let mut reg = (*self.register).clone();
        reg.add_ensemble(id)?;
        Ok(self.with_register(reg, |occ| {
            let mut o = occ.clone();
            o.extend([0, 0]);
            o
        }))
    }

    /// Appends a fresh photonic mode in vacuum and returns its label.
    pub fn with_photon_mode(&self) -> (Self, String) {
        let mut reg = (*self.register).clone();
        let label = reg.push_photon();
        let state = self.with_register(reg, |occ| {
            let mut o = occ.clone();
            o.push(0);
            o
        });
        (state, label)
    }

    /// Drops a mode that is empty in every term.
    pub fn remove_mode(&self, label: &str) -> Result<Self> {
        let idx = self.register.index_of(label)?;
        if self.amps.keys().any(|occ| occ[idx] != 0) {
            return Err(Error::ModeNotEmpty(label.to_string()));
        }
        let mut reg = (*self.register).clone();
        reg.modes.remove(idx);
        Ok(self.with_register(reg, |occ| {
            let mut o = occ.clone();
            o.remove(idx);
            o
        }))
    }

    /// Drops a mode whose occupation is the same in every term (a detected
    /// or lost photon that no longer takes part in the superposition).
    pub fn consume_mode(&self, label: &str) -> Result<Self> {
        let idx = self.register.index_of(label)?;
        let mut values = self.amps.keys().map(|occ| occ[idx]);
        if let Some(first) = values.next() {
            if values.any(|n| n != first) {
                return Err(Error::ModeNotEmpty(label.to_string()));
            }
        }
        let mut reg = (*self.register).clone();
        reg.modes.remove(idx);
        Ok(self.with_register(reg, |occ| {
            let mut o = occ.clone();
            o.remove(idx);
            o
        }))
    }

    /// Removes a measured ensemble (which must be in vacuum) and marks its id
    /// as retired so it cannot be registered again.
    pub fn retire_ensemble(&self, id: EnsembleId) -> Result<Self> {
        let (h, v) = self.register.ensemble_modes(id)?;
        if self.amps.keys().any(|occ| occ[h] != 0 || occ[v] != 0) {
            return Err(Error::EnsembleNotVacuum(id));
        }
        let mut reg = (*self.register).clone();
        let (hi, lo) = (h.max(v), h.min(v));
        reg.modes.remove(hi);
        reg.modes.remove(lo);
        reg.retired.insert(id);
        Ok(self.with_register(reg, |occ| {
            let mut o = occ.clone();
            o.remove(hi);
            o.remove(lo);
            o
        }))
    }

    /// Swaps the occupations of two modes in every term.
    pub(crate) fn swap_modes(&self, a: usize, b: usize) -> Self {
        let amps = self
            .amps
            .iter()
            .map(|(occ, amp)| {
                let mut o = occ.clone();
                o.swap(a, b);
                (o, *amp)
            })
            .collect();
        self.derive(amps, self.normalized, 0.0)
    }

    /// Term-wise map over the raw amplitude table; used by the logical layer.
    pub(crate) fn map_terms<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&Occupation, Complex64, &mut BTreeMap<Occupation, Complex64>),
    {
        let mut out = BTreeMap::new();
        for (occ, amp) in &self.amps {
            f(occ, *amp, &mut out);
        }
        self.derive(out, false, 0.0)
    }

    pub(crate) fn mark_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amps.is_empty() {
            return write!(f, "0");
        }
        let labels: Vec<&str> = self.register.labels().collect();
        for (i, (occ, amp)) in self.amps.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.4}{:+.4}i)", amp.re, amp.im)?;
            let mut any = false;
            for (label, &n) in labels.iter().zip(occ) {
                if n > 0 {
                    any = true;
                    if n == 1 {
                        write!(f, " {label}")?;
                    } else {
                        write!(f, " {label}^{n}")?;
                    }
                }
            }
            if !any {
                write!(f, " vac")?;
            }
        }
        Ok(())
    }
}

/// 50/50 beam splitter with `d₁ = (a_A + a_B)/√2`, `d₂ = (a_A − a_B)/√2`.
///
/// As a creation-operator map: `a_A† → (d₁† + d₂†)/√2`,
/// `a_B† → (d₁† − d₂†)/√2`. The output ports reuse the input mode slots
/// (`A` slot becomes `d₁`, `B` slot becomes `d₂`).
pub fn beam_splitter() -> DMatrix<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_mode_register() -> ModeRegister {
        ModeRegister::with_ensembles(&[EnsembleId(1)], DEFAULT_CUTOFF).unwrap()
    }

    #[test]
    fn register_rejects_small_cutoff_and_duplicates() {
        assert_eq!(ModeRegister::new(1).unwrap_err(), Error::CutoffTooSmall(1));
        let mut reg = two_mode_register();
        assert_eq!(
            reg.add_ensemble(EnsembleId(1)).unwrap_err(),
            Error::DuplicateEnsemble(EnsembleId(1))
        );
        assert_eq!(reg.ensemble_modes(EnsembleId(1)).unwrap(), (0, 1));
        assert!(reg.ensemble_modes(EnsembleId(2)).is_err());
    }

    #[test]
    fn vacuum_has_single_unit_term() {
        let s = vacuum_state(two_mode_register());
        assert_eq!(s.num_terms(), 1);
        assert_eq!(s.amplitude(&[0, 0]), c(1.0));
        assert_eq!(s.norm(), 1.0);
        assert_eq!(s.norm_tag(), NormTag::Normalized);
        assert_eq!(
            s.total_excitation(&["h1", "v1"]).unwrap(),
            BTreeMap::from([(0, 1.0)])
        );
    }

    #[test]
    fn creation_ladder_factors_and_cutoff() {
        let s = vacuum_state(two_mode_register());
        let one = s.apply_creation("h1").unwrap();
        assert_eq!(one.amplitude(&[1, 0]), c(1.0));
        let two = one.apply_creation("h1").unwrap();
        assert!((two.amplitude(&[2, 0]) - c(2f64.sqrt())).norm() < 1e-15);
        assert_eq!(two.truncated_weight(), 0.0);
        let three = two.apply_creation("h1").unwrap();
        assert!(three.is_zero());
        assert!((three.truncated_weight() - 2.0).abs() < 1e-12);
        assert!(matches!(three.norm_tag(), NormTag::Unnormalized { .. }));
    }

    #[test]
    fn annihilation_ladder_factors() {
        let s = vacuum_state(two_mode_register());
        assert!(s.apply_annihilation("h1").unwrap().is_zero());
        let one = s.apply_creation("v1").unwrap();
        assert_eq!(
            one.apply_annihilation("v1").unwrap().amplitude(&[0, 0]),
            c(1.0)
        );
        let two = FockState::from_terms(two_mode_register(), [(vec![2, 0], c(1.0))]).unwrap();
        let down = two.apply_annihilation("h1").unwrap();
        assert!((down.amplitude(&[1, 0]) - c(2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn unknown_labels_are_errors() {
        let s = vacuum_state(two_mode_register());
        assert_eq!(
            s.apply_creation("x").unwrap_err(),
            Error::UnknownMode("x".into())
        );
        assert!(s.apply_annihilation("x").is_err());
        assert!(s.project_occupation("x", 0).is_err());
    }

    #[test]
    fn identity_unitary_is_noop() {
        let s = vacuum_state(two_mode_register())
            .apply_creation("h1")
            .unwrap()
            .apply_creation("v1")
            .unwrap();
        let out = s
            .apply_mode_unitary(&["h1", "v1"], &DMatrix::identity(2, 2))
            .unwrap();
        assert_eq!(
            out.terms().collect::<Vec<_>>(),
            s.terms().collect::<Vec<_>>()
        );
    }

    #[test]
    fn beam_splitter_single_photon_splits_evenly() {
        let s = vacuum_state(two_mode_register())
            .apply_creation("h1")
            .unwrap();
        let out = s
            .apply_mode_unitary(&["h1", "v1"], &beam_splitter())
            .unwrap();
        assert!((out.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out.amplitude(&[0, 1]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn hong_ou_mandel_cancellation() {
        // (a_A† a_B†)|vac⟩ = ((d₁† + d₂†)(d₁† − d₂†)/2)|vac⟩ = (d₁†² − d₂†²)/2 |vac⟩
        let s = FockState::from_terms(two_mode_register(), [(vec![1, 1], c(1.0))]).unwrap();
        let out = s
            .apply_mode_unitary(&["h1", "v1"], &beam_splitter())
            .unwrap();
        assert!((out.amplitude(&[2, 0]) - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(out.amplitude(&[1, 1]), Complex64::default());
        assert!((out.amplitude(&[0, 2]) - c(-FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(out.num_terms(), 2);

        let (p, post) = out.project_occupation("h1", 2).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(post.num_terms(), 1);
    }

    #[test]
    fn mode_unitary_validation() {
        let s = vacuum_state(two_mode_register());
        let bad = DMatrix::from_element(2, 2, c(1.0));
        assert!(matches!(
            s.apply_mode_unitary(&["h1", "v1"], &bad),
            Err(Error::NotUnitary { .. })
        ));
        assert_eq!(
            s.apply_mode_unitary(&["h1", "h1"], &beam_splitter())
                .unwrap_err(),
            Error::RepeatedMode("h1".into())
        );
        assert!(matches!(
            s.apply_mode_unitary(&["h1"], &beam_splitter()),
            Err(Error::MatrixShape { .. })
        ));
    }

    #[test]
    fn projection_of_equal_superposition() {
        let reg = two_mode_register();
        let s = FockState::from_terms(
            reg,
            [
                (vec![1, 0], c(FRAC_1_SQRT_2)),
                (vec![0, 1], c(FRAC_1_SQRT_2)),
            ],
        )
        .unwrap();
        let (p, post) = s.project_occupation("h1", 1).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((post.amplitude(&[1, 0]) - c(1.0)).norm() < 1e-15);
        let (p0, zero) = vacuum_state(two_mode_register())
            .project_occupation("h1", 1)
            .unwrap();
        assert_eq!(p0, 0.0);
        assert!(zero.is_zero());
        let (p1, same) = vacuum_state(two_mode_register())
            .project_occupation("h1", 0)
            .unwrap();
        assert_eq!(p1, 1.0);
        assert_eq!(same.amplitude(&[0, 0]), c(1.0));
    }

    #[test]
    fn inner_product_basics() {
        let vac = vacuum_state(two_mode_register());
        assert_eq!(inner_product(&vac, &vac).unwrap(), c(1.0));
        let h = vac.apply_creation("h1").unwrap();
        let v = vac.apply_creation("v1").unwrap();
        assert_eq!(inner_product(&h, &v).unwrap(), Complex64::default());
        let other = vacuum_state(ModeRegister::with_ensembles(&[EnsembleId(2)], 2).unwrap());
        assert_eq!(
            inner_product(&vac, &other).unwrap_err(),
            Error::RegisterMismatch
        );
    }

    #[test]
    fn photon_modes_are_added_and_removed() {
        let s = vacuum_state(two_mode_register())
            .apply_creation("h1")
            .unwrap();
        let (s2, label) = s.with_photon_mode();
        assert_eq!(label, "p0");
        assert_eq!(s2.register().len(), 3);
        let back = s2.remove_mode(&label).unwrap();
        assert_eq!(back.register().len(), 2);
        assert_eq!(
            s.remove_mode("h1").unwrap_err(),
            Error::ModeNotEmpty("h1".into())
        );
    }

    #[test]
    fn retired_ensembles_cannot_return() {
        let reg = ModeRegister::with_ensembles(&[EnsembleId(1), EnsembleId(2)], 2).unwrap();
        let s = vacuum_state(reg).apply_creation("h2").unwrap();
        let s = s.retire_ensemble(EnsembleId(1)).unwrap();
        assert_eq!(s.register().len(), 2);
        assert_eq!(
            s.with_ensemble(EnsembleId(1)).unwrap_err(),
            Error::RetiredEnsemble(EnsembleId(1))
        );
        assert_eq!(s.register().fresh_ensemble_id(), EnsembleId(3));
        assert_eq!(
            s.retire_ensemble(EnsembleId(2)).unwrap_err(),
            Error::EnsembleNotVacuum(EnsembleId(2))
        );
    }

    #[test]
    fn from_terms_validates() {
        assert!(matches!(
            FockState::from_terms(two_mode_register(), [(vec![0], c(1.0))]),
            Err(Error::OccupationLength { .. })
        ));
        assert!(matches!(
            FockState::from_terms(two_mode_register(), [(vec![3, 0], c(1.0))]),
            Err(Error::OccupationOutOfRange { .. })
        ));
        assert_eq!(
            FockState::from_terms(
                two_mode_register(),
                [(vec![0, 0], Complex64::new(f64::NAN, 0.0))]
            )
            .unwrap_err(),
            Error::NonFiniteAmplitude
        );
    }
}
