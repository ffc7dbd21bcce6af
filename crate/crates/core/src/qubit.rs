//! Dual-rail logical qubits stored in atomic ensembles.
//!
//! Logical `|0⟩ = h⁺|vac⟩` and `|1⟩ = v⁺|vac⟩`. Raman pulses act as 2×2
//! unitaries on the `(h, v)` mode pair; the anti-pump pulse moves every
//! `h` excitation of an ensemble into a freshly allocated photonic mode.
//!
//! Multi-ensemble logical vectors are indexed with the first listed
//! ensemble as the most significant bit, bit value 1 meaning `v`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{check_unitary, h_label, v_label, EnsembleId, FockState, Occupation};

pub type Mat2 = Matrix2<Complex64>;

const NORM_TOLERANCE: f64 = 1e-10;
const FACTOR_TOLERANCE: f64 = 1e-9;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn mat2(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
    Mat2::new(re(a), re(b), re(c), re(d))
}

/// `h⁺ → (h⁺ + v⁺)/√2`, `v⁺ → (h⁺ − v⁺)/√2`.
pub fn hadamard() -> Mat2 {
    mat2(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
}

/// `|0⟩ → |1⟩`, `|1⟩ → −|0⟩`.
pub fn r_plus() -> Mat2 {
    mat2(0.0, -1.0, 1.0, 0.0)
}

/// `|0⟩ → −|1⟩`, `|1⟩ → |0⟩`.
pub fn r_minus() -> Mat2 {
    mat2(0.0, 1.0, -1.0, 0.0)
}

/// π-area pulse exchanging the two rails; moves a `v` excitation into `h`
/// (with a sign on the opposite leg). Squares to `−I`.
pub fn pi_swap() -> Mat2 {
    mat2(0.0, -1.0, 1.0, 0.0)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

/// Amplitudes of one ensemble in the dual-rail basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalQubitView {
    pub alpha: Complex64,
    pub beta: Complex64,
    /// Probability weight outside the single-excitation subspace.
    pub leakage: f64,
    /// False when the ensemble is entangled with the rest of the register;
    /// the amplitudes are then the `(0, 0, 1)` sentinel.
    pub factorizable: bool,
}

impl LogicalQubitView {
    /// Fidelity with the pure qubit `(a, b)`, ignoring global phase.
    pub fn fidelity_with(&self, a: Complex64, b: Complex64) -> f64 {
        let n = a.norm_sqr() + b.norm_sqr();
        (a.conj() * self.alpha + b.conj() * self.beta).norm_sqr() / n
    }
}

fn ensure_vacuum(state: &FockState, e: EnsembleId) -> Result<(usize, usize)> {
    let (h, v) = state.register().ensemble_modes(e)?;
    if state.terms().any(|(occ, _)| occ[h] != 0 || occ[v] != 0) {
        return Err(Error::EnsembleNotVacuum(e));
    }
    Ok((h, v))
}

/// Writes `alpha·h⁺ + beta·v⁺` onto an ensemble currently in vacuum.
pub fn prepare_logical(
    state: &FockState,
    e: EnsembleId,
    alpha: Complex64,
    beta: Complex64,
) -> Result<FockState> {
    let total = alpha.norm_sqr() + beta.norm_sqr();
    if (total - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::UnnormalizedCoefficients(total));
    }
    prepare_logical_register(state, &[e], &[alpha, beta])
}

/// Writes an arbitrary logical state over several vacuum ensembles.
pub fn prepare_logical_register(
    state: &FockState,
    ensembles: &[EnsembleId],
    amps: &[Complex64],
) -> Result<FockState> {
    let n = ensembles.len();
    if amps.len() != 1 << n {
        return Err(Error::MatrixShape {
            rows: amps.len(),
            cols: 1,
            expected: 1 << n,
        });
    }
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (total - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::UnnormalizedCoefficients(total));
    }
    let mut modes = Vec::with_capacity(n);
    for (i, &e) in ensembles.iter().enumerate() {
        if ensembles[..i].contains(&e) {
            return Err(Error::DuplicateEnsembleArgument);
        }
        modes.push(ensure_vacuum(state, e)?);
    }
    let out = state.map_terms(|occ, amp, out| {
        for (index, &c) in amps.iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            let mut next = occ.clone();
            for (pos, &(h, v)) in modes.iter().enumerate() {
                let bit = (index >> (n - 1 - pos)) & 1;
                if bit == 0 {
                    next[h] = 1;
                } else {
                    next[v] = 1;
                }
            }
            *out.entry(next).or_default() += amp * c;
        }
    });
    let normalized = matches!(state.norm_tag(), crate::fock::NormTag::Normalized);
    Ok(out.mark_normalized(normalized))
}

/// Raman / radio-frequency pulse: `h⁺ → u₀₀h⁺ + u₁₀v⁺`, `v⁺ → u₀₁h⁺ + u₁₁v⁺`.
pub fn raman_rotation(state: &FockState, e: EnsembleId, u: &Mat2) -> Result<FockState> {
    state.register().ensemble_modes(e)?;
    let m = DMatrix::from_fn(2, 2, |i, j| u[(i, j)]);
    state.apply_mode_unitary(&[&h_label(e), &v_label(e)], &m)
}

/// Transfers every `h` excitation of `e` into a new photonic mode.
pub fn anti_pump(state: &FockState, e: EnsembleId) -> Result<(FockState, String)> {
    let (h, _) = state.register().ensemble_modes(e)?;
    let (with_mode, label) = state.with_photon_mode();
    let p = with_mode.register().index_of(&label)?;
    Ok((with_mode.swap_modes(h, p), label))
}

/// Inverse of [`anti_pump`]: moves the photon back into `e.h` and drops the
/// photonic mode. Requires `e.h` to be empty.
pub fn absorb_photon(state: &FockState, e: EnsembleId, photon: &str) -> Result<FockState> {
    let (h, _) = state.register().ensemble_modes(e)?;
    let p = state.register().index_of(photon)?;
    if state.terms().any(|(occ, _)| occ[h] != 0) {
        return Err(Error::ModeNotEmpty(h_label(e)));
    }
    state.swap_modes(h, p).remove_mode(photon)
}

/// Reads the logical amplitudes of one ensemble when it factorizes from
/// the rest of the register.
pub fn logical_view(state: &FockState, e: EnsembleId) -> Result<LogicalQubitView> {
    let (h, v) = state.register().ensemble_modes(e)?;
    let total = state.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let scale = total.sqrt();

    // rest-of-register key -> local (h, v) occupations -> amplitude
    let mut columns: BTreeMap<Occupation, BTreeMap<(u8, u8), Complex64>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let mut rest = occ.clone();
        rest[h] = 0;
        rest[v] = 0;
        columns
            .entry(rest)
            .or_default()
            .insert((occ[h], occ[v]), amp / scale);
    }
    let col_norm =
        |c: &BTreeMap<(u8, u8), Complex64>| c.values().map(|a| a.norm_sqr()).sum::<f64>();
    let reference = columns
        .values()
        .max_by(|a, b| col_norm(a).total_cmp(&col_norm(b)))
        .expect("nonzero state has at least one term");
    let ref_norm = col_norm(reference).sqrt();
    let unit: BTreeMap<(u8, u8), Complex64> =
        reference.iter().map(|(k, a)| (*k, a / ref_norm)).collect();

    let factorizable = columns.values().all(|col| {
        let overlap: Complex64 = unit
            .iter()
            .map(|(k, u)| u.conj() * col.get(k).copied().unwrap_or_default())
            .sum();
        let keys = unit.keys().chain(col.keys());
        let residual: f64 = keys
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|k| {
                let c = col.get(k).copied().unwrap_or_default();
                let u = unit.get(k).copied().unwrap_or_default();
                (c - overlap * u).norm_sqr()
            })
            .sum();
        residual.sqrt() <= FACTOR_TOLERANCE
    });

    if !factorizable {
        return Ok(LogicalQubitView {
            alpha: Complex64::default(),
            beta: Complex64::default(),
            leakage: 1.0,
            factorizable: false,
        });
    }
    let alpha = unit.get(&(1, 0)).copied().unwrap_or_default();
    let beta = unit.get(&(0, 1)).copied().unwrap_or_default();
    Ok(LogicalQubitView {
        alpha,
        beta,
        leakage: (1.0 - alpha.norm_sqr() - beta.norm_sqr()).max(0.0),
        factorizable: true,
    })
}

/// `⟨t|ρ|t⟩` where `ρ` is the reduced state of the listed ensembles and
/// `t` the logical vector `amps`. Weight outside their single-excitation
/// subspace counts as infidelity.
pub fn subsystem_fidelity(
    state: &FockState,
    ensembles: &[EnsembleId],
    amps: &[Complex64],
) -> Result<f64> {
    let n = ensembles.len();
    if amps.len() != 1 << n {
        return Err(Error::MatrixShape {
            rows: amps.len(),
            cols: 1,
            expected: 1 << n,
        });
    }
    let modes = ensembles
        .iter()
        .map(|&e| state.register().ensemble_modes(e))
        .collect::<Result<Vec<_>>>()?;
    let total = state.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let target_norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let mut overlaps: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    'terms: for (occ, amp) in state.terms() {
        let mut index = 0usize;
        let mut rest = occ.clone();
        for &(h, v) in &modes {
            index <<= 1;
            match (occ[h], occ[v]) {
                (1, 0) => {}
                (0, 1) => index |= 1,
                _ => continue 'terms,
            }
            rest[h] = 0;
            rest[v] = 0;
        }
        *overlaps.entry(rest).or_default() += amps[index].conj() * amp;
    }
    Ok(overlaps.values().map(|c| c.norm_sqr()).sum::<f64>() / (total * target_norm))
}

/// Applies a `2ⁿ × 2ⁿ` unitary to the logical subspace of `n` ensembles.
///
/// Terms where any listed ensemble is outside its single-excitation
/// subspace pass through unchanged.
pub fn apply_logical_gate(
    state: &FockState,
    ensembles: &[EnsembleId],
    u: &DMatrix<Complex64>,
) -> Result<FockState> {
    let n = ensembles.len();
    let dim = 1usize << n;
    check_unitary(u, dim)?;
    let mut modes = Vec::with_capacity(n);
    for (i, &e) in ensembles.iter().enumerate() {
        if ensembles[..i].contains(&e) {
            return Err(Error::DuplicateEnsembleArgument);
        }
        modes.push(state.register().ensemble_modes(e)?);
    }
    let out = state.map_terms(|occ, amp, out| {
        let mut index = 0usize;
        for &(h, v) in &modes {
            index <<= 1;
            match (occ[h], occ[v]) {
                (1, 0) => {}
                (0, 1) => index |= 1,
                _ => {
                    *out.entry(occ.clone()).or_default() += amp;
                    return;
                }
            }
        }
        for row in 0..dim {
            let c = u[(row, index)];
            if c == Complex64::default() {
                continue;
            }
            let mut next = occ.clone();
            for (pos, &(h, v)) in modes.iter().enumerate() {
                let bit = (row >> (n - 1 - pos)) & 1;
                next[h] = (bit == 0) as u8;
                next[v] = bit as u8;
            }
            *out.entry(next).or_default() += amp * c;
        }
    });
    let normalized = matches!(state.norm_tag(), crate::fock::NormTag::Normalized);
    Ok(out.mark_normalized(normalized))
}

/// Kronecker product of single-qubit matrices, first factor most significant.
pub fn kron(factors: &[Mat2]) -> DMatrix<Complex64> {
    let mut acc = DMatrix::from_element(1, 1, re(1.0));
    for f in factors {
        let (r, c) = (acc.nrows(), acc.ncols());
        let mut next = DMatrix::from_element(r * 2, c * 2, Complex64::default());
        for i in 0..r {
            for j in 0..c {
                for k in 0..2 {
                    for l in 0..2 {
                        next[(i * 2 + k, j * 2 + l)] = acc[(i, j)] * f[(k, l)];
                    }
                }
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{vacuum_state, ModeRegister, DEFAULT_CUTOFF};

    const E1: EnsembleId = EnsembleId(1);
    const E2: EnsembleId = EnsembleId(2);

    fn vac(ids: &[EnsembleId]) -> FockState {
        vacuum_state(ModeRegister::with_ensembles(ids, DEFAULT_CUTOFF).unwrap())
    }

    #[test]
    fn prepare_computational_zero() {
        let s = prepare_logical(&vac(&[E1]), E1, re(1.0), re(0.0)).unwrap();
        assert_eq!(s.num_terms(), 1);
        assert_eq!(s.amplitude(&[1, 0]), re(1.0));
    }

    #[test]
    fn prepare_rejects_bad_input() {
        let s = prepare_logical(&vac(&[E1]), E1, re(1.0), re(0.0)).unwrap();
        assert_eq!(
            prepare_logical(&s, E1, re(1.0), re(0.0)).unwrap_err(),
            Error::EnsembleNotVacuum(E1)
        );
        assert!(matches!(
            prepare_logical(&vac(&[E1]), E1, re(1.0), re(1.0)),
            Err(Error::UnnormalizedCoefficients(_))
        ));
    }

    #[test]
    fn hadamard_on_basis_states() {
        let zero = prepare_logical(&vac(&[E1]), E1, re(1.0), re(0.0)).unwrap();
        let one = prepare_logical(&vac(&[E1]), E1, re(0.0), re(1.0)).unwrap();
        let a = raman_rotation(&zero, E1, &hadamard()).unwrap();
        let b = raman_rotation(&one, E1, &hadamard()).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!((a.amplitude(&[1, 0]) - re(s)).norm() < 1e-15);
        assert!((a.amplitude(&[0, 1]) - re(s)).norm() < 1e-15);
        assert!((b.amplitude(&[1, 0]) - re(s)).norm() < 1e-15);
        assert!((b.amplitude(&[0, 1]) - re(-s)).norm() < 1e-15);
    }

    #[test]
    fn named_rotations_act_as_stated() {
        let zero = prepare_logical(&vac(&[E1]), E1, re(1.0), re(0.0)).unwrap();
        let one = prepare_logical(&vac(&[E1]), E1, re(0.0), re(1.0)).unwrap();
        let rp0 = raman_rotation(&zero, E1, &r_plus()).unwrap();
        let rp1 = raman_rotation(&one, E1, &r_plus()).unwrap();
        assert_eq!(rp0.amplitude(&[0, 1]), re(1.0));
        assert_eq!(rp1.amplitude(&[1, 0]), re(-1.0));
        let rm0 = raman_rotation(&zero, E1, &r_minus()).unwrap();
        let rm1 = raman_rotation(&one, E1, &r_minus()).unwrap();
        assert_eq!(rm0.amplitude(&[0, 1]), re(-1.0));
        assert_eq!(rm1.amplitude(&[1, 0]), re(1.0));
        assert_eq!(r_minus() * r_plus(), Mat2::identity());
    }

    #[test]
    fn pi_swap_twice_is_identity_up_to_phase() {
        let s = prepare_logical(&vac(&[E1]), E1, re(0.6), Complex64::new(0.0, 0.8)).unwrap();
        let twice =
            raman_rotation(&raman_rotation(&s, E1, &pi_swap()).unwrap(), E1, &pi_swap()).unwrap();
        assert!((twice.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
        let once = raman_rotation(&s, E1, &pi_swap()).unwrap();
        // v rail moved to h
        assert!((once.amplitude(&[1, 0]).norm() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn non_unitary_rotation_is_rejected() {
        let s = vac(&[E1]);
        assert!(matches!(
            raman_rotation(&s, E1, &mat2(1.0, 1.0, 0.0, 1.0)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn anti_pump_moves_only_h() {
        let zero = prepare_logical(&vac(&[E1]), E1, re(1.0), re(0.0)).unwrap();
        let (out, p) = anti_pump(&zero, E1).unwrap();
        assert_eq!(out.register().len(), 3);
        assert_eq!(out.amplitude(&[0, 0, 1]), re(1.0));
        assert_eq!(p, "p0");

        let one = prepare_logical(&vac(&[E1]), E1, re(0.0), re(1.0)).unwrap();
        let (out, _) = anti_pump(&one, E1).unwrap();
        assert_eq!(out.amplitude(&[0, 1, 0]), re(1.0));
    }

    #[test]
    fn anti_pump_on_psi_plus_pair() {
        let s = FRAC_1_SQRT_2;
        let psi = prepare_logical_register(
            &vac(&[E1, E2]),
            &[E1, E2],
            &[re(0.0), re(s), re(s), re(0.0)],
        )
        .unwrap();
        let (a, pa) = anti_pump(&psi, E1).unwrap();
        let (b, pb) = anti_pump(&a, E2).unwrap();
        // modes: h1 v1 h2 v2 pa pb
        let target = FockState::from_terms(
            b.register().clone(),
            [
                (vec![0, 0, 0, 1, 1, 0], re(s)),
                (vec![0, 1, 0, 0, 0, 1], re(s)),
            ],
        )
        .unwrap();
        assert!((b.inner(&target).unwrap() - re(1.0)).norm() < 1e-14);
        let back = absorb_photon(&absorb_photon(&b, E2, &pb).unwrap(), E1, &pa).unwrap();
        assert_eq!(
            back.terms().collect::<Vec<_>>(),
            psi.terms().collect::<Vec<_>>()
        );
    }

    #[test]
    fn logical_view_cases() {
        let zero = prepare_logical(&vac(&[E1, E2]), E1, re(1.0), re(0.0)).unwrap();
        let v = logical_view(&zero, E1).unwrap();
        assert_eq!(
            (v.alpha, v.beta, v.leakage, v.factorizable),
            (re(1.0), re(0.0), 0.0, true)
        );

        let empty = logical_view(&vac(&[E1]), E1).unwrap();
        assert_eq!(
            (empty.alpha, empty.beta, empty.leakage),
            (re(0.0), re(0.0), 1.0)
        );

        let s = FRAC_1_SQRT_2;
        let bell = prepare_logical_register(
            &vac(&[E1, E2]),
            &[E1, E2],
            &[re(s), re(0.0), re(0.0), re(s)],
        )
        .unwrap();
        let ent = logical_view(&bell, E1).unwrap();
        assert!(!ent.factorizable);
        assert_eq!(ent.leakage, 1.0);
    }

    #[test]
    fn kron_orders_first_factor_most_significant() {
        let x = mat2(0.0, 1.0, 1.0, 0.0);
        let k = kron(&[x, identity()]);
        assert_eq!(k.nrows(), 4);
        // |00⟩ -> |10⟩
        assert_eq!(k[(2, 0)], re(1.0));
        assert_eq!(k[(1, 0)], re(0.0));
    }

    #[test]
    fn logical_gate_cnot_on_basis() {
        let mut m = DMatrix::from_element(4, 4, re(0.0));
        m[(0, 0)] = re(1.0);
        m[(1, 1)] = re(1.0);
        m[(3, 2)] = re(1.0);
        m[(2, 3)] = re(1.0);
        let s = prepare_logical_register(
            &vac(&[E1, E2]),
            &[E1, E2],
            &[re(0.0), re(0.0), re(1.0), re(0.0)],
        )
        .unwrap();
        let out = apply_logical_gate(&s, &[E1, E2], &m).unwrap();
        assert_eq!(out.amplitude(&[0, 1, 0, 1]), re(1.0));
        // vacuum terms pass through
        let untouched = apply_logical_gate(&vac(&[E1, E2]), &[E1, E2], &m).unwrap();
        assert_eq!(untouched.amplitude(&[0, 0, 0, 0]), re(1.0));
    }
}
