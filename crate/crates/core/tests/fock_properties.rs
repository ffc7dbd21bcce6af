use ensemble_core::fock::{beam_splitter, vacuum_state, EnsembleId, FockState, ModeRegister};
use ensemble_core::qubit::{
    hadamard, logical_view, pi_swap, prepare_logical, r_minus, r_plus, raman_rotation,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

const LABELS: [&str; 3] = ["h1", "v1", "h2"];

fn register(cutoff: u8) -> ModeRegister {
    ModeRegister::with_ensembles(&[EnsembleId(1), EnsembleId(2)], cutoff).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Haar-ish unitary from the QR factor of a random complex matrix.
fn unitary_from(entries: &[(f64, f64)], n: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_iterator(n, n, entries.iter().map(|&(re, im)| c(re, im)));
    m.qr().q()
}

fn unitary_strategy(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_filter("well conditioned", |v| {
            v.iter().any(|&(a, b)| a * a + b * b > 0.1)
        })
        .prop_map(move |v| unitary_from(&v, n))
}

/// Random superposition over the first three modes with at most
/// `max_occ` photons each; the fourth mode stays empty.
fn state_strategy(max_occ: u8, cutoff: u8) -> impl Strategy<Value = FockState> {
    let occ = prop::collection::vec(0..=max_occ, 3);
    prop::collection::vec((occ, -1.0..1.0f64, -1.0..1.0f64), 1..6)
        .prop_map(move |terms| {
            let terms = terms.into_iter().map(|(mut o, re, im)| {
                o.push(0);
                (o, c(re, im))
            });
            FockState::from_terms(register(cutoff), terms).unwrap()
        })
        .prop_filter("nonzero", |s| s.norm_sqr() > 1e-3)
}

fn factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product()
}

fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut total = c(0.0, 0.0);
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        total += p
            .iter()
            .enumerate()
            .map(|(r, &col)| m[(r, col)])
            .product::<Complex64>();
    });
    total
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// `⟨out|Û|in⟩ = perm(U[out rows, in cols]) / √(∏ out! ∏ in!)`.
fn permanent_amplitude(u: &DMatrix<Complex64>, input: &[u8], output: &[u8]) -> Complex64 {
    let expand = |occ: &[u8]| -> Vec<usize> {
        occ.iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, usize::from(n)))
            .collect()
    };
    let (cols, rows) = (expand(input), expand(output));
    if rows.len() != cols.len() {
        return c(0.0, 0.0);
    }
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |r, k| u[(rows[r], cols[k])]);
    let norm: f64 = input.iter().chain(output).map(|&n| factorial(n)).product();
    permanent(&sub) / norm.sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_unitary_preserves_norm(u in unitary_strategy(3), s in state_strategy(2, 6)) {
        let out = s.apply_mode_unitary(&LABELS, &u).unwrap();
        prop_assert_eq!(out.truncated_weight(), 0.0);
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-10 * s.norm_sqr().max(1.0));
    }

    #[test]
    fn mode_unitary_matches_permanents(u in unitary_strategy(3), occ in prop::collection::vec(0u8..=2, 3)) {
        let mut input = occ.clone();
        input.push(0);
        let s = FockState::from_terms(register(6), [(input, c(1.0, 0.0))]).unwrap();
        let out = s.apply_mode_unitary(&LABELS, &u).unwrap();
        let n: u8 = occ.iter().sum();
        for a in 0..=n {
            for b in 0..=(n - a) {
                let target = [a, b, n - a - b];
                let expected = permanent_amplitude(&u, &occ, &target);
                let got = out.amplitude(&[a, b, n - a - b, 0]);
                prop_assert!((got - expected).norm() < 1e-10, "{:?}: {} vs {}", target, got, expected);
            }
        }
    }

    #[test]
    fn mode_unitaries_compose(u in unitary_strategy(3), v in unitary_strategy(3), s in state_strategy(2, 6)) {
        let stepwise = s.apply_mode_unitary(&LABELS, &u).unwrap().apply_mode_unitary(&LABELS, &v).unwrap();
        let product = &v * &u;
        let direct = s.apply_mode_unitary(&LABELS, &product).unwrap();
        let diff = stepwise.add(&direct.scaled(c(-1.0, 0.0))).unwrap();
        prop_assert!(diff.norm() < 1e-10);
    }

    #[test]
    fn ladder_commutator_is_identity(s in state_strategy(2, 4), mode in 0usize..3) {
        let label = LABELS[mode];
        let a_adag = s.apply_creation(label).unwrap().apply_annihilation(label).unwrap();
        let adag_a = s.apply_annihilation(label).unwrap().apply_creation(label).unwrap();
        let diff = a_adag.add(&adag_a.scaled(c(-1.0, 0.0))).unwrap().add(&s.scaled(c(-1.0, 0.0))).unwrap();
        prop_assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn creation_is_adjoint_of_annihilation(phi in state_strategy(2, 3), psi in state_strategy(2, 3), mode in 0usize..3) {
        let label = LABELS[mode];
        let lhs = phi.inner(&psi.apply_creation(label).unwrap()).unwrap();
        let rhs = phi.apply_annihilation(label).unwrap().inner(&psi).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn beam_splitter_is_unitary_on_states(s in state_strategy(2, 6)) {
        let bs = beam_splitter();
        let out = s.apply_mode_unitary(&["h1", "h2"], &bs).unwrap();
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-10 * s.norm_sqr().max(1.0));
        let back = out.apply_mode_unitary(&["h1", "h2"], &bs.adjoint()).unwrap();
        let diff = back.add(&s.scaled(c(-1.0, 0.0))).unwrap();
        prop_assert!(diff.norm() < 1e-10);
    }

    #[test]
    fn rotations_compose_on_logical_qubits(theta in 0.0..std::f64::consts::PI, phase in 0.0..std::f64::consts::TAU) {
        let e = EnsembleId(1);
        let (alpha, beta) = (c(theta.cos(), 0.0), Complex64::from_polar(theta.sin(), phase));
        let s = prepare_logical(&vacuum_state(register(2)), e, alpha, beta).unwrap();

        let hh = raman_rotation(&raman_rotation(&s, e, &hadamard()).unwrap(), e, &hadamard()).unwrap();
        prop_assert!((hh.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((hh.inner(&s).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        let rr = raman_rotation(&raman_rotation(&s, e, &r_plus()).unwrap(), e, &r_minus()).unwrap();
        prop_assert!((rr.inner(&s).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        let swapped = raman_rotation(&raman_rotation(&s, e, &pi_swap()).unwrap(), e, &pi_swap()).unwrap();
        prop_assert!((swapped.inner(&s).unwrap() + c(1.0, 0.0)).norm() < 1e-12);

        let view = logical_view(&s, e).unwrap();
        prop_assert!(view.factorizable);
        prop_assert!((view.fidelity_with(alpha, beta) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hong_ou_mandel_against_permanents() {
    let bs = beam_splitter();
    let s = FockState::from_terms(register(2), [(vec![1, 0, 1, 0], c(1.0, 0.0))]).unwrap();
    let out = s.apply_mode_unitary(&["h1", "h2"], &bs).unwrap();
    // h1, h2 occupy register slots 0 and 2
    let sub = DMatrix::from_fn(2, 2, |r, k| bs[(r, k)]);
    let u = |a: u8, b: u8| permanent_amplitude(&sub, &[1, 1], &[a, b]);
    assert!((out.amplitude(&[1, 0, 1, 0]) - u(1, 1)).norm() < 1e-15);
    assert!(u(1, 1).norm() < 1e-15);
    assert!((out.amplitude(&[2, 0, 0, 0]) - u(2, 0)).norm() < 1e-15);
    assert!((out.amplitude(&[0, 0, 2, 0]) - u(0, 2)).norm() < 1e-15);
}
