mod common;

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use proptest::prelude::*;

use qnlp::circuit::{dagger, Angle, Circuit, Gate};
use qnlp::simulator::{run_exact, run_noisy, NoiseModel, StateVector};
use qnlp::Exec;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 0..n).prop_filter("distinct", |(a, b)| a != b);
    let angle = -10.0f64..10.0;
    prop_oneof![
        q.clone().prop_map(Gate::h),
        (q.clone(), angle.clone()).prop_map(|(q, t)| Gate::rx(q, Angle::Const(t))),
        (q, angle.clone()).prop_map(|(q, t)| Gate::rz(q, Angle::Const(t))),
        (pair.clone(), angle).prop_map(|((a, b), t)| Gate::crz(a, b, Angle::Const(t))),
        pair.prop_map(|(a, b)| Gate::cx(a, b)),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..6).prop_flat_map(|n| (Just(n), proptest::collection::vec(gate(n), 0..30)))
}

fn theta(g: &Gate) -> f64 {
    match g.angle() {
        Some(Angle::Const(v)) => *v,
        _ => 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_preserved_after_every_gate((n, gates) in circuit()) {
        let mut psi = StateVector::zero(n);
        for g in &gates {
            psi.apply_gate(g).unwrap();
            prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gates_match_dense_matrices((n, gates) in circuit()) {
        let mut psi = StateVector::zero(n);
        let mut dense = vec![Complex64::new(0.0, 0.0); 1 << n];
        dense[0] = Complex64::new(1.0, 0.0);
        for g in &gates {
            psi.apply_gate(g).unwrap();
            dense = common::mat_vec(&common::gate_matrix(g, n, theta(g)), &dense);
        }
        for (a, b) in psi.amplitudes().iter().zip(&dense) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dagger_undoes_the_circuit((n, gates) in circuit()) {
        let mut psi = StateVector::zero(n);
        for g in gates.iter().chain(dagger(&gates).iter()) {
            psi.apply_gate(g).unwrap();
        }
        prop_assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn argmax_is_invariant_under_normalization((n, gates) in circuit()) {
        let post: BTreeMap<usize, u8> = (1..n).map(|q| (q, 0)).collect();
        let c = Circuit::new(n, gates, post, 0).unwrap();
        if let Ok(o) = run_exact(&c, &HashMap::new()) {
            prop_assert_eq!(o.p0_raw > o.p1_raw, o.p0 > o.p1);
            prop_assert!((o.p0 + o.p1 - 1.0).abs() < 1e-12);
        }
    }
}

fn bell() -> Circuit {
    let post = BTreeMap::from([(1, 0)]);
    Circuit::new(2, vec![Gate::h(0), Gate::cx(0, 1)], post, 0).unwrap()
}

#[test]
fn bell_pair_postselected_values() {
    let o = run_exact(&bell(), &HashMap::new()).unwrap();
    assert!((o.p0_raw - 0.5).abs() < 1e-12);
    assert!(o.p1_raw.abs() < 1e-12);
    assert!((o.p0 - 1.0).abs() < 1e-12);
}

/// Mean absolute error of the noiseless sampler against the exact value.
fn sampling_error(c: &Circuit, shots: usize, repeats: u64) -> f64 {
    let exact = run_exact(c, &HashMap::new()).unwrap().p0;
    (0..repeats)
        .map(|r| {
            let nm = NoiseModel::noiseless(shots, 1000 + r);
            (run_noisy(c, &HashMap::new(), &nm, Exec::Parallel).unwrap().p0 - exact).abs()
        })
        .sum::<f64>()
        / repeats as f64
}

#[test]
fn sampling_error_shrinks_like_inverse_sqrt_shots() {
    let post = BTreeMap::from([(1, 0)]);
    let gates = vec![Gate::rx(0, Angle::Const(1.1)), Gate::rx(1, Angle::Const(0.7)), Gate::crz(0, 1, Angle::Const(0.4))];
    let c = Circuit::new(2, gates, post, 0).unwrap();
    let e1 = sampling_error(&c, 1_000, 40);
    let e2 = sampling_error(&c, 10_000, 40);
    let ratio = e1 / e2;
    assert!((1.8..5.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn noisy_results_independent_of_exec() {
    let nm = NoiseModel::new(0.05, 0.1, 0.05, 3000, 9).unwrap();
    let a = run_noisy(&bell(), &HashMap::new(), &nm, Exec::Sequential).unwrap();
    let b = run_noisy(&bell(), &HashMap::new(), &nm, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}
