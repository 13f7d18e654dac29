use proptest::prelude::*;

use vqcfd::linalg::C64;
use vqcfd::mps::{mps_decompose, tensorize};
use vqcfd::noise::{Channel, NoiseModel};
use vqcfd::simulator::{run_density, run_statevector, Circuit};
use vqcfd::transpiler::{rebase, to_logical_order};
use vqcfd::{
    classical_energy, direct_energy, transpile, AnsatzSpec, CalibrationSnapshot, DeviceTarget, GridProblem,
    IdealBackend, Qnpu, Shots,
};

#[derive(Clone, Debug)]
enum Op {
    H(usize),
    Ry(f64, usize),
    Rz(f64, usize),
    Cx(usize, usize),
    Cp(f64, usize, usize),
    Ccx(usize, usize, usize),
}

fn arb_circuit(width: usize, len: usize) -> impl Strategy<Value = Circuit> {
    let q = 0..width;
    let op = prop_oneof![
        q.clone().prop_map(Op::H),
        (-3.2f64..3.2, q.clone()).prop_map(|(t, a)| Op::Ry(t, a)),
        (-3.2f64..3.2, q.clone()).prop_map(|(t, a)| Op::Rz(t, a)),
        (q.clone(), q.clone()).prop_map(|(a, b)| Op::Cx(a, b)),
        (-3.2f64..3.2, q.clone(), q.clone()).prop_map(|(t, a, b)| Op::Cp(t, a, b)),
        (q.clone(), q.clone(), q).prop_map(|(a, b, c)| Op::Ccx(a, b, c)),
    ];
    prop::collection::vec(op, 1..len).prop_map(move |ops| {
        let mut c = Circuit::new(width);
        for op in ops {
            match op {
                Op::H(a) => {
                    c.h(a);
                }
                Op::Ry(t, a) => {
                    c.ry(t, a);
                }
                Op::Rz(t, a) => {
                    c.rz(t, a);
                }
                Op::Cx(a, b) if a != b => {
                    c.cx(a, b);
                }
                Op::Cp(t, a, b) if a != b => {
                    c.cphase(t, a, b);
                }
                Op::Ccx(a, b, t) if a != b && b != t && a != t => {
                    c.ccx(a, b, t);
                }
                _ => {}
            }
        }
        c
    })
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

fn kolkata() -> (DeviceTarget, NoiseModel) {
    let snap = CalibrationSnapshot::bundled("kolkata-like").unwrap();
    (DeviceTarget::from_snapshot(&snap).unwrap(), NoiseModel::from_snapshot(&snap).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rebase_preserves_the_state(c in arb_circuit(4, 30)) {
        let want = run_statevector(&c).unwrap().into_amplitudes();
        let got = run_statevector(&rebase(&c).unwrap()).unwrap().into_amplitudes();
        prop_assert!(overlap(&want, &got) > 1.0 - 1e-9);
    }

    #[test]
    fn transpiled_circuits_respect_coupling_and_state(c in arb_circuit(5, 25)) {
        let (target, noise) = kolkata();
        let t = transpile(&c, &target, None, Some(&noise)).unwrap();
        for g in t.circuit.gates() {
            let s = g.support();
            prop_assert!(s.len() <= 2);
            if s.len() == 2 {
                prop_assert!(target.coupled(t.region[s[0]], t.region[s[1]]));
            }
        }
        let want = run_statevector(&c).unwrap().into_amplitudes();
        let got = run_statevector(&t.circuit).unwrap().into_amplitudes();
        prop_assert!(overlap(&want, &to_logical_order(&got, &t.final_layout)) > 1.0 - 1e-9);
    }

    #[test]
    fn noisy_density_stays_physical(c in arb_circuit(3, 15)) {
        let (target, noise) = kolkata();
        let t = transpile(&c, &target, None, Some(&noise)).unwrap();
        let rho = run_density(&t.circuit, Some(&noise.restrict(&t.region).unwrap())).unwrap();
        prop_assert!(rho.check_invariants().is_ok());
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
    }

    #[test]
    fn relaxation_channels_are_cptp(t1 in 20.0f64..300.0, ratio in 0.05f64..2.0, tau in 0.0f64..2.0) {
        let ch = Channel::thermal_relaxation(t1, ratio * t1, tau).unwrap();
        prop_assert!(ch.trace_deviation() < 1e-10);
        prop_assert!(ch.min_choi_eigenvalue() > -1e-10);
    }

    #[test]
    fn full_bond_mps_is_exact(v in prop::collection::vec(-5.0f64..5.0, 16)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let t = tensorize(&v).unwrap();
        let m = mps_decompose(&t, 4).unwrap();
        let err = m.contract().iter().zip(t.flatten()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err < 1e-10 * t.input_norm().max(1.0));
    }

    #[test]
    fn exact_estimators_agree_with_classical_energy(
        theta in prop::collection::vec(-3.2f64..3.2, 9),
        g in 0.0f64..5000.0,
    ) {
        let problem = GridProblem::unit_interval(3, 100.0, g).unwrap();
        let spec = AnsatzSpec::real_amplitude(3, 2, theta).unwrap();
        let exact = classical_energy(&problem, &spec.state_of().unwrap()).unwrap();
        let q = Qnpu::new(&problem).unwrap().estimate(&spec, Shots::Exact, 0, &IdealBackend).unwrap();
        let d = direct_energy(&problem, &spec, Shots::Exact, 0, &IdealBackend).unwrap();
        prop_assert!(q.max_component_deviation(&exact) < 1e-9);
        prop_assert!(d.max_component_deviation(&exact) < 1e-9);
    }
}
