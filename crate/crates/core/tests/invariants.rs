use cavity_ghz::budget::{self, LossParams};
use cavity_ghz::engine::{self, Initial, PropagationSettings, Record};
use cavity_ghz::hilbert::{self, HilbertLayout, StateVector};
use cavity_ghz::model::{self, Envelope, HamiltonianRecipe, LambdaParams};
use cavity_ghz::protocol::{self, ProtocolOptions, SourceModel};
use cavity_ghz::{linalg, Exec, SimParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn complex2x2() -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(-1.0..1.0f64, 8).prop_map(|v| {
        DMatrix::from_fn(2, 2, |i, j| C64::new(v[2 * (2 * i + j)], v[2 * (2 * i + j) + 1]))
    })
}

fn spin_state(n: usize, raw: &[f64]) -> DVector<C64> {
    let d = 1 << n;
    let v = DVector::from_fn(d, |i, _| C64::new(raw[2 * i], raw[2 * i + 1]));
    let norm = v.norm();
    v / C64::from(norm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn layout_dimension_is_product(n in 1usize..=5, fock in 2usize..=20) {
        let l = HilbertLayout::qubits(n, fock - 1).unwrap();
        prop_assert_eq!(l.dim(), (1usize << n) * fock);
        for idx in 0..l.dim() {
            prop_assert_eq!(l.index(l.spin_of(idx), l.fock_of(idx)), idx);
        }
    }

    #[test]
    fn embedding_is_multiplicative(
        n in 1usize..=3, fock in 2usize..=4, site in 0usize..3,
        a in complex2x2(), b in complex2x2(),
    ) {
        let site = site % n + 1;
        let l = HilbertLayout::qubits(n, fock - 1).unwrap();
        let ab = hilbert::embed_site_op(&l, site, &(&a * &b)).unwrap();
        let ea = hilbert::embed_site_op(&l, site, &a).unwrap();
        let eb = hilbert::embed_site_op(&l, site, &b).unwrap();
        prop_assert!(linalg::max_diff(ab.matrix(), &(ea.matrix() * eb.matrix())) <= 1e-12);
    }

    #[test]
    fn distinct_sites_commute(a in complex2x2(), b in complex2x2(), fock in 2usize..=3) {
        let l = HilbertLayout::qubits(3, fock - 1).unwrap();
        let ea = hilbert::embed_site_op(&l, 1, &a).unwrap();
        let eb = hilbert::embed_site_op(&l, 3, &b).unwrap();
        prop_assert_eq!(ea.commutator(&eb).max_abs(), 0.0);
    }

    #[test]
    fn thermal_weights_normalised(n_bar in 0.0..2.0f64) {
        let w = hilbert::thermal_weights(n_bar, 80).unwrap();
        let total: f64 = w.weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(w.weights.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn recipes_are_hermitian(
        n in 1usize..=3, t in 0.0..40.0f64, phi in 0.0..(2.0 * PI),
        eta in 0.05..1.0f64, ratio in 1.0..4.0f64, drive in 0.0..12.0f64,
    ) {
        let p = SimParams::new(n, eta, ratio * eta, drive * eta, 4);
        let recipes = [
            model::build_effective_hamiltonian(&p, phi).unwrap(),
            model::build_driven_hamiltonian(&p, phi).unwrap(),
            model::build_neglected_terms(&p, phi).unwrap(),
            model::build_rotated_hamiltonian(&p, phi).unwrap(),
        ];
        for r in &recipes {
            let scale = r.eval(t).max_abs().max(1.0);
            prop_assert!(r.hermiticity_defect(t) <= 1e-12 * scale, "{}", r.label());
        }
    }

    #[test]
    fn equal_couplings_reproduce_uniform_build(n in 1usize..=3, eta in 0.05..1.0f64, t in 0.0..10.0f64) {
        let uniform = SimParams::new(n, eta, 2.0 * eta, 12.0 * eta, 3);
        let listed = SimParams { eta_per_qubit: Some(vec![eta; n]), ..uniform.clone() };
        for (a, b) in [
            (model::build_effective_hamiltonian(&uniform, 0.3).unwrap(), model::build_effective_hamiltonian(&listed, 0.3).unwrap()),
            (model::build_driven_hamiltonian(&uniform, 0.3).unwrap(), model::build_driven_hamiltonian(&listed, 0.3).unwrap()),
        ] {
            let (ha, hb) = (a.eval(t), b.eval(t));
            prop_assert_eq!(ha.matrix(), hb.matrix());
        }
    }

    #[test]
    fn budget_rates_are_nonnegative(
        n in 1usize..=4, g in 0.1..10.0f64, omega_l in 0.1..10.0f64,
        det in 20.0..200.0f64, gamma0 in 0.0..2.0f64, q in 1e3..1e10f64,
    ) {
        let lp = LambdaParams::from_detunings(n, g, omega_l, det, 1.0, 2500.0, 18.0);
        let mut p = SimParams::new(n, 1.0, 2.0, 12.0, 4);
        p.lambda = Some(lp);
        let r = budget::decoherence_budget(&p, &LossParams { gamma0, quality_factor: q, wavelength_nm: None }).unwrap();
        for x in [r.eta_far_detuned, r.gamma_eff, r.kappa, r.gate_time, r.spontaneous_emission_product, r.cavity_loss_product] {
            prop_assert!(x >= 0.0 && x.is_finite());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn propagators_are_unitary(n in 1usize..=2, eta in 0.1..1.0f64, ratio in 1.0..3.0f64, t in 0.5..8.0f64) {
        let p = SimParams::new(n, eta, ratio * eta, 0.0, 5);
        let r = model::build_effective_hamiltonian(&p, 0.0).unwrap();
        let run = engine::propagate(&r, &Initial::Identity, 0.0, t, &PropagationSettings::default()).unwrap();
        prop_assert!(run.unitarity_defect.unwrap() <= 1e-8);
        prop_assert!(!run.failed);
    }

    #[test]
    fn jx_populations_conserved(
        n in 2usize..=3, eta in 0.1..1.0f64, t in 0.5..6.0f64,
        raw in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let p = SimParams::new(n, eta, 2.0 * eta, 0.0, 8);
        let layout = p.qubit_layout().unwrap();
        let spin = spin_state(n, &raw);
        let amps = linalg::kron(
            &DMatrix::from_column_slice(spin.len(), 1, spin.as_slice()),
            &DMatrix::from_fn(layout.fock_dim(), 1, |i, _| C64::from(if i == 0 { 1.0 } else { 0.0 })),
        );
        let psi = StateVector::new(layout, DVector::from_column_slice(amps.as_slice())).unwrap();
        let r = model::build_effective_hamiltonian(&p, 0.0).unwrap();
        let run = engine::propagate(&r, &Initial::State(psi.clone()), 0.0, t, &PropagationSettings::default()).unwrap();
        let out = run.state(0).unwrap();
        for (_, proj) in engine::jx_projectors(n) {
            let big = hilbert::embed_spin(&layout, &proj).unwrap();
            let before = (psi.amplitudes().adjoint() * big.matrix() * psi.amplitudes())[(0, 0)].re;
            let after = (out.amplitudes().adjoint() * big.matrix() * out.amplitudes())[(0, 0)].re;
            prop_assert!((before - after).abs() <= 1e-8, "{before} vs {after}");
        }
    }

    #[test]
    fn fidelities_stay_in_unit_interval(
        n in 2usize..=3, even in 1usize..=4, source in prop::sample::select(vec![SourceModel::Driven, SourceModel::Effective]),
    ) {
        let eta = 2.0 * PI * 0.05;
        let p = SimParams::new(n, eta, 2.0 * eta, 2.0 * even as f64 * 2.0 * eta, 4);
        let opts = ProtocolOptions { source, ..Default::default() };
        let report = protocol::run_ghz_protocol(&p, &opts).unwrap();
        for f in report.fidelity.iter().chain([&report.final_fidelity]) {
            prop_assert!((0.0..=1.0 + 1e-9).contains(f), "{f}");
        }
    }
}

#[test]
fn collective_jx_is_ordered_sum_of_embeddings() {
    for n in 1..=4 {
        let l = HilbertLayout::qubits(n, 3).unwrap();
        let half = hilbert::local::sigma_x().map(|z| z * 0.5);
        let mut acc = DMatrix::zeros(l.dim(), l.dim());
        for j in 1..=n {
            acc += hilbert::embed_site_op(&l, j, &half).unwrap().matrix();
        }
        assert_eq!(hilbert::collective_jx(&l).unwrap().matrix(), &acc);
    }
}

#[test]
fn construction_is_deterministic() {
    let p = SimParams::new(3, 0.4, 0.8, 4.8, 6);
    let a = model::build_driven_hamiltonian(&p, 0.2).unwrap();
    let b = model::build_driven_hamiltonian(&p, 0.2).unwrap();
    for t in [0.0, 0.37, 5.1] {
        assert_eq!(a.eval(t).matrix(), b.eval(t).matrix());
    }
}

#[test]
fn dimension_cap_is_enforced() {
    assert!(HilbertLayout::qubits(6, 63).is_ok());
    assert!(HilbertLayout::qubits(6, 64).is_err());
    assert!(HilbertLayout::qubits(0, 4).is_err());
    assert!(HilbertLayout::qubits(2, 0).is_err());
}

#[test]
fn driven_propagator_factorises_into_drive_and_rotated_frame() {
    let eta = 0.3;
    let p = SimParams::new(2, eta, 2.0 * eta, 8.0 * eta, 6);
    let layout = p.qubit_layout().unwrap();
    let t = 3.1;
    let settings = PropagationSettings::for_params(&p);
    let u1 = engine::propagate_unitary(&model::build_driven_hamiltonian(&p, 0.0).unwrap(), 0.0, t, &settings).unwrap();
    let u2 = engine::propagate_unitary(&model::build_rotated_hamiltonian(&p, 0.0).unwrap(), 0.0, t, &settings).unwrap();
    let jx = hilbert::collective_jx(&layout).unwrap();
    let drive = linalg::exp_hermitian(jx.matrix(), C64::new(0.0, -p.omega * t));
    let d = linalg::max_diff(u1.matrix(), &(drive * u2.matrix()));
    assert!(d <= 1e-7, "{d}");
}

#[test]
fn constant_generator_full_period_returns_identity() {
    let l = HilbertLayout::qubits(2, 2).unwrap();
    let omega = 1.7;
    let mut r = HamiltonianRecipe::new(l, "Omega Jx");
    r.push(hilbert::collective_jx(&l).unwrap().into_matrix(), Envelope::constant(C64::from(omega)));
    let u = engine::propagate_unitary(&r, 0.0, 2.0 * PI / omega, &PropagationSettings::default()).unwrap();
    assert!(linalg::phase_aligned_distance(u.matrix(), &linalg::identity(l.dim())) <= 1e-8);
}

#[test]
fn execution_policy_does_not_change_results() {
    let p = SimParams::new(3, 0.5, 1.0, 0.0, 6);
    let r = model::build_effective_hamiltonian(&p, 0.0).unwrap();
    let run = |exec| {
        let s = PropagationSettings::default().with_record(Record::Uniform(4)).with_exec(exec);
        engine::propagate(&r, &Initial::Identity, 0.0, 2.0, &s).unwrap().snapshots
    };
    assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
}
