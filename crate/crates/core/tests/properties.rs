use proptest::prelude::*;

use prespa_core::budget::{active_budget, passive_budget, ActiveQecParams, PassiveInputs, CHANNELS};
use prespa_core::cascade::{effective_rate_details, CascadeMatrix};
use prespa_core::codes::{binomial_code, generalized_parity, process_fidelity};
use prespa_core::heating::{evolve_rate_matrix, solve_populations, Populations, RateModel, ReadoutCalib};
use prespa_core::hilbert::{
    annihilation, c, number, CMatrix, CVector, DensityMatrix, Mode, ModeDims, QuantumOperator, StateVector, C64,
};
use prespa_core::model::{CollapseOp, LindbladModel, SystemParams};
use prespa_core::planner::{rabi_from_stark, stark_shift};
use prespa_core::solver::{evolve, TimeGrid};
use prespa_core::tomography::{partial_trace, wigner_at};

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn pure_state(amps: &[(f64, f64)]) -> Option<DensityMatrix> {
    let n = amps.len();
    let v = CVector::from_iterator(n, amps.iter().map(|&(re, im)| c(re, im)));
    StateVector::new(ModeDims::single(n).ok()?, v).ok().map(|s| DensityMatrix::pure(&s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn master_equation_keeps_a_valid_state(
        amps in amplitudes(5),
        detune in -2.0..2.0f64,
        drive in 0.0..1.5f64,
        loss in 0.05..1.0f64,
        deph in 0.0..0.5f64,
    ) {
        let Some(rho0) = pure_state(&amps) else { return Ok(()) };
        let dims = rho0.dims();
        let a = annihilation(5).unwrap();
        let n = number(5).unwrap();
        let h = &n.scale_re(detune) + &(&a + &a.dagger()).scale_re(drive);
        let ops = vec![
            CollapseOp { label: "loss".into(), op: a.scale_re(loss.sqrt()) },
            CollapseOp { label: "dephasing".into(), op: n.scale_re(deph.sqrt()) },
        ];
        let m = LindbladModel::new(h, ops, QuantumOperator::identity(dims)).unwrap();
        let traj = evolve(&m, &rho0, &TimeGrid::new(0.0, 2.0, 5).unwrap()).unwrap();
        prop_assert!(traj.max_trace_drift < 1e-8);
        for rho in &traj.states {
            prop_assert!(rho.hermiticity_defect() < 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn wigner_is_linear_in_the_state(
        a1 in amplitudes(6),
        a2 in amplitudes(6),
        p in 0.0..1.0f64,
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let (Some(r1), Some(r2)) = (pure_state(&a1), pure_state(&a2)) else { return Ok(()) };
        let mix = DensityMatrix::mixture(&[(p, &r1), (1.0 - p, &r2)]).unwrap();
        let pt = [c(x, y)];
        let w1 = wigner_at(&r1, &pt).unwrap()[0];
        let w2 = wigner_at(&r2, &pt).unwrap()[0];
        let wm = wigner_at(&mix, &pt).unwrap()[0];
        prop_assert!((wm - (p * w1 + (1.0 - p) * w2)).abs() < 1e-9);
        prop_assert!(wm.abs() <= 2.0 / std::f64::consts::PI + 1e-6);
    }

    #[test]
    fn partial_trace_is_linear(
        a1 in amplitudes(8),
        a2 in amplitudes(8),
        p in 0.0..1.0f64,
    ) {
        let dims = ModeDims::new(2, 2, 2).unwrap();
        let mk = |amps: &[(f64, f64)]| {
            let v = CVector::from_iterator(8, amps.iter().map(|&(re, im)| c(re, im)));
            StateVector::new(dims, v).ok().map(|s| DensityMatrix::pure(&s))
        };
        let (Some(r1), Some(r2)) = (mk(&a1), mk(&a2)) else { return Ok(()) };
        let mix = DensityMatrix::mixture(&[(p, &r1), (1.0 - p, &r2)]).unwrap();
        for mode in [Mode::Cavity, Mode::Transmon, Mode::Reservoir] {
            let t1 = partial_trace(&r1, mode).unwrap();
            let t2 = partial_trace(&r2, mode).unwrap();
            let tm = partial_trace(&mix, mode).unwrap();
            let expect: CMatrix = t1.matrix() * c(p, 0.0) + t2.matrix() * c(1.0 - p, 0.0);
            prop_assert!((tm.matrix() - expect).norm() < 1e-12);
            prop_assert!((tm.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn process_fidelity_is_affine(f in 0.0..1.0f64, g in 0.0..1.0f64, s in 0.0..1.0f64) {
        let mix = s * f + (1.0 - s) * g;
        let lhs = process_fidelity(mix).unwrap();
        let rhs = s * process_fidelity(f).unwrap() + (1.0 - s) * process_fidelity(g).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn parity_is_a_diagonal_unitary(m in 1usize..8, n_cav in 2usize..16) {
        let p = generalized_parity(m, ModeDims::single(n_cav).unwrap()).unwrap();
        let mat = p.matrix();
        for i in 0..n_cav {
            prop_assert!((mat[(i, i)].norm() - 1.0).abs() < 1e-14);
            for j in 0..n_cav {
                if i != j {
                    prop_assert_eq!(mat[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        if m == 2 {
            for i in 0..n_cav {
                prop_assert_eq!(mat[(i, i)], c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
            }
        }
    }

    #[test]
    fn binomial_codewords_share_odd_parity(n_cav in 6usize..20) {
        let code = binomial_code(ModeDims::single(n_cav).unwrap()).unwrap();
        let p2 = generalized_parity(2, ModeDims::single(n_cav).unwrap()).unwrap();
        for w in [&code.zero_l, &code.one_l] {
            let v = p2.apply(w).unwrap();
            prop_assert_eq!(v, -w.amplitudes());
        }
        prop_assert_eq!(code.zero_l.inner(&code.one_l), C64::new(0.0, 0.0));
        prop_assert!((code.nbar - 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_rates_are_monotone(scale in 1.01..3.0f64, which in 0usize..4) {
        let p = SystemParams::default();
        let base = PassiveInputs::default();
        let b0 = passive_budget(&p, &base).unwrap();
        let mut up = base;
        match which {
            0 => up.nbar *= scale,
            1 => up.gamma_up *= scale,
            2 => up.recovery_loss *= scale,
            _ => up.kappa_cor *= scale,
        }
        let b1 = passive_budget(&p, &up).unwrap();
        for e in &b1.entries {
            prop_assert!(e.rate >= 0.0);
        }
        if which < 3 {
            prop_assert!(b1.total > b0.total);
            prop_assert!(b1.implied_lifetime < b0.implied_lifetime);
        } else {
            prop_assert!(b1.rate("double_photon_loss") < b0.rate("double_photon_loss"));
            prop_assert!(b1.rate("unwanted_corrections") > b0.rate("unwanted_corrections"));
        }
        let order: Vec<&str> = b1.entries.iter().map(|e| e.channel.as_str()).collect();
        prop_assert_eq!(order, CHANNELS.to_vec());

        let aq = ActiveQecParams::default();
        let a0 = active_budget(&p, &aq, 3.0).unwrap();
        let a1 = active_budget(&p, &ActiveQecParams { eps_j: aq.eps_j * scale, ..aq }, 3.0).unwrap();
        prop_assert!(a1.rate("imperfect_recovery") > a0.rate("imperfect_recovery"));
    }

    #[test]
    fn rate_matrix_conserves_population(
        r in 0.0..0.5f64,
        t1ge in 10.0..200.0f64,
        t1ef in 10.0..200.0f64,
        p in prop::array::uniform3(0.0..1.0f64),
        t in 0.0..1000.0f64,
    ) {
        let s: f64 = p.iter().sum();
        prop_assume!(s > 1e-3);
        let p0: Vec<f64> = p.iter().map(|x| x / s).collect();
        let m = RateModel::new(t1ge, t1ef, r).unwrap();
        let out = evolve_rate_matrix(&m, &p0, &[t]).unwrap();
        prop_assert!((out[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out[0].iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn readout_solve_round_trips(
        g in 0.0..1.0f64,
        e in 0.0..1.0f64,
        f in 0.0..1.0f64,
        h in prop::option::of(-2.0..2.0f64),
    ) {
        let cal = ReadoutCalib { a: 1.3, b: -0.4, c: 0.35, higher: h };
        let truth = Populations::closed(g, e, f, &cal);
        let back = solve_populations(cal.forward(&truth), &cal).unwrap();
        prop_assert!((back.g - g).abs() < 1e-10);
        prop_assert!((back.e - e).abs() < 1e-10);
        prop_assert!((back.f - f).abs() < 1e-10);
        prop_assert!((back.residual - truth.residual).abs() < 1e-10);
        prop_assert!(back.misfit < 1e-10);
    }

    #[test]
    fn rabi_grows_with_displacement(b1 in 0.0..0.02f64, db in 1e-5..0.01f64, n in 0usize..3) {
        let lo = rabi_from_stark(stark_shift(&[b1], 134.28).unwrap(), 1.12, n).unwrap();
        let hi = rabi_from_stark(stark_shift(&[b1 + db], 134.28).unwrap(), 1.12, n).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn cascade_rates_are_phase_invariant(
        w1 in 0.0..1.0f64,
        w2 in 0.01..1.0f64,
        phi1 in 0.0..std::f64::consts::TAU,
        phi2 in 0.0..std::f64::consts::TAU,
    ) {
        let plain = effective_rate_details(&CascadeMatrix::new(w1, w2, 1.0)).unwrap();
        let phased = effective_rate_details(&CascadeMatrix::general(
            C64::from_polar(w1, phi1),
            C64::from_polar(w2, phi2),
            1.0,
            0.0,
        ))
        .unwrap();
        prop_assert!(plain.rate >= 0.0);
        prop_assert!((plain.rate - phased.rate).abs() <= 1e-8 * (1.0 + plain.rate));
    }
}
