use doqkd_core::montecarlo::{empirical_mutual_information, f_test};
use doqkd_core::*;
use nalgebra::{DMatrix, Matrix4};
use proptest::prelude::*;

const PS: f64 = 1e-3;

fn sec4(k: f64) -> SourceParams {
    SourceParams::new(1.92, 30.0 * PS, k).unwrap()
}

fn sec5(k: f64) -> SourceParams {
    SourceParams::new(1.49, 2.8 * PS, k).unwrap()
}

fn chi(p: &SourceParams, model: ModelKind, eta: f64, xi: f64, mode: KeyMode) -> Option<f64> {
    let attack = model.attack(eta, xi).ok()?;
    key_rate(p, &attack, None, mode).ok().map(|r| r.chi_ae)
}

fn local(theta: f64, r: f64, phi: f64) -> SymplecticMatrix {
    SymplecticMatrix::rotation(theta)
        .compose(&SymplecticMatrix::squeezer(r))
        .unwrap()
        .compose(&SymplecticMatrix::rotation(phi))
        .unwrap()
}

/// `(L_A ⊕ L_B) · BS(mix) · (L_A' ⊕ L_B')` with each `L` a rotated squeezer.
fn random_symplectic(s: &Mixer) -> SymplecticMatrix {
    let (a, b, mix, c, d) = s;
    local(a[0], a[1], a[2])
        .direct_sum(&local(b[0], b[1], b[2]))
        .compose(&SymplecticMatrix::beam_splitter(*mix))
        .unwrap()
        .compose(&local(c[0], c[1], c[2]).direct_sum(&local(d[0], d[1], d[2])))
        .unwrap()
}

type Mixer = ([f64; 3], [f64; 3], f64, [f64; 3], [f64; 3]);

fn mixer() -> impl Strategy<Value = Mixer> {
    (
        local_params(),
        local_params(),
        angle(),
        local_params(),
        local_params(),
    )
}

fn thermal(nu1: f64, nu2: f64) -> CovMatrix {
    CovMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        nu1, nu1, nu2, nu2,
    ])))
    .unwrap()
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

fn local_params() -> impl Strategy<Value = [f64; 3]> {
    (angle(), -0.5..0.5f64, angle()).prop_map(|(a, r, b)| [a, r, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn entropy_invariant_under_symplectics(
        nu1 in 0.5..20.0f64,
        nu2 in 0.5..20.0f64,
        prep in mixer(),
        s in mixer(),
    ) {
        let base = thermal(nu1, nu2).transformed(&random_symplectic(&prep)).unwrap();
        let moved = base.transformed(&random_symplectic(&s)).unwrap();
        let expected = mode_entropy(nu1) + mode_entropy(nu2);
        prop_assert!((base.von_neumann_entropy().unwrap() - expected).abs() < 1e-8);
        prop_assert!((moved.von_neumann_entropy().unwrap() - expected).abs() < 1e-8);
    }

    /// Entries stay of order ten here; the reference scenarios reach 1e5,
    /// where the f64 spectrum of a transformed state is only good to ~ε·N².
    #[test]
    fn attacked_state_entropy_invariant_under_symplectics(
        xi in 0.05..3.0f64,
        s in mixer(),
    ) {
        let p = SourceParams::new(1.0, 0.2, 0.4).unwrap();
        let g = Attack::Mower(MowerAttack::new(0.0, xi).unwrap()).apply(&p).unwrap();
        let moved = g.transformed(&random_symplectic(&s)).unwrap();
        let (a, b) = (g.von_neumann_entropy().unwrap(), moved.von_neumann_entropy().unwrap());
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    /// Pure to within the rounding of the stored entries: a perturbation of
    /// order `ε·N` in a pure state with entries of size `N` moves its
    /// symplectic spectrum by order `ε·N²`.
    #[test]
    fn source_state_pure_over_six_decades(
        lc in -2.0..4.0f64,
        lr in -5.0..1.0f64,
        lk in -5.0..1.0f64,
    ) {
        let p = SourceParams::new(10f64.powf(lc), 10f64.powf(lr), 10f64.powf(lk)).unwrap();
        let g = build_covariance(&p);
        prop_assert!(g.is_physical());
        let n = g.matrix().amax();
        let tol = 1e-9 + 16.0 * n * n * f64::EPSILON;
        for nu in g.symplectic_eigenvalues().unwrap() {
            prop_assert!((nu - 0.5).abs() <= tol, "nu={nu} n={n:e}");
        }
    }

    #[test]
    fn label_exchange_symmetry(
        lc in -0.5..1.0f64,
        lr in -2.5..-1.0f64,
        lk in -3.0..-1.0f64,
    ) {
        let p = SourceParams::new(10f64.powf(lc), 10f64.powf(lr), 10f64.powf(lk)).unwrap();
        let g = build_covariance(&p);
        let swap = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        let swapped = CovMatrix::new(&swap * g.matrix() * &swap).unwrap();
        let m = measured_basis_cov(&g, &p).unwrap();
        let perm = Matrix4::from_fn(|i, j| swap[(i, j)]);
        let m_swapped = MeasuredBasisCov::new(perm * m.matrix() * perm).unwrap();
        let i_ab = mutual_information_time(&m).unwrap();
        prop_assert!((i_ab - mutual_information_time(&m_swapped).unwrap()).abs() < 1e-12);
        for mode in [KeyMode::TimeOnly, KeyMode::BothBases] {
            let (a, b) = (holevo(&g, mode).unwrap(), holevo(&swapped, mode).unwrap());
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn alternate_leaks_at_least_as_much_as_mower() {
    for (p, mode) in [
        (sec4(0.0039), KeyMode::BothBases),
        (sec5(0.0039), KeyMode::TimeOnly),
    ] {
        for i in 0..11 {
            let xi = 0.5 * i as f64;
            let limit = mower_eta_limit(&p, xi);
            for j in 0..6 {
                let eta = 0.9 * limit * j as f64 / 5.0;
                let (Some(m), Some(a)) = (
                    chi(&p, ModelKind::Mower, eta, xi, mode),
                    chi(&p, ModelKind::Alternate, eta, xi, mode),
                ) else {
                    continue;
                };
                assert!(a >= m - 1e-9, "xi={xi} eta={eta}: alt {a} < mower {m}");
            }
        }
    }
    let p = sec4(0.0039);
    let gap = chi(&p, ModelKind::Alternate, 6.3e-5, 0.78, KeyMode::BothBases).unwrap()
        - chi(&p, ModelKind::Mower, 6.3e-5, 0.78, KeyMode::BothBases).unwrap();
    assert!(gap >= 4.0, "gap {gap}");
}

#[test]
fn model_gap_shrinks_with_dispersion() {
    let steps = 30;
    let mut last = f64::INFINITY;
    for i in 0..steps {
        let k = 0.0039 * (10.0f64 / 0.0039).powf(i as f64 / (steps - 1) as f64);
        let p = sec4(k);
        let gap = (chi(&p, ModelKind::Alternate, 6.3e-5, 0.78, KeyMode::BothBases).unwrap()
            - chi(&p, ModelKind::Mower, 6.3e-5, 0.78, KeyMode::BothBases).unwrap())
        .abs();
        assert!(gap <= last + 1e-9, "k={k}: {gap} > {last}");
        last = gap;
    }
}

#[test]
fn key_rate_non_increasing_in_excess_noise() {
    for (p, eta, mode) in [
        (sec4(0.0039), 6.3e-5, KeyMode::BothBases),
        (sec5(0.0039), 0.0, KeyMode::TimeOnly),
    ] {
        for model in [ModelKind::Mower, ModelKind::Alternate] {
            let mut last = f64::INFINITY;
            for i in 0..=25 {
                let xi = 0.2 * i as f64;
                let Ok(r) = key_rate(&p, &model.attack(eta, xi).unwrap(), None, mode) else {
                    continue;
                };
                assert!(r.delta_k_raw <= last + 1e-9, "{model:?} xi={xi}");
                last = r.delta_k_raw;
            }
            assert!(last.is_finite(), "{model:?} produced no valid point");
        }
    }
}

#[test]
fn search_budget_monotone() {
    let p = sec4(0.0039);
    let obs = ObservedVariances::from_mower(&p, 6.3e-5, 0.78).unwrap();
    let run = |starts| {
        let opts = SearchOptions {
            starts,
            seed: 3,
            max_evals_per_round: 1500,
            ..Default::default()
        };
        search_worst_attack(&p, &obs, &opts).unwrap()
    };
    let (small, large) = (run(8), run(64));
    assert!(
        large.chi >= small.chi - 1e-9,
        "{} < {}",
        large.chi,
        small.chi
    );
    for r in [&small, &large] {
        assert!(r.channel.is_physical());
        assert!(
            r.residuals.iter().all(|v| v.abs() <= 1e-5),
            "{:?}",
            r.residuals
        );
    }
}

#[test]
fn monte_carlo_variances_within_five_standard_errors() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(99);
    for draw in 0..20u64 {
        let p = SourceParams::new(
            rng.random_range(0.5..5.0),
            rng.random_range(2.0..50.0) * PS,
            rng.random_range(0.002..0.05),
        )
        .unwrap();
        let xi = rng.random_range(0.0..4.0);
        let eta = rng.random_range(0.0..0.9) * mower_eta_limit(&p, xi);
        let model = if draw % 2 == 0 {
            ModelKind::Mower
        } else {
            ModelKind::Alternate
        };
        let Ok(after) = model.attack(eta, xi).and_then(|a| a.apply(&p)) else {
            continue;
        };
        let m = measured_basis_cov(&after, &p).unwrap();
        let s = BasisSamples::simulate(&m, 100_000, draw, None).unwrap();
        let z = estimate_correlated_variances(&s)
            .unwrap()
            .z_scores(&correlated_variances(&m));
        assert!(z.iter().all(|v| v.abs() < 5.0), "draw {draw}: {z:?}");
    }
}

#[test]
fn models_statistically_indistinguishable() {
    let p = sec4(0.0039);
    let shots = 1_000_000;
    let sample = |model: ModelKind, seed| {
        let after = model.attack(6.3e-5, 0.78).unwrap().apply(&p).unwrap();
        let m = measured_basis_cov(&after, &p).unwrap();
        estimate_correlated_variances(&BasisSamples::simulate(&m, shots, seed, None).unwrap())
            .unwrap()
    };
    let (m, a) = (sample(ModelKind::Mower, 1), sample(ModelKind::Alternate, 2));
    for (vm, va) in m.values.as_array().into_iter().zip(a.values.as_array()) {
        let pv = f_test(vm, shots, va, shots).unwrap();
        assert!(pv > 0.001, "{vm} vs {va}: p = {pv}");
    }
}

#[test]
fn plug_in_mutual_information_converges() {
    let p = sec4(0.0039);
    let m = measured_basis_cov(&build_covariance(&p), &p).unwrap();
    let s = BasisSamples::simulate(&m, 1_000_000, 5, None).unwrap();
    let mi = empirical_mutual_information(s.get(BasisPair::TT)).unwrap();
    assert!((mi - mutual_information_time(&m).unwrap()).abs() < 0.05);
}
