use lsinv::transfer::*;
use lsinv::Complex64;
use proptest::prelude::*;

fn chain(strengths: &[Complex64], length: f64, k: f64) -> Vec<Scatterer> {
    strengths
        .iter()
        .enumerate()
        .map(|(j, &s)| Scatterer::delta(j as f64 * length, s, k).unwrap())
        .collect()
}

/// The same chain with every scatterer multiplied by `e^{iφ}`: flux is still
/// conserved but time reversal is broken.
fn with_phase(mut chain: Vec<Scatterer>, phi: f64) -> Vec<Scatterer> {
    for s in &mut chain {
        s.local = s.local.scale(Complex64::from_polar(1.0, phi));
    }
    chain
}

fn mirrored(half: &[f64]) -> Vec<Complex64> {
    let mut all: Vec<Complex64> = half.iter().map(|&s| s.into()).collect();
    all.extend(half.iter().rev().skip(1).map(|&s| Complex64::from(s)));
    all
}

fn spread(values: &[Complex64]) -> f64 {
    values.iter().map(|q| (q - values[0]).norm()).fold(0.0, f64::max)
}

fn max_norm(values: &[Complex64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.norm()))
}

fn translation_currents(chain: &[Scatterer], k: f64, length: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let regions = propagate_amplitudes(chain, k, 1.0.into()).unwrap();
    (0..chain.len())
        .map(|n| {
            let m = chain[n].matrix();
            (q_translation(&regions[n], &m, k, length), qc_translation(&regions[n], &m, k, length))
        })
        .unzip()
}

fn inversion_currents(chain: &[Scatterer], k: f64, length: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let regions = propagate_amplitudes(chain, k, 1.0.into()).unwrap();
    let n = chain.len();
    let alpha = 0.5 * (n - 1) as f64 * length;
    (0..n)
        .map(|i| {
            let j = mirror_region(i, alpha, length, n).unwrap();
            let m = chain[j].matrix();
            (
                q_inversion(&regions[i], &regions[j], &m, k, alpha),
                qc_inversion(&regions[i], &regions[j], &m, k, alpha),
            )
        })
        .unzip()
}

proptest! {
    #[test]
    fn delta_matrices_satisfy_all_conditions(strength in -3.0..3.0f64, k in 0.2..4.0f64, x in -20.0..20.0f64) {
        let m = Scatterer::delta(x, strength, k).unwrap().matrix();
        prop_assert!(check_pcc(&m) < CONDITION_TOLERANCE);
        prop_assert!(check_tri(&m).unwrap() < CONDITION_TOLERANCE);
        prop_assert!(check_unimodular(&m) < 1e-12);
    }

    #[test]
    fn chain_products_stay_unimodular(
        strengths in prop::collection::vec(-2.0..2.0f64, 1..6),
        k in 0.5..3.0f64,
        length in 1.0..6.0f64,
    ) {
        let c: Vec<Complex64> = strengths.iter().map(|&s| s.into()).collect();
        let total = total_matrix(&chain(&c, length, k), k);
        let scale = total.max_abs().powi(2).max(1.0);
        prop_assert!(check_unimodular(&total) < 1e-10 * scale);
        prop_assert!(check_pcc(&total) < 1e-10 * scale);
    }

    #[test]
    fn flux_is_conserved(strengths in prop::collection::vec(-2.0..2.0f64, 1..6), k in 0.3..3.0f64, length in 1.0..6.0f64) {
        let c: Vec<Complex64> = strengths.iter().map(|&s| s.into()).collect();
        let regions = propagate_amplitudes(&chain(&c, length, k), k, 1.0.into()).unwrap();
        let reflected = regions[0].g.norm_sqr();
        let transmitted = regions.last().unwrap().f.norm_sqr();
        prop_assert!((reflected + transmitted - 1.0).abs() < 1e-9);
    }

    #[test]
    fn periodic_chain_has_constant_translation_currents(
        strength in -2.0..2.0f64, count in 2usize..7, k in 0.2..3.0f64, length in 1.0..8.0f64,
    ) {
        let c = vec![Complex64::from(strength); count];
        let (q, qc) = translation_currents(&chain(&c, length, k), k, length);
        prop_assert!(spread(&q) < 1e-9 * k);
        prop_assert!(spread(&qc) < 1e-9 * k);
    }

    #[test]
    fn pcc_alone_keeps_translation_q(strength in 0.3..2.0f64, count in 3usize..7, k in 0.3..3.0f64, phi in 0.2..1.2f64) {
        let length = 5.0;
        let c = vec![Complex64::from(strength); count];
        let broken = with_phase(chain(&c, length, k), phi);
        prop_assert!(check_pcc(&broken[0].matrix()) < CONDITION_TOLERANCE);
        prop_assert!(check_tri(&broken[0].matrix()).unwrap() > 1e-3);
        let (q, qc) = translation_currents(&broken, k, length);
        prop_assert!(spread(&q) < 1e-9 * k);
        // Qᶜ needs time reversal as well
        prop_assert!(spread(&qc) > 1e-6 * max_norm(&qc));
    }

    #[test]
    fn mirror_chain_has_constant_inversion_currents(
        half in prop::collection::vec(-2.0..2.0f64, 1..4), k in 0.2..3.0f64, length in 1.0..8.0f64,
    ) {
        let c = mirrored(&half);
        let (q, qc) = inversion_currents(&chain(&c, length, k), k, length);
        prop_assert!(spread(&q) < 1e-9 * k);
        prop_assert!(spread(&qc) < 1e-9 * k);
    }

    #[test]
    fn pcc_alone_keeps_inversion_qc_but_not_q(
        half in prop::collection::vec(0.3..2.0f64, 2..4), k in 0.3..3.0f64, phi in 0.2..1.2f64,
    ) {
        let length = 5.0;
        let broken = with_phase(chain(&mirrored(&half), length, k), phi);
        let (q, qc) = inversion_currents(&broken, k, length);
        prop_assert!(spread(&qc) < 1e-9 * k);
        prop_assert!(spread(&q) > 1e-6 * max_norm(&q));
    }

    #[test]
    fn analytic_plateaus_match_pipeline(strength in 0.0..5.0f64, k in 0.05..5.0f64, length in 0.5..10.0f64, phase in 0.0..6.28f64) {
        let f0 = Complex64::from_polar(1.0, phase);
        let a = delta_defect_analytic(strength, k, length, f0).unwrap();
        let n = delta_defect_numeric(strength, k, length, f0).unwrap();
        for (x, y) in [(a.left, n.left), (a.center, n.center), (a.right, n.right)] {
            prop_assert!((x - y).norm() < 1e-12 * k);
        }
    }

    #[test]
    fn host_barriers_keep_plateaus_flat(host in 0.1..2.0f64, defect in 0.1..3.0f64, k in 0.3..3.0f64) {
        // Q is constant across every non-defect barrier, also when they are
        // not empty.
        let length = 5.0;
        let c: Vec<Complex64> = [host, host, defect, host, host].iter().map(|&s| s.into()).collect();
        let (q, _) = translation_currents(&chain(&c, length, k), k, length);
        prop_assert!((q[0] - q[1]).norm() < 1e-9 * k);
        prop_assert!((q[3] - q[4]).norm() < 1e-9 * k);
    }
}

#[test]
fn absorbing_barriers_break_translation_and_inversion() {
    let (k, length) = (0.83, 5.0);
    let lossy = vec![Complex64::new(0.7, 0.2); 5];
    let c = chain(&lossy, length, k);
    assert!(check_pcc(&c[0].matrix()) > 1e-3);
    assert!(check_tri(&c[0].matrix()).unwrap() > 1e-3);
    let (q, _) = translation_currents(&c, k, length);
    assert!(spread(&q) > 1e-3);
    let (q, _) = inversion_currents(&c, k, length);
    assert!(spread(&q) > 1e-3);
}

#[test]
fn asymmetric_chain_breaks_inversion() {
    let (k, length) = (0.83, 5.0);
    let c: Vec<Complex64> = [0.4, 1.3, 0.7].iter().map(|&s| s.into()).collect();
    let (q, _) = inversion_currents(&chain(&c, length, k), k, length);
    assert!(spread(&q) > 1e-3);
}

#[test]
fn total_reflection_plateau() {
    let (k, length) = (1.1, 5.0);
    let p = delta_defect_numeric(1e9, k, length, 1.0.into()).unwrap();
    let expected = Complex64::new(0.0, 2.0 * k * (k * length).sin());
    assert!((p.left - expected).norm() < 1e-8);
    assert!(p.center.norm() < 1e-8 && p.right.norm() < 1e-8);
}

#[test]
fn opaque_barrier_reflects_everything() {
    let k = 0.7;
    let regions = propagate_amplitudes(&[Scatterer::delta(0.0, 1e8, k).unwrap()], k, 1.0.into()).unwrap();
    assert!(regions[1].f.norm() < 1e-7);
    assert!((regions[0].g.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn free_chain_translation_current_is_plane_wave_value() {
    let (k, length) = (0.9, 5.0);
    let c = chain(&[0.0.into(); 3], length, k);
    let (q, qc) = translation_currents(&c, k, length);
    for v in q {
        assert!((v - Complex64::from_polar(k, k * length)).norm() < 1e-14);
    }
    for v in qc {
        assert!(v.norm() < 1e-14);
    }
}

#[test]
fn two_delta_resonance_matches_phase_condition() {
    // Reflection vanishes when e^{2ikd} = (a - 1)/(a + 1). Solve that for
    // the first root by bisection and compare with a brute-force scan of
    // |t(k)|².
    let (strength, d) = (0.5, 3.0);
    let mismatch = |k: f64| {
        let a = Complex64::new(0.0, -strength / k);
        let target = (a - 1.0) / (a + 1.0);
        let phase = (Complex64::from_polar(1.0, 2.0 * k * d) / target).arg();
        phase
    };
    let transmission = |k: f64| {
        let c = [Scatterer::delta(0.0, strength, k).unwrap(), Scatterer::delta(d, strength, k).unwrap()];
        propagate_amplitudes(&c, k, 1.0.into()).unwrap()[2].f.norm_sqr()
    };
    let (mut best_k, mut best_t) = (0.0, 0.0);
    for i in 1..=20000 {
        let k = 1e-4 * i as f64;
        let t = transmission(k);
        if t > best_t {
            best_k = k;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = (best_k - 0.01, best_k + 0.01);
    assert!(mismatch(lo) * mismatch(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mismatch(lo) * mismatch(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    assert!((root - best_k).abs() < 2e-4);
    assert!((transmission(root) - 1.0).abs() < 1e-12);
}

#[test]
fn periodic_delta_state_is_region_constant_under_translation() {
    let positions = [-10.0, -5.0, 0.0, 5.0, 10.0];
    let strengths = [0.9; 5];
    let state = periodic_delta_ground_state(&positions, &strengths, 25.0).unwrap();
    let q: Vec<Complex64> = (0..40).map(|i| state.two_point_current(-12.4 + 0.61 * i as f64, 5.0)).collect();
    assert!(spread(&q) < 1e-12);
    // a real standing wave
    assert!(state.eval(3.3).0.im.abs() < 1e-12);
}
