use proptest::prelude::*;
use spikeshrink_core::spike_maps::*;

fn p(g: f64) -> Framework {
    Framework::proportional(g).unwrap()
}

#[test]
fn proportional_degenerates_to_hat_and_bar() {
    // Raw maps at spike 1 + sqrt(g) x converge to the hat maps as g -> 0.
    for x in [0.5, 1.5, 2.0, 4.0] {
        let want = eigmap(SpikeValue::hat(x), Framework::DisproZero).unwrap();
        let c_want = cosine2(SpikeValue::hat(x), Framework::DisproZero).unwrap();
        for g in [1e-4f64, 1e-6, 1e-8] {
            let l = 1.0 + g.sqrt() * x;
            let lam = eigmap(SpikeValue::raw(l), p(g)).unwrap();
            let c = cosine2(SpikeValue::raw(l), p(g)).unwrap();
            assert!((to_hat(lam, g).unwrap() - want).abs() < 10.0 * g.sqrt(), "x={x} g={g}");
            assert!((c - c_want).abs() < 10.0 * g.sqrt());
        }
        let want = eigmap(SpikeValue::bar(x), Framework::DisproInf).unwrap();
        let c_want = cosine2(SpikeValue::bar(x), Framework::DisproInf).unwrap();
        for g in [1e4f64, 1e6, 1e8] {
            let l = 1.0 + g * x;
            let lam = eigmap(SpikeValue::raw(l), p(g)).unwrap();
            let c = cosine2(SpikeValue::raw(l), p(g)).unwrap();
            assert!((to_bar(lam, g).unwrap() - want).abs() < 10.0 / g.sqrt(), "x={x} g={g}");
            assert!((c - c_want).abs() < 10.0 / g.sqrt());
        }
    }
}

#[test]
fn wigner_matches_dzero_on_positive_spikes() {
    for k in 0..=400 {
        let x = k as f64 * 0.02;
        let a = eigmap(SpikeValue::hat(x), Framework::DisproZero).unwrap();
        let b = eigmap(SpikeValue::theta(x), Framework::Wigner).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        let a = cosine2(SpikeValue::hat(x), Framework::DisproZero).unwrap();
        let b = cosine2(SpikeValue::theta(x), Framework::Wigner).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn signal_plus_noise_hat_limit() {
    for tau in [1.2, std::f64::consts::SQRT_2, 3.0] {
        for beta in [1e-2, 1e-4] {
            let lam = spn_eigenvalue_limit(tau, beta).unwrap();
            let want = eigmap(SpikeValue::hat(tau * tau), Framework::DisproZero).unwrap();
            assert!((to_hat(lam, beta).unwrap() - want).abs() < 1e-12);
        }
    }
    assert_eq!(spn_cosines(0.5).unwrap(), (0.0, 0.0));
}

proptest! {
    #[test]
    fn proportional_round_trip(g in 1e-3f64..1e3, u in 1e-3f64..50.0) {
        let l = transition(g) + u * (1.0 + g.sqrt());
        let lam = eigmap(SpikeValue::raw(l), p(g)).unwrap();
        let back = eigmap_inv(lam, p(g)).unwrap().value;
        prop_assert!((back - l).abs() <= 1e-12 * l.max(1.0) * (1.0 + 1.0 / u), "l={} back={}", l, back);
    }

    #[test]
    fn hat_round_trip(x in 1.0f64..1e4) {
        let lam = eigmap(SpikeValue::hat(x), Framework::DisproZero).unwrap();
        let back = eigmap_inv(lam, Framework::DisproZero).unwrap().value;
        prop_assert!((back - x).abs() <= 1e-12 * x / (1.0 - 1.0 / x.powi(2)).max(1e-300).sqrt().max(1e-6));
    }

    #[test]
    fn wigner_odd(x in -50.0f64..50.0) {
        let a = eigmap(SpikeValue::theta(x), Framework::Wigner).unwrap();
        let b = eigmap(SpikeValue::theta(-x), Framework::Wigner).unwrap();
        prop_assert_eq!(a, -b);
        let a = cosine2(SpikeValue::theta(x), Framework::Wigner).unwrap();
        let b = cosine2(SpikeValue::theta(-x), Framework::Wigner).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn coordinate_maps_invert(x in -1e3f64..1e3, g in 1e-8f64..1e8) {
        let h = to_hat(from_hat(x, g).unwrap(), g).unwrap();
        prop_assert!((h - x).abs() <= 1e-12 * (x.abs() + 1.0 + g.sqrt() + 1.0 / g.sqrt()));
        let b = to_bar(from_bar(x, g).unwrap(), g).unwrap();
        prop_assert!((b - x).abs() <= 1e-12 * (x.abs() + 1.0 / g));
    }

    #[test]
    fn eigmap_monotone_and_cosine_bounded(g in 1e-3f64..1e2, a in 0.0f64..20.0, d in 1e-6f64..5.0) {
        let fw = p(g);
        let l1 = 1.0 + a;
        let l2 = l1 + d;
        prop_assert!(eigmap(SpikeValue::raw(l2), fw).unwrap() >= eigmap(SpikeValue::raw(l1), fw).unwrap());
        let c = cosine2(SpikeValue::raw(l1), fw).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }
}
