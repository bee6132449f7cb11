use boxlab_core::rng::trial_rng;
use boxlab_core::singlet::{run_singlet_sim, theta_grid, MeasurementPair, Variant};
use boxlab_core::srx::{
    embed_singlet, frame_orderings, sr_connected, x_causally_connected, EmbedOptions, Event, SignalSpeed, SrxConfig,
};
use proptest::prelude::*;
use rand::Rng;

fn event() -> impl Strategy<Value = Event> {
    (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(t, x, y)| Event::new("e", t, [x, y]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn connectivity_is_monotone_in_speed(e1 in event(), e2 in event(), v in 1.0..100.0f64, extra in 0.0..100.0f64) {
        let slow = SrxConfig::new(SignalSpeed::Finite(v)).unwrap();
        let fast = SrxConfig::new(SignalSpeed::Finite(v + extra)).unwrap();
        if x_causally_connected(&e1, &e2, &slow) {
            prop_assert!(x_causally_connected(&e1, &e2, &fast));
            prop_assert!(x_causally_connected(&e1, &e2, &SrxConfig::newtonian()));
        }
    }

    #[test]
    fn connectivity_is_symmetric(e1 in event(), e2 in event(), v in 1.0..10.0f64) {
        let cfg = SrxConfig::new(SignalSpeed::Finite(v)).unwrap();
        prop_assert_eq!(x_causally_connected(&e1, &e2, &cfg), x_causally_connected(&e2, &e1, &cfg));
    }

    #[test]
    fn timelike_order_survives_boosts(e1 in event(), e2 in event(), v in -0.99..0.99f64) {
        if e1.distance(&e2) < (e2.t - e1.t).abs() {
            prop_assert!(frame_orderings(&e1, &e2, v).unwrap().agree);
        }
    }
}

#[test]
fn light_speed_extension_is_the_light_cone() {
    let mut rng = trial_rng(2024, 1, 0, 0);
    let sr = SrxConfig::special_relativity();
    let mut connected = 0;
    for _ in 0..10_000 {
        let mut e = || Event::new("e", rng.random_range(-10.0..10.0), [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)]);
        let (a, b) = (e(), e());
        assert_eq!(x_causally_connected(&a, &b, &sr), sr_connected(&a, &b));
        connected += usize::from(sr_connected(&a, &b));
    }
    // Both outcomes occur often enough for the comparison to mean something.
    assert!(connected > 1000 && connected < 9000);
}

#[test]
fn newtonian_extension_connects_everything() {
    let mut rng = trial_rng(7, 1, 0, 0);
    for _ in 0..1000 {
        let mut e = || Event::new("e", rng.random_range(-1.0..1.0), [rng.random_range(-1e9..1e9), 0.0]);
        assert!(x_causally_connected(&e(), &e(), &SrxConfig::newtonian()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn always_delivered_runs_match_the_bare_simulation(seed in any::<u64>(), dt in 0.0..5.0f64, dx in 0.0..5.0f64, s in 0.0..1.0f64) {
        let pairs: Vec<_> = theta_grid(3).into_iter().map(MeasurementPair::from_angle).collect();
        let variant = Variant::CBoxGeneral { s };
        let bare = run_singlet_sim(&variant, &pairs, 400, seed).unwrap();
        let a = Event::new("A", 0.0, [0.0, 0.0]);
        let b = Event::new("B", dt, [dx, 0.0]);
        let emb = embed_singlet(&SrxConfig::newtonian(), &a, &b, variant, &pairs, None, 400, seed, EmbedOptions::default()).unwrap();
        prop_assert_eq!(emb.stats, bare.points);
    }
}
