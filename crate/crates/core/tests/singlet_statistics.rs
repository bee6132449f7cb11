use boxlab_core::singlet::{run_singlet_sim, theta_grid, MeasurementPair, Variant};

fn grid() -> Vec<MeasurementPair> {
    theta_grid(12).into_iter().map(MeasurementPair::from_angle).collect()
}

fn check(variant: Variant, seed: u64) {
    let stats = run_singlet_sim(&variant, &grid(), 100_000, seed).unwrap();
    for p in &stats.points {
        assert!(p.z_score() <= 4.0, "{variant:?}: estimate {} target {} se {}", p.estimate, p.target, p.stderr);
        assert!((p.mean_a - 0.5).abs() <= 4.0 * p.se_a, "{variant:?}: <n_A> = {}", p.mean_a);
        assert!((p.mean_b - 0.5).abs() <= 4.0 * p.se_b, "{variant:?}: <n_B> = {}", p.mean_b);
    }
}

#[test]
fn pr_box_reproduces_singlet() {
    check(Variant::PrBox, 2024);
}

#[test]
fn toner_bacon_reproduces_singlet() {
    check(Variant::TonerBacon, 2025);
}

#[test]
fn general_resource_reproduces_singlet() {
    check(Variant::CBoxGeneral { s: 0.4 }, 2026);
}

#[test]
fn communication_counter() {
    let pairs = grid();
    let pr = run_singlet_sim(&Variant::PrBox, &pairs, 10_000, 1).unwrap();
    assert!(pr.points.iter().all(|p| p.comm_bits_per_trial == 0.0));
    let tb = run_singlet_sim(&Variant::TonerBacon, &pairs, 10_000, 1).unwrap();
    assert!(tb.points.iter().all(|p| p.comm_bits_per_trial == 1.0));
}

#[test]
fn shared_directions_are_uniform() {
    use boxlab_core::rng::trial_rng;
    use boxlab_core::singlet::random_unit_vector;
    // Each coordinate of a uniform direction is uniform on [-1, 1]:
    // mean 0, second moment 1/3.
    let n = 200_000;
    let mut sums = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for t in 0..n {
        let v = random_unit_vector(&mut trial_rng(5, 0, 0, t));
        for i in 0..3 {
            sums[i] += v[i];
            sq[i] += v[i] * v[i];
        }
    }
    for i in 0..3 {
        let mean = sums[i] / n as f64;
        let m2 = sq[i] / n as f64;
        assert!(mean.abs() < 4.0 * (1.0f64 / 3.0 / n as f64).sqrt(), "axis {i} mean {mean}");
        assert!((m2 - 1.0 / 3.0).abs() < 0.005, "axis {i} second moment {m2}");
    }
}
