//! Hidden-influence scenario: Alice's measurement choice, made before two
//! distant particles on Bob's side are measured simultaneously, changes
//! whether those two outcomes are correlated once v_λ is finite.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{influence_arrives, x_causally_connected, Event, SrxConfig};
use crate::error::{Error, Result};
use crate::rng::{stream, trial_rng};
use crate::singlet::mean_se;

/// Alice at the origin at time `t_a`; Bob's two particles at (L, ±R/2),
/// both measured at `t_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HieGeometry {
    pub distance: f64,
    pub separation: f64,
    pub t_a: f64,
    pub t_b: f64,
}

impl HieGeometry {
    pub fn new(distance: f64, separation: f64, t_a: f64, t_b: f64) -> Result<Self> {
        if !(separation > 0.0) || !(distance >= 10.0 * separation) {
            return Err(Error::Geometry(format!("need R > 0 and L ≥ 10R, got L = {distance}, R = {separation}")));
        }
        if !(t_b > t_a) || !t_a.is_finite() || !t_b.is_finite() {
            return Err(Error::Geometry(format!("need t_B > t_A, got {t_a} and {t_b}")));
        }
        Ok(Self { distance, separation, t_a, t_b })
    }

    /// |Δx|/|Δt| from Alice to either particle.
    pub fn experimental_speed(&self) -> f64 {
        self.distance.hypot(self.separation / 2.0) / (self.t_b - self.t_a)
    }

    pub fn events(&self) -> [Event; 3] {
        [
            Event::new("A", self.t_a, [0.0, 0.0]),
            Event::new("B1", self.t_b, [self.distance, self.separation / 2.0]),
            Event::new("B2", self.t_b, [self.distance, -self.separation / 2.0]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HieArm {
    pub alice_measures: bool,
    pub trials: u64,
    /// Mean of (-1)^(B1 ⊕ B2).
    pub corr: f64,
    pub stderr: f64,
    pub reaches_particles: bool,
    pub particles_linked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HieReport {
    pub geometry: HieGeometry,
    pub v_exp: f64,
    pub measured: HieArm,
    pub idle: HieArm,
    /// |Corr(measures) - Corr(idle)|.
    pub signal: f64,
    pub signal_se: f64,
}

/// One arm of the scenario. Per trial: if Alice measures and her influence
/// reaches both particles, both output her outcome; otherwise, if the two
/// particles can influence each other, they output a common shared bit;
/// otherwise they output independent fair bits.
pub fn hie_arm(cfg: &SrxConfig, geom: &HieGeometry, alice_measures: bool, trials: u64, seed: u64) -> Result<HieArm> {
    if trials == 0 {
        return Err(Error::OutOfRange { name: "trials", value: 0.0, range: "N ≥ 1" });
    }
    let [a, b1, b2] = geom.events();
    let reaches = influence_arrives(&a, &b1, cfg) && influence_arrives(&a, &b2, cfg);
    let linked = x_causally_connected(&b1, &b2, cfg);
    let arm = u64::from(alice_measures);
    let disagreements: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, stream::SHARED, arm, t);
            let alice_bit: bool = rng.random();
            let shared_bit: bool = rng.random();
            let (o1, o2) = if alice_measures && reaches {
                (alice_bit, alice_bit)
            } else if linked {
                (shared_bit, shared_bit)
            } else {
                (rng.random::<bool>(), rng.random::<bool>())
            };
            u64::from(o1 != o2)
        })
        .sum();
    let (p, se) = mean_se(disagreements, trials);
    Ok(HieArm {
        alice_measures,
        trials,
        corr: 1.0 - 2.0 * p,
        stderr: 2.0 * se,
        reaches_particles: reaches,
        particles_linked: linked,
    })
}

pub fn hidden_influence_scenario(cfg: &SrxConfig, geom: &HieGeometry, trials: u64, seed: u64) -> Result<HieReport> {
    let measured = hie_arm(cfg, geom, true, trials, seed)?;
    let idle = hie_arm(cfg, geom, false, trials, seed)?;
    Ok(HieReport {
        geometry: *geom,
        v_exp: geom.experimental_speed(),
        signal: (measured.corr - idle.corr).abs(),
        signal_se: measured.stderr.hypot(idle.stderr),
        measured,
        idle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srx::SignalSpeed;

    #[test]
    fn geometry_validation() {
        assert!(HieGeometry::new(5.0, 1.0, 0.0, 1.0).is_err());
        assert!(HieGeometry::new(10.0, 1.0, 1.0, 1.0).is_err());
        assert!(HieGeometry::new(10.0, 0.0, 0.0, 1.0).is_err());
        assert!(HieGeometry::new(10.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn finite_speed_signals_when_alice_reaches() {
        let geom = HieGeometry::new(100.0, 1.0, 0.0, 10.0).unwrap();
        let cfg = SrxConfig::new(SignalSpeed::Finite(50.0)).unwrap();
        let r = hidden_influence_scenario(&cfg, &geom, 10_000, 1).unwrap();
        assert_eq!(r.measured.corr, 1.0);
        assert!(r.signal > 0.95);
    }

    #[test]
    fn newtonian_has_no_signal() {
        let geom = HieGeometry::new(100.0, 1.0, 0.0, 10.0).unwrap();
        let r = hidden_influence_scenario(&SrxConfig::newtonian(), &geom, 1000, 1).unwrap();
        assert_eq!(r.signal, 0.0);
    }

    #[test]
    fn too_slow_influence_has_no_signal_either() {
        let geom = HieGeometry::new(100.0, 1.0, 0.0, 10.0).unwrap();
        let cfg = SrxConfig::new(SignalSpeed::Finite(5.0)).unwrap();
        let r = hidden_influence_scenario(&cfg, &geom, 10_000, 1).unwrap();
        assert!(!r.measured.reaches_particles);
        assert!(r.signal < 5.0 * r.signal_se);
    }
}
