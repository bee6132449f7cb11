//! Extensions of special relativity with a hidden influence of speed
//! v_λ ≥ c, defined in a preferred frame. Units: c = 1.

mod embed;
mod hie;
mod protocols;

pub use embed::*;
pub use hie::*;
pub use protocols::*;

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Speed of hidden influences quoted as a lower bound from gravitational
/// arguments, in units of c. Documentation only; nothing depends on it.
pub const QUANTUM_GRAVITY_SPEED_BOUND: f64 = 1e61;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalSpeed {
    Finite(f64),
    /// Newtonian extension: every event can influence every later or
    /// simultaneous event.
    Infinite,
}

impl SignalSpeed {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(SignalSpeed::Infinite),
            other => other
                .parse::<f64>()
                .map(SignalSpeed::Finite)
                .map_err(|_| Error::Geometry(format!("cannot read speed {text:?}"))),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            SignalSpeed::Finite(v) => *v,
            SignalSpeed::Infinite => f64::INFINITY,
        }
    }

    /// Whether this speed is at least `v`; ∞ is at least anything.
    pub fn reaches(&self, v: f64) -> bool {
        match self {
            SignalSpeed::Infinite => true,
            SignalSpeed::Finite(s) => v <= *s,
        }
    }
}

impl Serialize for SignalSpeed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SignalSpeed::Finite(v) => s.serialize_f64(*v),
            SignalSpeed::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SignalSpeed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(SignalSpeed::Finite(v)),
            Repr::Text(t) => SignalSpeed::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrxConfig {
    pub v_lambda: SignalSpeed,
}

impl SrxConfig {
    pub fn new(v_lambda: SignalSpeed) -> Result<Self> {
        if let SignalSpeed::Finite(v) = v_lambda {
            if v.is_nan() || v < 1.0 {
                return Err(Error::OutOfRange { name: "v_lambda", value: v, range: "[1, ∞]" });
            }
        }
        Ok(Self { v_lambda })
    }

    pub fn newtonian() -> Self {
        Self { v_lambda: SignalSpeed::Infinite }
    }

    pub fn special_relativity() -> Self {
        Self { v_lambda: SignalSpeed::Finite(1.0) }
    }

    /// Half-opening angle of the widened cone, tan θ_λ = v_λ; π/2 for ∞.
    pub fn theta_lambda(&self) -> f64 {
        match self.v_lambda {
            SignalSpeed::Finite(v) => v.atan(),
            SignalSpeed::Infinite => std::f64::consts::FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: [f64; 2],
    #[serde(default)]
    pub label: String,
}

impl Event {
    pub fn new(label: &str, t: f64, x: [f64; 2]) -> Self {
        Self { t, x, label: label.to_string() }
    }

    pub fn distance(&self, other: &Event) -> f64 {
        (self.x[0] - other.x[0]).hypot(self.x[1] - other.x[1])
    }
}

/// Apparent speed |Δx|/|Δt| of an influence linking the two events; ∞ for
/// distinct simultaneous events, 0 for coincident ones.
pub fn experimental_speed(e1: &Event, e2: &Event) -> f64 {
    let dx = e1.distance(e2);
    let dt = (e2.t - e1.t).abs();
    if dx == 0.0 {
        0.0
    } else if dt == 0.0 {
        f64::INFINITY
    } else {
        dx / dt
    }
}

/// Whether a hidden influence can link the two events in either direction.
pub fn x_causally_connected(e1: &Event, e2: &Event, cfg: &SrxConfig) -> bool {
    cfg.v_lambda.reaches(experimental_speed(e1, e2))
}

/// Whether an influence emitted at `from` is present at `to`: `to` is not
/// earlier and the pair is connected.
pub fn influence_arrives(from: &Event, to: &Event, cfg: &SrxConfig) -> bool {
    to.t >= from.t && x_causally_connected(from, to, cfg)
}

/// Ordinary light-cone test (timelike or lightlike separation).
pub fn sr_connected(e1: &Event, e2: &Event) -> bool {
    e1.distance(e2) <= (e2.t - e1.t).abs()
}

/// Sign of t₂ - t₁ (-1, 0, 1) in each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameOrdering {
    pub preferred: i8,
    pub boosted: i8,
    pub agree: bool,
}

/// Time order of two events in the preferred frame and in a frame moving
/// at `v` (|v| < 1) along the first spatial axis: t' = γ(t - v x).
pub fn frame_orderings(e1: &Event, e2: &Event, v: f64) -> Result<FrameOrdering> {
    if !(v.abs() < 1.0) {
        return Err(Error::OutOfRange { name: "boost", value: v, range: "(-1, 1)" });
    }
    let gamma = 1.0 / (1.0 - v * v).sqrt();
    let boosted = |e: &Event| gamma * (e.t - v * e.x[0]);
    let sign = |t1: f64, t2: f64| match t2.partial_cmp(&t1).unwrap_or(Ordering::Equal) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    };
    let preferred = sign(e1.t, e2.t);
    let b = sign(boosted(e1), boosted(e2));
    Ok(FrameOrdering { preferred, boosted: b, agree: preferred == b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connectivity_examples() {
        let a = Event::new("a", 0.0, [0.0, 0.0]);
        let b = Event::new("b", 1.0, [2.0, 0.0]);
        assert!(x_causally_connected(&a, &b, &SrxConfig::newtonian()));
        assert!(!x_causally_connected(&a, &b, &SrxConfig::special_relativity()));
        assert!(x_causally_connected(&a, &b, &SrxConfig::new(SignalSpeed::Finite(3.0)).unwrap()));
        let simultaneous = Event::new("c", 0.0, [5.0, 0.0]);
        assert!(x_causally_connected(&a, &simultaneous, &SrxConfig::newtonian()));
        assert!(!x_causally_connected(&a, &simultaneous, &SrxConfig::new(SignalSpeed::Finite(1e9)).unwrap()));
    }

    #[test]
    fn speeds_below_light_rejected() {
        assert!(SrxConfig::new(SignalSpeed::Finite(0.5)).is_err());
        assert!(SrxConfig::new(SignalSpeed::Finite(f64::NAN)).is_err());
    }

    #[test]
    fn opening_angle() {
        assert!((SrxConfig::special_relativity().theta_lambda() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(SrxConfig::newtonian().theta_lambda(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn influence_needs_later_target() {
        let a = Event::new("a", 1.0, [0.0, 0.0]);
        let b = Event::new("b", 0.0, [0.1, 0.0]);
        assert!(!influence_arrives(&a, &b, &SrxConfig::newtonian()));
        assert!(influence_arrives(&b, &a, &SrxConfig::newtonian()));
    }

    #[test]
    fn speed_serde() {
        let cfg: SrxConfig = serde_json::from_str(r#"{"v_lambda": "inf"}"#).unwrap();
        assert_eq!(cfg.v_lambda, SignalSpeed::Infinite);
        let cfg: SrxConfig = serde_json::from_str(r#"{"v_lambda": 2.5}"#).unwrap();
        assert_eq!(cfg.v_lambda, SignalSpeed::Finite(2.5));
        assert_eq!(serde_json::to_string(&SignalSpeed::Infinite).unwrap(), r#""inf""#);
    }

    #[test]
    fn boosted_order_can_flip_for_spacelike_pairs() {
        let a = Event::new("a", 0.0, [0.0, 0.0]);
        let b = Event::new("b", 0.1, [1.0, 0.0]);
        let o = frame_orderings(&a, &b, 0.5).unwrap();
        assert!(!o.agree);
        let timelike = Event::new("c", 2.0, [1.0, 0.0]);
        assert!(frame_orderings(&a, &timelike, 0.9).unwrap().agree);
        assert!(frame_orderings(&a, &b, 1.0).is_err());
    }
}
