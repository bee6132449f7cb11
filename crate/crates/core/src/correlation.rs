//! Two-party, two-input, two-output correlation boxes P(x,y|a,b).
//!
//! Entries are packed as `a*8 + b*4 + x*2 + y`. That layout is also the
//! JSON layout: a box serializes as a flat 16-element array.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Scalar, Q};

/// Packed index of P(x,y|a,b).
#[inline]
pub const fn index(a: u8, b: u8, x: u8, y: u8) -> usize {
    ((a as usize) << 3) | ((b as usize) << 2) | ((x as usize) << 1) | (y as usize)
}

/// Inverse of [`index`]: `(a, b, x, y)`.
#[inline]
pub const fn unpack(i: usize) -> (u8, u8, u8, u8) {
    (((i >> 3) & 1) as u8, ((i >> 2) & 1) as u8, ((i >> 1) & 1) as u8, (i & 1) as u8)
}

/// The four input pairs in row order 00, 01, 10, 11.
pub const INPUTS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// CHSH sign `(-1)^{a(b+1)}`: negative only for (a,b) = (1,0).
#[inline]
pub const fn chsh_sign(a: u8, b: u8) -> i64 {
    if a == 1 && b == 0 {
        -1
    } else {
        1
    }
}

/// A normalized conditional distribution P(x,y|a,b).
///
/// Construction validates non-negativity and the four normalization
/// conditions, so every value of this type is a valid box.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Correlation16<T = Q> {
    entries: [T; 16],
}

impl<T: Scalar> Correlation16<T> {
    pub fn new(entries: [T; 16]) -> Result<Self> {
        for (i, p) in entries.iter().enumerate() {
            if !p.nonneg() {
                return Err(Error::NegativeEntry { index: i, value: p.to_f64() });
            }
        }
        for (a, b) in INPUTS {
            let sum = (0..4).fold(T::zero(), |acc, o| {
                acc + entries[index(a, b, (o >> 1) as u8, (o & 1) as u8)].clone()
            });
            if !sum.near(&T::one()) {
                return Err(Error::NotNormalized { a, b, sum: sum.to_f64() });
            }
        }
        Ok(Self { entries })
    }

    pub fn from_slice(entries: &[T]) -> Result<Self> {
        let arr: [T; 16] = entries
            .to_vec()
            .try_into()
            .map_err(|v: Vec<T>| Error::WrongLength { expected: 16, got: v.len() })?;
        Self::new(arr)
    }

    /// Build from a rule `(a, b, x, y) -> P`.
    pub fn from_fn(mut f: impl FnMut(u8, u8, u8, u8) -> T) -> Result<Self> {
        Self::new(std::array::from_fn(|i| {
            let (a, b, x, y) = unpack(i);
            f(a, b, x, y)
        }))
    }

    /// Deterministic box from an output table indexed by input row `a*2+b`.
    pub fn deterministic(outputs: [(u8, u8); 4]) -> Self {
        let mut entries: [T; 16] = std::array::from_fn(|_| T::zero());
        for (row, (x, y)) in outputs.iter().enumerate() {
            let (a, b) = INPUTS[row];
            entries[index(a, b, *x, *y)] = T::one();
        }
        Self { entries }
    }

    /// All entries equal to 1/4.
    pub fn white_noise() -> Self {
        Self { entries: std::array::from_fn(|_| T::ratio(1, 4)) }
    }

    /// The PR box in the CHSH convention used here: x ⊕ y = a·(b ⊕ 1),
    /// uniform outputs.
    pub fn pr_box() -> Self {
        Self {
            entries: std::array::from_fn(|i| {
                let (a, b, x, y) = unpack(i);
                if (x ^ y) == (a & (b ^ 1)) {
                    T::half()
                } else {
                    T::zero()
                }
            }),
        }
    }

    pub fn entries(&self) -> &[T; 16] {
        &self.entries
    }

    pub fn get(&self, a: u8, b: u8, x: u8, y: u8) -> &T {
        &self.entries[index(a, b, x, y)]
    }

    /// Alice's marginal P(x|a,b).
    pub fn marginal_x(&self, a: u8, b: u8, x: u8) -> T {
        self.get(a, b, x, 0).clone() + self.get(a, b, x, 1).clone()
    }

    /// Bob's marginal P(y|a,b).
    pub fn marginal_y(&self, a: u8, b: u8, y: u8) -> T {
        self.get(a, b, 0, y).clone() + self.get(a, b, 1, y).clone()
    }

    /// E(a,b) = P(x=y|ab) - P(x≠y|ab).
    pub fn correlator(&self, a: u8, b: u8) -> T {
        let same = self.get(a, b, 0, 0).clone() + self.get(a, b, 1, 1).clone();
        let diff = self.get(a, b, 0, 1).clone() + self.get(a, b, 1, 0).clone();
        same - diff
    }

    /// CHSH functional Λ(P) = Σ_{a,b} (-1)^{a(b⊕1)} E(a,b), in [-4, 4].
    pub fn chsh_lambda(&self) -> T {
        INPUTS.iter().fold(T::zero(), |acc, &(a, b)| {
            let e = self.correlator(a, b);
            if chsh_sign(a, b) < 0 {
                acc - e
            } else {
                acc + e
            }
        })
    }

    /// Λ/2 - 1, the average communication needed to simulate a box in the
    /// fragment.
    pub fn c_lambda(&self) -> T {
        self.chsh_lambda() / T::ratio(2, 1) - T::one()
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|p| **p > T::zero()).count()
    }

    pub fn to_f64(&self) -> Correlation16<f64> {
        Correlation16 { entries: std::array::from_fn(|i| self.entries[i].to_f64()) }
    }

    /// Entrywise equality up to the mode tolerance.
    pub fn near(&self, other: &Self) -> bool {
        self.entries.iter().zip(other.entries.iter()).all(|(p, q)| p.near(q))
    }
}

impl Correlation16<f64> {
    /// Exact rational image of a float box (every double is dyadic).
    /// Re-validated exactly, so a float box that is only normalized to
    /// within tolerance is rejected here.
    pub fn to_exact(&self) -> Result<Correlation16<Q>> {
        Correlation16::new(std::array::from_fn(|i| Q::from_f64(self.entries[i])))
    }
}

/// Convex combination Σ wᵢ Pᵢ.
pub fn mix<T: Scalar>(components: &[(T, Correlation16<T>)]) -> Result<Correlation16<T>> {
    if components.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut total = T::zero();
    for (w, _) in components {
        if !w.nonneg() {
            return Err(Error::NegativeWeight(w.to_f64()));
        }
        total = total + w.clone();
    }
    if !total.near(&T::one()) {
        return Err(Error::WeightSum(total.to_f64()));
    }
    let entries = std::array::from_fn(|i| {
        components
            .iter()
            .fold(T::zero(), |acc, (w, p)| acc + w.clone() * p.entries[i].clone())
    });
    Ok(Correlation16 { entries })
}

impl<T: fmt::Debug> fmt::Debug for Correlation16<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Correlation16 {{")?;
        for (row, (a, b)) in INPUTS.iter().enumerate() {
            write!(f, "  ab={a}{b}:")?;
            for o in 0..4 {
                write!(f, " {:?}", self.entries[4 * row + o])?;
            }
            writeln!(f)?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Correlation16<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Correlation16<f64> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<f64> = Vec::deserialize(d)?;
        Correlation16::from_slice(&raw).map_err(D::Error::custom)
    }
}

impl Serialize for Correlation16<Q> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let text: Vec<String> = self.entries.iter().map(format_rational).collect();
        text.serialize(s)
    }
}

/// Rational entry as written in JSON: a `"n/d"` string or a plain number.
/// Numbers are read from their decimal text, so `0.1` means 1/10.
#[derive(Deserialize)]
#[serde(untagged)]
enum RationalRepr {
    Text(String),
    Number(serde_json::Number),
}

impl RationalRepr {
    fn parse(&self) -> Option<Q> {
        match self {
            RationalRepr::Text(t) => parse_rational(t),
            RationalRepr::Number(n) => parse_rational(&n.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Correlation16<Q> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<RationalRepr> = Vec::deserialize(d)?;
        let parsed = raw
            .iter()
            .map(|r| r.parse().ok_or_else(|| D::Error::custom("unparseable rational entry")))
            .collect::<std::result::Result<Vec<Q>, _>>()?;
        Correlation16::from_slice(&parsed).map_err(D::Error::custom)
    }
}
