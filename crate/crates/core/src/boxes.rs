//! The sixteen deterministic extreme boxes of the fragment: eight 0-bit
//! (local, Λ = 2) and eight 1-bit (Λ = 4, one bit of communication).

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correlation::Correlation16;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output table of one deterministic box: `(x, y)` for input rows
/// ab = 00, 01, 10, 11.
pub type OutputTable = [(u8, u8); 4];

/// Local-deterministic boxes d^{j_0}.
pub const ZERO_BIT_TABLE: [OutputTable; 8] = [
    [(0, 0), (0, 0), (0, 0), (0, 0)],
    [(0, 0), (0, 0), (1, 0), (1, 0)],
    [(0, 1), (0, 0), (0, 1), (0, 0)],
    [(1, 1), (1, 0), (0, 1), (0, 0)],
    [(0, 0), (0, 1), (1, 0), (1, 1)],
    [(1, 0), (1, 1), (1, 0), (1, 1)],
    [(1, 1), (1, 1), (0, 1), (0, 1)],
    [(1, 1), (1, 1), (1, 1), (1, 1)],
];

/// One-bit boxes d^{j_1}.
pub const ONE_BIT_TABLE: [OutputTable; 8] = [
    [(0, 0), (0, 0), (0, 1), (0, 0)],
    [(1, 1), (1, 1), (0, 1), (0, 0)],
    [(0, 0), (0, 0), (1, 0), (1, 1)],
    [(1, 1), (1, 1), (1, 0), (1, 1)],
    [(0, 0), (0, 0), (1, 0), (0, 0)],
    [(1, 1), (0, 0), (0, 1), (0, 0)],
    [(0, 0), (1, 1), (1, 0), (1, 1)],
    [(1, 1), (1, 1), (0, 1), (1, 1)],
];

/// SHA-256 of [`table_bytes`] for the embedded tables.
pub const TABLE_CHECKSUM: &str = "6bb0ce0e4d8ef3dbae68a76280d5e5e050641183a72801b58266c24175aa0fdd";

/// Box/antibox pairs among the 1-bit boxes.
pub const ANTIBOX_PAIRS: [(usize, usize); 4] = [(0, 3), (1, 2), (4, 7), (5, 6)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoxKind {
    #[serde(rename = "0bit")]
    ZeroBit,
    #[serde(rename = "1bit")]
    OneBit,
}

/// One of the sixteen extreme points, serialized as `{"kind": "0bit", "j": 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeterministicBox {
    pub kind: BoxKind,
    pub j: usize,
}

impl DeterministicBox {
    pub fn new(kind: BoxKind, j: usize) -> Result<Self> {
        if j >= 8 {
            return Err(Error::BoxIndex(j));
        }
        Ok(Self { kind, j })
    }

    pub const fn zero_bit(j: usize) -> Self {
        assert!(j < 8);
        Self { kind: BoxKind::ZeroBit, j }
    }

    pub const fn one_bit(j: usize) -> Self {
        assert!(j < 8);
        Self { kind: BoxKind::OneBit, j }
    }

    /// All sixteen boxes: 0-bit first, then 1-bit, each by `j`.
    pub fn all() -> impl Iterator<Item = DeterministicBox> {
        (0..8).map(Self::zero_bit).chain((0..8).map(Self::one_bit))
    }

    /// Position in [`DeterministicBox::all`].
    pub fn ordinal(&self) -> usize {
        match self.kind {
            BoxKind::ZeroBit => self.j,
            BoxKind::OneBit => 8 + self.j,
        }
    }

    pub fn from_ordinal(i: usize) -> Result<Self> {
        match i {
            0..=7 => Ok(Self::zero_bit(i)),
            8..=15 => Ok(Self::one_bit(i - 8)),
            _ => Err(Error::BoxIndex(i)),
        }
    }

    pub fn table(&self) -> OutputTable {
        match self.kind {
            BoxKind::ZeroBit => ZERO_BIT_TABLE[self.j],
            BoxKind::OneBit => ONE_BIT_TABLE[self.j],
        }
    }

    /// `(x, y)` for inputs `(a, b)`.
    pub fn outputs(&self, a: u8, b: u8) -> (u8, u8) {
        self.table()[((a as usize) << 1) | b as usize]
    }

    pub fn as_correlation<T: Scalar>(&self) -> Correlation16<T> {
        Correlation16::deterministic(self.table())
    }

    /// The 1-bit box with complementary outputs; `None` for 0-bit boxes.
    pub fn antibox(&self) -> Option<Self> {
        match self.kind {
            BoxKind::ZeroBit => None,
            BoxKind::OneBit => ANTIBOX_PAIRS.iter().find_map(|&(p, q)| {
                if p == self.j {
                    Some(Self::one_bit(q))
                } else if q == self.j {
                    Some(Self::one_bit(p))
                } else {
                    None
                }
            }),
        }
    }

    /// Input row (ab = 00, 01, 10, 11) at which the box's outputs disagree
    /// with the CHSH sign pattern. 0-bit boxes have exactly one such row;
    /// 1-bit boxes have none.
    pub fn chsh_violating_row(&self) -> Option<usize> {
        let mut rows = (0..4usize).filter(|&r| {
            let (a, b) = ((r >> 1) as u8, (r & 1) as u8);
            let (x, y) = self.outputs(a, b);
            (x ^ y) != (a & (b ^ 1))
        });
        let first = rows.next();
        debug_assert!(rows.next().is_none());
        first
    }

    /// Whether Alice's output needs Bob's input (communication B→A) rather
    /// than the other way round.
    pub fn needs_bob_to_alice(&self) -> bool {
        (0..2u8).any(|a| self.outputs(a, 0).0 != self.outputs(a, 1).0)
    }

    /// Whether Bob's output needs Alice's input (communication A→B).
    pub fn needs_alice_to_bob(&self) -> bool {
        (0..2u8).any(|b| self.outputs(0, b).1 != self.outputs(1, b).1)
    }
}

impl fmt::Display for DeterministicBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            BoxKind::ZeroBit => 0,
            BoxKind::OneBit => 1,
        };
        write!(f, "d^{{{}_{}}}", self.j, k)
    }
}

/// Canonical byte image of a pair of tables: for each table, for each box,
/// for each input row, the output pair as `2x + y`.
pub fn table_bytes(zero: &[OutputTable; 8], one: &[OutputTable; 8]) -> Vec<u8> {
    zero.iter()
        .chain(one.iter())
        .flat_map(|t| t.iter().map(|&(x, y)| 2 * x + y))
        .collect()
}

/// Hex SHA-256 of [`table_bytes`].
pub fn table_checksum(zero: &[OutputTable; 8], one: &[OutputTable; 8]) -> String {
    let digest = Sha256::digest(table_bytes(zero, one));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
