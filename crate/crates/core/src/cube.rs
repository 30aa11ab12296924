//! Exact combinatorics of cube indices, configurations, and the abelian
//! algebra of diagonal/face transformations.
//!
//! Entries of a configuration over `{0,1}^d` are stored in a fixed rank
//! order with the first axis least significant, so for d = 2 the order is
//! `00, 10, 01, 11`. A group element is kept reduced as `(m, n)`: it acts on
//! the entry at `eps` by `T^(m + n . eps)`. Words in the generators are
//! accepted at the API boundary and reduced immediately.

use crate::error::{Error, Result};
use crate::spaces::{apply_power, Point, SystemSpec};
use serde::{Deserialize, Serialize};

/// A vertex of the combinatorial d-cube.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeIndex {
    bits: Vec<bool>,
}

impl CubeIndex {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidParameter(
                "cube index needs dimension >= 1".into(),
            ));
        }
        Ok(Self { bits })
    }

    /// Index with rank `r` in the canonical order (axis 1 least significant).
    pub fn from_rank(rank: usize, d: usize) -> Self {
        debug_assert!(d >= 1 && rank < (1 << d));
        Self {
            bits: (0..d).map(|i| (rank >> i) & 1 == 1).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .map(|(i, b)| usize::from(*b) << i)
            .sum()
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    /// `n . eps = sum n_i eps_i`.
    pub fn dot(&self, n: &[i64]) -> i64 {
        self.bits
            .iter()
            .zip(n)
            .map(|(b, ni)| if *b { *ni } else { 0 })
            .sum()
    }
}

/// The exponent pattern `n . eps` for rank `r`, computed on masks.
#[inline]
pub fn rank_dot(rank: usize, n: &[i64]) -> i64 {
    let mut acc = 0;
    for (i, ni) in n.iter().enumerate() {
        if (rank >> i) & 1 == 1 {
            acc += ni;
        }
    }
    acc
}

/// An element of `X^(2^d)`: one point per cube vertex, in rank order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeConfiguration {
    d: usize,
    entries: Vec<Point>,
}

impl CubeConfiguration {
    pub fn new(d: usize, entries: Vec<Point>) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter("cube dimension must be >= 1".into()));
        }
        if entries.len() != 1 << d {
            return Err(Error::DimensionMismatch(format!(
                "a {d}-cube configuration needs {} entries, got {}",
                1 << d,
                entries.len()
            )));
        }
        let homogeneous = entries
            .iter()
            .all(|p| matches!(p, Point::Torus(_)) == matches!(&entries[0], Point::Torus(_)));
        if !homogeneous {
            return Err(Error::DimensionMismatch(
                "configuration entries must live in one space".into(),
            ));
        }
        Ok(Self { d, entries })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[Point] {
        &self.entries
    }

    pub fn entry(&self, idx: &CubeIndex) -> &Point {
        &self.entries[idx.rank()]
    }

    pub fn entry_at_rank(&self, rank: usize) -> &Point {
        &self.entries[rank]
    }

    /// The first coordinate, at `eps = 0`.
    pub fn base_entry(&self) -> &Point {
        &self.entries[0]
    }
}

/// The diagonal configuration `(x, x, .., x)`.
pub fn diagonal_config(x: &Point, d: usize) -> Result<CubeConfiguration> {
    if d < 1 {
        return Err(Error::InvalidParameter("cube dimension must be >= 1".into()));
    }
    Ok(CubeConfiguration {
        d,
        entries: vec![x.clone(); 1 << d],
    })
}

/// A reduced cube-group element: diagonal exponent plus face exponents.
/// Face elements are exactly those with `m = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeGroupElement {
    pub m: i64,
    pub n: Vec<i64>,
}

impl CubeGroupElement {
    pub fn new(m: i64, n: Vec<i64>) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidParameter(
                "face exponent vector needs length >= 1".into(),
            ));
        }
        Ok(Self { m, n })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: 0,
            n: vec![0; d],
        }
    }

    pub fn d(&self) -> usize {
        self.n.len()
    }

    pub fn is_face_element(&self) -> bool {
        self.m == 0
    }

    /// Exponent applied at a given vertex: `m + n . eps`.
    pub fn exponent_at(&self, idx: &CubeIndex) -> i64 {
        self.m + idx.dot(&self.n)
    }

    /// Group law (the group is abelian).
    pub fn compose(&self, other: &CubeGroupElement) -> Result<CubeGroupElement> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch(format!(
                "cube group elements of dim {} and {}",
                self.d(),
                other.d()
            )));
        }
        Ok(CubeGroupElement {
            m: self.m + other.m,
            n: self.n.iter().zip(&other.n).map(|(a, b)| a + b).collect(),
        })
    }

    /// Conjugation by the reflection that flips the axes set in `eps0`:
    /// the diagonal exponent absorbs the flipped face exponents and those
    /// face exponents change sign.
    pub fn conjugate_by_reflection(&self, eps0: &CubeIndex) -> Result<CubeGroupElement> {
        if eps0.dim() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "reflection index of dim {} vs element of dim {}",
                eps0.dim(),
                self.d()
            )));
        }
        let mut m = self.m;
        let mut n = self.n.clone();
        for (i, flip) in eps0.bits().iter().enumerate() {
            if *flip {
                m += self.n[i];
                n[i] = -self.n[i];
            }
        }
        Ok(CubeGroupElement { m, n })
    }
}

/// Apply a cube-group element entrywise: `eps` gets `T^(m + n . eps)`.
pub fn apply_cube_element(
    sys: &SystemSpec,
    g: &CubeGroupElement,
    c: &CubeConfiguration,
) -> Result<CubeConfiguration> {
    if g.d() != c.d() {
        return Err(Error::DimensionMismatch(format!(
            "group element of dim {} vs configuration of dim {}",
            g.d(),
            c.d()
        )));
    }
    let entries = c
        .entries
        .iter()
        .enumerate()
        .map(|(rank, p)| apply_power(sys, p, g.m + rank_dot(rank, &g.n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CubeConfiguration { d: c.d, entries })
}

/// One token of a generator word: the diagonal transformation or a face
/// transformation along an axis, with a nonzero integer exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorToken {
    Diag { exp: i64 },
    /// `axis` is 1-based, matching the inductive construction.
    Face { axis: usize, exp: i64 },
}

/// An ordered word in the generators.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GeneratorWord {
    tokens: Vec<GeneratorToken>,
}

impl GeneratorWord {
    pub fn new(tokens: Vec<GeneratorToken>) -> Result<Self> {
        for t in &tokens {
            match t {
                GeneratorToken::Diag { exp } | GeneratorToken::Face { exp, .. } if *exp == 0 => {
                    return Err(Error::InvalidParameter(
                        "generator exponents must be nonzero".into(),
                    ))
                }
                GeneratorToken::Face { axis, .. } if *axis == 0 => {
                    return Err(Error::InvalidParameter("face axis is 1-based".into()))
                }
                _ => {}
            }
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[GeneratorToken] {
        &self.tokens
    }
}

/// Reduce a word to its `(m, n)` form: the generators commute, so exponents
/// just add. Exact on integers.
pub fn reduce_word(word: &GeneratorWord, d: usize) -> Result<CubeGroupElement> {
    if d < 1 {
        return Err(Error::InvalidParameter("cube dimension must be >= 1".into()));
    }
    let mut m = 0i64;
    let mut n = vec![0i64; d];
    for t in &word.tokens {
        match *t {
            GeneratorToken::Diag { exp } => m += exp,
            GeneratorToken::Face { axis, exp } => {
                if axis > d {
                    return Err(Error::InvalidParameter(format!(
                        "face axis {axis} out of range for dimension {d}"
                    )));
                }
                n[axis - 1] += exp;
            }
        }
    }
    Ok(CubeGroupElement { m, n })
}

/// A single generator token as a reduced element (used to apply a word
/// step by step).
pub fn token_element(token: GeneratorToken, d: usize) -> Result<CubeGroupElement> {
    reduce_word(&GeneratorWord::new(vec![token])?, d)
}

/// Drop the first coordinate: entries at all `eps != 0` in rank order.
pub fn project_star(c: &CubeConfiguration) -> Vec<Point> {
    c.entries[1..].to_vec()
}

/// Permute entries by the reflection flipping exactly the axes where `eps0`
/// has a 1: the image at `eps` is the old entry at `eps XOR eps0`.
pub fn euclidean_permutation(
    c: &CubeConfiguration,
    eps0: &CubeIndex,
) -> Result<CubeConfiguration> {
    if eps0.dim() != c.d() {
        return Err(Error::DimensionMismatch(format!(
            "reflection index of dim {} vs configuration of dim {}",
            eps0.dim(),
            c.d()
        )));
    }
    let mask = eps0.rank();
    let entries = (0..c.entries.len())
        .map(|r| c.entries[r ^ mask].clone())
        .collect();
    Ok(CubeConfiguration { d: c.d, entries })
}
