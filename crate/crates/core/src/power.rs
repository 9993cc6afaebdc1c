//! Power levels and the floor partition operators.
//!
//! A symbol at level λ lives in the alphabet `{0, …, P̄^λ − 1}` where
//! `P̄^λ = ⌊√(P^λ)⌋`. For λ = p/q this is computed exactly as the integer
//! `2q`-th root of `P^p`, so partition boundaries never depend on floating point.
//!
//! The three operators slice a symbol's digits:
//!
//! * `(x)_λ₁`       = [`PowerScale::part_low`], the bottom λ₁ levels,
//! * `(x)^{λ₂}_{λ₁}` = [`PowerScale::part_mid`], the levels between λ₁ and λ₂,
//! * `(x)^λ`        = [`PowerScale::top_fraction`], the top λ of a level-1 symbol.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, shape, Error, Result};

/// Exponents are exact rationals.
pub type Level = Ratio<i64>;

pub fn level(n: i64, d: i64) -> Level {
    Level::new(n, d)
}

/// The power `P` together with a memo of `λ ↦ P̄^λ`.
///
/// Cloning is cheap and clones share the memo.
#[derive(Clone, Debug)]
pub struct PowerScale {
    power: u64,
    cache: Arc<RwLock<HashMap<Level, u64>>>,
}

impl PartialEq for PowerScale {
    fn eq(&self, other: &Self) -> bool {
        self.power == other.power
    }
}

impl Eq for PowerScale {}

impl PowerScale {
    pub fn new(power: u64) -> Result<Self> {
        if power == 0 {
            return Err(domain("P must be at least 1"));
        }
        Ok(Self { power, cache: Arc::default() })
    }

    pub fn power(&self) -> u64 {
        self.power
    }

    /// `log₂ P̄ = ½ log₂ P`, the unit in which entropies are normalized.
    pub fn log2_pbar(&self) -> f64 {
        0.5 * (self.power as f64).log2()
    }

    /// `P̄^λ = ⌊√(P^λ)⌋`, exact.
    pub fn pbar(&self, lambda: Level) -> Result<u64> {
        if lambda < Level::zero() {
            return Err(domain(format!("negative level {lambda}")));
        }
        if let Some(&v) = self.cache.read().expect("pbar cache").get(&lambda) {
            return Ok(v);
        }
        let v = exact_pbar(self.power, lambda)?;
        self.cache.write().expect("pbar cache").insert(lambda, v);
        Ok(v)
    }

    /// Alphabet size at level λ (the same number as `pbar`).
    pub fn alphabet(&self, lambda: Level) -> Result<u64> {
        self.pbar(lambda)
    }

    /// `(x)_λ₁ = x − P̄^{λ₁}⌊x / P̄^{λ₁}⌋`.
    pub fn part_low(&self, x: u64, lambda1: Level) -> Result<u64> {
        Ok(x % self.pbar(lambda1)?)
    }

    /// `(x)^{λ₂}_{λ₁} = ⌊(x − P̄^{λ₂}⌊x/P̄^{λ₂}⌋) / P̄^{λ₁}⌋`.
    pub fn part_mid(&self, x: u64, lambda1: Level, lambda2: Level) -> Result<u64> {
        if lambda1 > lambda2 {
            return Err(domain(format!("window ({lambda1}, {lambda2}) is reversed")));
        }
        Ok((x % self.pbar(lambda2)?) / self.pbar(lambda1)?)
    }

    /// `(x)^λ = (x)^1_{1−λ}` for a level-1 symbol.
    pub fn top_fraction(&self, x: u64, lambda: Level) -> Result<u64> {
        if lambda < Level::zero() || lambda > Level::one() {
            return Err(domain(format!("top fraction {lambda} outside [0,1]")));
        }
        let full = self.pbar(Level::one())?;
        if x >= full {
            return Err(domain(format!("{x} is outside the level-1 alphabet of size {full}")));
        }
        self.part_mid(x, Level::one() - lambda, Level::one())
    }
}

/// `⌊n^{1/k}⌋` by Newton iteration.
pub fn integer_root(n: &BigUint, k: u32) -> BigUint {
    assert!(k > 0, "root index must be positive");
    n.nth_root(k)
}

fn exact_pbar(power: u64, lambda: Level) -> Result<u64> {
    let (p, q) = (*lambda.numer(), *lambda.denom());
    let p = u32::try_from(p).map_err(|_| Error::Overflow(format!("level {lambda}")))?;
    let k = u32::try_from(2 * q).map_err(|_| Error::Overflow(format!("level {lambda}")))?;
    let target = BigUint::from(power).pow(p);
    let r = integer_root(&target, k);
    if !(r.pow(k) <= target && (&r + 1u32).pow(k) > target) {
        return Err(Error::Overflow(format!("root check failed for P={power}, λ={lambda}")));
    }
    r.to_u64().ok_or_else(|| Error::Overflow(format!("P̄^{lambda} for P={power}")))
}

/// A value together with the level of its alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscreteSymbol {
    pub value: u64,
    pub level: Level,
}

impl DiscreteSymbol {
    pub fn new(scale: &PowerScale, value: u64, level: Level) -> Result<Self> {
        let size = scale.alphabet(level)?;
        if value >= size {
            return Err(domain(format!("{value} is outside the alphabet of size {size} at level {level}")));
        }
        Ok(Self { value, level })
    }
}

/// Symbols sharing one scale.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector {
    pub scale: PowerScale,
    pub entries: Vec<DiscreteSymbol>,
}

impl SymbolVector {
    pub fn new(scale: &PowerScale, values: &[u64], levels: &[Level]) -> Result<Self> {
        if values.len() != levels.len() {
            return Err(shape(format!("{} values for {} levels", values.len(), levels.len())));
        }
        let entries = values
            .iter()
            .zip(levels)
            .map(|(&v, &l)| DiscreteSymbol::new(scale, v, l))
            .collect::<Result<_>>()?;
        Ok(Self { scale: scale.clone(), entries })
    }

    /// Symbols all at level 1.
    pub fn uniform_level(scale: &PowerScale, values: &[u64]) -> Result<Self> {
        Self::new(scale, values, &vec![Level::one(); values.len()])
    }

    pub fn empty(scale: &PowerScale) -> Self {
        Self { scale: scale.clone(), entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// `v ▽ w`.
    pub fn concat(&self, other: &SymbolVector) -> Result<SymbolVector> {
        if self.scale != other.scale {
            return Err(shape("concatenating vectors with different power scales"));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(Self { scale: self.scale.clone(), entries })
    }

    /// `V_{m→n}`, see [`rotate_slice`].
    pub fn rotate_slice(&self, m: usize, n: usize) -> Result<SymbolVector> {
        Ok(Self { scale: self.scale.clone(), entries: rotate_slice(&self.entries, m, n)? })
    }

    pub fn part_low(&self, lambda1: Level) -> Result<Vec<u64>> {
        self.entries.iter().map(|e| self.scale.part_low(e.value, lambda1)).collect()
    }

    pub fn part_mid(&self, lambda1: Level, lambda2: Level) -> Result<Vec<u64>> {
        self.entries.iter().map(|e| self.scale.part_mid(e.value, lambda1, lambda2)).collect()
    }

    pub fn top_fraction(&self, lambda: Level) -> Result<Vec<u64>> {
        self.entries.iter().map(|e| self.scale.top_fraction(e.value, lambda)).collect()
    }
}

/// `V_{m→n}`: entries `m+1 … m+n` (1-based), wrapping to the front past the end.
pub fn rotate_slice<T: Clone>(v: &[T], m: usize, n: usize) -> Result<Vec<T>> {
    let k = v.len();
    if m >= k || n >= k {
        return Err(domain(format!("rotate_slice({m}, {n}) on a vector of length {k}")));
    }
    Ok((0..n).map(|i| v[(m + i) % k].clone()).collect())
}

/// `V_{(a→b):(c→d)}`: rows `a+1 … a+b`, columns `c+1 … c+d`.
pub fn submatrix<T: Clone>(v: &[Vec<T>], a: usize, b: usize, c: usize, d: usize) -> Result<Vec<Vec<T>>> {
    let rows = v.len();
    let cols = v.first().map_or(0, Vec::len);
    if a + b > rows || (b > 0 && c + d > cols) {
        return Err(shape(format!("submatrix ({a}+{b})×({c}+{d}) of a {rows}×{cols} matrix")));
    }
    Ok(v[a..a + b].iter().map(|row| row[c..c + d].to_vec()).collect())
}
