//! Floor-sum linear forms `L(x₁,…,x_k) = Σᵢ ⌊gᵢ·(xᵢ)^{γᵢ}_{δᵢ}⌋`.
//!
//! The floor truncates toward zero, so `⌊−2.5⌋ = −2`. Random forms draw their
//! coefficients from a bounded-density law ([`CoefficientLaw`]); arbitrary forms
//! carry fixed constants.

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, shape, Error, Result};
use crate::power::{Level, PowerScale, SymbolVector};
use crate::seed;

/// Distance to the nearest integer below which a product's floor is ambiguous.
pub const FLOOR_GUARD: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientKind {
    BoundedDensityRandom,
    ArbitraryConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDraw {
    pub values: Vec<f64>,
    pub delta: f64,
    pub f_max: f64,
    pub kind: CoefficientKind,
}

impl CoefficientDraw {
    pub fn constant(values: Vec<f64>, delta: f64) -> Result<Self> {
        if let Some(g) = values.iter().find(|g| !(g.abs() <= delta)) {
            return Err(domain(format!("constant {g} exceeds Δ = {delta}")));
        }
        Ok(Self { values, delta, f_max: 1.0, kind: CoefficientKind::ArbitraryConstant })
    }
}

/// Uniform on `[−Δ,−μ] ∪ [μ,Δ]`, density `1/(2(Δ−μ))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLaw {
    pub delta: f64,
    pub mu: f64,
    pub f_max: f64,
}

impl Default for CoefficientLaw {
    fn default() -> Self {
        Self { delta: 1.0, mu: 0.05, f_max: 1.0 }
    }
}

impl CoefficientLaw {
    pub fn new(delta: f64, mu: f64, f_max: f64) -> Result<Self> {
        let law = Self { delta, mu, f_max };
        law.validate()?;
        Ok(law)
    }

    /// Default law for a given `(Δ, f_max)`: `μ = Δ/20`.
    pub fn with_bounds(delta: f64, f_max: f64) -> Result<Self> {
        Self::new(delta, delta / 20.0, f_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 1.0) || !(self.f_max >= 1.0) {
            return Err(config(format!("need Δ ≥ 1 and f_max ≥ 1, got Δ={} f_max={}", self.delta, self.f_max)));
        }
        if !(self.mu >= 0.0 && self.mu < self.delta) {
            return Err(config(format!("need 0 ≤ μ < Δ, got μ={}", self.mu)));
        }
        if 2.0 * self.delta * self.f_max < 1.0 || self.density() > self.f_max {
            return Err(config(format!(
                "density {} exceeds f_max = {} for Δ={} μ={}",
                self.density(),
                self.f_max,
                self.delta,
                self.mu
            )));
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        1.0 / (2.0 * (self.delta - self.mu))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mag = rng.gen_range(self.mu..=self.delta);
        if rng.gen::<bool>() {
            mag
        } else {
            -mag
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> CoefficientDraw {
        CoefficientDraw {
            values: (0..count).map(|_| self.sample(rng)).collect(),
            delta: self.delta,
            f_max: self.f_max,
            kind: CoefficientKind::BoundedDensityRandom,
        }
    }
}

/// `count` i.i.d. coefficients from the default law for `(Δ, f_max)`.
pub fn sample_coefficients(count: usize, delta: f64, f_max: f64, seed: u64) -> Result<CoefficientDraw> {
    let law = CoefficientLaw::with_bounds(delta, f_max)?;
    Ok(law.draw(count, &mut seed::rng(seed, &[])))
}

/// One term `g_slot · (x_input)^{γ}_{δ}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub input: usize,
    #[serde(with = "crate::rational::serde_level")]
    pub gamma: Level,
    #[serde(with = "crate::rational::serde_level")]
    pub delta: Level,
    pub slot: usize,
}

impl Term {
    /// The untrimmed window `(x)^{η}_0` for a level-η input.
    pub fn full(input: usize, eta: Level, slot: usize) -> Self {
        Self { input, gamma: eta, delta: Level::zero(), slot }
    }

    pub fn window(input: usize, delta: Level, gamma: Level, slot: usize) -> Self {
        Self { input, gamma, delta, slot }
    }

    pub fn length(&self) -> Level {
        (self.gamma - self.delta).max(Level::zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearFormSpec {
    pub terms: Vec<Term>,
    /// Native level `η_j` of every input the form may reference, indexed by input.
    #[serde(with = "levels_serde")]
    pub native: Vec<Level>,
}

pub(crate) mod levels_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct L(#[serde(with = "crate::rational::serde_level")] Level);

    pub fn serialize<S: Serializer>(v: &[Level], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&l| L(l)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Level>, D::Error> {
        Ok(Vec::<L>::deserialize(d)?.into_iter().map(|L(l)| l).collect())
    }
}

impl LinearFormSpec {
    pub fn new(terms: Vec<Term>, native: Vec<Level>) -> Result<Self> {
        let spec = Self { terms, native };
        spec.validate()?;
        Ok(spec)
    }

    /// A form whose term `i` uses coefficient slot `i`.
    pub fn with_windows(windows: &[(usize, Level, Level)], native: Vec<Level>) -> Result<Self> {
        let terms = windows.iter().enumerate().map(|(i, &(j, lo, hi))| Term::window(j, lo, hi, i)).collect();
        Self::new(terms, native)
    }

    pub fn arity(&self) -> usize {
        self.terms.len()
    }

    pub fn slots(&self) -> usize {
        self.terms.iter().map(|t| t.slot + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.terms {
            let eta = *self
                .native
                .get(t.input)
                .ok_or_else(|| shape(format!("term references input {} of {}", t.input, self.native.len())))?;
            if !(Level::zero() <= t.delta && t.delta <= t.gamma && t.gamma <= eta) {
                return Err(domain(format!("trim (γ={}, δ={}) violates 0 ≤ δ ≤ γ ≤ η = {eta}", t.gamma, t.delta)));
            }
            if !seen.insert(t.slot) {
                return Err(domain(format!("coefficient slot {} is shared by two terms", t.slot)));
            }
        }
        Ok(())
    }
}

/// `⌊v⌋` rounding toward zero, with the ambiguity guard.
pub fn trunc_guarded(v: f64) -> Result<i64> {
    let t = v.trunc();
    if v != t {
        let frac = (v - t).abs();
        if frac < FLOOR_GUARD || 1.0 - frac < FLOOR_GUARD {
            return Err(Error::FloorAmbiguity);
        }
    }
    Ok(t as i64)
}

/// `(y)^{hi}_{lo}` for a possibly negative integer, with truncating division.
pub fn window_signed(y: i64, lo_div: u64, hi_div: u64) -> i64 {
    (y % hi_div as i64) / lo_div as i64
}

/// `Σᵢ ⌊gᵢ · (xᵢ)^{γᵢ}_{δᵢ}⌋`.
pub fn eval_form(spec: &LinearFormSpec, draw: &CoefficientDraw, x: &SymbolVector) -> Result<i64> {
    if draw.values.len() < spec.slots() {
        return Err(shape(format!("form needs {} coefficients, draw has {}", spec.slots(), draw.values.len())));
    }
    if x.len() != spec.native.len() {
        return Err(shape(format!("form over {} inputs applied to {}", spec.native.len(), x.len())));
    }
    spec.validate()?;
    for (e, &eta) in x.entries.iter().zip(&spec.native) {
        if e.level != eta || e.value >= x.scale.alphabet(eta)? {
            return Err(domain(format!("input {} does not live at native level {eta}", e.value)));
        }
    }
    let mut sum = 0i64;
    for t in &spec.terms {
        let v = x.scale.part_mid(x.entries[t.input].value, t.delta, t.gamma)?;
        sum += trunc_guarded(draw.values[t.slot] * v as f64)?;
    }
    Ok(sum)
}

/// `𝒯 = max_j (γ_j − δ_j)⁺`.
pub fn form_length(spec: &LinearFormSpec) -> Level {
    spec.terms.iter().map(Term::length).max().unwrap_or_else(Level::zero)
}

/// `𝒯((A)^λ_μ) = (min(λ, 𝒯(A)) − μ)⁺`.
pub fn form_length_window(length: Level, mu: Level, lambda: Level) -> Result<Level> {
    if mu > lambda {
        return Err(domain(format!("window ({mu}, {lambda}) is reversed")));
    }
    Ok((lambda.min(length) - mu).max(Level::zero()))
}

/// Largest value a term's window can take.
pub fn window_max(scale: &PowerScale, t: &Term, eta: Level) -> Result<u64> {
    let top = scale.pbar(t.gamma.min(eta))?;
    Ok(top.saturating_sub(1) / scale.pbar(t.delta)?)
}

/// `⌈k·Δ·P̄^{𝒯}⌉`, bounding `|eval_form|`.
///
/// When `P` is not a perfect power a window can exceed `P̄^{𝒯}` by a little, so the
/// largest attainable window value is used if it is bigger.
pub fn range_bound(spec: &LinearFormSpec, draw: &CoefficientDraw, scale: &PowerScale) -> Result<u64> {
    let k = spec.arity() as f64;
    let mut unit = scale.pbar(form_length(spec))?;
    for t in &spec.terms {
        unit = unit.max(window_max(scale, t, spec.native[t.input])?);
    }
    Ok((k * draw.delta * unit as f64).ceil() as u64)
}

/// Convenience constructor for level-1 inputs.
pub fn level_one(n: usize) -> Vec<Level> {
    vec![Level::one(); n]
}
