//! Canonical deterministic two-user MIMO broadcast channel instances.
//!
//! The transmit vector is `X = X_a ▽ X_b ▽ X_c` with lengths `M−N₂`, `N₁+N₂−M`
//! and `M−N₁`: `X_a` is invisible to user 2, `X_c` to user 1, and partial CSIT
//! shows up as trimmed windows.
//!
//! | family | rows | `X_a` | `X_b` | `X_c` |
//! |---|---|---|---|---|
//! | `Y1` | N₁ | full | full | `(·)^1_{β₁}` |
//! | `Y2` | N₂ | `(·)^1_{β₂}` | full | full |
//! | `Y1TildeA` | N₁+N₂−M | | full | `(·)^1_{β₁}` |
//! | `Y1A` | M−N₂ | full | full | `(·)^1_{β₁}` |
//! | `Y1c` | N₁+N₂−M | `(·)^1_{β₂}` | full | `(·)^1_{β₁}` |
//! | `Y1d` | M−N₂ | full | | `(·)^1_{β₁}` |
//! | `Y2a` | N₁+N₂−M | `(·)^1_{β₂}` | full | |
//! | `Y2b` | M−N₁ | `(·)^1_{β₂}` | | full |
//!
//! `y2c` and `y2d` are the first `M−N₂` and last `N₂−N₁` rows of `y2b`.
//!
//! Every row is a random floor-sum form whose coefficient slot equals the input
//! column, so a row's draw doubles as a row of the channel matrix.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{config, shape, Result};
use crate::forms::{eval_form, CoefficientDraw, CoefficientLaw, LinearFormSpec, Term};
use crate::power::{Level, PowerScale, SymbolVector};
use crate::seed;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const MAX_DRAW_ATTEMPTS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `N₂ ≤ M`
    N2AtMostM,
    /// `N₂ > M`
    N2AboveM,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcConfig {
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub beta1: Level,
    pub beta2: Level,
    pub law: CoefficientLaw,
    pub epsilon: f64,
    pub scale: PowerScale,
    /// Transmit antennas before clamping to `N₁+N₂`.
    pub m_raw: usize,
    /// Whether the users were swapped to get `N₁ ≤ N₂`.
    pub swapped: bool,
    pub regime: Regime,
}

/// Swaps users so that `N₁ ≤ N₂`, clamps `M` to `N₁+N₂`, and tags the regime.
pub fn normalize_config(m: usize, n1: usize, n2: usize, beta1: Level, beta2: Level) -> Result<BcConfig> {
    if m == 0 || n1 == 0 || n2 == 0 {
        return Err(config(format!("antenna counts must be positive, got ({m},{n1},{n2})")));
    }
    for b in [beta1, beta2] {
        if b < Level::zero() || b > Level::one() {
            return Err(config(format!("β = {b} outside [0,1]")));
        }
    }
    let swapped = n1 > n2;
    let (n1, n2, beta1, beta2) = if swapped { (n2, n1, beta2, beta1) } else { (n1, n2, beta1, beta2) };
    let mm = m.min(n1 + n2);
    Ok(BcConfig {
        m: mm,
        n1,
        n2,
        beta1,
        beta2,
        law: CoefficientLaw::default(),
        epsilon: DEFAULT_EPSILON,
        scale: PowerScale::new(16)?,
        m_raw: m,
        swapped,
        regime: if n2 > mm { Regime::N2AboveM } else { Regime::N2AtMostM },
    })
}

impl BcConfig {
    pub fn with_power(mut self, power: u64) -> Result<Self> {
        self.scale = PowerScale::new(power)?;
        Ok(self)
    }

    pub fn with_law(mut self, law: CoefficientLaw, epsilon: f64) -> Result<Self> {
        law.validate()?;
        if !(epsilon >= 0.0) {
            return Err(config(format!("ε = {epsilon} must be nonnegative")));
        }
        self.law = law;
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn len_a(&self) -> usize {
        self.m - self.n2
    }

    pub fn len_b(&self) -> usize {
        self.n1 + self.n2 - self.m
    }

    pub fn len_c(&self) -> usize {
        self.m - self.n1
    }

    pub fn cols_a(&self) -> std::ops::Range<usize> {
        0..self.len_a()
    }

    pub fn cols_b(&self) -> std::ops::Range<usize> {
        self.len_a()..self.n1
    }

    pub fn cols_c(&self) -> std::ops::Range<usize> {
        self.n1..self.m
    }

    fn require_lab_regime(&self) -> Result<()> {
        if self.regime == Regime::N2AboveM {
            return Err(config(format!(
                "the deterministic lab needs N₂ ≤ M, got M={} N₂={}",
                self.m, self.n2
            )));
        }
        Ok(())
    }
}

/// Serializable instance description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    #[serde(with = "crate::rational::serde_level")]
    pub beta1: Level,
    #[serde(with = "crate::rational::serde_level")]
    pub beta2: Level,
    #[serde(rename = "P")]
    pub p: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub f_max: f64,
    pub seed: u64,
}

impl InstanceDoc {
    pub fn to_config(&self) -> Result<BcConfig> {
        normalize_config(self.m, self.n1, self.n2, self.beta1, self.beta2)?
            .with_power(self.p)?
            .with_law(CoefficientLaw::with_bounds(self.delta, self.f_max)?, self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    Y1,
    Y2,
    Y1TildeA,
    Y1A,
    Y1c,
    Y1d,
    Y2a,
    Y2b,
}

impl Family {
    pub const ALL: [Family; 8] =
        [Family::Y1, Family::Y2, Family::Y1TildeA, Family::Y1A, Family::Y1c, Family::Y1d, Family::Y2a, Family::Y2b];
}

#[derive(Clone, Copy)]
enum Win {
    Full,
    Top(Level),
    Absent,
}

/// A normalized config with the row forms of every family.
#[derive(Clone, Debug)]
pub struct BcInstance {
    pub cfg: BcConfig,
    pub forms: BTreeMap<Family, Vec<LinearFormSpec>>,
}

impl BcInstance {
    pub fn new(cfg: BcConfig) -> Result<Self> {
        cfg.require_lab_regime()?;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let (na, nb, nc) = (cfg.len_a(), cfg.len_b(), cfg.len_c());
        let table = [
            (Family::Y1, cfg.n1, [Win::Full, Win::Full, Win::Top(b1)]),
            (Family::Y2, cfg.n2, [Win::Top(b2), Win::Full, Win::Full]),
            (Family::Y1TildeA, nb, [Win::Absent, Win::Full, Win::Top(b1)]),
            (Family::Y1A, na, [Win::Full, Win::Full, Win::Top(b1)]),
            (Family::Y1c, nb, [Win::Top(b2), Win::Full, Win::Top(b1)]),
            (Family::Y1d, na, [Win::Full, Win::Absent, Win::Top(b1)]),
            (Family::Y2a, nb, [Win::Top(b2), Win::Full, Win::Absent]),
            (Family::Y2b, nc, [Win::Top(b2), Win::Absent, Win::Full]),
        ];
        let mut forms = BTreeMap::new();
        for (family, rows, wins) in table {
            let spec = row_spec(&cfg, wins)?;
            forms.insert(family, vec![spec; rows]);
        }
        Ok(Self { cfg, forms })
    }

    pub fn rows(&self, family: Family) -> &[LinearFormSpec] {
        &self.forms[&family]
    }

    /// Square blocks whose determinants must stay away from zero, as
    /// `(family, column set)`; the block takes every row of the family.
    pub fn checked_blocks(&self) -> Vec<(Family, Vec<usize>)> {
        let c = &self.cfg;
        let ab: Vec<usize> = c.cols_a().chain(c.cols_b()).collect();
        let bc: Vec<usize> = c.cols_b().chain(c.cols_c()).collect();
        vec![
            (Family::Y1, ab),
            (Family::Y2, bc),
            (Family::Y1TildeA, c.cols_b().collect()),
            (Family::Y1A, c.cols_a().collect()),
            (Family::Y1c, c.cols_b().collect()),
            (Family::Y1d, c.cols_a().collect()),
            (Family::Y2a, c.cols_b().collect()),
            (Family::Y2b, c.cols_c().collect()),
        ]
    }
}

fn row_spec(cfg: &BcConfig, wins: [Win; 3]) -> Result<LinearFormSpec> {
    let mut terms = Vec::new();
    for (part, cols) in [cfg.cols_a(), cfg.cols_b(), cfg.cols_c()].into_iter().enumerate() {
        for j in cols {
            match wins[part] {
                Win::Full => terms.push(Term::full(j, Level::one(), j)),
                Win::Top(beta) => terms.push(Term::window(j, beta, Level::one(), j)),
                Win::Absent => {}
            }
        }
    }
    LinearFormSpec::new(terms, vec![Level::one(); cfg.m])
}

/// Channel matrices for one channel use: per family, one row of `M` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub rows: BTreeMap<Family, Vec<Vec<f64>>>,
    pub attempts: u64,
}

impl ChannelDraw {
    pub fn coefficients(&self, family: Family, row: usize, cfg: &BcConfig) -> CoefficientDraw {
        CoefficientDraw {
            values: self.rows[&family][row].clone(),
            delta: cfg.law.delta,
            f_max: cfg.law.f_max,
            kind: crate::forms::CoefficientKind::BoundedDensityRandom,
        }
    }

    pub fn block(&self, family: Family, cols: &[usize]) -> Vec<Vec<f64>> {
        self.rows[&family].iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect()
    }
}

/// Determinant by Gaussian elimination with partial pivoting; `1` for the empty matrix.
pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    det
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|i| i as f64).product()
}

/// Draws every family's coefficients for channel use `t`, rejection-sampling until
/// each checked block has `|det| ≥ ε`.
pub fn draw_channel(inst: &BcInstance, t: u64, seed: u64) -> Result<ChannelDraw> {
    let cfg = &inst.cfg;
    let blocks = inst.checked_blocks();
    for (family, cols) in &blocks {
        let r = cols.len();
        if r > 0 && cfg.epsilon > cfg.law.delta.powi(r as i32) * factorial(r) {
            return Err(config(format!(
                "ε = {} exceeds the largest possible |det| of a {r}×{r} block of {family:?}",
                cfg.epsilon
            )));
        }
    }
    for attempt in 0..MAX_DRAW_ATTEMPTS {
        let mut rng = seed::rng(seed, &[t, attempt]);
        let mut rows = BTreeMap::new();
        for family in Family::ALL {
            let n = inst.rows(family).len();
            let draws: Vec<Vec<f64>> = (0..n).map(|_| cfg.law.draw(cfg.m, &mut rng).values).collect();
            rows.insert(family, draws);
        }
        let candidate = ChannelDraw { rows, attempts: attempt + 1 };
        if blocks.iter().all(|(f, cols)| determinant(&candidate.block(*f, cols)).abs() >= cfg.epsilon) {
            return Ok(candidate);
        }
    }
    Err(config(format!(
        "no channel draw met |det| ≥ {} within {MAX_DRAW_ATTEMPTS} attempts",
        cfg.epsilon
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalInput {
    pub xa: SymbolVector,
    pub xb: SymbolVector,
    pub xc: SymbolVector,
}

impl CanonicalInput {
    pub fn new(cfg: &BcConfig, xa: &[u64], xb: &[u64], xc: &[u64]) -> Result<Self> {
        if xa.len() != cfg.len_a() || xb.len() != cfg.len_b() || xc.len() != cfg.len_c() {
            return Err(shape(format!(
                "input blocks ({},{},{}) for expected ({},{},{})",
                xa.len(),
                xb.len(),
                xc.len(),
                cfg.len_a(),
                cfg.len_b(),
                cfg.len_c()
            )));
        }
        Ok(Self {
            xa: SymbolVector::uniform_level(&cfg.scale, xa)?,
            xb: SymbolVector::uniform_level(&cfg.scale, xb)?,
            xc: SymbolVector::uniform_level(&cfg.scale, xc)?,
        })
    }

    /// Splits a full transmit vector into its three blocks.
    pub fn from_values(cfg: &BcConfig, x: &[u64]) -> Result<Self> {
        if x.len() != cfg.m {
            return Err(shape(format!("{} values for M = {}", x.len(), cfg.m)));
        }
        Self::new(cfg, &x[cfg.cols_a()], &x[cfg.cols_b()], &x[cfg.cols_c()])
    }

    pub fn stacked(&self) -> Result<SymbolVector> {
        self.xa.concat(&self.xb)?.concat(&self.xc)
    }
}

fn eval_family(inst: &BcInstance, family: Family, input: &CanonicalInput, draw: &ChannelDraw) -> Result<Vec<i64>> {
    let x = input.stacked()?;
    if x.len() != inst.cfg.m || x.scale != inst.cfg.scale {
        return Err(shape("input does not match the instance"));
    }
    inst.rows(family)
        .iter()
        .enumerate()
        .map(|(r, spec)| eval_form(spec, &draw.coefficients(family, r, &inst.cfg), &x))
        .collect()
}

pub fn output_y1(inst: &BcInstance, input: &CanonicalInput, draw: &ChannelDraw) -> Result<Vec<i64>> {
    eval_family(inst, Family::Y1, input, draw)
}

pub fn output_y2(inst: &BcInstance, input: &CanonicalInput, draw: &ChannelDraw) -> Result<Vec<i64>> {
    eval_family(inst, Family::Y2, input, draw)
}

/// `(y1_tilde_a, y1_a)`.
pub fn split_y1(inst: &BcInstance, input: &CanonicalInput, draw: &ChannelDraw) -> Result<(Vec<i64>, Vec<i64>)> {
    Ok((eval_family(inst, Family::Y1TildeA, input, draw)?, eval_family(inst, Family::Y1A, input, draw)?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedOutputs {
    pub y1c: Vec<i64>,
    pub y1d: Vec<i64>,
    pub y2a: Vec<i64>,
    pub y2b: Vec<i64>,
    pub y2c: Vec<i64>,
    pub y2d: Vec<i64>,
}

pub fn derived_outputs(inst: &BcInstance, input: &CanonicalInput, draw: &ChannelDraw) -> Result<DerivedOutputs> {
    let y2b = eval_family(inst, Family::Y2b, input, draw)?;
    let cut = inst.cfg.len_a();
    Ok(DerivedOutputs {
        y1c: eval_family(inst, Family::Y1c, input, draw)?,
        y1d: eval_family(inst, Family::Y1d, input, draw)?,
        y2a: eval_family(inst, Family::Y2a, input, draw)?,
        y2c: y2b[..cut].to_vec(),
        y2d: y2b[cut..].to_vec(),
        y2b,
    })
}

/// All receiver-side quantities for one input and draw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiverOutputs {
    pub y1: Vec<i64>,
    pub y2: Vec<i64>,
    pub y1_tilde_a: Vec<i64>,
    pub y1_a: Vec<i64>,
    pub derived: DerivedOutputs,
}

pub fn receiver_outputs(inst: &BcInstance, input: &CanonicalInput, draw: &ChannelDraw) -> Result<ReceiverOutputs> {
    let (y1_tilde_a, y1_a) = split_y1(inst, input, draw)?;
    Ok(ReceiverOutputs {
        y1: output_y1(inst, input, draw)?,
        y2: output_y2(inst, input, draw)?,
        y1_tilde_a,
        y1_a,
        derived: derived_outputs(inst, input, draw)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stream {
    Y2c(usize),
    Y2d(usize),
}

/// One `1/q`-level slice `(stream)^{hi}_{lo}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CSlice {
    pub stream: Stream,
    pub lo: Level,
    pub hi: Level,
}

/// Number of distinct slices, `q(N̆₁+N̆₂) = (M−N₂)e + (N₂−N₁)(q−m)`.
pub fn c_bar_count(cfg: &BcConfig, q: i64) -> Result<usize> {
    let (m, e) = common_numerators(cfg, q)?;
    Ok(cfg.len_a() * e as usize + (cfg.n2 - cfg.n1) * (q - m) as usize)
}

fn common_numerators(cfg: &BcConfig, q: i64) -> Result<(i64, i64)> {
    let scaled = |b: Level| {
        let v = b * Level::from_integer(q);
        v.is_integer().then(|| v.to_integer())
    };
    match (scaled(cfg.beta1), scaled(cfg.beta2)) {
        (Some(m), Some(e)) if q > 0 => Ok((m, e)),
        _ => Err(config(format!("β₁={} and β₂={} do not share the denominator {q}", cfg.beta1, cfg.beta2))),
    }
}

/// Smallest common denominator of `β₁, β₂`.
pub fn common_denominator(cfg: &BcConfig) -> i64 {
    cfg.beta1.denom().lcm(cfg.beta2.denom())
}

/// The slices `C̄₁ … C̄_{q(N̆₁+N̆₂)}`: the `1/q` levels of `(y2c)^{(m+e)/q}_{m/q}`
/// followed by those of `(y2d)^1_{m/q}`, bottom level first within each stream.
pub fn c_bar_partitions(cfg: &BcConfig, q: i64) -> Result<Vec<CSlice>> {
    cfg.require_lab_regime()?;
    let (m, e) = common_numerators(cfg, q)?;
    let step = Level::new(1, q);
    let mut out = Vec::new();
    for r in 0..cfg.len_a() {
        for k in 0..e {
            let lo = Level::new(m + k, q);
            out.push(CSlice { stream: Stream::Y2c(r), lo, hi: lo + step });
        }
    }
    for r in 0..cfg.n2 - cfg.n1 {
        for k in 0..q - m {
            let lo = Level::new(m + k, q);
            out.push(CSlice { stream: Stream::Y2d(r), lo, hi: lo + step });
        }
    }
    Ok(out)
}

/// `C̄_i` for any `i ≥ 1`, wrapping past the last slice.
pub fn c_bar(slices: &[CSlice], i: usize) -> Result<CSlice> {
    if i == 0 || slices.is_empty() {
        return Err(config(format!("slice index {i} out of range")));
    }
    Ok(slices[(i - 1) % slices.len()])
}

/// Evaluates slices against derived outputs.
pub fn c_bar_values(scale: &PowerScale, derived: &DerivedOutputs, slices: &[CSlice]) -> Result<Vec<i64>> {
    slices
        .iter()
        .map(|s| {
            let y = match s.stream {
                Stream::Y2c(r) => derived.y2c.get(r),
                Stream::Y2d(r) => derived.y2d.get(r),
            }
            .copied()
            .ok_or_else(|| shape(format!("{:?} is out of range", s.stream)))?;
            Ok(crate::forms::window_signed(y, scale.pbar(s.lo)?, scale.pbar(s.hi)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::level;

    fn cfg(m: usize, n1: usize, n2: usize, b1: Level, b2: Level) -> BcConfig {
        normalize_config(m, n1, n2, b1, b2).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let h = level(1, 2);
        assert_eq!(cfg(6, 2, 4, h, h).m, 6);
        assert_eq!(cfg(9, 2, 4, h, h).m, 6);
        let s = cfg(5, 3, 2, level(1, 3), level(2, 3));
        assert!(s.swapped);
        assert_eq!((s.n1, s.n2, s.beta1, s.beta2), (2, 3, level(2, 3), level(1, 3)));
        assert!(normalize_config(0, 1, 1, h, h).is_err());
        assert!(normalize_config(2, 1, 1, level(3, 2), h).is_err());
        assert_eq!(cfg(2, 3, 1, h, h).regime, Regime::N2AboveM);
        assert!(BcInstance::new(cfg(2, 3, 1, h, h)).is_err());
    }

    #[test]
    fn family_lengths() {
        let inst = BcInstance::new(cfg(5, 2, 3, level(1, 2), level(2, 3))).unwrap();
        let len = |f| inst.rows(f).len();
        assert_eq!((len(Family::Y1TildeA), len(Family::Y1A)), (0, 2));
        assert_eq!((len(Family::Y1c), len(Family::Y1d), len(Family::Y2a), len(Family::Y2b)), (0, 2, 0, 3));
        let inst = BcInstance::new(cfg(4, 2, 3, level(1, 2), level(2, 3))).unwrap();
        assert_eq!(inst.rows(Family::Y1TildeA).len(), 1);
        assert_eq!(inst.rows(Family::Y2b).len(), 2);
    }

    #[test]
    fn trims_match_the_decomposition() {
        let inst = BcInstance::new(cfg(5, 2, 3, level(1, 2), level(2, 3))).unwrap();
        let y1 = &inst.rows(Family::Y1)[0];
        assert_eq!((y1.terms[4].gamma, y1.terms[4].delta), (Level::one(), level(1, 2)));
        let inst = BcInstance::new(cfg(4, 1, 3, level(1, 4), level(1, 2))).unwrap();
        let y2 = &inst.rows(Family::Y2)[0];
        assert_eq!((y2.terms[0].gamma, y2.terms[0].delta), (Level::one(), level(1, 2)));
    }

    #[test]
    fn draws_are_deterministic_and_respect_epsilon() {
        let inst = BcInstance::new(cfg(5, 2, 3, level(1, 2), level(2, 3))).unwrap();
        let a = draw_channel(&inst, 3, 11).unwrap();
        assert_eq!(a, draw_channel(&inst, 3, 11).unwrap());
        for (f, cols) in inst.checked_blocks() {
            assert!(determinant(&a.block(f, &cols)).abs() >= inst.cfg.epsilon);
        }
    }

    #[test]
    fn epsilon_extremes() {
        let base = cfg(5, 2, 3, level(1, 2), level(2, 3));
        let zero = BcInstance::new(base.clone().with_law(CoefficientLaw::default(), 0.0).unwrap()).unwrap();
        assert_eq!(draw_channel(&zero, 0, 0).unwrap().attempts, 1);
        let huge = BcInstance::new(base.with_law(CoefficientLaw::default(), 7.0).unwrap()).unwrap();
        assert!(draw_channel(&huge, 0, 0).is_err());
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(&[]), 1.0);
        assert_eq!(determinant(&[vec![0.0, 1.0], vec![1.0, 0.0]]), -1.0);
        assert!((determinant(&[vec![2.0, 1.0], vec![4.0, 3.0]]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_input_gives_zero_outputs() {
        let c = cfg(5, 2, 3, level(1, 2), level(2, 3));
        let inst = BcInstance::new(c.clone()).unwrap();
        let d = draw_channel(&inst, 0, 0).unwrap();
        let x = CanonicalInput::from_values(&c, &[0; 5]).unwrap();
        let out = receiver_outputs(&inst, &x, &d).unwrap();
        assert!(out.y1.iter().chain(&out.y2).all(|&v| v == 0));
        assert_eq!(out.derived.y2c.len() + out.derived.y2d.len(), out.derived.y2b.len());
    }

    #[test]
    fn c_bar_indexing() {
        let c = cfg(4, 1, 3, level(1, 4), level(1, 2));
        let s = c_bar_partitions(&c, 4).unwrap();
        assert_eq!(s.len(), c_bar_count(&c, 4).unwrap());
        assert_eq!(s.len(), 2 + 2 * 3);
        assert_eq!(s[0], CSlice { stream: Stream::Y2c(0), lo: level(1, 4), hi: level(1, 2) });
        assert_eq!(c_bar(&s, s.len() + 1).unwrap(), s[0]);
        assert!(c_bar_partitions(&c, 3).is_err());
        assert_eq!(common_denominator(&c), 4);
    }
}
