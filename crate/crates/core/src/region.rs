//! The DoF region of the two-user MIMO BC with partial CSIT, in exact rationals.
//!
//! For `N₂ ≤ M`:
//!
//! ```text
//! B1  d₁ ≤ N₁                       B3   d₁+d₂ ≤ N₂ + (M−N₂)β₂
//! B2  d₂ ≤ N₂                       B33  d₁+d₂ ≤ N₂ + (M−N₂)β_o
//! B4  d₁/N₁ + d₂/N₂ ≤ 1 + (M−N₁)β₁/N₂
//! ```
//!
//! and for `N₂ > M`: `B7 d₁ ≤ N₁`, `B8 d₁+d₂ ≤ M`, `B9 d₁/N₁ + d₂/M ≤ 1 + (M−N₁)β₁/M`.
//!
//! `β_o` has two branches, split at `β₁+β₂ = 1`, which agree on the boundary.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::channel::{normalize_config, BcConfig, Regime};
use crate::error::{Error, Result};
use crate::power::Level;
use crate::rational::{from_ratio, int, render, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub a1: Rational,
    pub a2: Rational,
    pub b: Rational,
    pub tag: String,
}

impl Halfspace {
    pub fn new(a1: Rational, a2: Rational, b: Rational, tag: &str) -> Self {
        assert!(!(a1.is_zero() && a2.is_zero()), "halfspace normal must be nonzero");
        Self { a1, a2, b, tag: tag.to_string() }
    }

    pub fn slack(&self, d1: &Rational, d2: &Rational) -> Rational {
        &self.b - (&self.a1 * d1 + &self.a2 * d2)
    }

    pub fn contains(&self, d1: &Rational, d2: &Rational) -> bool {
        !self.slack(d1, d2).is_negative()
    }

    pub fn is_tight(&self, d1: &Rational, d2: &Rational) -> bool {
        self.slack(d1, d2).is_zero()
    }
}

pub type Vertex = (Rational, Rational);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaBranch {
    /// `β₁+β₂ < 1`
    Below,
    /// `β₁+β₂ ≥ 1`
    AtLeast,
}

/// `β_o` with a flag for the `0/0` configurations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaO {
    pub value: Rational,
    pub branch: BetaBranch,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionPolytope {
    pub cfg: BcConfig,
    pub regime: Regime,
    pub beta_o: Option<BetaO>,
    pub halfspaces: Vec<Halfspace>,
    pub vertices: Vec<Vertex>,
}

/// The `β₁+β₂ < 1` branch, `None` on a zero denominator.
pub fn beta_o_below(m: i64, n1: i64, n2: i64, b1: &Rational, b2: &Rational) -> Option<Rational> {
    let den = int(n2 - n1) * (Rational::one() - b1) + int(m - n2) * b2;
    (!den.is_zero()).then(|| b1 * b2 * int(m - n2) / den)
}

/// The `β₁+β₂ ≥ 1` branch, `None` on a zero denominator.
pub fn beta_o_at_least(m: i64, n1: i64, n2: i64, b1: &Rational, b2: &Rational) -> Option<Rational> {
    let den = int(m - n1);
    (!den.is_zero()).then(|| (int(n1 - n2) + int(n2 - n1) * b2 + int(m - n1) * b1) / den)
}

/// `β_o` for a normalized config in the `N₂ ≤ M` regime.
///
/// Both zero-denominator cases also have a zero numerator; they return `0` flagged
/// as degenerate. In either case `(M−N₂)β_o` does not enter the region.
pub fn beta_o(cfg: &BcConfig) -> Result<BetaO> {
    if cfg.regime != Regime::N2AtMostM {
        return Err(Error::Config("β_o is defined for N₂ ≤ M only".into()));
    }
    let (m, n1, n2) = (cfg.m as i64, cfg.n1 as i64, cfg.n2 as i64);
    let (b1, b2) = (from_ratio(cfg.beta1), from_ratio(cfg.beta2));
    let branch = if &b1 + &b2 < Rational::one() { BetaBranch::Below } else { BetaBranch::AtLeast };
    let v = match branch {
        BetaBranch::Below => beta_o_below(m, n1, n2, &b1, &b2),
        BetaBranch::AtLeast => beta_o_at_least(m, n1, n2, &b1, &b2),
    };
    Ok(match v {
        Some(value) => BetaO { value, branch, degenerate: false },
        None => BetaO { value: Rational::zero(), branch, degenerate: true },
    })
}

/// Raw-parameter convenience: normalizes, then evaluates `β_o`.
pub fn beta_o_of(m: usize, n1: usize, n2: usize, beta1: Level, beta2: Level) -> Result<BetaO> {
    beta_o(&normalize_config(m, n1, n2, beta1, beta2)?)
}

fn nonnegativity() -> [Halfspace; 2] {
    [
        Halfspace::new(-Rational::one(), Rational::zero(), Rational::zero(), "d1>=0"),
        Halfspace::new(Rational::zero(), -Rational::one(), Rational::zero(), "d2>=0"),
    ]
}

/// Halfspaces and vertices for a normalized config.
pub fn region(cfg: &BcConfig) -> Result<RegionPolytope> {
    let (m, n1, n2) = (int(cfg.m as i64), int(cfg.n1 as i64), int(cfg.n2 as i64));
    let (b1, b2) = (from_ratio(cfg.beta1), from_ratio(cfg.beta2));
    let (one, zero) = (Rational::one(), Rational::zero());
    let (beta, mut hs) = match cfg.regime {
        Regime::N2AtMostM => {
            let bo = beta_o(cfg)?;
            let hs = vec![
                Halfspace::new(one.clone(), zero.clone(), n1.clone(), "B1"),
                Halfspace::new(zero.clone(), one.clone(), n2.clone(), "B2"),
                Halfspace::new(&one / &n1, &one / &n2, &one + (&m - &n1) * &b1 / &n2, "B4"),
                Halfspace::new(one.clone(), one.clone(), &n2 + (&m - &n2) * &b2, "B3"),
                Halfspace::new(one.clone(), one.clone(), &n2 + (&m - &n2) * &bo.value, "B33"),
            ];
            (Some(bo), hs)
        }
        Regime::N2AboveM => {
            let hs = vec![
                Halfspace::new(one.clone(), zero.clone(), n1.clone(), "B7"),
                Halfspace::new(one.clone(), one.clone(), m.clone(), "B8"),
                Halfspace::new(&one / &n1, &one / &m, &one + (&m - &n1) * &b1 / &m, "B9"),
            ];
            (None, hs)
        }
    };
    hs.extend(nonnegativity());
    let vertices = enumerate_vertices(&hs)?;
    Ok(RegionPolytope { cfg: cfg.clone(), regime: cfg.regime, beta_o: beta, halfspaces: hs, vertices })
}

/// Raw-parameter convenience: normalizes, then builds the region.
pub fn region_of(m: usize, n1: usize, n2: usize, beta1: Level, beta2: Level) -> Result<RegionPolytope> {
    region(&normalize_config(m, n1, n2, beta1, beta2)?)
}

fn intersect(h: &Halfspace, g: &Halfspace) -> Option<Vertex> {
    let det = &h.a1 * &g.a2 - &h.a2 * &g.a1;
    if det.is_zero() {
        return None;
    }
    let x = (&h.b * &g.a2 - &h.a2 * &g.b) / &det;
    let y = (&h.a1 * &g.b - &h.b * &g.a1) / &det;
    Some((x, y))
}

fn cross(o: &Vertex, a: &Vertex, b: &Vertex) -> Rational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Whether the halfspace system admits a nonzero recession direction.
fn is_unbounded(hs: &[Halfspace]) -> bool {
    hs.iter().any(|h| {
        [(h.a2.clone(), -h.a1.clone()), (-h.a2.clone(), h.a1.clone())]
            .iter()
            .any(|(r1, r2)| hs.iter().all(|g| !(&g.a1 * r1 + &g.a2 * r2).is_positive()))
    })
}

/// Extreme points of a bounded 2-D halfspace intersection, counterclockwise from
/// the lowest-then-leftmost vertex.
pub fn enumerate_vertices(hs: &[Halfspace]) -> Result<Vec<Vertex>> {
    let mut pts: Vec<Vertex> = Vec::new();
    for (i, h) in hs.iter().enumerate() {
        for g in &hs[i + 1..] {
            if let Some(p) = intersect(h, g) {
                if hs.iter().all(|k| k.contains(&p.0, &p.1)) && !pts.contains(&p) {
                    pts.push(p);
                }
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::Empty);
    }
    if is_unbounded(hs) {
        return Err(Error::Unbounded);
    }
    Ok(convex_ccw(pts))
}

/// Orders points counterclockwise around their hull, dropping non-extreme ones.
fn convex_ccw(mut pts: Vec<Vertex>) -> Vec<Vertex> {
    pts.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    if pts.len() < 3 {
        return pts;
    }
    let pivot = pts[0].clone();
    let mut rest = pts.split_off(1);
    rest.sort_by(|a, b| match cross(&pivot, a, b) {
        c if c.is_positive() => Ordering::Less,
        c if c.is_negative() => Ordering::Greater,
        _ => dist2(&pivot, a).cmp(&dist2(&pivot, b)),
    });
    let mut hull = vec![pivot];
    for p in rest {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive() {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

fn dist2(a: &Vertex, b: &Vertex) -> Rational {
    let dx = &a.0 - &b.0;
    let dy = &a.1 - &b.1;
    &dx * &dx + &dy * &dy
}

pub fn contains(region: &RegionPolytope, d1: &Rational, d2: &Rational) -> bool {
    region.halfspaces.iter().all(|h| h.contains(d1, d2))
}

pub fn sum_dof(region: &RegionPolytope) -> Rational {
    region.vertices.iter().map(|(x, y)| x + y).max().unwrap_or_else(Rational::zero)
}

/// Whether every vertex of `inner` lies in `outer`, i.e. `inner ⊆ outer`.
pub fn is_subset(inner: &RegionPolytope, outer: &RegionPolytope) -> bool {
    inner.vertices.iter().all(|(x, y)| contains(outer, x, y))
}

/// Outcome of a monotonicity and branch-agreement sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub checked_pairs: usize,
    pub boundary_points: usize,
    /// `(β₁,β₂) → (β₁',β₂')` steps where the region shrank.
    pub inclusion_violations: Vec<[String; 4]>,
    /// Boundary points where the two `β_o` branches disagree.
    pub branch_disagreements: Vec<[String; 2]>,
    /// Grid points where `β_o > β₂`, i.e. B33 looser than B3.
    pub b33_looser_than_b3: Vec<[String; 2]>,
    /// Grid points where B3 touches the region.
    pub b3_active: Vec<[String; 2]>,
}

impl MonotonicityReport {
    pub fn is_clean(&self) -> bool {
        self.inclusion_violations.is_empty() && self.branch_disagreements.is_empty()
    }
}

/// Checks, over a grid of β values for one antenna triple, that the region grows
/// with each β, that both `β_o` branches agree where `β₁+β₂ = 1`, and records where
/// B33 and B3 compare.
pub fn cross_check_monotonicity(m: usize, n1: usize, n2: usize, grid: &[Level]) -> Result<MonotonicityReport> {
    let mut rep = MonotonicityReport::default();
    let mut grid = grid.to_vec();
    grid.sort();
    grid.dedup();
    let regions: Vec<Vec<RegionPolytope>> = grid
        .iter()
        .map(|&b1| grid.iter().map(|&b2| region_of(m, n1, n2, b1, b2)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let pair = |i: usize, j: usize| [render(&from_ratio(grid[i])), render(&from_ratio(grid[j]))];
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let r = &regions[i][j];
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni < grid.len() && nj < grid.len() {
                    rep.checked_pairs += 1;
                    if !is_subset(r, &regions[ni][nj]) {
                        let [a, b] = pair(i, j);
                        let [c, d] = pair(ni, nj);
                        rep.inclusion_violations.push([a, b, c, d]);
                    }
                }
            }
            if let Some(bo) = &r.beta_o {
                if bo.value > from_ratio(r.cfg.beta2) {
                    rep.b33_looser_than_b3.push(pair(i, j));
                }
                let b3 = r.halfspaces.iter().find(|h| h.tag == "B3").expect("B3 present");
                if r.vertices.iter().any(|(x, y)| b3.is_tight(x, y)) {
                    rep.b3_active.push(pair(i, j));
                }
            }
            if grid[i] + grid[j] == Level::one() && r.regime == Regime::N2AtMostM {
                rep.boundary_points += 1;
                let c = &r.cfg;
                let (mm, a, b) = (c.m as i64, c.n1 as i64, c.n2 as i64);
                let (x, y) = (from_ratio(c.beta1), from_ratio(c.beta2));
                let lo = beta_o_below(mm, a, b, &x, &y);
                let hi = beta_o_at_least(mm, a, b, &x, &y);
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    if lo != hi {
                        rep.branch_disagreements.push(pair(i, j));
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// JSON shape of a region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub config: ConfigDoc,
    pub regime: Regime,
    pub beta_o: Option<String>,
    pub beta_o_degenerate: bool,
    pub halfspaces: Vec<HalfspaceDoc>,
    pub vertices: Vec<[String; 2]>,
    pub sum_dof: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub beta1: String,
    pub beta2: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceDoc {
    pub a1: String,
    pub a2: String,
    pub b: String,
    pub tag: String,
}

impl RegionPolytope {
    pub fn to_doc(&self) -> RegionDoc {
        let c = &self.cfg;
        let mut notes = Vec::new();
        if c.swapped {
            notes.push("users swapped so that N1 <= N2; beta1 and beta2 swapped with them".to_string());
        }
        if c.m_raw != c.m {
            notes.push(format!("M clamped from {} to N1+N2 = {}", c.m_raw, c.m));
        }
        let degenerate = self.beta_o.as_ref().is_some_and(|b| b.degenerate);
        if degenerate {
            notes.push("beta_o has a 0/0 form here; reported as 0".to_string());
        }
        RegionDoc {
            config: ConfigDoc {
                m: c.m,
                n1: c.n1,
                n2: c.n2,
                beta1: render(&from_ratio(c.beta1)),
                beta2: render(&from_ratio(c.beta2)),
            },
            regime: self.regime,
            beta_o: self.beta_o.as_ref().map(|b| render(&b.value)),
            beta_o_degenerate: degenerate,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| HalfspaceDoc { a1: render(&h.a1), a2: render(&h.a2), b: render(&h.b), tag: h.tag.clone() })
                .collect(),
            vertices: self.vertices.iter().map(|(x, y)| [render(x), render(y)]).collect(),
            sum_dof: render(&sum_dof(self)),
            notes,
        }
    }
}
