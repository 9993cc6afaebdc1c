//! Receiver-entropy lemmas of the broadcast channel, checked as sweeps.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::channel::{normalize_config, BcConfig, BcInstance, Family};
use crate::entropy::estimate::{sweep, Inequality, Relation, Side, SweepReport, SweepSettings};
use crate::entropy::kernel::DEFAULT_BUDGET;
use crate::entropy::model::{Expr, InputLaw, Labeling, Marginal, Model, Variable};
use crate::error::{config, domain, shape, Result};
use crate::power::{level, Level};
use crate::rational::{from_ratio, render};

/// Lemma sweeps stop at `P = 256`: five level-1 inputs at `P = 1024` need `32⁵` points.
pub fn lemma_settings() -> SweepSettings {
    SweepSettings { powers: vec![16, 64, 256], budget: DEFAULT_BUDGET, ..SweepSettings::default() }
}

/// Options shared by the lemma checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaOptions {
    /// The message label `W₁`.
    pub labeling: Labeling,
    /// Inputs pinned to zero.
    pub zero_inputs: Vec<usize>,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self { labeling: Labeling::two_labels(), zero_inputs: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaBranch {
    /// `β₁ + β₂ ≥ 1`.
    Ge1,
    /// `β₁ + β₂ < 1`.
    Lt1,
}

/// `(N₀, N₁, N₂)` of the general lemmas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaConstants {
    pub branch: LemmaBranch,
    #[serde(with = "crate::rational::serde_level")]
    pub n0: Level,
    #[serde(with = "crate::rational::serde_level")]
    pub n1: Level,
    #[serde(with = "crate::rational::serde_level")]
    pub n2: Level,
}

/// Constants for a branch; errors if the branch does not match `β₁ + β₂`.
pub fn lemma_constants(cfg: &BcConfig, branch: LemmaBranch) -> Result<LemmaConstants> {
    let sum = cfg.beta1 + cfg.beta2;
    match branch {
        LemmaBranch::Ge1 if sum < Level::one() => {
            return Err(config(format!("branch ge1 needs beta1+beta2 >= 1, got {sum}")))
        }
        LemmaBranch::Lt1 if sum > Level::one() => {
            return Err(config(format!("branch lt1 needs beta1+beta2 <= 1, got {sum}")))
        }
        _ => {}
    }
    let (m, n1, n2) = (int(cfg.m), int(cfg.n1), int(cfg.n2));
    Ok(match branch {
        LemmaBranch::Ge1 => {
            let (h1, h2) = (m - n2, n2 - n1);
            LemmaConstants { branch, n0: h1 * (h2 + h1) * cfg.beta1, n1: h1, n2: h2 }
        }
        LemmaBranch::Lt1 => {
            let b1 = (m - n2) * cfg.beta2;
            LemmaConstants { branch, n0: b1 * (m - n1) * cfg.beta1, n1: b1, n2: (n2 - n1) * (Level::one() - cfg.beta1) }
        }
    })
}

fn int(n: usize) -> Level {
    Level::from_integer(n as i64)
}

fn to_f64(l: Level) -> f64 {
    *l.numer() as f64 / *l.denom() as f64
}

fn channel_model(cfg: &BcConfig, opts: &LemmaOptions) -> Result<(Model, BcInstance)> {
    let inst = BcInstance::new(cfg.clone())?;
    let mut model = Model::for_channel(&inst);
    model.labeling = opts.labeling.clone();
    if !opts.zero_inputs.is_empty() {
        let mut marginals = vec![Marginal::Uniform; cfg.m];
        for &j in &opts.zero_inputs {
            *marginals.get_mut(j).ok_or_else(|| shape(format!("no input {j}")))? = Marginal::Constant(0);
        }
        model.law = InputLaw::Product(marginals);
    }
    Ok((model, inst))
}

fn forms(rows: &[usize]) -> Vec<Expr> {
    rows.iter().map(|&f| Expr::Form(f)).collect()
}

fn windows(rows: &[usize], lo: Level) -> Vec<Expr> {
    rows.iter().map(|&form| Expr::Window { form, lo, hi: Level::one() }).collect()
}

fn require_config(cfg: &BcConfig, m: usize, n1: usize, n2: usize, b1: Level, b2: Level) -> Result<()> {
    if (cfg.m, cfg.n1, cfg.n2, cfg.beta1, cfg.beta2) != (m, n1, n2, b1, b2) {
        return Err(config(format!(
            "this check is pinned to ({m},{n1},{n2},{b1},{b2}); got ({},{},{},{},{})",
            cfg.m, cfg.n1, cfg.n2, cfg.beta1, cfg.beta2
        )));
    }
    Ok(())
}

/// `a·H(Y₂) ≤ b·H(Y₁) − c·H((Y₁)^{top}) + d·log P̄` on a channel.
fn receiver_inequality(
    name: &str,
    cfg: &BcConfig,
    opts: &LemmaOptions,
    top_lo: Level,
    coeffs: [f64; 4],
) -> Result<Inequality> {
    let (mut model, _) = channel_model(cfg, opts)?;
    let y2 = model.add_family(Family::Y2)?;
    let y1 = model.add_family(Family::Y1)?;
    let variables = vec![
        Variable::new("Y2", forms(&y2)),
        Variable::new("Y1", forms(&y1)),
        Variable::new("Y1 top", windows(&y1, top_lo)),
    ];
    Ok(Inequality {
        name: name.into(),
        model,
        variables,
        lhs: Side::of(&[(coeffs[0], 0)], 0.0),
        rhs: Side::of(&[(coeffs[1], 1), (-coeffs[2], 2)], coeffs[3]),
        relation: Relation::LhsAtMost,
    })
}

/// `2H(Y₂|W₁,𝒢) ≤ 3H(Y₁|W₁,𝒢) − H((Y₁)^{1/3}|W₁,𝒢) + 3·log P̄` on (5,2,3,1/2,2/3).
pub fn verify_lemma_example1(cfg: &BcConfig, settings: &SweepSettings, opts: &LemmaOptions) -> Result<SweepReport> {
    require_config(cfg, 5, 2, 3, level(1, 2), level(2, 3))?;
    let ineq = receiver_inequality("lemma1", cfg, opts, level(2, 3), [2.0, 3.0, 1.0, 3.0])?;
    sweep(&ineq, settings)
}

/// `H(Y₂|W₁,𝒢) ≤ 4H(Y₁|W₁,𝒢) − 3H((Y₁)^{1/2}|W₁,𝒢) + (3/4)·log P̄` on (4,1,3,1/4,1/2).
pub fn verify_lemma_example2(cfg: &BcConfig, settings: &SweepSettings, opts: &LemmaOptions) -> Result<SweepReport> {
    require_config(cfg, 4, 1, 3, level(1, 4), level(1, 2))?;
    let ineq = receiver_inequality("lemma2", cfg, opts, level(1, 2), [1.0, 4.0, 3.0, 0.75])?;
    sweep(&ineq, settings)
}

/// `N₁·H(Y₂|W₁,𝒢) ≤ (N₁+N₂)·H(Y₁|W₁,𝒢) − N₂·H(Y₁ã, (Y₁a)^{1−β₂}|W₁,𝒢) + N₀·log P̄`.
pub fn verify_lemma_general(
    cfg: &BcConfig,
    branch: LemmaBranch,
    settings: &SweepSettings,
    opts: &LemmaOptions,
) -> Result<SweepReport> {
    let k = lemma_constants(cfg, branch)?;
    let (mut model, _) = channel_model(cfg, opts)?;
    let y2 = model.add_family(Family::Y2)?;
    let y1 = model.add_family(Family::Y1)?;
    let split = split_variable(&mut model, cfg)?;
    let name = match branch {
        LemmaBranch::Ge1 => "lemma4",
        LemmaBranch::Lt1 => "lemma5",
    };
    let ineq = Inequality {
        name: name.into(),
        model,
        variables: vec![Variable::new("Y2", forms(&y2)), Variable::new("Y1", forms(&y1)), split],
        lhs: Side::of(&[(to_f64(k.n1), 0)], 0.0),
        rhs: Side::of(&[(to_f64(k.n1 + k.n2), 1), (-to_f64(k.n2), 2)], to_f64(k.n0)),
        relation: Relation::LhsAtMost,
    };
    let mut rep = sweep(&ineq, settings)?;
    for (key, v) in [("N0", k.n0), ("N1", k.n1), ("N2", k.n2)] {
        rep.details.insert(key.into(), render(&from_ratio(v)));
    }
    rep.details.insert("branch".into(), name.into());
    Ok(rep)
}

/// `(Y₁ã, (Y₁a)^{1−β₂})`.
fn split_variable(model: &mut Model, cfg: &BcConfig) -> Result<Variable> {
    let tilde = model.add_family(Family::Y1TildeA)?;
    let a = model.add_family(Family::Y1A)?;
    let mut exprs = forms(&tilde);
    exprs.extend(windows(&a, cfg.beta2));
    Ok(Variable::new("Y1 split", exprs))
}

/// Block structure of the two-receiver difference bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Config {
    /// Level `η` of every input.
    #[serde(with = "crate::rational::serde_level")]
    pub eta: Level,
    /// `Mᵢ`, inputs per block.
    pub blocks: Vec<usize>,
    #[serde(with = "crate::forms::levels_serde")]
    pub lambda1: Vec<Level>,
    #[serde(with = "crate::forms::levels_serde")]
    pub lambda2: Vec<Level>,
    pub n1: usize,
    pub n2: usize,
}

impl Lemma3Config {
    /// All `λ₁ᵢ ≤ λ₂ᵢ`, so the bound is zero.
    pub fn zero_gap() -> Self {
        Self {
            eta: Level::one(),
            blocks: vec![1, 2],
            lambda1: vec![level(1, 2), level(1, 3)],
            lambda2: vec![level(1, 1), level(1, 2)],
            n1: 2,
            n2: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.blocks.len();
        if l == 0 || self.lambda1.len() != l || self.lambda2.len() != l {
            return Err(shape("one pair of levels per block is required"));
        }
        if self.eta <= Level::zero() {
            return Err(domain("eta must be positive"));
        }
        if self.lambda1.iter().chain(&self.lambda2).any(|&x| x < Level::zero() || x > self.eta) {
            return Err(domain("levels must lie in [0, eta]"));
        }
        let total: usize = self.blocks.iter().sum();
        if self.n1 > self.n2.min(total) {
            return Err(domain(format!("N1 = {} exceeds min(N2, sum of blocks) = {}", self.n1, self.n2.min(total))));
        }
        Ok(())
    }

    /// Block order with `(λ₁ᵢ − λ₂ᵢ)⁺` nonincreasing.
    pub fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.blocks.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.excess(i)));
        order
    }

    fn excess(&self, i: usize) -> Level {
        (self.lambda1[i] - self.lambda2[i]).max(Level::zero())
    }

    /// `s` with `Σ_{i≤s} Mᵢ ≤ N₁ < Σ_{i≤s+1} Mᵢ`, over the sorted blocks.
    pub fn split_index(&self) -> usize {
        let order = self.sorted_order();
        let mut acc = 0;
        for (s, &i) in order.iter().enumerate() {
            if acc + self.blocks[i] > self.n1 {
                return s;
            }
            acc += self.blocks[i];
        }
        order.len()
    }

    /// Coefficient of `log P̄` in the bound.
    pub fn bound(&self) -> Result<Level> {
        self.validate()?;
        let order = self.sorted_order();
        let s = self.split_index();
        let head: usize = order[..s].iter().map(|&i| self.blocks[i]).sum();
        let mut b: Level = order[..s].iter().map(|&i| int(self.blocks[i]) * self.excess(i)).sum();
        if s < order.len() {
            b += int(self.n1 - head) * self.excess(order[s]);
        }
        Ok(b)
    }
}

/// `H(U₁|W,𝒢) − H(U₂|W,𝒢) ≤ bound·log P̄` for random forms over the top
/// `λ₁ᵢ` (resp. `λ₂ᵢ`) levels of each block.
pub fn verify_lemma3(c: &Lemma3Config, settings: &SweepSettings, opts: &LemmaOptions) -> Result<SweepReport> {
    let bound = c.bound()?;
    let total: usize = c.blocks.iter().sum();
    let mut model = Model::uniform(total);
    model.native = vec![c.eta; total];
    model.labeling = opts.labeling.clone();
    let block_of: Vec<usize> = c.blocks.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat(i).take(m)).collect();
    let mut side = |lambda: &[Level], count: usize, tag: &str| -> Result<Vec<Expr>> {
        let wins: Vec<(usize, Level, Level)> =
            block_of.iter().enumerate().map(|(j, &b)| (j, c.eta - lambda[b], c.eta)).collect();
        (0..count).map(|r| Ok(Expr::Form(model.add_random(format!("{tag}[{r}]"), &wins)?))).collect()
    };
    let u1 = side(&c.lambda1, c.n1, "U1")?;
    let u2 = side(&c.lambda2, c.n2, "U2")?;
    let ineq = Inequality {
        name: "lemma3".into(),
        model,
        variables: vec![Variable::new("U1", u1), Variable::new("U2", u2)],
        lhs: Side::of(&[(1.0, 0), (-1.0, 1)], 0.0),
        rhs: Side::of(&[], to_f64(bound)),
        relation: Relation::LhsAtMost,
    };
    let mut rep = sweep(&ineq, settings)?;
    rep.details.insert("bound".into(), render(&from_ratio(bound)));
    rep.details.insert("s".into(), c.split_index().to_string());
    Ok(rep)
}

/// `H(Y₁ã, (Y₁a)^{1−β₂}|W,𝒢) − H(Y₂|W,𝒢) ≤ o(log P̄)` on a channel.
pub fn verify_lemma3_split(cfg: &BcConfig, settings: &SweepSettings, opts: &LemmaOptions) -> Result<SweepReport> {
    let (mut model, _) = channel_model(cfg, opts)?;
    let split = split_variable(&mut model, cfg)?;
    let y2 = model.add_family(Family::Y2)?;
    let ineq = Inequality {
        name: "lemma3-split".into(),
        model,
        variables: vec![split, Variable::new("Y2", forms(&y2))],
        lhs: Side::of(&[(1.0, 0), (-1.0, 1)], 0.0),
        rhs: Side::of(&[], 0.0),
        relation: Relation::LhsAtMost,
    };
    let mut rep = sweep(&ineq, settings)?;
    rep.details.insert("bound".into(), "0".into());
    Ok(rep)
}

/// The six-way split of the (4,1,3,1/4,1/2) top levels, over a five-input index space.
#[derive(Clone, Debug)]
pub struct CTable {
    pub model: Model,
    /// `C₁ … C₆`.
    pub c: Vec<Variable>,
    /// Cyclic windows of size two over `C₂ … C₆`, as indices into `c`.
    pub windows: Vec<Vec<usize>>,
}

pub fn example2_c_table() -> Result<CTable> {
    let mut model = Model::uniform(5);
    model.labeling = Labeling::two_labels();
    let (q1, q2, q3, one) = (level(1, 4), level(1, 2), level(3, 4), Level::one());
    let input = |input, lo, hi| Expr::Input { input, lo, hi };
    let mix = [(0, q3, one), (1, q3, one), (2, q3, one), (3, q1, q2), (4, q1, q2)];
    let c3 = model.add_random("C3", &mix)?;
    let c6 = model.add_random("C6", &mix)?;
    let c = vec![
        Variable::new("C1", vec![input(4, q3, one)]),
        Variable::new("C2", vec![input(4, q2, q3)]),
        Variable::new("C3", vec![Expr::Form(c3)]),
        Variable::new("C4", vec![input(3, q3, one)]),
        Variable::new("C5", vec![input(3, q2, q3)]),
        Variable::new("C6", vec![Expr::Form(c6)]),
    ];
    let windows = (0..5).map(|i| vec![1 + i, 1 + (i + 1) % 5]).collect();
    Ok(CTable { model, c, windows })
}

/// The configuration a named lemma suite runs on.
pub fn example_config(name: &str) -> Result<BcConfig> {
    match name {
        "example1" => normalize_config(5, 2, 3, level(1, 2), level(2, 3)),
        "example2" => normalize_config(4, 1, 3, level(1, 4), level(1, 2)),
        other => Err(domain(format!("unknown example {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::estimate::{entropies_per_draw, Verdict};
    use crate::power::PowerScale;

    fn quick() -> SweepSettings {
        SweepSettings { powers: vec![16, 64], draws: 3, ..SweepSettings::default() }
    }

    #[test]
    fn constants_by_substitution() {
        let e1 = example_config("example1").unwrap();
        let k = lemma_constants(&e1, LemmaBranch::Ge1).unwrap();
        assert_eq!((k.n0, k.n1, k.n2), (level(3, 1), level(2, 1), level(1, 1)));
        let e2 = example_config("example2").unwrap();
        let k = lemma_constants(&e2, LemmaBranch::Lt1).unwrap();
        assert_eq!((k.n0, k.n1, k.n2), (level(3, 8), level(1, 2), level(3, 2)));
        assert!(lemma_constants(&e1, LemmaBranch::Lt1).is_err());
        assert!(lemma_constants(&e2, LemmaBranch::Ge1).is_err());
    }

    #[test]
    fn boundary_accepts_both_branches() {
        let cfg = normalize_config(5, 2, 3, level(1, 2), level(1, 2)).unwrap();
        assert!(lemma_constants(&cfg, LemmaBranch::Ge1).is_ok());
        assert!(lemma_constants(&cfg, LemmaBranch::Lt1).is_ok());
    }

    #[test]
    fn pinned_examples_reject_other_configs() {
        let cfg = normalize_config(4, 1, 3, level(0, 1), level(1, 2)).unwrap();
        assert!(verify_lemma_example2(&cfg, &quick(), &LemmaOptions::default()).is_err());
        assert!(verify_lemma_example1(&cfg, &quick(), &LemmaOptions::default()).is_err());
    }

    #[test]
    fn single_power_is_inconclusive() {
        let s = SweepSettings { powers: vec![16], draws: 2, ..SweepSettings::default() };
        let rep = verify_lemma_example1(&example_config("example1").unwrap(), &s, &LemmaOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn lemma3_split_index_and_bound() {
        let z = Lemma3Config::zero_gap();
        assert_eq!(z.bound().unwrap(), Level::zero());
        let single = Lemma3Config {
            eta: Level::one(),
            blocks: vec![3],
            lambda1: vec![level(3, 4)],
            lambda2: vec![level(1, 4)],
            n1: 2,
            n2: 3,
        };
        assert_eq!(single.split_index(), 0);
        assert_eq!(single.bound().unwrap(), level(1, 1));
        let mixed = Lemma3Config {
            eta: Level::one(),
            blocks: vec![1, 2, 2],
            lambda1: vec![level(1, 2), level(1, 1), level(1, 4)],
            lambda2: vec![level(1, 2), level(1, 4), level(1, 2)],
            n1: 3,
            n2: 4,
        };
        assert_eq!(mixed.sorted_order()[0], 1);
        assert_eq!(mixed.split_index(), 2);
        assert_eq!(mixed.bound().unwrap(), level(3, 2));
        let mut bad = z.clone();
        bad.n1 = 4;
        assert!(bad.bound().is_err());
    }

    #[test]
    fn identical_sides_have_zero_difference() {
        let c = Lemma3Config {
            eta: Level::one(),
            blocks: vec![2],
            lambda1: vec![level(1, 2)],
            lambda2: vec![level(1, 2)],
            n1: 2,
            n2: 2,
        };
        let mut model = Model::uniform(2);
        model.labeling = Labeling::two_labels();
        let w = [(0, level(1, 2), level(1, 1)), (1, level(1, 2), level(1, 1))];
        let f = model.add_random("U", &w).unwrap();
        let g = model.add_random("U'", &w).unwrap();
        let v = Variable::new("U", vec![Expr::Form(f), Expr::Form(g)]);
        let h = entropies_per_draw(&model, &[v.clone(), v], &PowerScale::new(64).unwrap(), 3, 0, DEFAULT_BUDGET).unwrap();
        assert!(h.iter().all(|d| d[0] == d[1]));
        assert_eq!(c.bound().unwrap(), Level::zero());
    }

    #[test]
    fn c_table_windows_cover_five_variables() {
        let t = example2_c_table().unwrap();
        assert_eq!(t.c.len(), 6);
        assert_eq!(t.windows.len(), 5);
        assert!(t.windows.iter().all(|w| w.len() == 2));
        let mut seen: Vec<usize> = t.windows.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
        let lengths: Vec<Level> =
            t.c.iter().map(|v| t.model.length(&v.exprs[0]).unwrap()).collect();
        assert!(lengths.iter().all(|&l| l == level(1, 4)));
    }

    #[test]
    fn c_table_pairs_bound_the_joint() {
        let t = example2_c_table().unwrap();
        let mut vars = vec![Variable::new("C2..C6", t.c[1..].iter().flat_map(|v| v.exprs.clone()).collect())];
        for w in &t.windows {
            vars.push(Variable::new("pair", w.iter().flat_map(|&i| t.c[i].exprs.clone()).collect()));
        }
        let h = entropies_per_draw(&t.model, &vars, &PowerScale::new(256).unwrap(), 2, 0, DEFAULT_BUDGET).unwrap();
        for d in h {
            let pairs: f64 = d[1..].iter().sum();
            assert!(2.0 * d[0] <= pairs + 1e-9, "{} > {}", 2.0 * d[0], pairs);
        }
    }
}
