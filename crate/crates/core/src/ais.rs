//! Aligned image sets: alignment probabilities of codeword pairs, set-size
//! statistics under the functional-dependence map, and their growth in `P̄`.

use std::collections::BTreeMap;

use num_traits::One;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::estimate::{mean_se, sweep, Inequality, Relation, Side, SweepReport, SweepSettings, Verdict};
use crate::entropy::kernel::{sorted_entropy, Compiled, KeyMap, DEFAULT_BUDGET};
use crate::entropy::model::{Expr, InputLaw, Labeling, Marginal, Model, Variable};
use crate::error::{domain, shape, Error, Result};
use crate::forms::CoefficientLaw;
use crate::power::{level, Level, PowerScale};
use crate::seed;

/// Which inputs enter an alignment test whole, and which through `(·)^1_{m/q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSetup {
    pub full: Vec<usize>,
    pub trimmed: Vec<usize>,
    /// `m/q`, the cut applied to trimmed inputs.
    #[serde(with = "crate::rational::serde_level")]
    pub cut: Level,
    /// `e/q`, the extra levels used by `Δ̆`.
    #[serde(with = "crate::rational::serde_level")]
    pub extra: Level,
    /// Number of independent image forms `K`.
    pub forms: usize,
    pub law: CoefficientLaw,
}

impl AlignmentSetup {
    /// Columns `a = [0, M−N₂)` whole and `c = [N₁, M)` trimmed at `m/q`.
    pub fn for_channel(big_m: usize, n1: usize, n2: usize, m: i64, e: i64, q: i64, forms: usize) -> Result<Self> {
        if !(n1 <= n2 && n2 <= big_m && big_m <= n1 + n2) {
            return Err(domain(format!("need N1 ≤ N2 ≤ M ≤ N1+N2, got ({big_m},{n1},{n2})")));
        }
        if q <= 0 || m < 0 || e < 0 || m + e > q {
            return Err(domain(format!("need 0 ≤ m, e and m+e ≤ q, got m={m} e={e} q={q}")));
        }
        Ok(Self {
            full: (0..big_m - n2).collect(),
            trimmed: (n1..big_m).collect(),
            cut: level(m, q),
            extra: level(e, q),
            forms,
            law: CoefficientLaw::default(),
        })
    }

    /// One whole input and one form: `P(⌊gE⌋ = ⌊gF⌋)`.
    pub fn single() -> Self {
        Self { full: vec![0], trimmed: Vec::new(), cut: level(0, 1), extra: level(0, 1), forms: 1, law: CoefficientLaw::default() }
    }

    pub fn inputs(&self) -> usize {
        self.full.iter().chain(&self.trimmed).map(|&j| j + 1).max().unwrap_or(0)
    }

    pub fn terms(&self) -> usize {
        self.full.len() + self.trimmed.len()
    }
}

/// Two codewords of the same shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodewordPair {
    pub e: Vec<u64>,
    pub f: Vec<u64>,
}

impl CodewordPair {
    pub fn new(e: Vec<u64>, f: Vec<u64>) -> Result<Self> {
        if e.len() != f.len() {
            return Err(shape(format!("codewords of lengths {} and {}", e.len(), f.len())));
        }
        Ok(Self { e, f })
    }

    fn check(&self, setup: &AlignmentSetup, scale: &PowerScale) -> Result<()> {
        if self.e.len() < setup.inputs() {
            return Err(shape(format!("codewords have {} entries, setup needs {}", self.e.len(), setup.inputs())));
        }
        let size = scale.alphabet(Level::one())?;
        if self.e.iter().chain(&self.f).any(|&x| x >= size) {
            return Err(domain(format!("codeword entries must lie below {size}")));
        }
        Ok(())
    }

    /// `A_j`: `F_j − E_j` on whole inputs, `(F_j)^1_{m/q} − (E_j)^1_{m/q}` on trimmed ones.
    pub fn a_diffs(&self, setup: &AlignmentSetup, scale: &PowerScale) -> Result<Vec<i64>> {
        self.check(setup, scale)?;
        let mut out: Vec<i64> = setup.full.iter().map(|&j| self.f[j] as i64 - self.e[j] as i64).collect();
        for &j in &setup.trimmed {
            let t = |x| scale.part_mid(x, setup.cut, Level::one());
            out.push(t(self.f[j])? as i64 - t(self.e[j])? as i64);
        }
        Ok(out)
    }

    /// `Δ̆_j`: the difference of the top parts above `e/q` (whole) or `(m+e)/q` (trimmed).
    pub fn breve_deltas(&self, setup: &AlignmentSetup, scale: &PowerScale) -> Result<Vec<i64>> {
        self.check(setup, scale)?;
        let top = |x, lo| scale.part_mid(x, lo, Level::one()).map(|v| v as i64);
        let mut out = Vec::with_capacity(setup.terms());
        for &j in &setup.full {
            out.push(top(self.e[j], setup.extra)? - top(self.f[j], setup.extra)?);
        }
        let lo = setup.cut + setup.extra;
        for &j in &setup.trimmed {
            out.push(top(self.e[j], lo)? - top(self.f[j], lo)?);
        }
        Ok(out)
    }

    /// `max|Δ̆| ≥ 2 ⇒ max|A| ≥ (max|Δ̆| − 1)·P̄^{e/q}`.
    pub fn breve_bound_holds(&self, setup: &AlignmentSetup, scale: &PowerScale) -> Result<bool> {
        let a = max_abs(&self.a_diffs(setup, scale)?);
        let d = max_abs(&self.breve_deltas(setup, scale)?);
        Ok(d < 2 || a >= (d - 1) * scale.pbar(setup.extra)? as i64)
    }

    fn images(&self, x: &[u64], setup: &AlignmentSetup, scale: &PowerScale, g: &[f64]) -> Result<Vec<i64>> {
        let mut vals: Vec<f64> = setup.full.iter().map(|&j| x[j] as f64).collect();
        for &j in &setup.trimmed {
            vals.push(scale.part_mid(x[j], setup.cut, Level::one())? as f64);
        }
        Ok(g.chunks(setup.terms()).map(|row| row.iter().zip(&vals).map(|(c, v)| (c * v).floor() as i64).sum()).collect())
    }
}

fn max_abs(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).max().unwrap_or(0)
}

/// Monte-Carlo alignment frequency and its bound `∏_k min(1, 2·T·f_max / max_j|A_j|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub bound: f64,
    pub max_abs_a: i64,
    pub draws: usize,
    pub within_bound: bool,
}

pub fn alignment_probability(
    pair: &CodewordPair,
    setup: &AlignmentSetup,
    scale: &PowerScale,
    draws: usize,
    seed: u64,
) -> Result<AlignmentEstimate> {
    let a = max_abs(&pair.a_diffs(setup, scale)?);
    let per_form = if a == 0 { 1.0 } else { (2.0 * setup.terms() as f64 * setup.law.f_max / a as f64).min(1.0) };
    let bound = per_form.powi(setup.forms as i32);
    let mut rng = seed::rng(seed, &[0xa1]);
    let mut hits = 0usize;
    for _ in 0..draws {
        let g: Vec<f64> = (0..setup.terms() * setup.forms).map(|_| setup.law.sample(&mut rng)).collect();
        if pair.images(&pair.e, setup, scale, &g)? == pair.images(&pair.f, setup, scale, &g)? {
            hits += 1;
        }
    }
    let p = hits as f64 / draws.max(1) as f64;
    let stderr = (p * (1.0 - p) / draws.max(1) as f64).sqrt();
    Ok(AlignmentEstimate { probability: p, stderr, bound, max_abs_a: a, draws, within_bound: p <= bound + 3.0 * stderr })
}

/// A random codeword pair whose second word is a perturbation of the first at a random scale.
pub fn random_pair<R: Rng + ?Sized>(len: usize, scale: &PowerScale, rng: &mut R) -> Result<CodewordPair> {
    let size = scale.alphabet(Level::one())?;
    let e: Vec<u64> = (0..len).map(|_| rng.gen_range(0..size)).collect();
    let radius = 1u64 << rng.gen_range(0..=(64 - size.leading_zeros()));
    let f = e
        .iter()
        .map(|&x| {
            let off = rng.gen_range(0..=2 * radius) as i64 - radius as i64;
            (x as i64 + off).clamp(0, size as i64 - 1) as u64
        })
        .collect();
    CodewordPair::new(e, f)
}

/// Parts `U′` and full image `U` over a model.
#[derive(Clone, Debug)]
pub struct AisInstance {
    pub name: String,
    pub model: Model,
    pub parts: Variable,
    pub full: Variable,
}

/// Split point of the toy instance: `Z_a = (Z)^1_s`, `Z_b = (Z′)_s`.
pub fn toy_split() -> Level {
    level(4, 5)
}

fn toy_model(split: Level, zero_second: bool) -> Result<(Model, Vec<Expr>, Expr)> {
    let mut model = Model::uniform(2);
    let full = [(0, level(0, 1), Level::one()), (1, level(0, 1), Level::one())];
    let z = model.add_random("Z", &full)?;
    let z2 = model.add_random("Z'", &full)?;
    if zero_second {
        model.law = InputLaw::Product(vec![Marginal::Uniform, Marginal::Constant(0)]);
    }
    let parts = vec![
        Expr::Window { form: z, lo: split, hi: Level::one() },
        Expr::Window { form: z2, lo: level(0, 1), hi: split },
    ];
    Ok((model, parts, Expr::Form(z)))
}

/// `U′ = (Z_a, Z_b)`, `U = Z`.
pub fn toy_instance() -> Result<AisInstance> {
    let (model, parts, z) = toy_model(toy_split(), false)?;
    Ok(AisInstance { name: "toy".into(), model, parts: Variable::new("U'", parts), full: Variable::new("U", vec![z]) })
}

/// `U′ = U = Z`.
pub fn identity_instance() -> Result<AisInstance> {
    let (model, _, z) = toy_model(toy_split(), false)?;
    Ok(AisInstance { name: "identity".into(), model, parts: Variable::new("U'", vec![z]), full: Variable::new("U", vec![z]) })
}

/// Negative control: the full image drops every variable, so `U` is constant.
pub fn lossy_instance() -> Result<AisInstance> {
    let mut inst = toy_instance()?;
    inst.name = "lossy".into();
    inst.full = Variable::new("U", Vec::new());
    Ok(inst)
}

/// Per-draw partition of the distinct part images by the full image of their representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImagePartition {
    /// `|S|` of every set, ordered by the set's full-image key.
    pub sizes: Vec<usize>,
    pub part_images: usize,
    /// `H(U′ | U_rep)` in bits.
    pub residual_entropy: f64,
}

impl ImagePartition {
    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// `E|S_ν|` for `ν` uniform over the distinct part images.
    pub fn expected_size(&self) -> f64 {
        let s: f64 = self.sizes.iter().map(|&x| x as f64).sum();
        self.sizes.iter().map(|&x| (x * x) as f64).sum::<f64>() / s
    }

    /// `H(U′ | U_rep) ≤ log₂ max|S|`.
    pub fn dependence_bound_holds(&self) -> bool {
        self.residual_entropy <= (self.max_size().max(1) as f64).log2() + 1e-9
    }
}

/// Groups part images by the full image of their first occurrence.
pub fn partition_from_keys(parts: &[u128], full: &[u128], weights: &[f64]) -> ImagePartition {
    let mut rep: KeyMap<u128> = KeyMap::default();
    for (&p, &u) in parts.iter().zip(full) {
        rep.entry(p).or_insert(u);
    }
    let mut sizes: BTreeMap<u128, usize> = BTreeMap::new();
    for &u in rep.values() {
        *sizes.entry(u).or_insert(0) += 1;
    }
    let mut hp: KeyMap<f64> = KeyMap::default();
    let mut hu: KeyMap<f64> = KeyMap::default();
    for (&p, &w) in parts.iter().zip(weights) {
        *hp.entry(p).or_insert(0.0) += w;
        *hu.entry(rep[&p]).or_insert(0.0) += w;
    }
    ImagePartition {
        sizes: sizes.into_values().collect(),
        part_images: rep.len(),
        residual_entropy: (sorted_entropy(hp) - sorted_entropy(hu)).max(0.0),
    }
}

/// Partition for draw `draw`.
pub fn image_map(inst: &AisInstance, scale: &PowerScale, draw: u64, seed: u64, budget: u64) -> Result<ImagePartition> {
    let vars = [inst.parts.clone(), inst.full.clone()];
    let compiled = Compiled::new(&inst.model, scale, &vars, budget)?;
    image_map_compiled(inst, &compiled, &vars, draw, seed)
}

fn image_map_compiled(
    inst: &AisInstance,
    compiled: &Compiled,
    vars: &[Variable],
    draw: u64,
    seed: u64,
) -> Result<ImagePartition> {
    for attempt in 0..crate::entropy::estimate::MAX_GUARD_REDRAWS {
        let coeffs = inst.model.draw_coefficients(seed, draw, attempt)?;
        match compiled.tables(&coeffs) {
            Ok(t) => {
                let (keys, weights, _) = compiled.point_keys(&t, vars)?;
                return Ok(partition_from_keys(&keys[0], &keys[1], &weights));
            }
            Err(Error::FloorAmbiguity) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::FloorAmbiguity)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AisSettings {
    pub powers: Vec<u64>,
    pub draws: usize,
    pub seed: u64,
    pub budget: u64,
    /// Largest power-law exponent accepted.
    pub max_exponent: f64,
    /// Largest relative deviation from the logarithmic fit accepted.
    pub max_residual: f64,
}

impl Default for AisSettings {
    fn default() -> Self {
        Self { powers: vec![16, 64, 256, 1024], draws: 200, seed: 0, budget: DEFAULT_BUDGET, max_exponent: 0.1, max_residual: 0.1 }
    }
}

/// Set-size statistics per `P`, with the growth fits over all but the smallest `P̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedImageSetReport {
    pub instance: String,
    #[serde(rename = "P_sweep")]
    pub p_sweep: Vec<u64>,
    pub pbar: Vec<u64>,
    pub log2_pbar: Vec<f64>,
    pub expected_size: Vec<f64>,
    pub stderr: Vec<f64>,
    pub max_size: Vec<usize>,
    pub part_images: Vec<f64>,
    /// `(size, count)` pairs summed over draws, one list per `P`.
    pub histogram: Vec<Vec<(usize, u64)>>,
    pub dependence_bound_holds: bool,
    pub c1: f64,
    pub c2: f64,
    pub exponent: f64,
    pub residual: f64,
    pub pass: bool,
    pub verdict: Verdict,
    pub seed: u64,
    pub draws: usize,
}

impl AlignedImageSetReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("P,pbar,log2_pbar,expected_size,stderr,max_size,part_images\n");
        for i in 0..self.p_sweep.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.p_sweep[i],
                self.pbar[i],
                self.log2_pbar[i],
                self.expected_size[i],
                self.stderr[i],
                self.max_size[i],
                self.part_images[i]
            ));
        }
        out
    }
}

/// Least-squares `y = a + b·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

pub fn expected_sizes_sweep(inst: &AisInstance, settings: &AisSettings) -> Result<AlignedImageSetReport> {
    let vars = [inst.parts.clone(), inst.full.clone()];
    let mut rep = AlignedImageSetReport {
        instance: inst.name.clone(),
        p_sweep: settings.powers.clone(),
        pbar: Vec::new(),
        log2_pbar: Vec::new(),
        expected_size: Vec::new(),
        stderr: Vec::new(),
        max_size: Vec::new(),
        part_images: Vec::new(),
        histogram: Vec::new(),
        dependence_bound_holds: true,
        c1: f64::NAN,
        c2: f64::NAN,
        exponent: f64::NAN,
        residual: f64::NAN,
        pass: false,
        verdict: Verdict::Inconclusive,
        seed: settings.seed,
        draws: settings.draws,
    };
    for &p in &settings.powers {
        let scale = PowerScale::new(p)?;
        let compiled = Compiled::new(&inst.model, &scale, &vars, settings.budget)?;
        let parts: Vec<ImagePartition> = (0..settings.draws as u64)
            .into_par_iter()
            .map(|d| image_map_compiled(inst, &compiled, &vars, d, settings.seed))
            .collect::<Result<_>>()?;
        let sizes: Vec<f64> = parts.iter().map(|x| x.expected_size()).collect();
        let (m, se) = mean_se(&sizes);
        let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
        for part in &parts {
            for &s in &part.sizes {
                *hist.entry(s).or_insert(0) += 1;
            }
        }
        rep.dependence_bound_holds &= parts.iter().all(|x| x.dependence_bound_holds());
        rep.pbar.push(scale.pbar(Level::one())?);
        rep.log2_pbar.push(scale.log2_pbar());
        rep.expected_size.push(m);
        rep.stderr.push(se);
        rep.max_size.push(parts.iter().map(|x| x.max_size()).max().unwrap_or(0));
        rep.part_images.push(mean_se(&parts.iter().map(|x| x.part_images as f64).collect::<Vec<_>>()).0);
        rep.histogram.push(hist.into_iter().collect());
    }
    let window = 1..rep.p_sweep.len();
    if window.len() < 2 {
        return Ok(rep);
    }
    let x: Vec<f64> = rep.log2_pbar[window.clone()].to_vec();
    let y: Vec<f64> = rep.expected_size[window].to_vec();
    let (c1, c2) = linear_fit(&x, &y);
    let (_, exponent) = linear_fit(&x, &y.iter().map(|v| v.log2()).collect::<Vec<_>>());
    rep.residual = x.iter().zip(&y).map(|(a, b)| ((c1 + c2 * a) - b).abs() / b).fold(0.0, f64::max);
    rep.c1 = c1;
    rep.c2 = c2;
    rep.exponent = exponent;
    rep.pass = exponent <= settings.max_exponent && rep.residual <= settings.max_residual && rep.dependence_bound_holds;
    rep.verdict = if rep.pass { Verdict::Pass } else { Verdict::Fail };
    Ok(rep)
}

/// Variants of the toy instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyVariant {
    Standard,
    /// Second input pinned to zero.
    SecondInputZero,
    /// Split point moved so `Z_a` keeps every level and `Z_b` keeps none.
    Swapped,
}

/// `H(Z_a, Z_b | 𝒢) − H(Z | 𝒢)` as a sweep.
pub fn toy_example_check(settings: &SweepSettings, variant: ToyVariant) -> Result<SweepReport> {
    let (split, zero) = match variant {
        ToyVariant::Standard => (toy_split(), false),
        ToyVariant::SecondInputZero => (toy_split(), true),
        ToyVariant::Swapped => (level(0, 1), false),
    };
    let (mut model, parts, z) = toy_model(split, zero)?;
    model.labeling = Labeling::Trivial;
    let ineq = Inequality {
        name: match variant {
            ToyVariant::Standard => "toy",
            ToyVariant::SecondInputZero => "toy-second-input-zero",
            ToyVariant::Swapped => "toy-swapped",
        }
        .into(),
        model,
        variables: vec![Variable::new("U'", parts), Variable::new("U", vec![z])],
        lhs: Side::of(&[(1.0, 0)], 0.0),
        rhs: Side::of(&[(1.0, 1)], 0.0),
        relation: Relation::LhsAtMost,
    };
    sweep(&ineq, settings)
}
