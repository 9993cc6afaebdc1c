//! Monte-Carlo estimation over channel draws, inequality sweeps and the PASS rule.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::kernel::{Compiled, DEFAULT_BUDGET};
use crate::entropy::model::{Model, Variable};
use crate::error::{Error, Result};
use crate::power::PowerScale;

/// Redraws allowed when a draw trips the floor guard.
pub const MAX_GUARD_REDRAWS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactGivenDraw,
    AveragedOverDraws,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub bits: f64,
    pub method: Method,
    pub draws: usize,
    pub seed: u64,
    pub stderr: Option<f64>,
}

/// Sweep settings shared by every checker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    pub powers: Vec<u64>,
    pub draws: usize,
    pub seed: u64,
    pub tau: f64,
    pub budget: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { powers: vec![16, 64, 256, 1024], draws: 200, seed: 0, tau: 0.15, budget: DEFAULT_BUDGET }
    }
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Conditional entropies `H(V | W, draw)` of each variable for each draw, in draw order.
pub fn entropies_per_draw(
    model: &Model,
    variables: &[Variable],
    scale: &PowerScale,
    draws: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<Vec<f64>>> {
    let compiled = Compiled::new(model, scale, variables, budget)?;
    (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            for attempt in 0..MAX_GUARD_REDRAWS {
                let coeffs = model.draw_coefficients(seed, d, attempt)?;
                match compiled.tables(&coeffs) {
                    Ok(t) => return compiled.conditional_entropies(&t, variables),
                    Err(Error::FloorAmbiguity) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::FloorAmbiguity)
        })
        .collect()
}

/// `H(V | W, 𝒢)` averaged over draws, one estimate per variable.
pub fn conditional_entropy(
    model: &Model,
    variables: &[Variable],
    scale: &PowerScale,
    draws: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<EntropyEstimate>> {
    let per = entropies_per_draw(model, variables, scale, draws, seed, budget)?;
    Ok((0..variables.len())
        .map(|v| {
            let xs: Vec<f64> = per.iter().map(|d| d[v]).collect();
            let (bits, se) = mean_se(&xs);
            let method = if draws == 1 { Method::ExactGivenDraw } else { Method::AveragedOverDraws };
            EntropyEstimate { bits, method, draws, seed, stderr: Some(se) }
        })
        .collect())
}

/// `Σ cᵢ·H(variableᵢ) + c₀·log₂ P̄`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Side {
    pub terms: Vec<(f64, usize)>,
    pub log_coeff: f64,
}

impl Side {
    pub fn of(terms: &[(f64, usize)], log_coeff: f64) -> Self {
        Self { terms: terms.to_vec(), log_coeff }
    }

    fn value(&self, h: &[f64], log2_pbar: f64) -> f64 {
        self.terms.iter().map(|&(c, v)| c * h[v]).sum::<f64>() + self.log_coeff * log2_pbar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "lhs <= rhs")]
    LhsAtMost,
    #[serde(rename = "lhs >= rhs")]
    LhsAtLeast,
}

/// An entropy inequality over a model's variables, expected to hold up to `o(log P̄)`.
#[derive(Clone, Debug)]
pub struct Inequality {
    pub name: String,
    pub model: Model,
    pub variables: Vec<Variable>,
    pub lhs: Side,
    pub rhs: Side,
    pub relation: Relation,
}

impl Inequality {
    /// Amount by which the inequality is violated.
    fn violation(&self, lhs: f64, rhs: f64) -> f64 {
        match self.relation {
            Relation::LhsAtMost => lhs - rhs,
            Relation::LhsAtLeast => rhs - lhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSeries {
    pub name: String,
    pub bits: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// One sweep: per `P`, both sides, the violation `gap`, and `gap / log₂ P̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub instance: String,
    pub relation: Relation,
    #[serde(rename = "P_sweep")]
    pub p_sweep: Vec<u64>,
    pub log2_pbar: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub gap: Vec<f64>,
    pub normalized_slack: Vec<f64>,
    pub stderr: Vec<f64>,
    pub pass: bool,
    pub verdict: Verdict,
    pub tau: f64,
    pub seed: u64,
    pub draws: usize,
    pub variables: Vec<VariableSeries>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, String>,
}

/// The trend rule.
///
/// The excess at each `P` is `max(0, gap − 2·SE) / log₂ P̄`, so an inequality that
/// holds with room to spare has zero excess. PASS needs the excess to be
/// nonincreasing over the top half of the sweep (a step only counts as an
/// increase if it clears the previous point's `gap + 2·SE`) and the final excess
/// to be at most `τ`. A single-point sweep is INCONCLUSIVE.
pub fn judge(gap: &[f64], stderr: &[f64], log2_pbar: &[f64], tau: f64) -> Verdict {
    let n = gap.len();
    if n < 2 {
        return Verdict::Inconclusive;
    }
    let excess = |i: usize, sign: f64| ((gap[i] + sign * 2.0 * stderr[i]).max(0.0)) / log2_pbar[i];
    for i in (n / 2 + 1)..n {
        if excess(i, -1.0) > excess(i - 1, 1.0) + 1e-12 {
            return Verdict::Fail;
        }
    }
    if excess(n - 1, -1.0) > tau {
        return Verdict::Fail;
    }
    Verdict::Pass
}

/// Runs an inequality across the sweep.
pub fn sweep(ineq: &Inequality, settings: &SweepSettings) -> Result<SweepReport> {
    let mut rep = SweepReport {
        instance: ineq.name.clone(),
        relation: ineq.relation,
        p_sweep: settings.powers.clone(),
        log2_pbar: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        gap: Vec::new(),
        normalized_slack: Vec::new(),
        stderr: Vec::new(),
        pass: false,
        verdict: Verdict::Inconclusive,
        tau: settings.tau,
        seed: settings.seed,
        draws: settings.draws,
        variables: ineq
            .variables
            .iter()
            .map(|v| VariableSeries { name: v.name.clone(), bits: Vec::new(), stderr: Vec::new() })
            .collect(),
        details: BTreeMap::new(),
    };
    for &p in &settings.powers {
        let scale = PowerScale::new(p)?;
        let lp = scale.log2_pbar();
        let per = entropies_per_draw(&ineq.model, &ineq.variables, &scale, settings.draws, settings.seed, settings.budget)?;
        let lhs: Vec<f64> = per.iter().map(|h| ineq.lhs.value(h, lp)).collect();
        let rhs: Vec<f64> = per.iter().map(|h| ineq.rhs.value(h, lp)).collect();
        let gaps: Vec<f64> = lhs.iter().zip(&rhs).map(|(&l, &r)| ineq.violation(l, r)).collect();
        let (g, se) = mean_se(&gaps);
        rep.log2_pbar.push(lp);
        rep.lhs.push(mean_se(&lhs).0);
        rep.rhs.push(mean_se(&rhs).0);
        rep.gap.push(g);
        rep.normalized_slack.push(if lp > 0.0 { g / lp } else { f64::NAN });
        rep.stderr.push(se);
        for (v, series) in rep.variables.iter_mut().enumerate() {
            let xs: Vec<f64> = per.iter().map(|h| h[v]).collect();
            let (m, s) = mean_se(&xs);
            series.bits.push(m);
            series.stderr.push(s);
        }
    }
    rep.verdict = judge(&rep.gap, &rep.stderr, &rep.log2_pbar, settings.tau);
    rep.pass = rep.verdict == Verdict::Pass;
    Ok(rep)
}

impl SweepReport {
    /// One row per `P`: `P,log2_pbar,lhs,rhs,gap,normalized_slack,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("P,log2_pbar,lhs,rhs,gap,normalized_slack,stderr\n");
        for i in 0..self.p_sweep.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.p_sweep[i],
                self.log2_pbar[i],
                self.lhs[i],
                self.rhs[i],
                self.gap[i],
                self.normalized_slack[i],
                self.stderr[i]
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_rules() {
        let lp = [2.0, 3.0, 4.0, 5.0];
        assert_eq!(judge(&[-1.0, -1.0, -2.0, -3.0], &[0.0; 4], &lp, 0.15), Verdict::Pass);
        assert_eq!(judge(&[0.0, 0.0, 0.1, 1.5], &[0.0; 4], &lp, 0.15), Verdict::Fail);
        assert_eq!(judge(&[0.0, 0.0, 1.0, 1.0], &[0.0; 4], &lp, 0.15), Verdict::Fail);
        assert_eq!(judge(&[0.0, 0.0, 0.6, 0.6], &[0.0; 4], &lp, 0.15), Verdict::Pass);
        assert_eq!(judge(&[1.0], &[0.0], &[2.0], 0.15), Verdict::Inconclusive);
        assert_eq!(judge(&[0.0, 0.0, 0.4, 1.2], &[0.0, 0.0, 0.2, 0.2], &lp, 0.15), Verdict::Fail);
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, s) = mean_se(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15 && (s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[4.0]), (4.0, 0.0));
    }
}
