//! The cyclic window inequality `n·H(X₁..X_m|W) ≤ Σᵢ H(Xᵢ..X_{i+n−1}|W)`.

use serde::{Deserialize, Serialize};

use crate::entropy::exact_entropy;
use crate::entropy::model::FinitePmf;
use crate::error::{domain, shape, Result};

/// Both sides of the window inequality, in bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmodCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Relative tolerance for float round-off in entropy sums.
pub const SUBMOD_TOLERANCE: f64 = 1e-9;

/// Checks the window inequality on a pmf over `m`-tuples, with an optional
/// label per support point.
pub fn check_submodularity(pmf: &FinitePmf, n: usize, labels: Option<&[u32]>) -> Result<SubmodCheck> {
    pmf.validate()?;
    let m = pmf.support[0].len();
    if n == 0 || n > m {
        return Err(domain(format!("window {n} must lie in 1..={m}")));
    }
    if let Some(l) = labels {
        if l.len() != pmf.support.len() {
            return Err(shape("one label per support point is required"));
        }
    }
    let label = |row: usize| labels.map_or(0, |l| l[row]);
    let indexed = FinitePmf {
        support: pmf.support.iter().enumerate().map(|(r, x)| {
            let mut t = x.clone();
            t.push(r as u64);
            t
        }).collect(),
        probs: pmf.probs.clone(),
    };
    let cond = |cols: &[usize]| -> f64 {
        let joint = exact_entropy(&indexed, |x| {
            let mut k: Vec<u64> = cols.iter().map(|&c| x[c]).collect();
            k.push(u64::from(label(x[m] as usize)));
            k
        });
        let w = exact_entropy(&indexed, |x| label(x[m] as usize));
        joint - w
    };
    let all: Vec<usize> = (0..m).collect();
    let lhs = n as f64 * cond(&all);
    let rhs: f64 = (0..m).map(|i| cond(&(0..n).map(|d| (i + d) % m).collect::<Vec<_>>())).sum();
    Ok(SubmodCheck { holds: lhs <= rhs + SUBMOD_TOLERANCE * rhs.abs().max(1.0), lhs, rhs })
}
