//! Entropy laboratory: exact conditional entropies of deterministic forms,
//! averaged over coefficient draws, and the inequality checkers built on them.

pub mod estimate;
pub mod kernel;
pub mod lemmas;
pub mod model;
pub mod submod;
pub mod sumset;

pub use estimate::{conditional_entropy, sweep, EntropyEstimate, Inequality, Relation, Side, SweepReport, SweepSettings, Verdict};
pub use model::{Expr, FinitePmf, InputLaw, Labeling, Marginal, Model, Variable};

/// Shannon entropy in bits of `f(X)` for `X ~ pmf`.
pub fn exact_entropy<K: std::hash::Hash + Eq, F: Fn(&[u64]) -> K>(pmf: &FinitePmf, f: F) -> f64 {
    let mut acc: std::collections::HashMap<K, f64> = std::collections::HashMap::new();
    for (x, &p) in pmf.support.iter().zip(&pmf.probs) {
        *acc.entry(f(x)).or_insert(0.0) += p;
    }
    let mut ps: Vec<f64> = acc.into_values().collect();
    ps.sort_by(f64::total_cmp);
    kernel::entropy_of_weights(ps)
}
