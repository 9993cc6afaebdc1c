//! Sum-set instances: the level-ordering structure, the length condition, and
//! the entropy sweep `H(Z₁..Z_K | W, 𝒢) ≥ H(Z₁₁..Z_{K,l_K} | W) + o(log P̄)`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::channel::{normalize_config, BcInstance, Family};
use crate::entropy::estimate::{sweep, Inequality, Relation, Side, SweepReport, SweepSettings};
use crate::entropy::model::{Expr, Labeling, Model, Variable};
use crate::error::{domain, shape, Result};
use crate::power::{level, Level};

/// Levels, index sets and part lengths of a sum-set instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumsetStructure {
    /// `λ_{k,m}`, one row per output.
    #[serde(with = "level_rows")]
    pub lambda: Vec<Vec<Level>>,
    /// `I_{k,k'}` as 1-based level indices.
    pub index_sets: Vec<Vec<Vec<usize>>>,
    /// `𝒯(Z_{k,k'})`.
    #[serde(with = "level_rows")]
    pub lengths: Vec<Vec<Level>>,
}

mod level_rows {
    use super::Level;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "crate::forms::levels_serde")] Vec<Level>);

    pub fn serialize<S: Serializer>(v: &[Vec<Level>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|r| Row(r.clone())).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Level>>, D::Error> {
        Ok(Vec::<Row>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

/// First `(k, s)` (1-based) where the length condition fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condt4Witness {
    pub k: usize,
    pub s: usize,
    #[serde(with = "crate::rational::serde_level")]
    pub tail_length: Level,
    #[serde(with = "crate::rational::serde_level")]
    pub level_budget: Level,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condt4Check {
    pub holds: bool,
    pub witness: Option<Condt4Witness>,
}

impl SumsetStructure {
    /// Shapes, index ranges and the ordering rule `i < j ⇒ min I_{k,i} ≥ min I_{k,j}`.
    pub fn validate(&self) -> Result<()> {
        let k = self.lambda.len();
        if k == 0 || self.index_sets.len() != k || self.lengths.len() != k {
            return Err(shape("levels, index sets and lengths need one entry per output"));
        }
        let m = self.lambda[0].len();
        for kk in 0..k {
            if self.lambda[kk].len() != m {
                return Err(shape("every output needs the same number of levels"));
            }
            if self.lambda[kk].iter().any(|l| *l < Level::zero()) {
                return Err(domain("levels must be nonnegative"));
            }
            if self.index_sets[kk].is_empty() || self.index_sets[kk].len() != self.lengths[kk].len() {
                return Err(shape(format!("output {} needs one length per part", kk + 1)));
            }
            let mut prev = usize::MAX;
            for (p, set) in self.index_sets[kk].iter().enumerate() {
                if set.is_empty() || set.iter().any(|&i| i == 0 || i > m) {
                    return Err(domain(format!("index set ({},{}) must be a nonempty subset of 1..={m}", kk + 1, p + 1)));
                }
                let lead = *set.iter().min().expect("nonempty");
                if lead > prev {
                    return Err(domain(format!("index sets of output {} break the ordering rule at part {}", kk + 1, p + 1)));
                }
                prev = lead;
            }
        }
        Ok(())
    }
}

/// Checks `𝒯(Z_{k,s+1}) + … + 𝒯(Z_{k,l_k}) ≤ λ_{k,1} + … + λ_{k,m(k,s)−1}` for all `k, s`.
pub fn check_condt4(st: &SumsetStructure) -> Result<Condt4Check> {
    st.validate()?;
    for (k, sets) in st.index_sets.iter().enumerate() {
        for s in 1..sets.len() {
            let lead = *sets[s - 1].iter().min().expect("validated");
            let tail: Level = st.lengths[k][s..].iter().copied().sum();
            let budget: Level = st.lambda[k][..lead - 1].iter().copied().sum();
            if tail > budget {
                return Ok(Condt4Check {
                    holds: false,
                    witness: Some(Condt4Witness { k: k + 1, s, tail_length: tail, level_budget: budget }),
                });
            }
        }
    }
    Ok(Condt4Check { holds: true, witness: None })
}

/// A sum-set instance over a model: outputs `Z_k` and parts `Z_{k,k'}`.
#[derive(Clone, Debug)]
pub struct SumsetInstance {
    pub name: String,
    pub lambda: Vec<Vec<Level>>,
    pub index_sets: Vec<Vec<Vec<usize>>>,
    pub model: Model,
    pub outputs: Vec<Vec<Expr>>,
    pub parts: Vec<Vec<Vec<Expr>>>,
}

impl SumsetInstance {
    /// The structure with `𝒯` of each part taken from the model.
    pub fn structure(&self) -> Result<SumsetStructure> {
        let lengths = self
            .parts
            .iter()
            .map(|ps| {
                ps.iter()
                    .map(|exprs| {
                        exprs.iter().try_fold(Level::zero(), |m, e| Ok(m.max(self.model.length(e)?)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SumsetStructure { lambda: self.lambda.clone(), index_sets: self.index_sets.clone(), lengths })
    }

    /// `[joint of all outputs, joint of all parts]`.
    pub fn variables(&self) -> Vec<Variable> {
        let lhs: Vec<Expr> = self.outputs.iter().flatten().copied().collect();
        let rhs: Vec<Expr> = self.parts.iter().flatten().flatten().copied().collect();
        vec![Variable::new("outputs", lhs), Variable::new("parts", rhs)]
    }

    pub fn inequality(&self) -> Inequality {
        Inequality {
            name: self.name.clone(),
            model: self.model.clone(),
            variables: self.variables(),
            lhs: Side::of(&[(1.0, 0)], 0.0),
            rhs: Side::of(&[(1.0, 1)], 0.0),
            relation: Relation::LhsAtLeast,
        }
    }
}

/// Sweeps an instance after checking its structure. The reported gap is `RHS − LHS`.
pub fn verify_sumset(inst: &SumsetInstance, settings: &SweepSettings) -> Result<SweepReport> {
    if inst.outputs.len() != inst.lambda.len() || inst.parts.len() != inst.lambda.len() {
        return Err(shape("one output and one part list per level row"));
    }
    let check = check_condt4(&inst.structure()?)?;
    if let Some(w) = check.witness {
        return Err(domain(format!(
            "length condition fails at k={}, s={}: {} > {}",
            w.k, w.s, w.tail_length, w.level_budget
        )));
    }
    sweep(&inst.inequality(), settings)
}

fn example_one_channel() -> Result<BcInstance> {
    BcInstance::new(normalize_config(5, 2, 3, level(1, 2), level(2, 3))?)
}

/// Outputs are two receiver-2 rows of the (5,2,3,1/2,2/3) channel; parts are
/// random forms over the top third of the first two inputs.
pub fn step4_instance() -> Result<SumsetInstance> {
    let inst = example_one_channel()?;
    let mut model = Model::for_channel(&inst);
    model.labeling = Labeling::two_labels();
    let y2 = model.add_family(Family::Y2)?;
    let top = (level(2, 3), level(1, 1));
    let z11 = model.add_random("Z11", &[(0, top.0, top.1), (1, top.0, top.1)])?;
    let z21 = model.add_random("Z21", &[(0, top.0, top.1), (1, top.0, top.1)])?;
    Ok(SumsetInstance {
        name: "step4".into(),
        lambda: vec![vec![level(1, 1)], vec![level(1, 1)]],
        index_sets: vec![vec![vec![1]], vec![vec![1]]],
        model,
        outputs: vec![vec![Expr::Form(y2[0])], vec![Expr::Form(y2[1])]],
        parts: vec![vec![vec![Expr::Form(z11)]], vec![vec![Expr::Form(z21)]]],
    })
}

/// Outputs are the two receiver-1 rows of the (5,2,3,1/2,2/3) channel; parts
/// are random forms over the top third of the first two inputs and the top
/// halves of the third and fifth inputs.
pub fn appendix_a_instance() -> Result<SumsetInstance> {
    let inst = example_one_channel()?;
    let mut model = Model::for_channel(&inst);
    model.labeling = Labeling::two_labels();
    let y1 = model.add_family(Family::Y1)?;
    let top = (level(2, 3), level(1, 1));
    let z11 = model.add_random("Z11", &[(0, top.0, top.1), (1, top.0, top.1)])?;
    let z21 = model.add_random("Z21", &[(0, top.0, top.1), (1, top.0, top.1)])?;
    let half = |input| Expr::Input { input, lo: level(1, 2), hi: level(1, 1) };
    let lambda = vec![level(1, 2), level(1, 2)];
    Ok(SumsetInstance {
        name: "appendix-a".into(),
        lambda: vec![lambda.clone(), lambda],
        index_sets: vec![vec![vec![2], vec![1]], vec![vec![2], vec![1]]],
        model,
        outputs: vec![vec![Expr::Form(y1[0])], vec![Expr::Form(y1[1])]],
        parts: vec![vec![vec![Expr::Form(z11)], vec![half(2)]], vec![vec![Expr::Form(z21)], vec![half(4)]]],
    })
}

/// Parts are the top and bottom halves of the output itself.
pub fn trivial_instance() -> Result<SumsetInstance> {
    let mut model = Model::uniform(2);
    model.labeling = Labeling::two_labels();
    let z = model.add_random("Z", &[(0, level(0, 1), level(1, 1)), (1, level(0, 1), level(1, 1))])?;
    let (h, one) = (level(1, 2), level(1, 1));
    Ok(SumsetInstance {
        name: "trivial".into(),
        lambda: vec![vec![h, h]],
        index_sets: vec![vec![vec![2], vec![1]]],
        model,
        outputs: vec![vec![Expr::Form(z)]],
        parts: vec![vec![
            vec![Expr::Window { form: z, lo: h, hi: one }],
            vec![Expr::Window { form: z, lo: level(0, 1), hi: h }],
        ]],
    })
}

/// Looks up a named instance.
pub fn named_instance(name: &str) -> Result<SumsetInstance> {
    match name {
        "step4" => step4_instance(),
        "appendix-a" => appendix_a_instance(),
        "trivial" => trivial_instance(),
        other => Err(domain(format!("unknown sum-set instance {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ninetieths(v: &[i64]) -> Vec<Level> {
        v.iter().map(|&n| level(n, 90)).collect()
    }

    fn four_level() -> SumsetStructure {
        SumsetStructure {
            lambda: vec![ninetieths(&[30, 20, 25, 15]), ninetieths(&[38, 14, 29, 9])],
            index_sets: vec![
                vec![vec![4], vec![2, 4], vec![1, 2, 3, 4]],
                vec![vec![4], vec![3, 4], vec![1, 2, 3, 4]],
            ],
            lengths: vec![ninetieths(&[10, 19, 28]), ninetieths(&[10, 22, 24])],
        }
    }

    #[test]
    fn four_level_structure_holds() {
        assert_eq!(check_condt4(&four_level()).unwrap(), Condt4Check { holds: true, witness: None });
    }

    #[test]
    fn inflated_length_gives_witness() {
        let mut st = four_level();
        st.lengths[0][2] = level(31, 90);
        let c = check_condt4(&st).unwrap();
        assert!(!c.holds);
        assert_eq!(c.witness.unwrap(), Condt4Witness { k: 1, s: 2, tail_length: level(31, 90), level_budget: level(30, 90) });
    }

    #[test]
    fn single_part_is_vacuous() {
        let st = SumsetStructure {
            lambda: vec![vec![level(1, 1)]],
            index_sets: vec![vec![vec![1]]],
            lengths: vec![vec![level(5, 1)]],
        };
        assert!(check_condt4(&st).unwrap().holds);
    }

    #[test]
    fn ordering_rule_is_enforced() {
        let mut st = four_level();
        st.index_sets[0].swap(0, 2);
        assert!(check_condt4(&st).is_err());
        st = four_level();
        st.index_sets[0][0] = vec![5];
        assert!(check_condt4(&st).is_err());
    }

    #[test]
    fn named_instances_satisfy_the_length_condition() {
        for name in ["step4", "appendix-a", "trivial"] {
            let inst = named_instance(name).unwrap();
            assert!(check_condt4(&inst.structure().unwrap()).unwrap().holds, "{name}");
        }
        let a = appendix_a_instance().unwrap().structure().unwrap();
        assert_eq!(a.lengths[0], vec![level(1, 3), level(1, 2)]);
    }

    #[test]
    fn trivial_gap_is_never_positive() {
        let settings = SweepSettings { powers: vec![16, 64], draws: 4, ..SweepSettings::default() };
        let rep = verify_sumset(&trivial_instance().unwrap(), &settings).unwrap();
        assert!(rep.gap.iter().all(|&g| g <= 1e-9), "{:?}", rep.gap);
    }
}
