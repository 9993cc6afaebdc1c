//! Enumeration kernel.
//!
//! Forms only see inputs through their trim windows, so each input is first
//! collapsed into *cells*: classes of values that agree on every window the
//! experiment uses, weighted by class size. The product of cells is enumerated
//! instead of the raw input space; for inputs seen only through a top window this
//! shrinks the alphabet from `P̄` to about `P̄^{γ−δ}`.
//!
//! Per draw, every `(form, input)` pair becomes a lookup table over cells, and an
//! odometer keeps running partial sums so each point costs one addition per form.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};


use crate::entropy::model::{Expr, InputLaw, Labeling, Marginal, Model, Variable};
use crate::error::{config, domain, shape, Error, Result};
use crate::forms::{trunc_guarded, window_signed};
use crate::power::{Level, PowerScale};
use crate::seed::hash_indices;

/// Default cap on enumerated points per draw.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

/// Multiplicative hasher for `u128` keys; iteration order never reaches results.
#[derive(Default)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ u64::from(b)).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
        }
    }

    fn write_u128(&mut self, v: u128) {
        let folded = (v as u64) ^ ((v >> 64) as u64).rotate_left(29);
        self.0 = (self.0 ^ folded).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.0 ^= self.0 >> 32;
    }
}

pub type KeyMap<V> = HashMap<u128, V, BuildHasherDefault<KeyHasher>>;

struct Cells {
    windows: Vec<(Level, Level)>,
    /// Window values per cell.
    values: Vec<Vec<u64>>,
    weights: Vec<f64>,
}

enum Points {
    Product,
    Explicit { cells: Vec<Vec<usize>>, weights: Vec<f64>, labels: Option<Vec<u32>> },
}

#[derive(Clone, Copy)]
enum Plan {
    Form(usize),
    Window { form: usize, lo: u64, hi: u64 },
    Input { input: usize, window: usize },
}

struct Packed {
    plans: Vec<Plan>,
    offsets: Vec<i64>,
    strides: Vec<u128>,
    label_stride: u128,
}

/// A model compiled against one power scale.
pub struct Compiled<'m> {
    pub model: &'m Model,
    pub scale: PowerScale,
    cells: Vec<Cells>,
    points: Points,
    /// Per form: `(input, window index, slot)`.
    terms: Vec<Vec<(usize, usize, usize)>>,
    /// Per form: bound on `|value|`.
    bounds: Vec<i64>,
    labels: u32,
    point_count: u64,
}

/// Per-draw lookup tables: `tables[f][j]` maps a cell of input `j` to its
/// contribution to form `f`.
pub struct Tables {
    tables: Vec<Vec<Option<Vec<i64>>>>,
}

fn window_index(windows: &mut Vec<(Level, Level)>, w: (Level, Level)) -> usize {
    windows.iter().position(|&x| x == w).unwrap_or_else(|| {
        windows.push(w);
        windows.len() - 1
    })
}

impl<'m> Compiled<'m> {
    pub fn new(model: &'m Model, scale: &PowerScale, variables: &[Variable], budget: u64) -> Result<Self> {
        let n = model.inputs();
        let mut windows: Vec<Vec<(Level, Level)>> = vec![Vec::new(); n];
        let mut terms = Vec::with_capacity(model.forms.len());
        for f in &model.forms {
            let t: Vec<(usize, usize, usize)> = f
                .spec
                .terms
                .iter()
                .map(|t| (t.input, window_index(&mut windows[t.input], (t.delta, t.gamma)), t.slot))
                .collect();
            terms.push(t);
        }
        for v in variables {
            for e in &v.exprs {
                match *e {
                    Expr::Input { input, lo, hi } => {
                        if input >= n || lo > hi || hi > model.native[input] {
                            return Err(domain(format!("input window ({lo},{hi}) on input {input}")));
                        }
                        window_index(&mut windows[input], (lo, hi));
                    }
                    Expr::Form(f) | Expr::Window { form: f, .. } if f >= model.forms.len() => {
                        return Err(shape(format!("no form {f}")));
                    }
                    Expr::Window { lo, hi, .. } if lo > hi => return Err(domain("reversed output window")),
                    _ => {}
                }
            }
        }
        let window_values = |j: usize, x: u64| -> Result<Vec<u64>> {
            windows[j].iter().map(|&(lo, hi)| scale.part_mid(x, lo, hi)).collect()
        };
        let (cells, points, point_count) = match &model.law {
            InputLaw::Product(marginals) => {
                if marginals.len() != n {
                    return Err(shape("one marginal per input is required"));
                }
                let mut cells = Vec::with_capacity(n);
                let mut count: u128 = 1;
                for (j, m) in marginals.iter().enumerate() {
                    let size = scale.alphabet(model.native[j])?;
                    let xs: Box<dyn Iterator<Item = u64>> = match *m {
                        Marginal::Uniform => Box::new(0..size),
                        Marginal::Constant(v) if v < size => Box::new(std::iter::once(v)),
                        Marginal::Constant(v) => return Err(domain(format!("constant {v} outside alphabet {size}"))),
                    };
                    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
                    let (mut values, mut weights) = (Vec::new(), Vec::new());
                    for x in xs {
                        let key = window_values(j, x)?;
                        let c = *index.entry(key.clone()).or_insert_with(|| {
                            values.push(key);
                            weights.push(0.0);
                            values.len() - 1
                        });
                        weights[c] += 1.0;
                    }
                    count *= values.len() as u128;
                    cells.push(Cells { windows: windows[j].clone(), values, weights });
                }
                (cells, Points::Product, count)
            }
            InputLaw::Explicit(pmf) => {
                pmf.validate()?;
                if pmf.support[0].len() != n {
                    return Err(shape("explicit law tuples must cover every input"));
                }
                let mut cells: Vec<Cells> =
                    windows.iter().map(|w| Cells { windows: w.clone(), values: Vec::new(), weights: Vec::new() }).collect();
                let mut index: Vec<HashMap<Vec<u64>, usize>> = vec![HashMap::new(); n];
                let mut tuples = Vec::with_capacity(pmf.support.len());
                for x in &pmf.support {
                    let mut t = Vec::with_capacity(n);
                    for j in 0..n {
                        if x[j] >= scale.alphabet(model.native[j])? {
                            return Err(domain(format!("support value {} outside the alphabet of input {j}", x[j])));
                        }
                        let key = window_values(j, x[j])?;
                        let c = &mut cells[j];
                        let id = *index[j].entry(key.clone()).or_insert_with(|| {
                            c.values.push(key);
                            c.weights.push(1.0);
                            c.values.len() - 1
                        });
                        t.push(id);
                    }
                    tuples.push(t);
                }
                let labels = match &model.labeling {
                    Labeling::PerPoint(l) if l.len() == tuples.len() => Some(l.clone()),
                    Labeling::PerPoint(_) => return Err(shape("one label per support point is required")),
                    _ => None,
                };
                let count = tuples.len() as u128;
                (cells, Points::Explicit { cells: tuples, weights: pmf.probs.clone(), labels }, count)
            }
        };
        if matches!(model.labeling, Labeling::PerPoint(_)) && matches!(points, Points::Product) {
            return Err(config("per-point labels need an explicit input law"));
        }
        if point_count > u128::from(budget) {
            return Err(Error::Budget { needed: point_count, limit: budget });
        }
        let mut bounds = Vec::with_capacity(model.forms.len());
        for (f, ts) in terms.iter().enumerate() {
            let vmax: u64 = ts
                .iter()
                .map(|&(j, w, _)| cells[j].values.iter().map(|v| v[w]).max().unwrap_or(0))
                .sum();
            bounds.push((model.coefficient_bound(f) * vmax as f64).ceil() as i64 + 1);
        }
        Ok(Self {
            model,
            scale: scale.clone(),
            cells,
            points,
            terms,
            bounds,
            labels: model.labeling.count(),
            point_count: point_count as u64,
        })
    }

    pub fn point_count(&self) -> u64 {
        self.point_count
    }

    pub fn labels(&self) -> u32 {
        self.labels
    }

    /// Builds lookup tables; fails with [`Error::FloorAmbiguity`] if any product
    /// lands within the guard distance of an integer.
    pub fn tables(&self, coefficients: &[Vec<f64>]) -> Result<Tables> {
        let n = self.cells.len();
        let mut tables = Vec::with_capacity(self.terms.len());
        for (f, ts) in self.terms.iter().enumerate() {
            let mut per_input: Vec<Option<Vec<i64>>> = vec![None; n];
            for &(j, w, slot) in ts {
                let g = coefficients[f][slot];
                let col = per_input[j].get_or_insert_with(|| vec![0; self.cells[j].values.len()]);
                for (c, v) in self.cells[j].values.iter().enumerate() {
                    col[c] += trunc_guarded(g * v[w] as f64)?;
                }
            }
            tables.push(per_input);
        }
        Ok(Tables { tables })
    }

    fn label_of(&self, idx: &[usize], point: usize) -> u32 {
        match (&self.model.labeling, &self.points) {
            (Labeling::Trivial, _) => 0,
            (Labeling::Hash { labels, salt }, _) => (hash_indices(*salt, idx) % u64::from((*labels).max(1))) as u32,
            (Labeling::PerPoint(_), Points::Explicit { labels: Some(l), .. }) => l[point],
            (Labeling::PerPoint(_), _) => 0,
        }
    }

    /// Visits every point as `(cell indices, form values, label, weight)`.
    pub fn for_each<F: FnMut(&[usize], &[i64], u32, f64)>(&self, tables: &Tables, mut visit: F) {
        let nf = self.terms.len();
        match &self.points {
            Points::Explicit { cells, weights, .. } => {
                let mut fv = vec![0i64; nf];
                for (p, idx) in cells.iter().enumerate() {
                    for (f, slot) in fv.iter_mut().enumerate() {
                        *slot = tables.tables[f]
                            .iter()
                            .enumerate()
                            .filter_map(|(j, t)| t.as_ref().map(|t| t[idx[j]]))
                            .sum();
                    }
                    visit(idx, &fv, self.label_of(idx, p), weights[p]);
                }
            }
            Points::Product => {
                let n = self.cells.len();
                let radix: Vec<usize> = self.cells.iter().map(|c| c.values.len()).collect();
                if radix.contains(&0) {
                    return;
                }
                let mut idx = vec![0usize; n];
                let mut partial = vec![vec![0i64; nf]; n + 1];
                let mut wpart = vec![1.0f64; n + 1];
                let mut from = 0;
                let mut point = 0usize;
                loop {
                    for d in from..n {
                        let (head, tail) = partial.split_at_mut(d + 1);
                        for f in 0..nf {
                            tail[0][f] = head[d][f] + tables.tables[f][d].as_ref().map_or(0, |t| t[idx[d]]);
                        }
                        wpart[d + 1] = wpart[d] * self.cells[d].weights[idx[d]];
                    }
                    visit(&idx, &partial[n], self.label_of(&idx, point), wpart[n]);
                    point += 1;
                    let mut d = n;
                    loop {
                        if d == 0 {
                            return;
                        }
                        d -= 1;
                        idx[d] += 1;
                        if idx[d] < radix[d] {
                            break;
                        }
                        idx[d] = 0;
                    }
                    from = d;
                }
            }
        }
    }

    fn pack_plan(&self, v: &Variable) -> Result<Packed> {
        let mut plans = Vec::new();
        let mut offsets = Vec::new();
        let mut strides = Vec::new();
        let mut stride: u128 = 1;
        for e in &v.exprs {
            let (plan, bound) = match *e {
                Expr::Form(f) => (Plan::Form(f), self.bounds[f]),
                Expr::Window { form, lo, hi } => {
                    let (lo, hi) = (self.scale.pbar(lo)?, self.scale.pbar(hi)?);
                    let b = self.bounds[form].min(hi as i64 - 1).max(0) / lo as i64;
                    (Plan::Window { form, lo, hi }, b)
                }
                Expr::Input { input, lo, hi } => {
                    let w = self.cells[input]
                        .windows
                        .iter()
                        .position(|&x| x == (lo, hi))
                        .expect("window registered at compile time");
                    let b = self.cells[input].values.iter().map(|v| v[w]).max().unwrap_or(0) as i64;
                    (Plan::Input { input, window: w }, b)
                }
            };
            plans.push(plan);
            offsets.push(bound);
            strides.push(stride);
            stride = stride
                .checked_mul(2 * bound as u128 + 1)
                .ok_or_else(|| config(format!("variable {} is too wide to pack", v.name)))?;
        }
        stride
            .checked_mul(u128::from(self.labels))
            .ok_or_else(|| config(format!("variable {} is too wide to pack", v.name)))?;
        Ok(Packed { plans, offsets, strides, label_stride: stride })
    }

    fn eval_plan(&self, p: Plan, idx: &[usize], fv: &[i64]) -> i64 {
        match p {
            Plan::Form(f) => fv[f],
            Plan::Window { form, lo, hi } => window_signed(fv[form], lo, hi),
            Plan::Input { input, window } => self.cells[input].values[idx[input]][window] as i64,
        }
    }

    fn key(&self, pk: &Packed, idx: &[usize], fv: &[i64], label: u32, with_label: bool) -> u128 {
        let mut key: u128 = 0;
        for ((&p, &off), &s) in pk.plans.iter().zip(&pk.offsets).zip(&pk.strides) {
            let v = self.eval_plan(p, idx, fv);
            debug_assert!(v.abs() <= off, "value {v} exceeds packing bound {off}");
            key += (v + off) as u128 * s;
        }
        if with_label {
            key += u128::from(label) * pk.label_stride;
        }
        key
    }

    /// `H(V | W)` for each variable, given one draw's tables.
    pub fn conditional_entropies(&self, tables: &Tables, variables: &[Variable]) -> Result<Vec<f64>> {
        let packs = variables.iter().map(|v| self.pack_plan(v)).collect::<Result<Vec<_>>>()?;
        let mut maps: Vec<KeyMap<f64>> = vec![KeyMap::default(); variables.len()];
        let mut label_w = vec![0.0f64; self.labels as usize];
        self.for_each(tables, |idx, fv, label, w| {
            label_w[label as usize] += w;
            for (pk, map) in packs.iter().zip(maps.iter_mut()) {
                *map.entry(self.key(pk, idx, fv, label, true)).or_insert(0.0) += w;
            }
        });
        let h_w = entropy_of_weights(label_w.iter().copied());
        Ok(maps.into_iter().map(|m| (sorted_entropy(m) - h_w).max(0.0)).collect())
    }

    /// Per-point keys of each variable (without the label) in enumeration order,
    /// plus point weights and labels.
    pub fn point_keys(&self, tables: &Tables, variables: &[Variable]) -> Result<(Vec<Vec<u128>>, Vec<f64>, Vec<u32>)> {
        let packs = variables.iter().map(|v| self.pack_plan(v)).collect::<Result<Vec<_>>>()?;
        let mut keys: Vec<Vec<u128>> = vec![Vec::with_capacity(self.point_count as usize); variables.len()];
        let mut weights = Vec::with_capacity(self.point_count as usize);
        let mut labels = Vec::with_capacity(self.point_count as usize);
        self.for_each(tables, |idx, fv, label, w| {
            for (pk, k) in packs.iter().zip(keys.iter_mut()) {
                k.push(self.key(pk, idx, fv, label, false));
            }
            weights.push(w);
            labels.push(label);
        });
        Ok((keys, weights, labels))
    }

    /// Cardinality bound `∏ (2·bound+1)` of a variable's packed range.
    pub fn support_bound(&self, v: &Variable) -> Result<f64> {
        let pk = self.pack_plan(v)?;
        Ok(pk.offsets.iter().map(|&b| (2 * b + 1) as f64).product())
    }
}

/// Entropy in bits of an unnormalized weight vector.
pub fn entropy_of_weights(weights: impl IntoIterator<Item = f64>) -> f64 {
    let w: Vec<f64> = weights.into_iter().filter(|&x| x > 0.0).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let s: f64 = w.iter().map(|&x| x * x.log2()).sum();
    (total.log2() - s / total).max(0.0)
}

/// Entropy of a key map, summed in key order for bit-reproducibility.
pub fn sorted_entropy(map: KeyMap<f64>) -> f64 {
    let mut entries: Vec<(u128, f64)> = map.into_iter().collect();
    entries.sort_unstable_by_key(|e| e.0);
    entropy_of_weights(entries.into_iter().map(|e| e.1))
}
