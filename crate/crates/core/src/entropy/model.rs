//! Experiment models: inputs with a law, a bank of linear forms, and the
//! expressions that measured variables are built from.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, BcInstance, Family};
use crate::error::{config, domain, shape, Result};
use crate::forms::{form_length, form_length_window, CoefficientLaw, LinearFormSpec};
use crate::power::Level;
use crate::seed;

/// Probability law over explicit input tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitePmf {
    pub support: Vec<Vec<u64>>,
    pub probs: Vec<f64>,
}

impl FinitePmf {
    pub fn new(support: Vec<Vec<u64>>, probs: Vec<f64>) -> Result<Self> {
        let pmf = Self { support, probs };
        pmf.validate()?;
        Ok(pmf)
    }

    pub fn uniform(support: Vec<Vec<u64>>) -> Result<Self> {
        let p = 1.0 / support.len() as f64;
        let n = support.len();
        Self::new(support, vec![p; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.len() != self.probs.len() || self.support.is_empty() {
            return Err(shape("support and probabilities must be nonempty and equally long"));
        }
        let width = self.support[0].len();
        if self.support.iter().any(|s| s.len() != width) {
            return Err(shape("support tuples have different lengths"));
        }
        if self.probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(domain("negative or NaN probability"));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("probabilities sum to {total}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Uniform,
    Constant(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLaw {
    /// Independent inputs, each uniform on its alphabet or pinned to a value.
    Product(Vec<Marginal>),
    Explicit(FinitePmf),
}

/// The message variable `W`, as a deterministic label of the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    Trivial,
    /// Label = hash of the input's enumerated cell, modulo `labels`.
    Hash { labels: u32, salt: u64 },
    /// One label per support point of an explicit law.
    PerPoint(Vec<u32>),
}

impl Labeling {
    pub fn count(&self) -> u32 {
        match self {
            Labeling::Trivial => 1,
            Labeling::Hash { labels, .. } => (*labels).max(1),
            Labeling::PerPoint(v) => v.iter().copied().max().map_or(1, |m| m + 1),
        }
    }

    /// The default two-label message.
    pub fn two_labels() -> Self {
        Labeling::Hash { labels: 2, salt: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormSource {
    Random,
    Fixed(Vec<f64>),
    Channel { family: Family, row: usize },
}

#[derive(Clone, Debug)]
pub struct FormDef {
    pub name: String,
    pub spec: LinearFormSpec,
    pub source: FormSource,
}

/// Building blocks of measured variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expr {
    Form(usize),
    /// `(form)^{hi}_{lo}` with truncating division.
    Window { form: usize, lo: Level, hi: Level },
    /// `(x_input)^{hi}_{lo}`.
    Input { input: usize, lo: Level, hi: Level },
}

/// A tuple of expressions whose joint entropy is measured.
#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub exprs: Vec<Expr>,
}

impl Variable {
    pub fn new(name: impl Into<String>, exprs: Vec<Expr>) -> Self {
        Self { name: name.into(), exprs }
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    pub native: Vec<Level>,
    pub law: InputLaw,
    pub forms: Vec<FormDef>,
    pub channel: Option<BcInstance>,
    pub coefficients: CoefficientLaw,
    pub labeling: Labeling,
}

impl Model {
    /// `n` independent uniform level-1 inputs.
    pub fn uniform(n: usize) -> Self {
        Self {
            native: vec![Level::one(); n],
            law: InputLaw::Product(vec![Marginal::Uniform; n]),
            forms: Vec::new(),
            channel: None,
            coefficients: CoefficientLaw::default(),
            labeling: Labeling::Trivial,
        }
    }

    /// Inputs and coefficient law of a channel instance.
    pub fn for_channel(inst: &BcInstance) -> Self {
        Self {
            coefficients: inst.cfg.law,
            channel: Some(inst.clone()),
            ..Self::uniform(inst.cfg.m)
        }
    }

    pub fn inputs(&self) -> usize {
        self.native.len()
    }

    pub fn add_form(&mut self, name: impl Into<String>, spec: LinearFormSpec, source: FormSource) -> Result<usize> {
        if spec.native != self.native {
            return Err(shape("form native levels differ from the model inputs"));
        }
        spec.validate()?;
        if let FormSource::Fixed(v) = &source {
            if v.len() < spec.slots() {
                return Err(shape("too few fixed coefficients"));
            }
        }
        if let FormSource::Channel { family, row } = source {
            let inst = self.channel.as_ref().ok_or_else(|| config("channel form on a model without a channel"))?;
            if row >= inst.rows(family).len() {
                return Err(shape(format!("{family:?} has no row {row}")));
            }
        }
        self.forms.push(FormDef { name: name.into(), spec, source });
        Ok(self.forms.len() - 1)
    }

    /// A random form over the given `(input, lo, hi)` windows.
    pub fn add_random(&mut self, name: impl Into<String>, windows: &[(usize, Level, Level)]) -> Result<usize> {
        let spec = LinearFormSpec::with_windows(windows, self.native.clone())?;
        self.add_form(name, spec, FormSource::Random)
    }

    /// Every row of a channel family, as forms; returns their indices.
    pub fn add_family(&mut self, family: Family) -> Result<Vec<usize>> {
        let inst = self.channel.clone().ok_or_else(|| config("model has no channel"))?;
        inst.rows(family)
            .iter()
            .enumerate()
            .map(|(row, spec)| self.add_form(format!("{family:?}[{row}]"), spec.clone(), FormSource::Channel { family, row }))
            .collect()
    }

    /// `𝒯` of an expression.
    pub fn length(&self, e: &Expr) -> Result<Level> {
        match *e {
            Expr::Form(f) => Ok(form_length(&self.form(f)?.spec)),
            Expr::Window { form, lo, hi } => form_length_window(form_length(&self.form(form)?.spec), lo, hi),
            Expr::Input { lo, hi, .. } => Ok((hi - lo).max(Level::zero())),
        }
    }

    fn form(&self, f: usize) -> Result<&FormDef> {
        self.forms.get(f).ok_or_else(|| shape(format!("no form {f}")))
    }

    /// Coefficients of every form for draw `draw`, attempt `attempt`.
    pub fn draw_coefficients(&self, seed: u64, draw: u64, attempt: u64) -> Result<Vec<Vec<f64>>> {
        let channel = match &self.channel {
            Some(inst) if self.forms.iter().any(|f| matches!(f.source, FormSource::Channel { .. })) => {
                Some(draw_channel(inst, draw, seed::derive(seed, &[attempt]))?)
            }
            _ => None,
        };
        self.forms
            .iter()
            .enumerate()
            .map(|(i, f)| match &f.source {
                FormSource::Random => {
                    let mut rng = seed::rng(seed, &[draw, attempt, i as u64, 0x6c]);
                    Ok((0..f.spec.slots()).map(|_| self.coefficients.sample(&mut rng)).collect())
                }
                FormSource::Fixed(v) => Ok(v.clone()),
                FormSource::Channel { family, row } => {
                    Ok(channel.as_ref().expect("channel draw present").rows[family][*row].clone())
                }
            })
            .collect()
    }

    /// Largest coefficient magnitude a form can carry.
    pub fn coefficient_bound(&self, f: usize) -> f64 {
        match &self.forms[f].source {
            FormSource::Fixed(v) => v.iter().fold(0.0, |m, g| m.max(g.abs())),
            _ => self.coefficients.delta,
        }
    }
}
