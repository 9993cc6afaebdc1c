//! `doflab`: DoF regions, verification campaigns and region sweeps.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use doflab::ais::{self, AisSettings, ToyVariant};
use doflab::channel::{normalize_config, BcConfig};
use doflab::entropy::lemmas::{
    example_config, lemma_settings, verify_lemma3, verify_lemma_example1, verify_lemma_example2,
    verify_lemma_general, Lemma3Config, LemmaBranch, LemmaOptions,
};
use doflab::entropy::sumset::{named_instance, verify_sumset};
use doflab::entropy::{SweepReport, SweepSettings, Verdict};
use doflab::rational::{from_ratio, parse, render, to_ratio};
use doflab::region::{beta_o_at_least, beta_o_below, region_of, sum_dof};
use doflab::{Level, Rational};

#[derive(Parser, Debug)]
#[command(name = "doflab", version, about = "DoF regions and entropy checks for the two-user MIMO BC")]
struct Cli {
    /// Caps worker threads.
    #[arg(long, global = true, env = "DOFLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug)]
struct Antennas {
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "N1")]
    n1: usize,
    #[arg(long = "N2")]
    n2: usize,
}

#[derive(clap::Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Lemma5,
    Sumset,
    Ais,
    Toy,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Halfspaces, vertices, beta_o and sum DoF of one configuration.
    Region {
        #[command(flatten)]
        antennas: Antennas,
        #[arg(long = "b1")]
        beta1: String,
        #[arg(long = "b2")]
        beta2: String,
        #[command(flatten)]
        output: Output,
    },
    /// Runs a verification suite; exit 0 PASS, 1 FAIL, 3 INCONCLUSIVE.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "DOFLAB_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Region over a uniform beta grid, as CSV.
    Sweep {
        #[command(flatten)]
        antennas: Antennas,
        /// Points per axis on [0, 1].
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Verification config. Every field is optional; suites pick what they need.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    instance: Option<String>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "N1")]
    n1: Option<usize>,
    #[serde(rename = "N2")]
    n2: Option<usize>,
    beta1: Option<String>,
    beta2: Option<String>,
    lemma3: Option<Lemma3Config>,
    variant: Option<ToyVariant>,
    labels: Option<u32>,
    settings: Option<SweepSettings>,
    ais: Option<AisSettings>,
}

impl VerifyConfig {
    fn channel(&self, fallback: &str) -> Result<BcConfig> {
        match (self.m, self.n1, self.n2, &self.beta1, &self.beta2) {
            (None, None, None, None, None) => Ok(example_config(fallback)?),
            (Some(m), Some(n1), Some(n2), Some(b1), Some(b2)) => {
                Ok(normalize_config(m, n1, n2, level_arg(b1)?, level_arg(b2)?)?)
            }
            _ => bail!("M, N1, N2, beta1 and beta2 must be given together"),
        }
    }

    fn options(&self) -> LemmaOptions {
        let mut o = LemmaOptions::default();
        if let Some(l) = self.labels {
            o.labeling = doflab::entropy::Labeling::Hash { labels: l, salt: 0x5eed };
        }
        o
    }
}

fn level_arg(s: &str) -> Result<Level> {
    Ok(to_ratio(&parse(s)?)?)
}

/// Short flags like `-N1` are not expressible in clap; rewrite them to long ones.
fn rewrite_args(args: impl IntoIterator<Item = String>) -> Vec<String> {
    args.into_iter()
        .map(|a| match a.as_str() {
            "-M" | "-N1" | "-N2" | "-b1" | "-b2" => format!("-{a}"),
            _ => a,
        })
        .collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn cmd_region(a: &Antennas, b1: &str, b2: &str, output: &Output) -> Result<()> {
    let r = region_of(a.m, a.n1, a.n2, level_arg(b1)?, level_arg(b2)?)?;
    let doc = r.to_doc();
    let text = match output.format {
        Format::Json => json(&doc)?,
        Format::Csv => {
            let mut s = String::from("kind,a1,a2,b,tag\n");
            for h in &doc.halfspaces {
                s.push_str(&format!("halfspace,{},{},{},{}\n", h.a1, h.a2, h.b, h.tag));
            }
            for v in &doc.vertices {
                s.push_str(&format!("vertex,{},{},,\n", v[0], v[1]));
            }
            s.push_str(&format!("sum_dof,,,{},\n", doc.sum_dof));
            if let Some(b) = &doc.beta_o {
                s.push_str(&format!("beta_o,,,{b},\n"));
            }
            s
        }
    };
    emit(&output.out, &text)
}

fn cmd_sweep(a: &Antennas, grid: usize, out: &Option<PathBuf>) -> Result<()> {
    if grid < 2 {
        bail!("grid needs at least two points per axis");
    }
    let step = (grid - 1) as i64;
    let mut s = String::from("beta1,beta2,sum_dof,vertices,branch_agreement\n");
    for i in 0..=step {
        for j in 0..=step {
            let (b1, b2) = (Level::new(i, step), Level::new(j, step));
            let r = region_of(a.m, a.n1, a.n2, b1, b2)?;
            let verts: Vec<String> = r.vertices.iter().map(|(x, y)| format!("{} {}", render(x), render(y))).collect();
            let agree = if i + j == step {
                let c = &r.cfg;
                let (m, n1, n2) = (c.m as i64, c.n1 as i64, c.n2 as i64);
                let (x, y): (Rational, Rational) = (from_ratio(c.beta1), from_ratio(c.beta2));
                let below = beta_o_below(m, n1, n2, &x, &y);
                let above = beta_o_at_least(m, n1, n2, &x, &y);
                (below.is_none() || above.is_none() || below == above).to_string()
            } else {
                "-".to_string()
            };
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                render(&from_ratio(b1)),
                render(&from_ratio(b2)),
                render(&sum_dof(&r)),
                verts.join(";"),
                agree
            ));
        }
    }
    emit(out, &s)
}

enum Report {
    Sweep(SweepReport),
    Ais(ais::AlignedImageSetReport),
}

fn run_suite(suite: Suite, cfg: &VerifyConfig, seed: Option<u64>) -> Result<Report> {
    let lemma = matches!(suite, Suite::Lemma1 | Suite::Lemma2 | Suite::Lemma3 | Suite::Lemma4 | Suite::Lemma5);
    let mut settings = cfg.settings.clone().unwrap_or_else(|| if lemma { lemma_settings() } else { SweepSettings::default() });
    if let Some(s) = seed {
        settings.seed = s;
    }
    let opts = cfg.options();
    let rep = match suite {
        Suite::Lemma1 => verify_lemma_example1(&cfg.channel("example1")?, &settings, &opts)?,
        Suite::Lemma2 => verify_lemma_example2(&cfg.channel("example2")?, &settings, &opts)?,
        Suite::Lemma3 => verify_lemma3(&cfg.lemma3.clone().unwrap_or_else(Lemma3Config::zero_gap), &settings, &opts)?,
        Suite::Lemma4 => verify_lemma_general(&cfg.channel("example1")?, LemmaBranch::Ge1, &settings, &opts)?,
        Suite::Lemma5 => verify_lemma_general(&cfg.channel("example2")?, LemmaBranch::Lt1, &settings, &opts)?,
        Suite::Sumset => verify_sumset(&named_instance(cfg.instance.as_deref().unwrap_or("step4"))?, &settings)?,
        Suite::Toy => ais::toy_example_check(&settings, cfg.variant.unwrap_or(ToyVariant::Standard))?,
        Suite::Ais => {
            let mut s = cfg.ais.clone().unwrap_or_default();
            if let Some(x) = seed {
                s.seed = x;
            }
            let inst = match cfg.instance.as_deref().unwrap_or("toy") {
                "toy" => ais::toy_instance()?,
                "lossy" => ais::lossy_instance()?,
                "identity" => ais::identity_instance()?,
                other => bail!("unknown aligned-image instance {other:?}"),
            };
            return Ok(Report::Ais(ais::expected_sizes_sweep(&inst, &s)?));
        }
    };
    Ok(Report::Sweep(rep))
}

fn cmd_verify(suite: Suite, config: &Option<PathBuf>, seed: Option<u64>, output: &Output) -> Result<Verdict> {
    let cfg: VerifyConfig = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => VerifyConfig::default(),
    };
    let (text, verdict) = match run_suite(suite, &cfg, seed)? {
        Report::Sweep(r) => (if output.format == Format::Csv { r.to_csv() } else { json(&r)? }, r.verdict),
        Report::Ais(r) => (if output.format == Format::Csv { r.to_csv() } else { json(&r)? }, r.verdict),
    };
    emit(&output.out, &text)?;
    eprintln!("{verdict:?}");
    Ok(verdict)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    match &cli.cmd {
        Cmd::Region { antennas, beta1, beta2, output } => cmd_region(antennas, beta1, beta2, output).map(|_| 0),
        Cmd::Sweep { antennas, grid, out } => cmd_sweep(antennas, *grid, out).map(|_| 0),
        Cmd::Verify { suite, config, seed, output } => {
            cmd_verify(*suite, config, *seed, output).map(|v| v.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(rewrite_args(std::env::args()));
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
