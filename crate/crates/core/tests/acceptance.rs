//! Acceptance run: one line per criterion with its verdict, detail and time budget.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use doflab::ais::{
    alignment_probability, expected_sizes_sweep, lossy_instance, random_pair, toy_example_check, toy_instance,
    AisSettings, AlignmentSetup, ToyVariant,
};
use doflab::channel::normalize_config;
use doflab::entropy::lemmas::{
    example_config, lemma_constants, lemma_settings, verify_lemma3, verify_lemma_example1, verify_lemma_example2,
    verify_lemma_general, Lemma3Config, LemmaBranch, LemmaOptions,
};
use doflab::entropy::submod::check_submodularity;
use doflab::entropy::sumset::{appendix_a_instance, step4_instance, trivial_instance, verify_sumset};
use doflab::entropy::{FinitePmf, SweepSettings, Verdict};
use doflab::power::level;
use doflab::rational::{from_ratio, parse, render, Rational};
use doflab::region::{beta_o_at_least, beta_o_below, beta_o_of, region_of, sum_dof};
use doflab::{Level, PowerScale};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read<T: for<'de> Deserialize<'de>>(rel: &str) -> T {
    let text = std::fs::read_to_string(fixtures().join(rel)).expect(rel);
    serde_json::from_str(&text).expect(rel)
}

fn r(s: &str) -> Rational {
    parse(s).unwrap()
}

fn lv(s: &str) -> Level {
    doflab::rational::to_ratio(&r(s)).unwrap()
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn criterion_1() -> Outcome {
    let a = beta_o_of(5, 2, 3, level(1, 2), level(2, 3)).unwrap().value;
    let b = beta_o_of(4, 1, 3, level(1, 4), level(1, 2)).unwrap().value;
    outcome(a == r("7/18") && b == r("1/16"), format!("beta_o = {}, {}", render(&a), render(&b)))
}

#[derive(Deserialize)]
struct RegionFixture {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N1")]
    n1: usize,
    #[serde(rename = "N2")]
    n2: usize,
    beta1: String,
    beta2: String,
    beta_o: String,
    sum_dof: String,
    facets: Vec<[String; 3]>,
    vertices: Vec<[String; 2]>,
}

/// Pairwise intersections of the fixture facets and the axes that satisfy every constraint.
fn brute_force_vertices(rows: &[(Rational, Rational, Rational)]) -> BTreeSet<(Rational, Rational)> {
    let mut out = BTreeSet::new();
    for (i, (a1, a2, b)) in rows.iter().enumerate() {
        for (c1, c2, d) in &rows[i + 1..] {
            let det = a1 * c2 - a2 * c1;
            if det.is_zero() {
                continue;
            }
            let x = (b * c2 - a2 * d) / &det;
            let y = (a1 * d - b * c1) / &det;
            if rows.iter().all(|(p, q, s)| p * &x + q * &y <= *s) {
                out.insert((x, y));
            }
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["regions/example1.json", "regions/example2.json"] {
        let f: RegionFixture = read(name);
        let reg = region_of(f.m, f.n1, f.n2, lv(&f.beta1), lv(&f.beta2)).unwrap();
        let verts: BTreeSet<(Rational, Rational)> = reg.vertices.iter().cloned().collect();
        let facets: BTreeSet<(Rational, Rational, Rational)> = reg
            .halfspaces
            .iter()
            .filter(|h| !h.tag.starts_with("d"))
            .filter(|h| reg.vertices.iter().filter(|(x, y)| h.is_tight(x, y)).count() >= 2)
            .map(|h| (h.a1.clone(), h.a2.clone(), h.b.clone()))
            .collect();
        let expected: BTreeSet<_> = f.facets.iter().map(|[a, b, c]| (r(a), r(b), r(c))).collect();
        let mut rows: Vec<_> = expected.iter().cloned().collect();
        rows.push((-Rational::one(), Rational::zero(), Rational::zero()));
        rows.push((Rational::zero(), -Rational::one(), Rational::zero()));
        let oracle = brute_force_vertices(&rows);
        let fixture: BTreeSet<_> = f.vertices.iter().map(|[x, y]| (r(x), r(y))).collect();
        let beta_o = reg.beta_o.as_ref().map(|b| render(&b.value));
        let this = facets == expected
            && verts == oracle
            && verts == fixture
            && beta_o.as_deref() == Some(f.beta_o.as_str())
            && render(&sum_dof(&reg)) == f.sum_dof;
        ok &= this;
        notes.push(format!("{name}: {}", if this { "match" } else { "mismatch" }));
    }
    outcome(ok, notes.join(", "))
}

fn triples(max_m: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        for n1 in 1..=m {
            for n2 in n1..=m {
                if m <= n1 + n2 {
                    out.push((m, n1, n2));
                }
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let ts = triples(8);
    let mut bad = Vec::new();
    for &(m, n1, n2) in &ts {
        let one = sum_dof(&region_of(m, n1, n2, Level::one(), Level::one()).unwrap());
        let zero = sum_dof(&region_of(m, n1, n2, Level::zero(), Level::zero()).unwrap());
        if one != Rational::from_integer((m as i64).into()) || zero != Rational::from_integer((n2 as i64).into()) {
            bad.push(format!("({m},{n1},{n2})"));
        }
    }
    outcome(bad.is_empty(), format!("{} triples, {} mismatches {:?}", ts.len(), bad.len(), bad))
}

fn criterion_4() -> Outcome {
    let ts = [(5, 2, 3), (4, 1, 3), (6, 2, 4), (7, 3, 4), (8, 3, 6)];
    let mut checked = 0;
    let mut bad = 0;
    for &(m, n1, n2) in &ts {
        for k in 1..=50i64 {
            let b1 = from_ratio(Level::new(k, 51));
            let b2 = Rational::one() - &b1;
            let lo = beta_o_below(m, n1, n2, &b1, &b2);
            let hi = beta_o_at_least(m, n1, n2, &b1, &b2);
            checked += 1;
            if lo.is_none() || lo != hi {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{checked} points, {bad} disagreements"))
}

/// Largest `r` with `r^{2q} ≤ P^p`, by direct search.
fn pbar_oracle(p: u64, lam: Level) -> u64 {
    let (num, den) = (*lam.numer() as u32, *lam.denom() as u32);
    let target = (p as u128).pow(num);
    let mut r = 0u64;
    while ((r + 1) as u128).checked_pow(2 * den).is_some_and(|v| v <= target) {
        r += 1;
    }
    r
}

fn criterion_5() -> Outcome {
    let grid = [level(1, 8), level(1, 4), level(1, 3), level(1, 2), level(2, 3), level(3, 4), level(7, 8), level(1, 1)];
    let mut checks = 0u64;
    let mut failures = 0u64;
    for p in [16u64, 64, 256, 1024] {
        let s = PowerScale::new(p).unwrap();
        for &lam in &grid {
            if s.pbar(lam).unwrap() != pbar_oracle(p, lam) {
                failures += 1;
            }
            let size = s.alphabet(lam).unwrap();
            for &l1 in std::iter::once(&Level::zero()).chain(grid.iter()).filter(|l| **l <= lam) {
                let base = s.pbar(l1).unwrap();
                for x in 0..size {
                    checks += 1;
                    let top = s.part_mid(x, l1, lam).unwrap();
                    let low = s.part_low(x, l1).unwrap();
                    if base * top + low != x {
                        failures += 1;
                    }
                }
            }
        }
    }
    outcome(failures == 0, format!("{checks} reconstructions, {failures} failures"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut failures = 0;
    let mut checks = 0;
    for _ in 0..1000 {
        let m = rng.gen_range(1..=4usize);
        let k = rng.gen_range(2..=8u64);
        let total = k.pow(m as u32) as usize;
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for idx in 0..total {
            if rng.gen_bool(0.5) {
                support.push((0..m).map(|i| (idx as u64 / k.pow(i as u32)) % k).collect::<Vec<u64>>());
                probs.push(rng.gen_range(0.0..1.0f64).powi(3) + 1e-6);
            }
        }
        if support.is_empty() {
            support.push(vec![0; m]);
            probs.push(1.0);
        }
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        let labels: Vec<u32> = (0..support.len()).map(|_| rng.gen_range(0..3)).collect();
        let pmf = FinitePmf::new(support, probs).unwrap();
        for n in 1..=m {
            for lab in [None, Some(labels.as_slice())] {
                checks += 1;
                if !check_submodularity(&pmf, n, lab).unwrap().holds {
                    failures += 1;
                }
            }
        }
    }
    outcome(failures == 0, format!("{checks} window checks, {failures} failures"))
}

fn slack_line(rep: &doflab::entropy::SweepReport) -> String {
    let s: Vec<String> = rep.normalized_slack.iter().map(|x| format!("{x:.4}")).collect();
    format!("{} {:?} gap/log2P=[{}]", rep.instance, rep.verdict, s.join(","))
}

fn criterion_7(json: &mut Vec<String>) -> Outcome {
    let settings = SweepSettings::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for inst in [step4_instance().unwrap(), appendix_a_instance().unwrap()] {
        let rep = verify_sumset(&inst, &settings).unwrap();
        ok &= rep.verdict == Verdict::Pass;
        notes.push(slack_line(&rep));
        json.push(serde_json::to_string(&rep).unwrap());
    }
    outcome(ok, notes.join("; "))
}

#[derive(Deserialize)]
struct ConstantsFixture {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N1")]
    big_n1: usize,
    #[serde(rename = "N2")]
    big_n2: usize,
    beta1: String,
    beta2: String,
    branch: LemmaBranch,
    n0: String,
    n1: String,
    n2: String,
}

fn criterion_8() -> Outcome {
    let settings = lemma_settings();
    let opts = LemmaOptions::default();
    let ex1 = example_config("example1").unwrap();
    let ex2 = example_config("example2").unwrap();
    let reports = [
        verify_lemma_example1(&ex1, &settings, &opts).unwrap(),
        verify_lemma_example2(&ex2, &settings, &opts).unwrap(),
        verify_lemma3(&Lemma3Config::zero_gap(), &settings, &opts).unwrap(),
        verify_lemma_general(&ex1, LemmaBranch::Ge1, &settings, &opts).unwrap(),
        verify_lemma_general(&ex2, LemmaBranch::Lt1, &settings, &opts).unwrap(),
    ];
    let mut ok = reports.iter().all(|r| r.verdict == Verdict::Pass);
    let fx: Vec<ConstantsFixture> = read("lemmas/constants.json");
    let mut mismatched = 0;
    for f in &fx {
        let cfg = normalize_config(f.m, f.big_n1, f.big_n2, lv(&f.beta1), lv(&f.beta2)).unwrap();
        let k = lemma_constants(&cfg, f.branch).unwrap();
        if (k.n0, k.n1, k.n2) != (lv(&f.n0), lv(&f.n1), lv(&f.n2)) {
            mismatched += 1;
        }
    }
    ok &= mismatched == 0;
    let lines: Vec<String> = reports.iter().map(slack_line).collect();
    outcome(ok, format!("{}; constants {}/{} match", lines.join("; "), fx.len() - mismatched, fx.len()))
}

fn criterion_9(json: &mut Vec<String>) -> Outcome {
    let toy = toy_example_check(&SweepSettings::default(), ToyVariant::Standard).unwrap();
    let fit = expected_sizes_sweep(&toy_instance().unwrap(), &AisSettings::default()).unwrap();
    let lossy = expected_sizes_sweep(&lossy_instance().unwrap(), &AisSettings::default()).unwrap();
    let setup = AlignmentSetup::for_channel(5, 2, 3, 1, 1, 3, 1).unwrap();
    let scale = PowerScale::new(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut above = 0;
    for i in 0..500u64 {
        let pair = random_pair(5, &scale, &mut rng).unwrap();
        if !alignment_probability(&pair, &setup, &scale, 200, i).unwrap().within_bound {
            above += 1;
        }
    }
    for rep in [&fit, &lossy] {
        json.push(serde_json::to_string(rep).unwrap());
    }
    json.push(serde_json::to_string(&toy).unwrap());
    let sizes: Vec<String> = fit.expected_size.iter().map(|x| format!("{x:.3}")).collect();
    let parts = [
        toy.verdict == Verdict::Pass,
        fit.verdict == Verdict::Pass,
        lossy.verdict == Verdict::Fail,
        above == 0,
    ];
    outcome(
        parts.iter().all(|&b| b),
        format!(
            "toy check {:?}; toy E|S|=[{}] c1={:.3} c2={:.3} exponent={:.3} (limit 0.1) residual={:.3} {:?}; lossy exponent={:.3} {:?}; alignment above bound+3SE: {above}/500",
            toy.verdict,
            sizes.join(","),
            fit.c1,
            fit.c2,
            fit.exponent,
            fit.residual,
            fit.verdict,
            lossy.exponent,
            lossy.verdict
        ),
    )
}

fn criterion_10(first: &[String]) -> Outcome {
    let mut second = Vec::new();
    let _ = criterion_7(&mut second);
    let _ = criterion_9(&mut second);
    let region = |(m, n1, n2, b1, b2): (usize, usize, usize, Level, Level)| {
        serde_json::to_string(&region_of(m, n1, n2, b1, b2).unwrap().to_doc()).unwrap()
    };
    let quick = SweepSettings { powers: vec![16, 64], draws: 8, ..SweepSettings::default() };
    let small = || {
        [
            region((5, 2, 3, level(1, 2), level(2, 3))),
            serde_json::to_string(&verify_sumset(&trivial_instance().unwrap(), &quick).unwrap()).unwrap(),
            serde_json::to_string(
                &verify_lemma_example1(&example_config("example1").unwrap(), &quick, &LemmaOptions::default()).unwrap(),
            )
            .unwrap(),
        ]
    };
    let same_small = small() == small();
    let same = first == second.as_slice();
    outcome(same && same_small, format!("{} large and 3 small reports compared", first.len()))
}

#[test]
fn acceptance() {
    let mut json = Vec::new();
    type Run<'a> = Box<dyn FnMut() -> Outcome + 'a>;
    let mut results = Vec::new();
    {
        let cells = std::cell::RefCell::new(&mut json);
        let criteria: Vec<(usize, Duration, Run)> = vec![
            (1, Duration::from_millis(1), Box::new(criterion_1)),
            (2, Duration::from_millis(10), Box::new(criterion_2)),
            (3, Duration::from_secs(1), Box::new(criterion_3)),
            (4, Duration::from_secs(1), Box::new(criterion_4)),
            (5, Duration::from_secs(10), Box::new(criterion_5)),
            (6, Duration::from_secs(30), Box::new(criterion_6)),
            (7, Duration::from_secs(600), Box::new(|| criterion_7(&mut cells.borrow_mut()))),
            (8, Duration::from_secs(1200), Box::new(criterion_8)),
            (9, Duration::from_secs(600), Box::new(|| criterion_9(&mut cells.borrow_mut()))),
        ];
        for (n, limit, mut f) in criteria {
            let t = Instant::now();
            let o = f();
            results.push((n, limit, t.elapsed(), o));
        }
    }
    let t = Instant::now();
    let o = criterion_10(&json);
    results.push((10, Duration::from_secs(1200), t.elapsed(), o));
    let mut failed = Vec::new();
    println!();
    for (n, limit, took, o) in &results {
        let timely = took <= limit;
        let pass = o.ok && timely;
        if !pass {
            failed.push(*n);
        }
        println!(
            "criterion {n:>2}: {} | {} | {:.3?} (limit {:?})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took,
            limit
        );
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
