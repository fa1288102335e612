use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use clap::ValueEnum;
use rayon::prelude::*;

use bnbtune::bounds::generalization_curves;
use bnbtune::csp::{self, CspInstance, CspSpec, FathomPreset};
use bnbtune::erm::{average, display_hi, enumerate_behaviors, midpoint, AveragedCost, PiecewiseCost};
use bnbtune::generators::{self as gen, FamilyParams};
use bnbtune::{BnbConfig, ChildEval, FathomMode, MilpInstance, ScoringSpec};

use crate::dataset;
use crate::{BoundsArgs, CspArgs, Domain, ErmArgs, Failure, Fathom, GenerateArgs, Preset, SearchArgs, SolveArgs, SweepArgs};

/// Bad parameter values are usage errors; anything else is a runtime failure.
fn classify(e: bnbtune::Error) -> Failure {
    match e {
        bnbtune::Error::Range(msg) => Failure::Usage(msg),
        other => other.into(),
    }
}

impl SearchArgs {
    fn config(&self) -> BnbConfig {
        BnbConfig {
            node_selection: self.node_selection.into(),
            fathom_mode: match self.fathom {
                Fathom::Full => FathomMode::Full,
                Fathom::LocalOnly => FathomMode::LocalOnly,
            },
            node_cap: self.node_cap,
            cost_cap: self.cost_cap,
            child_eval: self.partial_pivots.map_or(ChildEval::Full, |max_pivots| ChildEval::Partial { max_pivots }),
        }
    }
}

pub fn generate(a: &GenerateArgs) -> Result<(), Failure> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let m = if matches!(a.domain, Domain::Knapsack) { 1 } else { a.m };
    let name = a.domain.to_possible_value().expect("no skipped variants").get_name().to_string();
    let mut manifest = csv::Writer::from_path(a.out.join("manifest.csv"))?;
    manifest.write_record(["file", "domain", "seed", "params"])?;
    let mixture = match a.domain {
        Domain::Mixture => Some(gen::worst_case_mixture(a.n, a.a, a.b, a.gamma, a.gamma).map_err(classify)?),
        _ => None,
    };
    let mut draws = gen::rng(a.seed);
    for k in 0..m {
        let seed = a.seed + k as u64;
        let gamma_k = a.gamma * (k + 1) as f64;
        let family = FamilyParams { n: a.n, mu_star: a.mustar, gamma: gamma_k };
        let (text, ext, params) = match a.domain {
            Domain::Wdp => (
                gen::gen_winner_determination(a.bidders, a.goods, a.max_bundle, seed).map_err(classify)?.to_text(),
                "milp",
                format!("bidders={} goods={} max_bundle={}", a.bidders, a.goods, a.max_bundle),
            ),
            Domain::Facility => (
                gen::gen_facility_location(a.facilities, a.customers, seed).map_err(classify)?.to_text(),
                "milp",
                format!("facilities={} customers={}", a.facilities, a.customers),
            ),
            Domain::Kmeans => (
                gen::gen_kmeans(a.n, a.k, seed).map_err(classify)?.to_text(),
                "milp",
                format!("n={} k={}", a.n, a.k),
            ),
            Domain::Linsep => (
                gen::gen_linear_separator(a.n, a.dim, a.flips, seed).map_err(classify)?.to_text(),
                "milp",
                format!("n={} dim={} flips={}", a.n, a.dim, a.flips),
            ),
            Domain::FamilyF => (
                gen::family_f(&family).map_err(classify)?.to_text(),
                "milp",
                format!("n={} mustar={} gamma={gamma_k} (gamma_k = gamma*(k+1))", a.n, a.mustar),
            ),
            Domain::FamilyG => (
                gen::family_g(&family).map_err(classify)?.to_text(),
                "milp",
                format!("n={} mustar={} gamma={gamma_k} (gamma_k = gamma*(k+1))", a.n, a.mustar),
            ),
            Domain::Mixture => {
                let mix = mixture.as_ref().expect("built above");
                let q = mix.sample(&mut draws);
                let which = if std::ptr::eq(q, &mix.qa) { "qa=familyG" } else { "qb=familyF" };
                (q.to_text(), "milp", format!("n={} a={} b={} gamma={} draw={which}", a.n, a.a, a.b, a.gamma))
            }
            Domain::Knapsack => (gen::knapsack_example().to_text(), "milp", "example".to_string()),
            Domain::Coloring => (
                csp::gen_coloring(a.n, a.p, a.k, seed).map_err(classify)?.to_text()?,
                "csp",
                format!("n={} p={} k={}", a.n, a.p, a.k),
            ),
        };
        let file = format!("{name}_{k:03}.{ext}");
        fs::write(a.out.join(&file), text)?;
        manifest.write_record([file, name.clone(), seed.to_string(), params])?;
    }
    manifest.flush()?;
    eprintln!("generate: wrote {m} {name} instance(s) to {}", a.out.display());
    Ok(())
}

pub fn solve(a: &SolveArgs) -> Result<(), Failure> {
    let q = MilpInstance::read(&a.file).map_err(|e| Failure::Usage(format!("{}: {e}", a.file.display())))?;
    let spec = match a.rule2 {
        Some(r2) => ScoringSpec::pair(a.rule, r2, a.mu),
        None => ScoringSpec::single(a.rule),
    };
    let (tree, best) = bnbtune::run(&q, &spec, &a.search.config())?;
    let mut out = String::new();
    let _ = writeln!(out, "status {}", if best.is_some() { "optimal" } else { "infeasible" });
    if let Some(v) = best {
        let _ = writeln!(out, "optimum {v}");
    }
    if let Some(x) = &tree.incumbent_x {
        let xs: Vec<String> = x.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "x {}", xs.join(" "));
    }
    let _ = writeln!(out, "tree_size {}", tree.size());
    let _ = writeln!(out, "cap_hit {}", tree.cap_hit);
    let _ = writeln!(out, "fingerprint {}", tree.fingerprint());
    io::stdout().write_all(out.as_bytes())?;
    if let Some(path) = &a.dump {
        fs::write(path, tree.dump())?;
    }
    Ok(())
}

/// Per-instance sweeps in parallel, in dataset order, with failures kept.
fn sweep_dataset(path: &Path, a_rule: bnbtune::Rule, b_rule: bnbtune::Rule, cfg: &BnbConfig) -> Result<Swept, Failure> {
    let data = dataset::load(path)?;
    let results: Vec<(String, Outcome)> = data
        .par_iter()
        .map(|(id, q)| {
            let r = q.as_ref().map_err(Clone::clone).and_then(|q| {
                enumerate_behaviors(q, a_rule, b_rule, cfg).map(|pc| (pc, q.binary_vars().len())).map_err(|e| e.to_string())
            });
            (id.clone(), r)
        })
        .collect();
    let mut swept = Swept::default();
    for (id, r) in results {
        match r {
            Ok((pc, nb)) => {
                swept.n_binaries = swept.n_binaries.max(nb);
                swept.costs.push((id, pc));
            }
            Err(e) => swept.failures.push((id, e)),
        }
    }
    for (id, e) in &swept.failures {
        eprintln!("warning: instance {id} failed: {e}");
    }
    if swept.costs.is_empty() {
        return Err(Failure::Runtime(anyhow!("every instance failed")));
    }
    let only: Vec<PiecewiseCost> = swept.costs.iter().map(|(_, pc)| pc.clone()).collect();
    swept.avg = average(&only);
    Ok(swept)
}

/// Cost function and binary count of one instance, or why it failed.
type Outcome = Result<(PiecewiseCost, usize), String>;

#[derive(Default)]
struct Swept {
    costs: Vec<(String, PiecewiseCost)>,
    failures: Vec<(String, String)>,
    avg: AveragedCost,
    n_binaries: usize,
}

impl Swept {
    fn mu_hat(&self) -> (f64, f64, f64, f64) {
        let (lo, hi, c) = self.avg.argmin();
        (lo, display_hi(hi), c, 0.5 * (lo + display_hi(hi)))
    }
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let cfg = a.search.config();
    let s = sweep_dataset(&a.dataset, a.rule1, a.rule2, &cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let mut w = csv::Writer::from_path(a.out.join("sweep.csv"))?;
    w.write_record(["mu_lo", "mu_hi", "avg_tree_size"])?;
    for &(lo, hi, c) in &s.avg.pieces {
        w.write_record([lo.to_string(), display_hi(hi).to_string(), c.to_string()])?;
    }
    w.flush()?;

    let (lo, hi, c, mu_hat) = s.mu_hat();
    let mut w = csv::Writer::from_path(a.out.join("argmin.csv"))?;
    w.write_record(["mu_lo", "mu_hi", "avg_tree_size", "mu_hat"])?;
    w.write_record([lo.to_string(), hi.to_string(), c.to_string(), mu_hat.to_string()])?;
    w.flush()?;

    dataset::write_instances(&a.out, &s.costs)?;
    let mut w = csv::Writer::from_path(a.out.join("failures.csv"))?;
    w.write_record(["instance_id", "error"])?;
    for (id, e) in &s.failures {
        w.write_record([id, e])?;
    }
    w.flush()?;

    let meta = format!(
        "rule1={}\nrule2={}\ninstances={}\nfailed={}\nn_binaries={}\ncost_cap={}\n",
        a.rule1,
        a.rule2,
        s.costs.len(),
        s.failures.len(),
        s.n_binaries,
        cfg.cost_cap
    );
    fs::write(a.out.join(dataset::META), meta)?;
    eprintln!(
        "sweep: {} instance(s), {} failed, {} interval(s), argmin [{lo}, {hi}) avg tree size {c}",
        s.costs.len(),
        s.failures.len(),
        s.avg.pieces.len()
    );
    Ok(())
}

pub fn erm(a: &ErmArgs) -> Result<(), Failure> {
    let s = sweep_dataset(&a.dataset, a.rule1, a.rule2, &a.search.config())?;
    let (lo, hi, c, mu_hat) = s.mu_hat();
    println!("mu_hat {mu_hat}");
    println!("interval {lo} {hi}");
    println!("avg_tree_size {c}");
    println!("instances {}", s.costs.len());
    Ok(())
}

pub fn bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let meta = dataset::read_meta(&a.artifacts)?;
    let costs: Vec<PiecewiseCost> = dataset::read_instances(&a.artifacts)?.into_iter().map(|(_, pc)| pc).collect();
    if costs.is_empty() {
        return Err(Failure::Usage(format!("no instances in {}", a.artifacts.display())));
    }
    let n = match a.n {
        Some(n) => n,
        None => meta
            .get("n_binaries")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Failure::Usage("sweep.txt lacks n_binaries; pass --n".into()))?,
    };
    if a.kappa.is_nan() || a.kappa <= 0.0 || a.delta.is_nan() || a.delta <= 0.0 || a.delta >= 1.0 {
        return Err(Failure::Usage("need kappa > 0 and 0 < delta < 1".into()));
    }
    let ms: Vec<usize> = match &a.ms {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|e| Failure::Usage(format!("--ms {s}: {e}"))))
            .collect::<Result<_, _>>()?,
        None => (1..=costs.len()).collect(),
    };
    if let Some(&bad) = ms.iter().find(|&&m| m == 0 || m > costs.len()) {
        return Err(Failure::Usage(format!("sample size {bad} outside 1..={}", costs.len())));
    }
    let curve = generalization_curves(&costs, &ms, n as f64, a.kappa, a.delta);
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["m", "worst_case", "data_dependent", "distinct_vectors", "converged"])?;
    for p in &curve {
        w.write_record([
            p.m.to_string(),
            p.worst_case.to_string(),
            p.data_dependent.to_string(),
            p.distinct_vectors.to_string(),
            p.converged.to_string(),
        ])?;
        if !p.converged {
            eprintln!("warning: data-dependent minimiser at m={} hit the search range edge", p.m);
        }
    }
    w.flush()?;
    Ok(())
}

pub fn csp(a: &CspArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.file).map_err(|e| Failure::Usage(format!("{}: {e}", a.file.display())))?;
    let inst = if a.dimacs {
        let (n, edges) = csp::parse_dimacs(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.file.display())))?;
        csp::encode_graph_coloring(n, &edges, a.k).map_err(classify)?
    } else {
        CspInstance::from_text(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.file.display())))?
    };
    let preset = match a.preset {
        Preset::Hard => FathomPreset::Hard,
        Preset::None => FathomPreset::None,
    };
    let policy = a.node_selection.into();
    if a.sweep {
        let r2 = a.rule2.ok_or_else(|| Failure::Usage("--sweep needs --rule2".into()))?;
        let pc = csp::enumerate_csp(&inst, preset, a.rule, r2, policy, a.node_cap)?;
        let sink: Box<dyn Write> = match &a.out {
            Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout()),
        };
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["mu_lo", "mu_hi", "tree_size", "fingerprint"])?;
        for p in &pc.pieces {
            w.write_record([p.lo.to_string(), display_hi(p.hi).to_string(), p.cost.to_string(), p.fingerprint.clone()])?;
        }
        w.flush()?;
        let best = pc.argmin();
        eprintln!("csp sweep: {} interval(s), smallest tree {} at mu {}", pc.len(), best.cost, midpoint(best));
        return Ok(());
    }
    let spec = match a.rule2 {
        Some(r2) => CspSpec::pair(a.rule, r2, a.mu),
        None => CspSpec::single(a.rule),
    };
    let (tree, best) = csp::ts_run(&inst, preset, &spec, policy, a.node_cap)?;
    let mut out = String::new();
    match &best {
        Some(b) => {
            let status = if b.satisfied == inst.constraints.len() { "satisfiable" } else { "partial" };
            let _ = writeln!(out, "status {status}");
            let _ = writeln!(out, "satisfied {} of {}", b.satisfied, inst.constraints.len());
            let vals: Vec<String> = b
                .solution
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{}={}", inst.names[i], inst.domains[i][v.expect("complete solution")]))
                .collect();
            let _ = writeln!(out, "assignment {}", vals.join(" "));
        }
        None => {
            let verdict = if tree.cap_hit { "unknown" } else { "unsatisfiable" };
            let _ = writeln!(out, "status {verdict}");
        }
    }
    let _ = writeln!(out, "tree_size {}", tree.size());
    let _ = writeln!(out, "cap_hit {}", tree.cap_hit);
    let _ = writeln!(out, "fingerprint {}", tree.fingerprint());
    io::stdout().write_all(out.as_bytes())?;
    Ok(())
}
