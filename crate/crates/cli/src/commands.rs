//! The subcommands. Each reads a resolved [`RunConfig`], writes its files into
//! the output directory and returns a JSON summary for stdout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use treebridge::bridge::{sample_bridges, PenaltyKind, ProposalTuning};
use treebridge::evidence::{dataset_log_ml, EvidenceConfig, Method};
use treebridge::geodesic::{distance, frechet_mean, geodesic};
use treebridge::kernels::{random_walk, spider4_axis_cdf, spider4_density, WalkParams};
use treebridge::posterior::{run_inference_with, InferenceConfig, Prior};
use treebridge::rng::{mix64, stream, tag};
use treebridge::stats::{mean, median};
use treebridge::treespace::{resolved_topologies, DatasetSummary};
use treebridge::{TaxonSet, Topology, Tree};

use crate::data::{load_dataset, parse_tree, taxa_for, tree_text};
use crate::{CliError, RunConfig};

/// Buffered output file that remembers its path for error messages.
struct Out {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Out {
    fn create(dir: &Path, name: &str) -> Result<Self, CliError> {
        let path = dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Out {
            path,
            w: BufWriter::new(f),
        })
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.w, "{s}").map_err(|e| CliError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.w.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<(), CliError> {
    let mut o = Out::create(dir, name)?;
    o.line(&serde_json::to_string_pretty(v).expect("serializable"))?;
    o.finish()
}

/// Runs `cfg.command`, writing a resolved-config snapshot first.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut snap = Out::create(out, &format!("{}.config", cfg.command))?;
    snap.line(cfg.to_text().trim_end())?;
    snap.finish()?;
    match cfg.command.as_str() {
        "geodesic" => cmd_geodesic(cfg, out),
        "frechet" => cmd_frechet(cfg, out),
        "simulate-walk" => cmd_simulate_walk(cfg, out),
        "sample-bridge" => cmd_sample_bridge(cfg, out),
        "infer" => cmd_infer(cfg, out),
        "marginal" => cmd_marginal(cfg, out),
        "exact4" => cmd_exact4(cfg, out),
        "summarize" => cmd_summarize(cfg, out),
        c => Err(CliError::Config(format!("unknown command `{c}`"))),
    }
}

fn tree_key(cfg: &RunConfig, key: &str, taxa: &TaxonSet) -> Result<Tree, CliError> {
    parse_tree(&tree_text(cfg.str(key))?, taxa, key)
}

/// A tree key that also fixes the taxon set when no map is given.
fn tree_and_taxa(cfg: &RunConfig, key: &str) -> Result<(Tree, TaxonSet), CliError> {
    let text = tree_text(cfg.str(key))?;
    let taxa = taxa_for(cfg.opt_str("taxa_path"), &text)?;
    Ok((parse_tree(&text, &taxa, key)?, taxa))
}

fn dataset(cfg: &RunConfig) -> Result<(Vec<Tree>, DatasetSummary), CliError> {
    load_dataset(Path::new(cfg.str("data_path")), cfg.opt_str("taxa_path"))
}

fn topology_newick(t: &Topology, taxa: &TaxonSet) -> String {
    t.with_lengths(taxa, &vec![1.0; t.splits().len()])
        .expect("topology of a valid tree")
        .to_newick()
}

fn summary_json(s: &DatasetSummary, taxa: &TaxonSet) -> Value {
    json!({
        "n": s.n,
        "distinct_splits": s.distinct_splits,
        "distinct_topologies": s.distinct_topologies,
        "modal_count": s.modal_count,
        "modal_topology": s.modal_topology.as_ref().map(|t| topology_newick(t, taxa)),
    })
}

fn positive(cfg: &RunConfig, key: &str) -> Result<f64, CliError> {
    let v = cfg.real(key);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{key}` must be positive, got {v}")))
    }
}

fn at_least_one(cfg: &RunConfig, key: &str) -> Result<usize, CliError> {
    match cfg.int(key) {
        0 => Err(CliError::Config(format!("`{key}` must be at least 1"))),
        v => Ok(v),
    }
}

fn cmd_geodesic(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (x1, taxa) = tree_and_taxa(cfg, "x1")?;
    let x2 = tree_key(cfg, "x2", &taxa)?;
    let g = geodesic(&x1, &x2).map_err(CliError::compute)?;
    let c = g.classify();
    let k = cfg.int("points");
    let points: Vec<Value> = (0..k)
        .map(|i| {
            let t = if k == 1 { 0.5 } else { i as f64 / (k - 1) as f64 };
            json!({"t": t, "tree": g.point(t).to_newick()})
        })
        .collect();
    let v = json!({
        "distance": g.length(),
        "simple": c.is_simple,
        "cone_path": c.is_cone_path,
        "nu": c.nu,
        "high_codim": c.high_codim,
        "penalty": c.penalty(),
        "crossings": c.crossings.iter().map(|x| json!({"t": x.t, "codim": x.codim})).collect::<Vec<_>>(),
        "points": points,
    });
    write_json(out, "geodesic.json", &v)?;
    Ok(v)
}

fn cmd_frechet(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (data, _) = dataset(cfg)?;
    let mut rng = stream(cfg.u64("seed"), &[tag::FRECHET]);
    let fm = frechet_mean(&data, cfg.int("iters"), &mut rng).map_err(CliError::compute)?;
    let v = json!({
        "n": data.len(),
        "mean": fm.mean.to_newick(),
        "variance": fm.variance,
    });
    write_json(out, "frechet.json", &v)?;
    Ok(v)
}

fn cmd_simulate_walk(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (x0, _) = tree_and_taxa(cfg, "x0")?;
    let t0 = positive(cfg, "t0")?;
    let m = at_least_one(cfg, "m")?;
    let p = WalkParams::new(x0.clone(), t0, m).map_err(|e| CliError::Config(e.to_string()))?;
    let seed = cfg.u64("seed");
    let all_steps = cfg.bool("record_steps");
    let mut ends = Out::create(out, "endpoints.nwk")?;
    let mut csv = Out::create(out, "walk.csv")?;
    csv.line("walk,step,topology_hash,distance_to_source")?;
    let mut counts = std::collections::BTreeMap::<Topology, usize>::new();
    let mut dists = Vec::new();
    for w in 0..cfg.int("walks") {
        let mut r = stream(seed, &[tag::WALK, w as u64]);
        let (end, path) = random_walk(&p, &mut r);
        ends.line(&end.to_newick())?;
        let first = if all_steps { 1 } else { m };
        for (step, y) in path.iter().enumerate().skip(first) {
            let d = distance(&x0, y).map_err(CliError::compute)?;
            csv.line(&format!("{w},{step},{},{d}", y.topology().hash_hex()))?;
            if step == m {
                dists.push(d);
            }
        }
        *counts.entry(end.topology()).or_default() += 1;
    }
    ends.finish()?;
    csv.finish()?;
    let modal = counts.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)));
    let v = json!({
        "walks": dists.len(),
        "m": m,
        "t0": t0,
        "distinct_topologies": counts.len(),
        "modal_topology_hash": modal.map(|(t, _)| t.hash_hex()),
        "modal_count": modal.map_or(0, |(_, &c)| c),
        "mean_distance": if dists.is_empty() { None } else { Some(mean(&dists)) },
    });
    write_json(out, "walk_summary.json", &v)?;
    Ok(v)
}

fn cmd_sample_bridge(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (x0, taxa) = tree_and_taxa(cfg, "x0")?;
    let x_star = tree_key(cfg, "x_star", &taxa)?;
    let t0 = positive(cfg, "t0")?;
    let penalty = match cfg.str("penalty") {
        "codim-sum" => PenaltyKind::CodimSum,
        "zero" => PenaltyKind::Zero,
        p => return Err(CliError::Config(format!("unknown penalty `{p}`"))),
    };
    let tuning = ProposalTuning {
        alpha_b: cfg.real("alpha_b"),
        penalty,
        ..ProposalTuning::default()
    };
    tuning.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let (iters, burnin, thin) = (cfg.int("iters"), cfg.int("burnin"), at_least_one(cfg, "thin")?);
    let mut rng = stream(cfg.u64("seed"), &[tag::BRIDGE]);
    let run = sample_bridges(&x0, &x_star, t0, cfg.int("m"), tuning, iters, burnin, thin, &mut rng)
        .map_err(CliError::compute)?;
    let mut csv = Out::create(out, "bridge_trace.csv")?;
    csv.line("iter,accepted,log_target")?;
    for r in &run.trace {
        csv.line(&format!("{},{},{}", r.iter, r.accepted as u8, r.log_target))?;
    }
    csv.finish()?;
    let mut dump = Out::create(out, "bridges.nwk")?;
    for (i, b) in run.samples.iter().enumerate() {
        if i > 0 {
            dump.line("")?;
        }
        for y in b.points() {
            dump.line(&y.to_newick())?;
        }
    }
    dump.finish()?;
    let v = json!({
        "iters": iters,
        "samples": run.samples.len(),
        "proposed": run.stats.proposed,
        "accepted": run.stats.accepted,
        "invalid": run.stats.invalid,
        "acceptance_rate": run.stats.acceptance_rate(),
        "init_attempts": run.init_attempts,
    });
    write_json(out, "bridge_summary.json", &v)?;
    Ok(v)
}

fn cmd_infer(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (data, summary) = dataset(cfg)?;
    let taxa = data[0].taxa().clone();
    let config = InferenceConfig {
        m: cfg.int("m"),
        iters: cfg.int("iters"),
        burnin: cfg.int("burnin"),
        thin: cfg.int("thin"),
        alpha_b: cfg.real("alpha_b"),
        alpha_0: cfg.real("alpha_0"),
        lambda0: cfg.real("lambda0"),
        sigma0: cfg.real("sigma0"),
        seed: cfg.u64("seed"),
        frechet_iters: cfg.int("frechet_iters"),
        ..InferenceConfig::default()
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let prior = Prior::new(taxa.len());
    let mut csv = Out::create(out, "trace.csv")?;
    let mut nwk = Out::create(out, "x0_samples.nwk")?;
    csv.line("iter,t0,log_joint,x0_topology_hash")?;
    let mut io_err = None;
    let trace = run_inference_with(&data, &prior, &config, |r| {
        if io_err.is_some() {
            return;
        }
        let res = csv
            .line(&format!("{},{},{},{}", r.iter, r.t0, r.log_joint, r.x0.topology().hash_hex()))
            .and_then(|_| nwk.line(&r.x0.to_newick()));
        io_err = res.err();
    })
    .map_err(CliError::compute)?;
    if let Some(e) = io_err {
        return Err(e);
    }
    csv.finish()?;
    nwk.finish()?;
    let n = trace.n_samples();
    let table: Vec<Value> = trace
        .topologies
        .iter()
        .map(|(t, c)| {
            json!({
                "hash": t.hash_hex(),
                "topology": topology_newick(t, &taxa),
                "count": c,
                "frequency": *c as f64 / n as f64,
            })
        })
        .collect();
    let a = trace.acceptance;
    let v = json!({
        "data": summary_json(&summary, &taxa),
        "samples": n,
        "acceptance": {
            "bridge": a.bridge.rate(),
            "x0": a.x0.rate(),
            "t0": a.t0.rate(),
            "t0_guard_hits": a.t0_guard_hits,
        },
        "init": {
            "x0": trace.init_x0.to_newick(),
            "t0": trace.init_t0,
            "log_joint": trace.init_log_joint,
        },
        "modal_topology": trace.modal_topology().map(|t| topology_newick(t, &taxa)),
        "t0_mean": if n > 0 { Some(mean(&trace.t0_samples)) } else { None },
        "t0_median": if n > 0 { Some(median(&trace.t0_samples)) } else { None },
        "t0_interval_95": trace.t0_interval(0.95).map(|(a, b)| [a, b]),
        "topologies": table,
    });
    write_json(out, "infer_summary.json", &v)?;
    Ok(v)
}

fn cmd_marginal(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (data, _) = dataset(cfg)?;
    let taxa = data[0].taxa().clone();
    let x0 = tree_key(cfg, "x0", &taxa)?;
    let t0 = positive(cfg, "t0")?;
    let m = at_least_one(cfg, "m")?;
    let method: Method = cfg.str("method").parse().map_err(CliError::Config)?;
    let config = EvidenceConfig {
        m1: cfg.int("m1"),
        m2: cfg.int("m2"),
        h: cfg.int("h"),
        k: cfg.int("k"),
        burnin: cfg.int("burnin"),
        thin: cfg.int("thin"),
        ss_samples: cfg.int("ss_samples"),
        bootstrap: cfg.int("bootstrap"),
        tuning: ProposalTuning {
            alpha_b: cfg.real("alpha_b"),
            ..ProposalTuning::default()
        },
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let repeats = at_least_one(cfg, "repeats")?;
    let seed = cfg.u64("seed");
    let mut runs = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let s = if r == 0 { seed } else { mix64(seed ^ mix64(r as u64)) };
        runs.push(dataset_log_ml(&data, &x0, t0, m, method, &config, s).map_err(CliError::compute)?);
    }
    let totals: Vec<f64> = runs.iter().map(|e| e.total).collect();
    let per_datum: Vec<Value> = (0..data.len())
        .map(|i| {
            let v: Vec<f64> = runs.iter().map(|e| e.per_datum[i].log_ml).collect();
            json!({
                "index": i,
                "log_ml": median(&v),
                "se": runs[0].per_datum[i].se,
            })
        })
        .collect();
    let v = json!({
        "method": cfg.str("method"),
        "m": m,
        "t0": t0,
        "x0": x0.to_newick(),
        "n": data.len(),
        "total": median(&totals),
        "se": runs[0].se,
        "repeat_totals": totals,
        "per_datum": per_datum,
    });
    write_json(out, "marginal.json", &v)?;
    Ok(v)
}

fn cmd_exact4(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (x0, taxa) = tree_and_taxa(cfg, "x0")?;
    if taxa.len() != 4 {
        return Err(CliError::Input(format!("exact4 needs four taxa, got {}", taxa.len())));
    }
    let t0 = positive(cfg, "t0")?;
    let radius = positive(cfg, "radius")?;
    let k = at_least_one(cfg, "points")?;
    let (src_split, a) = x0.edges().first().map_or((None, 0.0), |&(s, l)| (Some(s), l));
    let mut csv = Out::create(out, "exact4.csv")?;
    csv.line("axis,length,density,cdf")?;
    let mut masses = Vec::new();
    for top in resolved_topologies(&taxa) {
        let s = top.splits()[0];
        let same = Some(s) == src_split;
        let name = s.display_with(&taxa);
        for i in 1..=k {
            let b = radius * i as f64 / k as f64;
            let y = top.with_lengths(&taxa, &[b]).expect("positive length");
            let d = spider4_density(&y, &x0, t0).map_err(CliError::compute)?;
            csv.line(&format!("\"{name}\",{b},{d},{}", spider4_axis_cdf(b, a, same, t0)))?;
        }
        masses.push(json!({"axis": name, "mass": spider4_axis_cdf(f64::INFINITY, a, same, t0)}));
    }
    csv.finish()?;
    let mut v = json!({"t0": t0, "x0": x0.to_newick(), "axes": masses});
    if let Some(p) = cfg.opt_str("data_path") {
        let (data, _) = load_dataset(Path::new(p), cfg.opt_str("taxa_path"))?;
        let mut o = Out::create(out, "exact4_data.csv")?;
        o.line("index,density,log_density")?;
        let mut total = 0.0;
        for (i, y) in data.iter().enumerate() {
            if !y.taxa().same_as(&taxa) {
                return Err(CliError::Input(format!("datum {i} uses a different taxon set")));
            }
            let d = spider4_density(y, &x0, t0).map_err(CliError::compute)?;
            total += d.ln();
            o.line(&format!("{i},{d},{}", d.ln()))?;
        }
        o.finish()?;
        v["log_likelihood"] = json!(total);
    }
    write_json(out, "exact4.json", &v)?;
    Ok(v)
}

fn cmd_summarize(cfg: &RunConfig, out: &Path) -> Result<Value, CliError> {
    let (data, summary) = dataset(cfg)?;
    let taxa = data[0].taxa().clone();
    let mut counts = std::collections::BTreeMap::<Topology, usize>::new();
    for t in &data {
        *counts.entry(t.topology()).or_default() += 1;
    }
    let mut rows: Vec<(Topology, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut csv = Out::create(out, "topologies.csv")?;
    csv.line("hash,count,topology")?;
    for (t, c) in &rows {
        csv.line(&format!("{},{c},\"{}\"", t.hash_hex(), topology_newick(t, &taxa)))?;
    }
    csv.finish()?;
    let v = summary_json(&summary, &taxa);
    write_json(out, "summary.json", &v)?;
    Ok(v)
}
