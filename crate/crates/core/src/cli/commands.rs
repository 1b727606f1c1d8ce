use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value};

use super::*;
use crate::analysis::{
    classify_specialization, cluster_count_sweep, compute_default_labels, default_labels_from_export,
    pooled_sweep_histograms, threshold_sweep, DefaultLabelSet, Provenance, SpecializationTag,
};
use crate::fsutil::write_atomic;
use crate::interchange::{load_bundle, write_bundle, Bundle, Category, LayerKind, LoadOptions};
use crate::maskops::Formula;
use crate::metrics::{quality_vector, read_accuracy, scene_perc, MaskedActsDir, NeuronView, QualityOptions};
use crate::report::{cell, header, read_results, write_csv, write_jsonl, ResultLine, ENGINE};
use crate::search::{explain_interval, Probe};
use crate::synth::{planted_bundle, random_bundle, SynthSpec};
use crate::thresholds::{coex_threshold_set, threshold_set, Interval, ThresholdSet};

pub(super) fn dispatch(cli: &Cli) -> Result<()> {
    let pool = build_pool(cli.jobs)?;
    match &cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Cluster(a) => cluster(a, &pool),
        Command::Explain(a) => explain(a, &pool),
        Command::CompareHeuristics(a) => compare(a, &pool),
        Command::Metrics(a) => metrics(a, &pool),
        Command::Defaults(a) => defaults(a, &pool),
        Command::Classify(a) => classify(a),
        Command::SweepThresholds(a) => sweep_thresholds(a, &pool),
        Command::SweepClusters(a) => sweep_clusters(a, &pool),
        Command::Verify(a) => verify(a),
    }
}

fn build_pool(jobs: Option<usize>) -> Result<ThreadPool> {
    let n = match jobs {
        Some(0) => return Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))
}

fn load(b: &BundleArgs) -> Result<Bundle> {
    if !b.bundle.is_dir() {
        return Err(Error::Config(format!("bundle directory {} not found", b.bundle.display())));
    }
    let mut opts = LoadOptions::from_env();
    opts.verify_meta |= b.verify;
    let start = Instant::now();
    let bundle = load_bundle(&b.bundle, opts)?;
    info!(
        "loaded {}: {} samples, {} concepts, {} neurons in {:.1?}",
        b.bundle.display(),
        bundle.masks.n_samples(),
        bundle.catalog.len(),
        bundle.acts.n_neurons(),
        start.elapsed()
    );
    Ok(bundle)
}

fn threshold_sets(bundle: &Bundle, select: &SelectArgs, pool: &ThreadPool) -> Result<Vec<ThresholdSet>> {
    if select.n_cls == 0 {
        return Err(Error::Config("--n-cls must be at least 1".into()));
    }
    let neurons = parse_neurons(&select.neurons, bundle.acts.n_neurons())?;
    pool.install(|| {
        neurons
            .par_iter()
            .map(|&n| {
                if select.coex {
                    coex_threshold_set(&bundle.acts, n)
                } else {
                    threshold_set(&bundle.acts, n, select.n_cls, select.seed)
                }
            })
            .collect()
    })
}

fn gen_synthetic(a: &GenArgs) -> Result<()> {
    let spec = SynthSpec {
        grid_height: a.height,
        grid_width: a.width,
        concepts: (a.min_concepts, a.max_concepts),
        samples: (a.min_samples, a.max_samples),
        n_neurons: a.neurons,
        layer_kind: if a.signed { LayerKind::Signed } else { LayerKind::Relu },
        noise: a.noise,
    };
    let bundle = if a.planted {
        let p = planted_bundle(&spec, a.seed)?;
        std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
        let info = json!({
            "neuron": p.neuron,
            "low": p.low,
            "high": p.high,
            "low_name": p.bundle.catalog.name(p.low),
            "high_name": p.bundle.catalog.name(p.high),
        });
        write_atomic(&a.out.join("planted.json"), format!("{info}\n").as_bytes())?;
        p.bundle
    } else {
        random_bundle(&spec, a.seed)?
    };
    write_bundle(&bundle.catalog, &bundle.masks, &bundle.acts, &a.out)?;
    info!("wrote {}", a.out.display());
    Ok(())
}

fn cluster(a: &ClusterArgs, pool: &ThreadPool) -> Result<()> {
    let bundle = load(&a.bundle)?;
    let sets = threshold_sets(&bundle, &a.select, pool)?;
    write_jsonl(&a.out, &header("cluster", a)?, &sets)
}

struct Job {
    set: usize,
    interval: Interval,
}

fn jobs_of(sets: &[ThresholdSet]) -> Vec<Job> {
    sets.iter()
        .enumerate()
        .flat_map(|(i, s)| s.intervals.iter().map(move |iv| Job { set: i, interval: *iv }))
        .collect()
}

fn explain(a: &ExplainArgs, pool: &ThreadPool) -> Result<()> {
    let params = a.search.params()?;
    let bundle = load(&a.bundle)?;
    let sets = threshold_sets(&bundle, &a.select, pool)?;
    let jobs = jobs_of(&sets);
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let r = explain_interval(&bundle.masks, &bundle.acts, sets[j.set].neuron, &j.interval, &params)?;
                info!(
                    "neuron {} cluster {}: {} iou {:.4} visited {} ({:.1} ms)",
                    r.neuron,
                    r.interval.label,
                    r.formula
                        .as_ref()
                        .map_or_else(|| "-".to_string(), |f| f.display_with(|c| bundle.catalog.name(c))),
                    r.iou.to_f64(),
                    r.visited,
                    r.wall_time_ms.unwrap_or_default()
                );
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut lines: Vec<Value> = Vec::new();
    let mut csv_rows = Vec::new();
    let mut it = jobs.iter().zip(&records).peekable();
    for (i, s) in sets.iter().enumerate() {
        if s.degenerate {
            warn!("neuron {} has no activations to cluster", s.neuron);
            lines.push(json!({"kind": "skipped", "neuron": s.neuron, "reason": "no activations to cluster"}));
        }
        while let Some((_, r)) = it.next_if(|(j, _)| j.set == i) {
            let line = ResultLine::from_record(r, s.mode, s.reduced, &bundle.catalog, a.timings);
            csv_rows.push(vec![
                line.neuron.to_string(),
                line.cluster.to_string(),
                line.interval.lo.to_string(),
                line.interval.hi.to_string(),
                line.formula.clone().unwrap_or_default(),
                line.label.clone().unwrap_or_default(),
                line.iou.num().to_string(),
                line.iou.den().to_string(),
                cell(Some(line.iou_value)),
                line.visited.to_string(),
            ]);
            lines.push(serde_json::to_value(&line).map_err(|e| Error::InvalidInput(e.to_string()))?);
        }
    }
    let h = header("explain", a)?;
    write_jsonl(&a.out, &h, &lines)?;
    if let Some(path) = &a.csv {
        let cols = [
            "neuron", "cluster", "lo", "hi", "formula", "label", "iou_num", "iou_den", "iou", "visited",
        ];
        write_csv(path, &h, &cols, &csv_rows)?;
    }
    Ok(())
}

fn compare(a: &CompareArgs, pool: &ThreadPool) -> Result<()> {
    let bundle = load(&a.bundle)?;
    let sets = threshold_sets(&bundle, &a.select, pool)?;
    let jobs = jobs_of(&sets);
    let mut rows = Vec::new();
    let mut exhaustive: Option<(u64, Vec<crate::ratio::Ratio>)> = None;
    let mut prev_total = u64::MAX;
    for h in Heuristic::ALL {
        let params = SearchArgs {
            heuristic: h,
            b_first: a.b_first,
            b_rest: a.b_rest,
            max_len: a.max_len,
        }
        .params()?;
        let start = Instant::now();
        let recs = pool.install(|| {
            jobs.par_iter()
                .map(|j| explain_interval(&bundle.masks, &bundle.acts, sets[j.set].neuron, &j.interval, &params))
                .collect::<Result<Vec<_>>>()
        })?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let total: u64 = recs.iter().map(|r| r.visited).sum();
        let ious: Vec<_> = recs.iter().map(|r| r.iou).collect();
        let (base_total, base_ious) = exhaustive.get_or_insert_with(|| (total, ious.clone()));
        let same = ious.iter().zip(base_ious.iter()).filter(|(x, y)| x == y).count();
        if total > prev_total {
            warn!("{h} visited more states ({total}) than the previous heuristic ({prev_total})");
        }
        prev_total = total;
        info!("{h}: {total} visited over {} jobs", jobs.len());
        rows.push(vec![
            h.as_str().to_string(),
            jobs.len().to_string(),
            total.to_string(),
            cell(Some(total as f64 / jobs.len().max(1) as f64)),
            cell(Some(if *base_total == 0 { 0.0 } else { total as f64 / *base_total as f64 })),
            same.to_string(),
            if a.timings { cell(Some(elapsed)) } else { String::new() },
        ]);
    }
    let cols = [
        "heuristic",
        "jobs",
        "visited_total",
        "visited_mean",
        "fraction_of_exhaustive",
        "same_best_iou",
        "wall_ms",
    ];
    write_csv(&a.out, &header("compare-heuristics", a)?, &cols, &rows)
}

fn metrics(a: &MetricsArgs, pool: &ThreadPool) -> Result<()> {
    let bundle = load(&a.bundle)?;
    let results = read_results(&a.results)?;
    let masked = a.masked_acts.as_deref().map(MaskedActsDir::open).transpose()?;
    let accuracy = a.accuracy.as_deref().map(read_accuracy).transpose()?;
    if let Some(acc) = &accuracy {
        if acc.len() != bundle.masks.n_samples() {
            return Err(Error::Consistency(format!(
                "accuracy file has {} values for {} samples",
                acc.len(),
                bundle.masks.n_samples()
            )));
        }
    }
    let with_formula: Vec<(&ResultLine, Formula)> = results
        .iter()
        .filter_map(|r| r.parsed_formula().transpose().map(|f| f.map(|f| (r, f))))
        .collect::<Result<_>>()?;
    let qualities = pool.install(|| {
        with_formula
            .par_iter()
            .map(|(r, f)| {
                bundle.acts.check_neuron(r.neuron)?;
                let probe = Probe::new(&bundle.masks, &bundle.acts, r.neuron, &r.interval)?;
                let loaded = match &masked {
                    Some(dir) => dir.load(r.neuron, r.cluster, f)?,
                    None => None,
                };
                let opts = QualityOptions {
                    imrou_r: a.imrou,
                    accuracy: accuracy.as_deref(),
                    masked: loaded.as_ref().map(|(s, i)| NeuronView { store: s, neuron: *i }),
                    original: loaded.as_ref().map(|_| NeuronView {
                        store: &bundle.acts,
                        neuron: r.neuron,
                    }),
                    absolute_lab_mask: a.abs_lab_mask,
                };
                let q = quality_vector(&probe, f, &opts)?;
                if q.iou != r.iou {
                    return Err(Error::Consistency(format!(
                        "neuron {} cluster {}: results file says IoU {}, bundle gives {}",
                        r.neuron, r.cluster, r.iou, q.iou
                    )));
                }
                Ok(q)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let rows: Vec<Vec<String>> = with_formula
        .iter()
        .zip(&qualities)
        .map(|((r, f), q)| {
            vec![
                r.neuron.to_string(),
                r.cluster.to_string(),
                f.to_compact(),
                cell(Some(q.iou.to_f64())),
                cell(Some(q.expl_cov.to_f64())),
                cell(Some(q.sample_cov.to_f64())),
                cell(Some(q.act_cov.to_f64())),
                cell(Some(q.det_acc.to_f64())),
                cell(q.lab_mask),
                cell(q.aux.scene_perc),
                cell(q.aux.imrou),
                cell(q.aux.pearson),
                cell(q.aux.avg_act_size),
                cell(q.aux.avg_lab_size),
                cell(q.aux.avg_overlap),
                cell(q.aux.abs_lab_mask),
                q.degenerate.join(";"),
            ]
        })
        .collect();
    let h = header("metrics", a)?;
    let cols = [
        "neuron",
        "cluster",
        "formula",
        "iou",
        "expl_cov",
        "sample_cov",
        "act_cov",
        "det_acc",
        "lab_mask",
        "scene_perc",
        "imrou",
        "pearson",
        "avg_act_size",
        "avg_lab_size",
        "avg_overlap",
        "abs_lab_mask",
        "degenerate",
    ];
    write_csv(&a.out, &h, &cols, &rows)?;

    if let Some(path) = &a.table {
        let mut groups: BTreeMap<Option<u32>, Vec<usize>> = BTreeMap::new();
        for (i, (r, _)) in with_formula.iter().enumerate() {
            groups.entry(Some(r.cluster)).or_default().push(i);
            groups.entry(None).or_default().push(i);
        }
        let mean = |idx: &[usize], get: &dyn Fn(usize) -> Option<f64>| {
            let vals: Vec<f64> = idx.iter().filter_map(|&i| get(i)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let mut table = Vec::new();
        // Per-cluster rows first, then the pooled row.
        for (key, idx) in groups.iter().filter(|(k, _)| k.is_some()).chain(groups.iter().filter(|(k, _)| k.is_none())) {
            let q = |i: usize| &qualities[i];
            table.push(vec![
                key.map_or_else(|| "all".to_string(), |c| c.to_string()),
                idx.len().to_string(),
                cell(mean(idx, &|i| Some(q(i).iou.to_f64()))),
                cell(mean(idx, &|i| Some(q(i).expl_cov.to_f64()))),
                cell(mean(idx, &|i| Some(q(i).sample_cov.to_f64()))),
                cell(mean(idx, &|i| Some(q(i).act_cov.to_f64()))),
                cell(mean(idx, &|i| Some(q(i).det_acc.to_f64()))),
                cell(mean(idx, &|i| q(i).lab_mask)),
                cell(scene_perc(&bundle.masks, idx.iter().map(|&i| &with_formula[i].1))),
            ]);
        }
        let cols = [
            "cluster", "records", "IoU", "ExplCov", "SampleCov", "ActCov", "DetAcc", "LabMask", "ScenePerc",
        ];
        write_csv(path, &h, &cols, &table)?;
    }
    Ok(())
}

fn defaults(a: &DefaultsArgs, pool: &ThreadPool) -> Result<()> {
    let params = a.search.params()?;
    if a.n_cls == 0 {
        return Err(Error::Config("--n-cls must be at least 1".into()));
    }
    let bundle = load(&a.bundle)?;
    let set = pool.install(|| {
        if a.from_export {
            default_labels_from_export(&bundle.masks, &bundle.acts, a.n_cls, a.seed, &params)
        } else {
            compute_default_labels(&bundle.masks, bundle.acts.layer_kind(), a.n_cls, a.seed, a.units, &params)
        }
    })?;
    let h = header("defaults", a)?;
    let doc = json!({
        "kind": "defaults",
        "engine": ENGINE,
        "command": "defaults",
        "config": h["config"],
        "provenance": set.provenance,
        "seed": set.seed,
        "formulas": set.formulas.iter().map(Formula::to_compact).collect::<Vec<_>>(),
        "labels": set.formulas.iter().map(|f| f.display_with(|c| bundle.catalog.name(c))).collect::<Vec<_>>(),
    });
    write_atomic(&a.out, format!("{doc}\n").as_bytes())
}

fn read_defaults(path: &Path) -> Result<DefaultLabelSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |what: &str| Error::Format(format!("{}: {what}", path.display()));
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
    if v["kind"] != "defaults" {
        return Err(bad("not a defaults file"));
    }
    let provenance: Provenance = serde_json::from_value(v["provenance"].clone()).map_err(|e| bad(&e.to_string()))?;
    let seed = v["seed"].as_u64().ok_or_else(|| bad("missing seed"))?;
    let formulas = v["formulas"]
        .as_array()
        .ok_or_else(|| bad("missing formulas"))?
        .iter()
        .map(|f| Formula::parse_compact(f.as_str().unwrap_or_default()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DefaultLabelSet::new(formulas, provenance, seed))
}

fn classify(a: &ClassifyArgs) -> Result<()> {
    let defaults = read_defaults(&a.defaults)?;
    let results = read_results(&a.results)?;
    let mut rows = Vec::new();
    let mut per_cluster: BTreeMap<u32, [usize; 3]> = BTreeMap::new();
    for r in &results {
        let Some(f) = r.parsed_formula()? else { continue };
        let tag = classify_specialization(&f, &defaults);
        per_cluster.entry(r.cluster).or_default()[tag as usize] += 1;
        rows.push(vec![
            r.neuron.to_string(),
            r.cluster.to_string(),
            f.to_compact(),
            tag.as_str().to_string(),
        ]);
    }
    let h = header("classify", a)?;
    write_csv(&a.out, &h, &["neuron", "cluster", "formula", "tag"], &rows)?;
    if let Some(path) = &a.table {
        let table: Vec<Vec<String>> = per_cluster
            .iter()
            .map(|(c, counts)| {
                let n: usize = counts.iter().sum();
                let frac = |t: SpecializationTag| cell(Some(counts[t as usize] as f64 / n as f64));
                vec![
                    c.to_string(),
                    n.to_string(),
                    frac(SpecializationTag::Unspecialized),
                    frac(SpecializationTag::WeaklySpecialized),
                    frac(SpecializationTag::Specialized),
                ]
            })
            .collect();
        let cols = ["cluster", "records", "unspecialized", "weakly_specialized", "specialized"];
        write_csv(path, &h, &cols, &table)?;
    }
    Ok(())
}

fn sweep_thresholds(a: &SweepThresholdsArgs, pool: &ThreadPool) -> Result<()> {
    let params = a.search.params()?;
    let bundle = load(&a.bundle)?;
    let neurons = parse_neurons(&a.neurons, bundle.acts.n_neurons())?;
    let runs = pool.install(|| {
        neurons
            .par_iter()
            .map(|&n| threshold_sweep(&bundle.catalog, &bundle.masks, &bundle.acts, n, &params))
            .collect::<Result<Vec<_>>>()
    })?;
    let shares = |h: Option<&BTreeMap<Category, f64>>| {
        Category::ALL
            .iter()
            .map(|c| cell(h.map(|h| h.get(c).copied().unwrap_or(0.0))))
            .collect::<Vec<_>>()
    };
    let mut rows = Vec::new();
    for (n, run) in neurons.iter().zip(&runs) {
        for s in run {
            let mut row = vec![
                n.to_string(),
                s.range.name.clone(),
                s.range.interval.lo.to_string(),
                s.range.interval.hi.to_string(),
                s.record.formula.as_ref().map(Formula::to_compact).unwrap_or_default(),
                s.record
                    .formula
                    .as_ref()
                    .map(|f| f.display_with(|c| bundle.catalog.name(c)))
                    .unwrap_or_default(),
                cell(Some(s.record.iou.to_f64())),
            ];
            row.extend(shares(s.histogram.as_ref()));
            rows.push(row);
        }
    }
    for (name, hist) in pooled_sweep_histograms(&bundle.catalog, &runs) {
        let mut row = vec!["all".to_string(), name, String::new(), String::new(), String::new(), String::new(), String::new()];
        row.extend(shares(hist.as_ref()));
        rows.push(row);
    }
    let mut cols = vec!["neuron", "range", "lo", "hi", "formula", "label", "iou"];
    cols.extend(Category::ALL.iter().map(|c| c.as_str()));
    write_csv(&a.out, &header("sweep-thresholds", a)?, &cols, &rows)
}

fn sweep_clusters(a: &SweepClustersArgs, pool: &ThreadPool) -> Result<()> {
    let params = a.search.params()?;
    let bundle = load(&a.bundle)?;
    let neurons = parse_neurons(&a.neurons, bundle.acts.n_neurons())?;
    if a.k_list.is_empty() {
        return Err(Error::Config("--k-list is empty".into()));
    }
    let rows = pool.install(|| cluster_count_sweep(&bundle.masks, &bundle.acts, &neurons, &a.k_list, a.seed, &params))?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.records.to_string(),
                cell(Some(r.mean_iou)),
                cell(Some(r.mean_expl_cov)),
                cell(Some(r.mean_sample_cov)),
                cell(Some(r.mean_act_cov)),
                cell(Some(r.mean_det_acc)),
                cell(Some(r.novel_fraction)),
            ]
        })
        .collect();
    let cols = ["k", "records", "IoU", "ExplCov", "SampleCov", "ActCov", "DetAcc", "novel_fraction"];
    write_csv(&a.out, &header("sweep-clusters", a)?, &cols, &table)
}

fn verify(a: &VerifyArgs) -> Result<()> {
    if !a.bundle.is_dir() {
        return Err(Error::Config(format!("bundle directory {} not found", a.bundle.display())));
    }
    let b = load_bundle(&a.bundle, LoadOptions { verify_meta: true })?;
    println!(
        "ok: {} samples, {} concepts, {} neurons, {}x{} grid, {:?} layer",
        b.masks.n_samples(),
        b.catalog.len(),
        b.acts.n_neurons(),
        b.masks.grid_height(),
        b.masks.grid_width(),
        b.acts.layer_kind()
    );
    Ok(())
}
