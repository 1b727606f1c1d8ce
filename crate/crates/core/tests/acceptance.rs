//! End-to-end acceptance checks on generated fixtures. Runs as a plain binary
//! and prints one PASS/FAIL line per criterion.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dissector::heuristics::Heuristic;
use dissector::interchange::{ActivationStore, Bundle, SampleMaskStore};
use dissector::maskops::{largest_inscribed_rect, BitMask, ConceptId, Formula, Op};
use dissector::metrics::{act_cov, det_acc, expl_cov, iou, sample_counts, sample_cov};
use dissector::search::{beam_search, clustered_explain, coex_explain, explain_interval, netdissect, Probe, SearchParams};
use dissector::synth::{planted_bundle, random_bundle, SynthSpec};
use dissector::thresholds::{clustered_values, kmeans_1d, threshold_set, top_quantile_threshold, Interval};
use dissector::Ratio;

type Check = std::result::Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Check);

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let checks: [Criterion; 9] = [
        (1, "bounds never undercut the exact IoU", admissibility),
        (2, "heuristics keep the exhaustive beams", beam_optimality),
        (3, "visited states ordered none > areas > cfh > mmesh", visited_trend),
        (4, "IoU and coverage metrics match a cell loop", oracle_equivalence),
        (5, "single-concept and single-range reductions", reductions),
        (6, "largest inscribed rectangle matches brute force", geometry),
        (7, "1-D k-means is optimal and intervals tile the values", clustering),
        (8, "planted concepts are recovered", planted_recovery),
        (9, "outputs identical across worker counts", determinism),
    ];
    let mut failed = 0;
    for (n, name, f) in checks {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS criterion {n}: {name} ({detail}; {secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n}: {name} ({detail}; {secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Fixture bundle and up to three cluster ranges of neuron 0.
fn instance(seed: u64) -> (Bundle, Vec<Interval>) {
    let b = random_bundle(&SynthSpec::default(), seed).unwrap();
    let ts = threshold_set(&b.acts, 0, 3, seed).unwrap();
    (b, ts.intervals)
}

fn params(h: Heuristic) -> SearchParams {
    SearchParams {
        heuristic: h,
        ..SearchParams::default()
    }
}

fn admissibility() -> Check {
    let start = Instant::now();
    let (mut candidates, mut violations, mut dominance, mut probes) = (0u64, 0u64, 0u64, 0u64);
    for seed in 0..1000 {
        let (b, intervals) = instance(seed);
        for iv in &intervals {
            let probe = Probe::new(&b.masks, &b.acts, 0, iv).unwrap();
            let p = SearchParams {
                audit: true,
                ..params(Heuristic::Mmesh)
            };
            let report = beam_search(&probe, &p).unwrap().audit.unwrap();
            candidates += report.candidates;
            violations += report.violations();
            dominance += report.dominance_failures;
            probes += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(violations == 0, || format!("{violations} bound violations"))?;
    ensure(dominance == 0, || format!("{dominance} dominance failures"))?;
    ensure(secs < 120.0, || format!("took {secs:.0}s"))?;
    Ok(format!("{probes} ranges, {candidates} candidates, 0 violations"))
}

fn beam_optimality() -> Check {
    let mut probes = 0;
    for seed in 0..200 {
        let (b, intervals) = instance(seed);
        for iv in &intervals {
            let probe = Probe::new(&b.masks, &b.acts, 0, iv).unwrap();
            let reference = beam_search(&probe, &params(Heuristic::None)).unwrap();
            for h in [Heuristic::Areas, Heuristic::Cfh, Heuristic::Mmesh] {
                let out = beam_search(&probe, &params(h)).unwrap();
                ensure(out.best == reference.best, || format!("seed {seed}: {h} best differs"))?;
                for (a, r) in out.steps.iter().zip(&reference.steps) {
                    ensure(a.beam == r.beam, || format!("seed {seed}: {h} beam at arity {} differs", a.arity))?;
                }
                ensure(out.steps.len() == reference.steps.len(), || format!("seed {seed}: step count"))?;
            }
            probes += 1;
        }
    }
    Ok(format!("{probes} ranges"))
}

fn visited_trend() -> Check {
    let order = [Heuristic::None, Heuristic::Areas, Heuristic::Cfh, Heuristic::Mmesh];
    let n_instances = 40;
    let (mut ordered, mut ratio_sum) = (0, 0.0);
    for seed in 0..n_instances {
        let b = random_bundle(&SynthSpec::default(), seed).unwrap();
        let mut totals = [0u64; 4];
        for neuron in 0..b.acts.n_neurons() {
            let ts = threshold_set(&b.acts, neuron, 5, seed).unwrap();
            for iv in &ts.intervals {
                for (i, &h) in order.iter().enumerate() {
                    totals[i] += explain_interval(&b.masks, &b.acts, neuron, iv, &params(h)).unwrap().visited;
                }
            }
        }
        if totals.windows(2).all(|w| w[0] > w[1]) {
            ordered += 1;
        }
        ratio_sum += totals[3] as f64 / totals[0] as f64;
    }
    let share = ordered as f64 / n_instances as f64;
    let ratio = ratio_sum / n_instances as f64;
    ensure(share >= 0.95, || format!("ordered on {ordered}/{n_instances}"))?;
    ensure(ratio <= 0.1, || format!("mmesh/none ratio {ratio:.4}"))?;
    Ok(format!("ordered on {ordered}/{n_instances}, mmesh/none {ratio:.4}"))
}

struct Naive {
    inter: u64,
    union: u64,
    m: u64,
    s: u64,
    samples_hit: u64,
    samples_label: u64,
    samples_fire: u64,
}

fn naive_counts(masks: &SampleMaskStore, acts: &ActivationStore, neuron: usize, iv: &Interval, f: &Formula) -> Naive {
    let (h, w) = (masks.grid_height(), masks.grid_width());
    let mut n = Naive {
        inter: 0,
        union: 0,
        m: 0,
        s: 0,
        samples_hit: 0,
        samples_label: 0,
        samples_fire: 0,
    };
    for x in 0..masks.n_samples() {
        let grid = acts.grid(neuron, x);
        let (mut hit, mut lab, mut fire) = (false, false, false);
        for r in 0..h {
            for c in 0..w {
                let v = grid[r * w + c] as f64;
                let a = iv.lo <= v && v <= iv.hi;
                let s = f.eval(|t| masks.mask(x, t).get(r, c));
                n.inter += (a && s) as u64;
                n.union += (a || s) as u64;
                n.m += a as u64;
                n.s += s as u64;
                hit |= a && s;
                lab |= s;
                fire |= a;
            }
        }
        n.samples_hit += hit as u64;
        n.samples_label += lab as u64;
        n.samples_fire += fire as u64;
    }
    n
}

fn random_formula(rng: &mut ChaCha8Rng, n_concepts: usize) -> Formula {
    let mut f = Formula::atom(ConceptId(rng.gen_range(1..=n_concepts as u32)));
    for _ in 0..rng.gen_range(0..3) {
        let op = Op::ALL[rng.gen_range(0..3)];
        f = f.extend(op, ConceptId(rng.gen_range(1..=n_concepts as u32)));
    }
    f
}

fn random_interval(rng: &mut ChaCha8Rng, values: &[f32]) -> Interval {
    let a = values[rng.gen_range(0..values.len())] as f64;
    let b = values[rng.gen_range(0..values.len())] as f64;
    if rng.gen_bool(0.3) {
        Interval::new(a, f64::INFINITY, 1)
    } else {
        Interval::new(a.min(b), a.max(b), 1)
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for probe_no in 0..500 {
        let b = random_bundle(&SynthSpec::default(), 10_000 + probe_no / 10).unwrap();
        let neuron = rng.gen_range(0..b.acts.n_neurons());
        let iv = random_interval(&mut rng, b.acts.neuron_values(neuron));
        let f = random_formula(&mut rng, b.masks.n_concepts());
        let n = naive_counts(&b.masks, &b.acts, neuron, &iv, &f);
        let probe = Probe::new(&b.masks, &b.acts, neuron, &iv).unwrap();
        let counts = sample_counts(&probe, &f).unwrap();
        let pairs = [
            ("exact_iou", probe.exact_iou(&f).unwrap(), Ratio::new(n.inter, n.union)),
            ("iou", iou(&counts), Ratio::new(n.inter, n.union)),
            ("det_acc", det_acc(&counts), Ratio::new(n.inter, n.s)),
            ("act_cov", act_cov(&counts), Ratio::new(n.inter, n.m)),
            ("sample_cov", sample_cov(&counts), Ratio::new(n.samples_hit, n.samples_label)),
            ("expl_cov", expl_cov(&counts), Ratio::new(n.samples_hit, n.samples_fire)),
        ];
        for (name, got, want) in pairs {
            ensure(got == want, || format!("probe {probe_no} {f}: {name} {got} vs {want}"))?;
        }
    }
    Ok("500 probes".into())
}

/// Reference beam search: cell-loop IoU for every candidate, no bounds,
/// duplicates dropped by brute-force truth tables.
fn naive_coex(b: &Bundle, neuron: usize, iv: &Interval, p: &SearchParams) -> (Formula, Ratio) {
    let masks = &b.masks;
    let universe: Vec<ConceptId> = masks
        .concept_ids()
        .filter(|&c| (0..masks.n_samples()).any(|x| !masks.mask(x, c).is_empty()))
        .collect();
    let score = |f: &Formula| {
        let n = naive_counts(masks, &b.acts, neuron, iv, f);
        Ratio::new(n.inter, n.union)
    };
    let rank = |a: &(Formula, Ratio), b: &(Formula, Ratio)| b.1.cmp(&a.1).then_with(|| tie(&a.0, &b.0));
    let mut seen = HashSet::new();
    let mut all: Vec<(Formula, Ratio)> = Vec::new();
    let mut layer: Vec<(Formula, Ratio)> = universe
        .iter()
        .map(|&c| {
            seen.insert(truth_key(&Formula::atom(c)));
            (Formula::atom(c), score(&Formula::atom(c)))
        })
        .collect();
    for len in 1..=p.max_len {
        if len > 1 {
            let mut next = Vec::new();
            for (f, _) in &layer {
                for op in Op::ALL {
                    for &t in &universe {
                        let g = f.extend(op, t);
                        if seen.insert(truth_key(&g)) {
                            let s = score(&g);
                            next.push((g, s));
                        }
                    }
                }
            }
            layer = next;
        }
        all.extend(layer.iter().cloned());
        layer.sort_by(rank);
        layer.truncate(if len == 1 { p.b_first } else { p.b_rest });
    }
    all.sort_by(rank);
    all.swap_remove(0)
}

fn tie(a: &Formula, b: &Formula) -> Ordering {
    let raw = |f: &Formula| (f.terms().collect::<Vec<_>>(), f.tail().iter().map(|t| t.0).collect::<Vec<_>>());
    a.tie_break_cmp(b).then_with(|| raw(a).cmp(&raw(b)))
}

/// Essential atoms plus the truth table over them.
fn truth_key(f: &Formula) -> (Vec<ConceptId>, Vec<bool>) {
    let mut atoms: Vec<ConceptId> = f.terms().collect();
    atoms.sort();
    atoms.dedup();
    let eval = |bits: u32, atoms: &[ConceptId]| f.eval(|t| bits >> atoms.iter().position(|&a| a == t).unwrap() & 1 == 1);
    let essential: Vec<ConceptId> = atoms
        .iter()
        .enumerate()
        .filter(|&(i, _)| (0..1u32 << atoms.len()).any(|bits| eval(bits, &atoms) != eval(bits ^ (1 << i), &atoms)))
        .map(|(_, &a)| a)
        .collect();
    let table = (0..1u32 << essential.len())
        .map(|bits| {
            let mut full = 0u32;
            for (j, a) in essential.iter().enumerate() {
                if bits >> j & 1 == 1 {
                    full |= 1 << atoms.iter().position(|x| x == a).unwrap();
                }
            }
            eval(full, &atoms)
        })
        .collect();
    (essential, table)
}

fn reductions() -> Check {
    let mut cases = 0;
    for seed in 0..15 {
        let b = random_bundle(&SynthSpec::default(), 20_000 + seed).unwrap();
        for neuron in 0..b.acts.n_neurons() {
            let mut values = b.acts.neuron_values(neuron).to_vec();
            let tau = top_quantile_threshold(&values, 0.005).unwrap() as f64;
            // Smallest stored value whose upper mass is within the quantile.
            values.sort_by(f32::total_cmp);
            let mut distinct = values.clone();
            distinct.dedup();
            let mass = |t: f32| values.iter().filter(|&&v| v >= t).count() as f64 / values.len() as f64;
            let want = distinct
                .iter()
                .copied()
                .find(|&t| mass(t) <= 0.005 + 1e-12)
                .unwrap_or(*distinct.last().unwrap());
            ensure(want as f64 == tau, || format!("seed {seed} neuron {neuron}: threshold {tau}, expected {want}"))?;
            let iv = Interval::new(tau, f64::INFINITY, 1);
            let probe = Probe::new(&b.masks, &b.acts, neuron, &iv).unwrap();

            // One-term search against the atomic table and a cell-loop argmax.
            let nd = netdissect(&probe);
            let one = beam_search(&probe, &SearchParams { max_len: 1, ..SearchParams::default() }).unwrap();
            ensure(one.best == nd.best, || format!("seed {seed} neuron {neuron}: max_len 1 differs"))?;
            let mut naive_best: Option<(ConceptId, Ratio)> = None;
            for c in b.masks.concept_ids() {
                let n = naive_counts(&b.masks, &b.acts, neuron, &iv, &Formula::atom(c));
                let r = Ratio::new(n.inter, n.union);
                ensure(nd.table[c.index()] == (c, r), || format!("seed {seed}: table entry {c}"))?;
                if n.s > 0 && naive_best.is_none_or(|(_, best)| r > best) {
                    naive_best = Some((c, r));
                }
            }
            let nd_best = nd.best.as_ref().map(|s| (s.formula.head(), s.iou));
            ensure(nd_best == naive_best, || format!("seed {seed} neuron {neuron}: {nd_best:?} vs {naive_best:?}"))?;

            // Single-range mode against the reference beam search.
            let p = params(Heuristic::Mmesh);
            let coex = coex_explain(&b.masks, &b.acts, neuron, &p).unwrap();
            ensure(coex.records.len() == 1 && coex.records[0].interval == iv, || {
                format!("seed {seed} neuron {neuron}: single range expected")
            })?;
            let rec = &coex.records[0];
            let (f, r) = naive_coex(&b, neuron, &iv, &p);
            ensure(rec.formula.as_ref() == Some(&f) && rec.iou == r, || {
                format!("seed {seed} neuron {neuron}: {:?} {} vs {f} {r}", rec.formula, rec.iou)
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} neurons"))
}

fn brute_rect_area(m: &BitMask) -> u32 {
    let (h, w) = (m.height(), m.width());
    let mut pre = vec![vec![0u32; w + 1]; h + 1];
    for r in 0..h {
        for c in 0..w {
            pre[r + 1][c + 1] = pre[r][c + 1] + pre[r + 1][c] - pre[r][c] + m.get(r, c) as u32;
        }
    }
    let mut best = 0;
    for r0 in 0..h {
        for r1 in r0..h {
            for c0 in 0..w {
                for c1 in c0..w {
                    let area = ((r1 - r0 + 1) * (c1 - c0 + 1)) as u32;
                    let ones = pre[r1 + 1][c1 + 1] + pre[r0][c0] - pre[r0][c1 + 1] - pre[r1 + 1][c0];
                    if ones == area {
                        best = best.max(area);
                    }
                }
            }
        }
    }
    best
}

fn geometry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..1000 {
        let (h, w) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        let density = rng.gen_range(0.0..1.0);
        let m = BitMask::from_fn(h, w, |_, _| rng.gen_bool(density));
        let rect = largest_inscribed_rect(&m);
        let want = brute_rect_area(&m);
        ensure(rect.area() == want, || format!("mask {i} ({h}x{w}): {} vs {want}", rect.area()))?;
        if !rect.is_empty() {
            for r in rect.r0..=rect.r1 {
                for c in rect.c0..=rect.c1 {
                    ensure(m.get(r as usize, c as usize), || format!("mask {i}: rectangle covers an unset cell"))?;
                }
            }
        }
    }
    Ok("1000 masks".into())
}

/// Exact SSE of integer-valued groups as a reduced fraction.
fn sse(groups: &[&[i64]]) -> (i128, i128) {
    let mut acc = (0i128, 1i128);
    for g in groups {
        let n = g.len() as i128;
        let s: i128 = g.iter().map(|&v| v as i128).sum();
        let s2: i128 = g.iter().map(|&v| (v as i128) * (v as i128)).sum();
        // Σx² − (Σx)²/n
        let (num, den) = (n * s2 - s * s, n);
        acc = (acc.0 * den + num * acc.1, acc.1 * den);
        let g = gcd(acc.0.abs(), acc.1).max(1);
        acc = (acc.0 / g, acc.1 / g);
    }
    acc
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn less(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

fn best_partition(xs: &[i64], k: usize) -> (i128, i128) {
    fn rec(xs: &[i64], k: usize, groups: &mut Vec<std::ops::Range<usize>>, start: usize, best: &mut Option<(i128, i128)>) {
        if k == 1 {
            groups.push(start..xs.len());
            let slices: Vec<&[i64]> = groups.iter().map(|r| &xs[r.clone()]).collect();
            let v = sse(&slices);
            if best.is_none_or(|b| less(v, b)) {
                *best = Some(v);
            }
            groups.pop();
            return;
        }
        for end in start + 1..=xs.len() - (k - 1) {
            groups.push(start..end);
            rec(xs, k - 1, groups, end, best);
            groups.pop();
        }
    }
    let mut best = None;
    rec(xs, k, &mut Vec::new(), 0, &mut best);
    best.unwrap()
}

fn clustering() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = 0;
    for case in 0..120 {
        let n = rng.gen_range(1..=60);
        let k = rng.gen_range(1..=5);
        let spread = rng.gen_range(3..200);
        let mut xs: Vec<i64> = (0..n).map(|_| rng.gen_range(0..spread)).collect();
        let values: Vec<f32> = xs.iter().map(|&v| v as f32).collect();
        xs.sort();
        let km = kmeans_1d(&values, k, case).unwrap();
        let groups: Vec<&[i64]> = km
            .clusters
            .iter()
            .map(|c| {
                let lo = xs.partition_point(|&v| (v as f32) < c.lo);
                let hi = xs.partition_point(|&v| (v as f32) <= c.hi);
                &xs[lo..hi]
            })
            .collect();
        ensure(groups.iter().map(|g| g.len()).sum::<usize>() == n, || format!("case {case}: clusters do not tile"))?;
        let got = sse(&groups);
        let want = best_partition(&xs, km.clusters.len());
        ensure(got.0 * want.1 == want.0 * got.1, || format!("case {case}: SSE {got:?} vs optimum {want:?}"))?;
        let distinct = {
            let mut d = xs.clone();
            d.dedup();
            d.len()
        };
        ensure(km.clusters.len() == k.min(distinct), || format!("case {case}: {} clusters", km.clusters.len()))?;
        cases += 1;
    }

    let mut ranges = 0;
    for seed in 0..100 {
        let spec = SynthSpec {
            layer_kind: if seed % 2 == 0 {
                dissector::interchange::LayerKind::Relu
            } else {
                dissector::interchange::LayerKind::Signed
            },
            ..SynthSpec::default()
        };
        let b = random_bundle(&spec, 30_000 + seed).unwrap();
        for neuron in 0..b.acts.n_neurons() {
            let ts = threshold_set(&b.acts, neuron, 5, seed).unwrap();
            for w in ts.intervals.windows(2) {
                ensure(w[0].hi < w[1].lo, || format!("seed {seed} neuron {neuron}: overlapping intervals"))?;
            }
            for v in clustered_values(&b.acts, neuron) {
                let hits = ts.intervals.iter().filter(|iv| iv.contains(v as f64)).count();
                ensure(hits == 1, || format!("seed {seed} neuron {neuron}: value {v} in {hits} intervals"))?;
            }
            ranges += ts.intervals.len();
        }
    }
    Ok(format!("{cases} exhaustive cases, {ranges} fixture ranges"))
}

fn planted_recovery() -> Check {
    for seed in 0..50 {
        let p = planted_bundle(&SynthSpec::default(), seed).unwrap();
        let b = &p.bundle;
        let out = clustered_explain(&b.masks, &b.acts, p.neuron, 2, seed, &SearchParams::default()).unwrap();
        let heads: Vec<Option<ConceptId>> = out.records.iter().map(|r| r.formula.as_ref().map(Formula::head)).collect();
        ensure(heads == [Some(p.low), Some(p.high)], || {
            format!("seed {seed}: heads {heads:?}, planted {} and {}", p.low, p.high)
        })?;
    }
    Ok("50/50 seeds".into())
}

fn run(args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dissector"))
        .args(args)
        .env_remove("DISSECTOR_JOBS")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let bundle = d("bundle");
    run(&["gen-synthetic", "--out", &bundle, "--seed", "9", "--neurons", "6"])?;
    let mut compared = 0;
    for jobs in ["1", "4"] {
        let o = |name: &str| d(&format!("{name}.{jobs}"));
        let j = ["--jobs", jobs];
        run(&[&j[..], &["explain", "--bundle", &bundle, "--out", &o("r.jsonl"), "--csv", &o("r.csv")]].concat())?;
        run(&[&j[..], &["cluster", "--bundle", &bundle, "--out", &o("c.jsonl")]].concat())?;
        run(&[&j[..], &["compare-heuristics", "--bundle", &bundle, "--out", &o("h.csv")]].concat())?;
        // Same input for both runs: input paths are part of the recorded config.
        let r = d("r.jsonl.1");
        run(&[&j[..], &["metrics", "--bundle", &bundle, "--results", &r, "--out", &o("m.csv"), "--table", &o("t.csv")]].concat())?;
        run(&[&j[..], &["defaults", "--bundle", &bundle, "--units", "8", "--out", &o("d.json")]].concat())?;
        run(&[&j[..], &["sweep-thresholds", "--bundle", &bundle, "--out", &o("s.csv")]].concat())?;
    }
    for name in ["r.jsonl", "r.csv", "c.jsonl", "h.csv", "m.csv", "t.csv", "d.json", "s.csv"] {
        let a = std::fs::read(Path::new(&d(&format!("{name}.1")))).map_err(|e| e.to_string())?;
        let b = std::fs::read(Path::new(&d(&format!("{name}.4")))).map_err(|e| e.to_string())?;
        ensure(!a.is_empty() && a == b, || format!("{name} differs between --jobs 1 and --jobs 4"))?;
        compared += 1;
    }
    Ok(format!("{compared} files byte-identical"))
}
