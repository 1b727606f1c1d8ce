use super::*;
use crate::synth::{random_bundle, SynthSpec};
use crate::thresholds::threshold_set;

fn c(i: u32) -> ConceptId {
    ConceptId(i)
}

fn store_from(samples: Vec<Vec<BitMask>>, h: usize, w: usize) -> SampleMaskStore {
    let n = samples.first().map_or(0, Vec::len);
    let mut s = SampleMaskStore::new(h, w, n);
    for sample in samples {
        s.push_sample(sample).unwrap();
    }
    s
}

fn mask(w: usize, cells: &[usize]) -> BitMask {
    BitMask::from_fn(1, w, |_, i| cells.contains(&i))
}

#[test]
fn exact_iou_examples() {
    // Sample 0: |∩| = 2, |∪| = 5. Sample 1: |∩| = 1, |∪| = 5.
    let store = store_from(
        vec![vec![mask(8, &[0, 1, 2, 3])], vec![mask(8, &[0, 1, 2])]],
        1,
        8,
    );
    let act = vec![mask(8, &[2, 3, 4]), mask(8, &[2, 5, 6])];
    let probe = Probe::from_masks(&store, act.clone()).unwrap();
    assert_eq!(probe.exact_iou(&Formula::atom(c(1))).unwrap(), Ratio::new(3, 10));

    let same = Probe::from_masks(&store, vec![mask(8, &[0, 1, 2, 3]), mask(8, &[0, 1, 2])]).unwrap();
    assert_eq!(same.exact_iou(&Formula::atom(c(1))).unwrap(), Ratio::ONE);

    let apart = Probe::from_masks(&store, vec![mask(8, &[7]), mask(8, &[7])]).unwrap();
    assert_eq!(apart.exact_iou(&Formula::atom(c(1))).unwrap(), Ratio::ZERO);
}

#[test]
fn netdissect_prefers_lower_id_on_ties() {
    let m = mask(6, &[1, 2]);
    let store = store_from(vec![vec![mask(6, &[4]), m.clone(), m.clone()]], 1, 6);
    let probe = Probe::from_masks(&store, vec![m]).unwrap();
    let nd = netdissect(&probe);
    let best = nd.best.unwrap();
    assert_eq!(best.formula, Formula::atom(c(2)));
    assert_eq!(best.iou, Ratio::ONE);
    assert_eq!(nd.table[2], (c(3), Ratio::ONE));
    assert!(!nd.degenerate);
}

#[test]
fn empty_activation_is_degenerate() {
    let store = store_from(vec![vec![mask(4, &[0])]], 1, 4);
    let probe = Probe::from_masks(&store, vec![BitMask::empty(1, 4)]).unwrap();
    let nd = netdissect(&probe);
    assert!(nd.degenerate);
    assert_eq!(nd.best.unwrap().iou, Ratio::ZERO);
}

#[test]
fn zero_concepts_are_not_candidates() {
    let store = store_from(vec![vec![BitMask::empty(1, 4), mask(4, &[1])]], 1, 4);
    let probe = Probe::from_masks(&store, vec![mask(4, &[1, 2])]).unwrap();
    assert_eq!(probe.universe(), vec![c(2)]);
    let out = beam_search(&probe, &SearchParams::default()).unwrap();
    assert_eq!(out.steps[0].evaluated, 1);
}

fn probes(seed: u64) -> (crate::interchange::Bundle, Vec<Interval>) {
    let b = random_bundle(&SynthSpec::default(), seed).unwrap();
    let ts = threshold_set(&b.acts, 0, 3, seed).unwrap();
    (b, ts.intervals)
}

#[test]
fn heuristics_do_not_change_beams() {
    for seed in 0..6 {
        let (b, intervals) = probes(seed);
        for iv in &intervals {
            let probe = Probe::new(&b.masks, &b.acts, 0, iv).unwrap();
            let base = beam_search(
                &probe,
                &SearchParams {
                    heuristic: Heuristic::None,
                    ..SearchParams::default()
                },
            )
            .unwrap();
            let mut prev = base.visited;
            for h in [Heuristic::Areas, Heuristic::Cfh, Heuristic::Mmesh] {
                let out = beam_search(
                    &probe,
                    &SearchParams {
                        heuristic: h,
                        audit: true,
                        ..SearchParams::default()
                    },
                )
                .unwrap();
                assert_eq!(out.best, base.best, "seed {seed} {h}");
                let beams = |o: &SearchOutcome| o.steps.iter().map(|s| s.beam.clone()).collect::<Vec<_>>();
                assert_eq!(beams(&out), beams(&base));
                assert!(out.visited <= prev, "seed {seed} {h}: {} > {prev}", out.visited);
                prev = out.visited;
                let audit = out.audit.unwrap();
                assert_eq!(audit.violations(), 0);
                assert_eq!(audit.dominance_failures, 0);
            }
        }
    }
}

#[test]
fn exhaustive_visits_every_candidate() {
    let (b, intervals) = probes(11);
    let probe = Probe::new(&b.masks, &b.acts, 0, &intervals[1]).unwrap();
    let out = beam_search(
        &probe,
        &SearchParams {
            heuristic: Heuristic::None,
            ..SearchParams::default()
        },
    )
    .unwrap();
    let n = probe.universe().len() as u64;
    let mut expected = n;
    for w in out.steps.windows(2) {
        expected += w[0].beam.len() as u64 * n * 3 - w[1].dedup_skips;
    }
    assert_eq!(out.visited, expected);
}

#[test]
fn reported_scores_are_reproducible() {
    let (b, intervals) = probes(5);
    for iv in &intervals {
        let probe = Probe::new(&b.masks, &b.acts, 0, iv).unwrap();
        let out = beam_search(&probe, &SearchParams::default()).unwrap();
        for s in out.steps.iter().flat_map(|s| &s.beam) {
            assert_eq!(probe.exact_iou(&s.formula).unwrap(), s.iou);
            assert!(s.iou <= Ratio::ONE);
        }
        let best = out.best.unwrap();
        assert!(out.steps.iter().flat_map(|s| &s.beam).all(|s| s.iou <= best.iou));
    }
}

#[test]
fn length_one_is_netdissect() {
    let (b, intervals) = probes(2);
    let probe = Probe::new(&b.masks, &b.acts, 0, &intervals[2]).unwrap();
    let out = beam_search(
        &probe,
        &SearchParams {
            max_len: 1,
            ..SearchParams::default()
        },
    )
    .unwrap();
    assert_eq!(out.best, netdissect(&probe).best);
    assert_eq!(out.visited, probe.universe().len() as u64);
}

#[test]
fn invalid_params_are_rejected() {
    for p in [
        SearchParams {
            b_rest: 0,
            ..SearchParams::default()
        },
        SearchParams {
            max_len: 7,
            ..SearchParams::default()
        },
    ] {
        assert!(p.validate().is_err());
    }
}
