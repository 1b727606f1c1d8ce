//! Formula search: exhaustive atomic scoring, beam search over left-deep
//! formulas with lazy exact evaluation, and per-cluster explanations.

mod equiv;
mod explain;

pub use equiv::{equivalence_key, formulas_equivalent, EquivKey, MAX_KEY_ATOMS};
pub use explain::{clustered_explain, coex_explain, explain_interval, ClusteredExplanation, ExplanationRecord};

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{BoundSums, Heuristic, LabelStats};
use crate::interchange::{ActivationStore, SampleMaskStore};
use crate::maskops::{
    activation_mask, bounding_box, combined_counts, formula_mask, largest_inscribed_rect, BitMask, ConceptId, Formula,
    Op,
};
use crate::ratio::Ratio;
use crate::thresholds::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    pub heuristic: Heuristic,
    pub b_first: usize,
    pub b_rest: usize,
    pub max_len: usize,
    /// Score every candidate and check all bounds against it. Does not
    /// change the result or the visited count.
    pub audit: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            heuristic: Heuristic::Mmesh,
            b_first: 10,
            b_rest: 5,
            max_len: 3,
            audit: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.b_first == 0 || self.b_rest == 0 {
            return Err(Error::Config("beam widths must be at least 1".into()));
        }
        if self.max_len == 0 || self.max_len > MAX_KEY_ATOMS {
            return Err(Error::Config(format!("max length must be in 1..={MAX_KEY_ATOMS}")));
        }
        Ok(())
    }
}

/// Score-tie order: shorter arity, then canonical term ids, then connective
/// codes. The raw form comes last so the order is total.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TieKey {
    arity: usize,
    terms: Vec<ConceptId>,
    ops: Vec<u8>,
    raw_terms: Vec<ConceptId>,
    raw_ops: Vec<u8>,
}

impl TieKey {
    pub fn of(f: &Formula) -> Self {
        let c = f.canonical();
        TieKey {
            arity: f.arity(),
            terms: c.terms().collect(),
            ops: c.tail().iter().map(|t| t.0.code()).collect(),
            raw_terms: f.terms().collect(),
            raw_ops: f.tail().iter().map(|t| t.0.code()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scored {
    pub formula: Formula,
    pub iou: Ratio,
}

/// Ranking order: higher IoU first, ties by [`TieKey`].
pub fn rank_cmp(a: (&Ratio, &TieKey), b: (&Ratio, &TieKey)) -> Ordering {
    b.0.cmp(a.0).then_with(|| a.1.cmp(b.1))
}

#[derive(Clone, Debug)]
struct Ranked {
    scored: Scored,
    tie: TieKey,
}

impl Ranked {
    fn cmp(&self, other: &Ranked) -> Ordering {
        rank_cmp((&self.scored.iou, &self.tie), (&other.scored.iou, &other.tie))
    }
}

/// Keeps the `cap` best entries, sorted.
fn insert_top(top: &mut Vec<Ranked>, item: Ranked, cap: usize) {
    let pos = top.partition_point(|x| x.cmp(&item) == Ordering::Less);
    if pos < cap {
        top.insert(pos, item);
        top.truncate(cap);
    }
}

/// Activation masks of one (neuron, interval) over the dataset, with the
/// concept store they are probed against.
pub struct Probe<'a> {
    masks: &'a SampleMaskStore,
    act: Vec<BitMask>,
    m_cards: Vec<u32>,
}

impl<'a> Probe<'a> {
    pub fn new(masks: &'a SampleMaskStore, acts: &ActivationStore, neuron: usize, interval: &Interval) -> Result<Self> {
        acts.check_neuron(neuron)?;
        acts.check_pairs_with(masks)?;
        let (h, w) = (masks.grid_height(), masks.grid_width());
        let act = (0..masks.n_samples())
            .map(|x| activation_mask(acts.grid(neuron, x), h, w, interval.lo, interval.hi))
            .collect();
        Self::from_masks(masks, act)
    }

    /// Probe from explicit per-sample activation masks.
    pub fn from_masks(masks: &'a SampleMaskStore, act: Vec<BitMask>) -> Result<Self> {
        if act.len() != masks.n_samples() {
            return Err(Error::Consistency(format!(
                "{} activation masks for {} samples",
                act.len(),
                masks.n_samples()
            )));
        }
        for m in &act {
            if m.height() != masks.grid_height() || m.width() != masks.grid_width() {
                return Err(Error::Consistency(format!(
                    "activation mask {}x{} vs concept grid {}x{}",
                    m.height(),
                    m.width(),
                    masks.grid_height(),
                    masks.grid_width()
                )));
            }
        }
        let m_cards = act.iter().map(BitMask::count).collect();
        Ok(Probe { masks, act, m_cards })
    }

    pub fn masks(&self) -> &SampleMaskStore {
        self.masks
    }

    pub fn activation_masks(&self) -> &[BitMask] {
        &self.act
    }

    pub fn m_cards(&self) -> &[u32] {
        &self.m_cards
    }

    pub fn total_activation(&self) -> u64 {
        self.m_cards.iter().map(|&m| m as u64).sum()
    }

    /// Concepts with a non-empty mask somewhere in the dataset.
    pub fn universe(&self) -> Vec<ConceptId> {
        self.masks.concept_ids().filter(|&c| self.masks.concept_total(c) > 0).collect()
    }

    /// Dataset IoU of a formula.
    pub fn exact_iou(&self, f: &Formula) -> Result<Ratio> {
        let (mut inter, mut union) = (0u64, 0u64);
        for (x, m) in self.act.iter().enumerate() {
            let s = formula_mask(x, f, self.masks)?;
            let i = m.words().iter().zip(s.words()).map(|(a, b)| (a & b).count_ones()).sum::<u32>();
            inter += i as u64;
            union += (self.m_cards[x] + s.count() - i) as u64;
        }
        Ok(Ratio::new(inter, union))
    }

    /// `|M(x) ∩ S(x, c)|` for every sample, and the dataset IoU of `c`.
    fn atomic_scores(&self, c: ConceptId) -> (Vec<u32>, Ratio) {
        let (mut inter, mut union) = (0u64, 0u64);
        let ims = (0..self.act.len())
            .map(|x| {
                let m = self.m_cards[x];
                let (i, card) = match self.masks.mask_opt(x, c) {
                    Some(s) => (
                        self.act[x].words().iter().zip(s.words()).map(|(a, b)| (a & b).count_ones()).sum(),
                        self.masks.meta(x, c).card,
                    ),
                    None => (0, 0),
                };
                inter += i as u64;
                union += (m + card - i) as u64;
                i
            })
            .collect();
        (ims, Ratio::new(inter, union))
    }
}

/// Exact dataset IoU of `f` for one neuron and interval.
pub fn exact_iou(
    f: &Formula,
    neuron: usize,
    interval: &Interval,
    masks: &SampleMaskStore,
    acts: &ActivationStore,
) -> Result<Ratio> {
    Probe::new(masks, acts, neuron, interval)?.exact_iou(f)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDissect {
    /// Best concept under the ranking order; `None` when no concept has any mask.
    pub best: Option<Scored>,
    /// IoU of every catalog concept, in id order.
    pub table: Vec<(ConceptId, Ratio)>,
    /// The activation mask is empty on every sample.
    pub degenerate: bool,
}

/// Exhaustive scoring of single concepts.
pub fn netdissect(probe: &Probe) -> NetDissect {
    let mut table: Vec<(ConceptId, Ratio)> = probe.masks.concept_ids().map(|c| (c, Ratio::ZERO)).collect();
    let mut best: Option<Ranked> = None;
    for c in probe.universe() {
        let (_, iou) = probe.atomic_scores(c);
        table[c.index()].1 = iou;
        let r = Ranked {
            scored: Scored {
                formula: Formula::atom(c),
                iou,
            },
            tie: TieKey::of(&Formula::atom(c)),
        };
        if best.as_ref().is_none_or(|b| r.cmp(b) == Ordering::Less) {
            best = Some(r);
        }
    }
    NetDissect {
        best: best.map(|r| r.scored),
        table,
        degenerate: probe.total_activation() == 0,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub arity: usize,
    /// Candidates produced from the beam, before deduplication.
    pub generated: u64,
    pub dedup_skips: u64,
    /// Exact evaluations in this step.
    pub evaluated: u64,
    pub beam: Vec<Scored>,
}

/// Bound checks over every non-atomic candidate (audit mode only).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub candidates: u64,
    pub mmesh_violations: u64,
    pub cfh_violations: u64,
    pub areas_violations: u64,
    /// Candidates where areas ≥ cfh ≥ mmesh fails.
    pub dominance_failures: u64,
}

impl AuditReport {
    pub fn violations(&self) -> u64 {
        self.mmesh_violations + self.cfh_violations + self.areas_violations
    }

    pub fn merge(&mut self, o: &AuditReport) {
        self.candidates += o.candidates;
        self.mmesh_violations += o.mmesh_violations;
        self.cfh_violations += o.cfh_violations;
        self.areas_violations += o.areas_violations;
        self.dominance_failures += o.dominance_failures;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Option<Scored>,
    /// Step 1 is the atomic beam.
    pub steps: Vec<StepStats>,
    /// Exact IoU evaluations, atomic ones included.
    pub visited: u64,
    pub dedup_skips: u64,
    pub degenerate: bool,
    pub audit: Option<AuditReport>,
}

struct BeamLabel {
    masks: Vec<BitMask>,
    stats: Vec<LabelStats>,
}

struct Candidate {
    formula: Formula,
    label: usize,
    op: Op,
    term: usize,
    bound: Ratio,
    tie: TieKey,
}

/// Beam search from the atomic beam up to `max_len` terms.
pub fn beam_search(probe: &Probe, params: &SearchParams) -> Result<SearchOutcome> {
    params.validate()?;
    let masks = probe.masks;
    let n_samples = masks.n_samples();
    let n_s = masks.grid_cells() as u32;
    let universe = probe.universe();
    let degenerate = probe.total_activation() == 0;

    let mut visited = 0u64;
    let mut seen: HashSet<EquivKey> = HashSet::new();
    let mut best: Option<Ranked> = None;
    let consider_best = |r: &Ranked, best: &mut Option<Ranked>| {
        if best.as_ref().is_none_or(|b| r.cmp(b) == Ordering::Less) {
            *best = Some(r.clone());
        }
    };

    // Step 1: every atomic concept, scored exactly.
    let mut atom_stats: Vec<Vec<LabelStats>> = Vec::with_capacity(universe.len());
    let mut top: Vec<Ranked> = Vec::new();
    for &c in &universe {
        let (ims, iou) = probe.atomic_scores(c);
        visited += 1;
        seen.insert(equivalence_key(&Formula::atom(c)));
        atom_stats.push(
            (0..n_samples)
                .map(|x| {
                    let meta = masks.meta(x, c);
                    LabelStats {
                        m_card: probe.m_cards[x],
                        ims: ims[x],
                        card: meta.card,
                        min_ext: meta.min_ext,
                        max_ext: meta.max_ext,
                    }
                })
                .collect(),
        );
        let f = Formula::atom(c);
        let r = Ranked {
            tie: TieKey::of(&f),
            scored: Scored { formula: f, iou },
        };
        consider_best(&r, &mut best);
        insert_top(&mut top, r, params.b_first);
    }
    let mut steps = vec![StepStats {
        arity: 1,
        generated: universe.len() as u64,
        dedup_skips: 0,
        evaluated: universe.len() as u64,
        beam: top.iter().map(|r| r.scored.clone()).collect(),
    }];
    let mut beam = top;
    let mut audit = params.audit.then(AuditReport::default);
    let mut total_skips = 0u64;

    for arity in 2..=params.max_len {
        if beam.is_empty() {
            break;
        }
        let labels: Vec<BeamLabel> = beam.iter().map(|r| materialize(probe, &r.scored.formula)).collect();
        let mut step = StepStats {
            arity,
            ..StepStats::default()
        };
        let mut cands = Vec::new();
        for (li, r) in beam.iter().enumerate() {
            for op in Op::ALL {
                for (ti, &t) in universe.iter().enumerate() {
                    step.generated += 1;
                    let f = r.scored.formula.extend(op, t);
                    if !seen.insert(equivalence_key(&f)) {
                        step.dedup_skips += 1;
                        continue;
                    }
                    cands.push(Candidate {
                        tie: TieKey::of(&f),
                        formula: f,
                        label: li,
                        op,
                        term: ti,
                        bound: Ratio::ONE,
                    });
                }
            }
        }
        if params.heuristic != Heuristic::None {
            for c in &mut cands {
                c.bound = bound_sums(&labels[c.label], &atom_stats[c.term], c.op, n_s).bound(params.heuristic);
            }
            cands.sort_by(|a, b| b.bound.cmp(&a.bound).then_with(|| a.tie.cmp(&b.tie)));
        }

        let score = |c: &Candidate| {
            let t = universe[c.term];
            let (mut inter, mut union) = (0u64, 0u64);
            for x in 0..n_samples {
                let right = masks.mask_opt(x, t).map(BitMask::words);
                let (i, u) = combined_counts(probe.act[x].words(), labels[c.label].masks[x].words(), c.op, right);
                inter += i as u64;
                union += u as u64;
            }
            Ratio::new(inter, union)
        };

        let mut top: Vec<Ranked> = Vec::new();
        for c in &cands {
            if params.heuristic != Heuristic::None && top.len() == params.b_rest {
                let kth = top.last().expect("full beam");
                match c.bound.cmp(&kth.scored.iou) {
                    Ordering::Less => break,
                    Ordering::Equal if c.tie > kth.tie => break,
                    _ => {}
                }
            }
            let r = Ranked {
                scored: Scored {
                    formula: c.formula.clone(),
                    iou: score(c),
                },
                tie: c.tie.clone(),
            };
            visited += 1;
            step.evaluated += 1;
            consider_best(&r, &mut best);
            insert_top(&mut top, r, params.b_rest);
        }

        if let Some(report) = audit.as_mut() {
            for c in &cands {
                let exact = score(c);
                let sums = bound_sums(&labels[c.label], &atom_stats[c.term], c.op, n_s);
                let (mm, cf, ar) = (sums.mmesh(), sums.cfh(), sums.areas());
                report.candidates += 1;
                report.mmesh_violations += (mm < exact) as u64;
                report.cfh_violations += (cf < exact) as u64;
                report.areas_violations += (ar < exact) as u64;
                report.dominance_failures += !(ar >= cf && cf >= mm) as u64;
            }
        }

        total_skips += step.dedup_skips;
        step.beam = top.iter().map(|r| r.scored.clone()).collect();
        steps.push(step);
        beam = top;
    }

    Ok(SearchOutcome {
        best: best.map(|r| r.scored),
        steps,
        visited,
        dedup_skips: total_skips,
        degenerate,
        audit,
    })
}

fn bound_sums(label: &BeamLabel, atom: &[LabelStats], op: Op, n_s: u32) -> BoundSums {
    let mut sums = BoundSums::default();
    for (l, r) in label.stats.iter().zip(atom) {
        sums.add_sample(op, l, r, n_s);
    }
    sums
}

/// Exact per-sample masks and stats of a beam label; extents are recomputed
/// from the materialized masks.
fn materialize(probe: &Probe, f: &Formula) -> BeamLabel {
    let masks: Vec<BitMask> = (0..probe.act.len())
        .map(|x| formula_mask(x, f, probe.masks).expect("beam terms come from the store"))
        .collect();
    let stats = masks
        .iter()
        .zip(&probe.act)
        .map(|(s, m)| {
            let ims = m.words().iter().zip(s.words()).map(|(a, b)| (a & b).count_ones()).sum();
            LabelStats {
                m_card: m.count(),
                ims,
                card: s.count(),
                min_ext: largest_inscribed_rect(s),
                max_ext: bounding_box(s),
            }
        })
        .collect();
    BeamLabel { masks, stats }
}

#[cfg(test)]
mod tests;
