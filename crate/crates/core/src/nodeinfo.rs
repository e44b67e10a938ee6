//! Per-event constraint information and feasible-extension tests.
//!
//! Each `(node, sid)` pair of the MDD is one event, so information is kept
//! in flat per-event arrays. All values are filled by a backward pass over
//! every sequence: when event `e` is visited, the information of all of its
//! successors is final.
//!
//! Upper-bound constraints on sums, averages and medians are handled by
//! negating the attribute: `stat(a) <= c` iff `stat(-a) >= -c`. Every "oriented"
//! value below lives in that negated domain when the direction is `<=`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::constraints::{AttrKind, Constraint, Direction, ResolvedSpec};
use crate::mdd::{EventId, Mdd};
use crate::seqdb::{AttributedDatabase, Event, Sid};

/// Minimum and maximum attribute value over everything reachable from an
/// event, the event itself included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpanInfo {
    pub beta1: i64,
    pub beta2: i64,
}

/// Maximum oriented path sum starting at the event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SumInfo {
    pub beta: i64,
}

/// Sum and count of the path maximizing `beta1 - c * beta2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AvgInfo {
    pub beta1: i64,
    pub beta2: i64,
}

/// `beta1`: count of values `>= c` minus count of values `< c`;
/// `beta2`: largest value `< c` (or the sequence's low sentinel);
/// `beta3`: smallest value `>= c` (or the high sentinel).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MedInfo {
    pub beta1: i64,
    pub beta2: i64,
    pub beta3: i64,
}

impl MedInfo {
    pub fn fold(self, v: i64, c: i64) -> Self {
        if v >= c {
            Self { beta1: self.beta1 + 1, beta3: self.beta3.min(v), ..self }
        } else {
            Self { beta1: self.beta1 - 1, beta2: self.beta2.max(v), ..self }
        }
    }

    fn median_at_least(&self, c: i64) -> bool {
        self.beta2 + self.beta3 >= 2 * c
    }

    /// Candidate ordering used when only one triple is kept: larger count
    /// difference first, then a median at or above `c`, then the larger
    /// `beta2` (median above `c`) or larger `beta3` (median below `c`).
    fn rank(&self, other: &Self, c: i64) -> Ordering {
        self.beta1.cmp(&other.beta1).then_with(|| {
            let (a, b) = (self.median_at_least(c), other.median_at_least(c));
            a.cmp(&b).then_with(|| if a { self.beta2.cmp(&other.beta2) } else { self.beta3.cmp(&other.beta3) })
        })
    }

    fn dominates(&self, other: &Self) -> bool {
        self.beta1 >= other.beta1 && self.beta2 >= other.beta2 && self.beta3 >= other.beta3
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MedianMode {
    /// One triple per event, selected by the dominance ordering.
    #[default]
    Single,
    /// Every mutually non-dominated triple per event.
    Pareto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinMax {
    pub min: i64,
    pub max: i64,
}

impl MinMax {
    pub const EMPTY: MinMax = MinMax { min: i64::MAX, max: i64::MIN };

    fn with(self, v: i64) -> Self {
        Self { min: self.min.min(v), max: self.max.max(v) }
    }
}

/// Whether a prefix with statistics `prefix` (excluding the current event,
/// whose value is `current`) can still satisfy `span <dir> c`.
pub fn span_extendable(prefix: MinMax, current: i64, info: SpanInfo, direction: Direction, c: i64) -> bool {
    match direction {
        Direction::AtLeast => prefix.max.max(info.beta2) - prefix.min.min(info.beta1) >= c,
        Direction::AtMost => {
            let full = prefix.with(current);
            full.max - full.min <= c
        }
    }
}

pub fn max_extendable(prefix: MinMax, current: i64, info: SpanInfo, direction: Direction, c: i64) -> bool {
    match direction {
        Direction::AtLeast => prefix.max.max(info.beta2) >= c,
        Direction::AtMost => prefix.max.max(current) <= c,
    }
}

pub fn min_extendable(prefix: MinMax, current: i64, info: SpanInfo, direction: Direction, c: i64) -> bool {
    match direction {
        Direction::AtLeast => prefix.min.min(current) >= c,
        Direction::AtMost => prefix.min.min(info.beta1) <= c,
    }
}

/// Oriented: `prefix_sum + beta >= c`.
pub fn sum_extendable(prefix_sum: i64, info: SumInfo, c: i64) -> bool {
    prefix_sum + info.beta >= c
}

/// Oriented: `(prefix_sum + beta1) >= c * (prefix_count + beta2)`.
pub fn avg_extendable(prefix_sum: i64, prefix_count: i64, info: AvgInfo, c: i64) -> bool {
    (prefix_sum + info.beta1) as i128 >= c as i128 * (prefix_count + info.beta2) as i128
}

/// Oriented: the median test on the prefix triple combined with the
/// information of the current event.
pub fn med_extendable(prefix: MedInfo, info: MedInfo, c: i64) -> bool {
    let d = prefix.beta1 + info.beta1;
    d > 0 || (d == 0 && prefix.beta3.min(info.beta3) + prefix.beta2.max(info.beta2) >= 2 * c)
}

pub fn length_extendable(prefix_len: i64, longest: u32, c: i64) -> bool {
    prefix_len + longest as i64 >= c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Check {
    LengthAtMost { c: i64 },
    LengthAtLeast { c: i64 },
    Span { slot: usize, attr: usize, direction: Direction, c: i64 },
    Max { slot: usize, attr: usize, direction: Direction, c: i64 },
    Min { slot: usize, attr: usize, direction: Direction, c: i64 },
    Sum { slot: usize, c: i64 },
    Avg { slot: usize, avg: usize, c: i64 },
    Med { slot: usize, attr: usize, sign: i64, c: i64 },
}

impl Check {
    /// Anti-monotone checks only need the occurrence itself.
    fn is_anti_monotone(&self) -> bool {
        match self {
            Check::LengthAtMost { .. } => true,
            Check::Span { direction, .. } | Check::Max { direction, .. } => *direction == Direction::AtMost,
            Check::Min { direction, .. } => *direction == Direction::AtLeast,
            _ => false,
        }
    }
}

/// Compiled form of the constraints that are not enforced by MDD arcs,
/// together with the layout of the running statistics of an occurrence.
///
/// A statistics record is a flat `[i64]`: one `(min, max)` pair per
/// attribute used by span/max/min, one oriented sum per `(attribute,
/// direction)` used by sum/avg, and one `(beta1, beta2, beta3)` triple per
/// median constraint.
#[derive(Clone, Debug)]
pub struct ConstraintPlan {
    checks: Vec<(usize, Check)>,
    minmax_attrs: Vec<usize>,
    sum_slots: Vec<(usize, i64)>,
    med_slots: Vec<(usize, i64, i64)>,
    n_avg: usize,
    /// Oriented `(min - 1, max + 1)` per sequence and median slot, flattened
    /// sid-major.
    med_sentinels: Vec<(i64, i64)>,
    needs_longest: bool,
}

impl ConstraintPlan {
    pub fn new(specs: &[ResolvedSpec], db: &AttributedDatabase) -> Self {
        let mut plan = Self {
            checks: Vec::new(),
            minmax_attrs: Vec::new(),
            sum_slots: Vec::new(),
            med_slots: Vec::new(),
            n_avg: 0,
            med_sentinels: Vec::new(),
            needs_longest: false,
        };
        fn slot_of<T: PartialEq>(slots: &mut Vec<T>, key: T) -> usize {
            slots.iter().position(|k| *k == key).unwrap_or_else(|| {
                slots.push(key);
                slots.len() - 1
            })
        }
        for (idx, spec) in specs.iter().enumerate() {
            let check = match spec {
                Constraint::Length { direction: Direction::AtMost, c } => Check::LengthAtMost { c: *c },
                Constraint::Length { direction: Direction::AtLeast, c } => {
                    plan.needs_longest = true;
                    Check::LengthAtLeast { c: *c }
                }
                Constraint::ItemSet { .. } => continue,
                Constraint::Attr { kind, attribute: a, direction: d, c } => {
                    let (a, d, c) = (*a, *d, *c);
                    match kind {
                        AttrKind::Gap => continue,
                        AttrKind::Span => {
                            Check::Span { slot: slot_of(&mut plan.minmax_attrs, a), attr: a, direction: d, c }
                        }
                        AttrKind::Max => {
                            Check::Max { slot: slot_of(&mut plan.minmax_attrs, a), attr: a, direction: d, c }
                        }
                        AttrKind::Min => {
                            Check::Min { slot: slot_of(&mut plan.minmax_attrs, a), attr: a, direction: d, c }
                        }
                        AttrKind::Sum => {
                            Check::Sum { slot: slot_of(&mut plan.sum_slots, (a, d.sign())), c: d.sign() * c }
                        }
                        AttrKind::Avg => {
                            plan.n_avg += 1;
                            Check::Avg {
                                slot: slot_of(&mut plan.sum_slots, (a, d.sign())),
                                avg: plan.n_avg - 1,
                                c: d.sign() * c,
                            }
                        }
                        AttrKind::Med => {
                            let key = (a, d.sign(), d.sign() * c);
                            Check::Med {
                                slot: slot_of(&mut plan.med_slots, key),
                                attr: a,
                                sign: d.sign(),
                                c: d.sign() * c,
                            }
                        }
                    }
                }
            };
            plan.checks.push((idx, check));
        }
        // cheapest first: anti-monotone checks read only the occurrence
        plan.checks.sort_by_key(|(idx, c)| (!c.is_anti_monotone(), *idx));
        for seq in db.sequences() {
            for &(a, sign, _) in &plan.med_slots {
                let vals = seq.events.iter().map(|e| sign * e.attrs[a]);
                let lo = vals.clone().min().unwrap_or(0);
                let hi = vals.max().unwrap_or(0);
                plan.med_sentinels.push((lo - 1, hi + 1));
            }
        }
        plan
    }

    fn sentinels(&self, sid: Sid) -> &[(i64, i64)] {
        let m = self.med_slots.len();
        &self.med_sentinels[(sid as usize - 1) * m..sid as usize * m]
    }

    pub fn width(&self) -> usize {
        2 * self.minmax_attrs.len() + self.sum_slots.len() + 3 * self.med_slots.len()
    }

    fn sum_base(&self) -> usize {
        2 * self.minmax_attrs.len()
    }

    fn med_base(&self) -> usize {
        self.sum_base() + self.sum_slots.len()
    }

    pub fn has_checks(&self) -> bool {
        !self.checks.is_empty()
    }

    pub fn has_info_checks(&self) -> bool {
        self.checks.iter().any(|(_, c)| !c.is_anti_monotone())
    }

    /// Statistics of the empty occurrence in sequence `sid`.
    pub fn empty_stats(&self, sid: Sid, out: &mut Vec<i64>) {
        for _ in &self.minmax_attrs {
            out.extend_from_slice(&[i64::MAX, i64::MIN]);
        }
        out.extend(self.sum_slots.iter().map(|_| 0));
        for &(lo, hi) in self.sentinels(sid) {
            out.extend_from_slice(&[0, lo, hi]);
        }
    }

    /// Appends the statistics of `stats` extended by an event with
    /// attribute values `attrs`.
    pub fn fold_into(&self, stats: &[i64], attrs: &[i64], out: &mut Vec<i64>) {
        for (k, &a) in self.minmax_attrs.iter().enumerate() {
            let v = attrs[a];
            out.push(stats[2 * k].min(v));
            out.push(stats[2 * k + 1].max(v));
        }
        let sb = self.sum_base();
        for (k, &(a, sign)) in self.sum_slots.iter().enumerate() {
            out.push(stats[sb + k] + sign * attrs[a]);
        }
        let mb = self.med_base();
        for (k, &(a, sign, c)) in self.med_slots.iter().enumerate() {
            let t = med_at(stats, mb + 3 * k).fold(sign * attrs[a], c);
            out.extend_from_slice(&[t.beta1, t.beta2, t.beta3]);
        }
    }

    pub fn stats_of(&self, sid: Sid, occ: &[&Event]) -> PatternStats {
        let mut cur = Vec::with_capacity(self.width());
        self.empty_stats(sid, &mut cur);
        let mut next = Vec::with_capacity(self.width());
        for ev in occ {
            next.clear();
            self.fold_into(&cur, &ev.attrs, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        PatternStats { values: cur, len: occ.len() }
    }

    /// Exact test of every compiled constraint on an occurrence of length
    /// `len` whose full statistics are `stats`.
    pub fn satisfied(&self, stats: &[i64], len: usize, counter: &mut u64) -> bool {
        let len = len as i64;
        let sb = self.sum_base();
        let mb = self.med_base();
        self.checks.iter().all(|(_, check)| {
            *counter += 1;
            match *check {
                Check::LengthAtMost { c } => len <= c,
                Check::LengthAtLeast { c } => len >= c,
                Check::Span { slot, direction, c, .. } => direction.holds(stats[2 * slot + 1] - stats[2 * slot], c),
                Check::Max { slot, direction, c, .. } => direction.holds(stats[2 * slot + 1], c),
                Check::Min { slot, direction, c, .. } => direction.holds(stats[2 * slot], c),
                Check::Sum { slot, c } => stats[sb + slot] >= c,
                Check::Avg { slot, c, .. } => stats[sb + slot] as i128 >= c as i128 * len as i128,
                Check::Med { slot, c, .. } => {
                    let t = med_at(stats, mb + 3 * slot);
                    t.beta1 > 0 || (t.beta1 == 0 && t.median_at_least(c))
                }
            }
        })
    }

    /// Anti-monotone checks on the prefix `prefix` extended by `attrs`,
    /// giving an occurrence of length `len`.
    pub fn anti_monotone_ok(&self, prefix: &[i64], attrs: &[i64], len: usize, counter: &mut u64) -> bool {
        for (_, check) in &self.checks {
            if !check.is_anti_monotone() {
                // sorted: anti-monotone checks come first
                break;
            }
            *counter += 1;
            if !self.am_check(check, prefix, attrs, len) {
                return false;
            }
        }
        true
    }

    fn am_check(&self, check: &Check, prefix: &[i64], attrs: &[i64], len: usize) -> bool {
        let mm = |slot: usize| MinMax { min: prefix[2 * slot], max: prefix[2 * slot + 1] };
        let unused = SpanInfo { beta1: 0, beta2: 0 };
        match *check {
            Check::LengthAtMost { c } => len as i64 <= c,
            Check::Span { slot, attr, direction, c } => span_extendable(mm(slot), attrs[attr], unused, direction, c),
            Check::Max { slot, attr, direction, c } => max_extendable(mm(slot), attrs[attr], unused, direction, c),
            Check::Min { slot, attr, direction, c } => min_extendable(mm(slot), attrs[attr], unused, direction, c),
            _ => true,
        }
    }
}

fn med_at(stats: &[i64], off: usize) -> MedInfo {
    MedInfo { beta1: stats[off], beta2: stats[off + 1], beta3: stats[off + 2] }
}

/// Running statistics of one occurrence, laid out by a [`ConstraintPlan`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternStats {
    pub values: Vec<i64>,
    pub len: usize,
}

/// How one compiled constraint is tested against the information store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InfoValue {
    Span(SpanInfo),
    Sum(SumInfo),
    Avg(AvgInfo),
    Med(Vec<MedInfo>),
    Longest(u32),
    None,
}

#[derive(Clone, Debug)]
pub struct InfoStore {
    plan: ConstraintPlan,
    mode: MedianMode,
    span: Vec<Vec<SpanInfo>>,
    sum: Vec<Vec<SumInfo>>,
    avg: Vec<Vec<AvgInfo>>,
    /// Single mode: one triple per event. Pareto mode: `med_offsets` slices
    /// `med` per event.
    med: Vec<Vec<MedInfo>>,
    med_offsets: Vec<Vec<u32>>,
    longest: Vec<u32>,
}

/// Fills constraint information for every event of `mdd` by a backward pass
/// over each sequence.
pub fn propagate(mdd: &Mdd, plan: &ConstraintPlan, mode: MedianMode) -> InfoStore {
    let n = mdd.n_events();
    let avg_specs: Vec<(usize, i64)> = plan
        .checks
        .iter()
        .filter_map(|(_, c)| match *c {
            Check::Avg { slot, c, .. } => Some((slot, c)),
            _ => None,
        })
        .collect();
    // slots read only by average checks need no path sums
    let sum_needed: Vec<usize> = (0..plan.sum_slots.len())
        .filter(|&k| plan.checks.iter().any(|(_, c)| matches!(*c, Check::Sum { slot, .. } if slot == k)))
        .collect();
    let single = mode == MedianMode::Single;
    let mut store = InfoStore {
        plan: plan.clone(),
        mode,
        span: vec![vec![SpanInfo { beta1: 0, beta2: 0 }; n]; plan.minmax_attrs.len()],
        sum: (0..plan.sum_slots.len())
            .map(|k| if sum_needed.contains(&k) { vec![SumInfo { beta: 0 }; n] } else { Vec::new() })
            .collect(),
        avg: vec![vec![AvgInfo { beta1: 0, beta2: 1 }; n]; plan.n_avg],
        med: vec![
            if single { vec![MedInfo { beta1: 0, beta2: 0, beta3: 0 }; n] } else { Vec::new() };
            plan.med_slots.len()
        ],
        med_offsets: vec![Vec::new(); plan.med_slots.len()],
        longest: if plan.needs_longest { vec![1; n] } else { Vec::new() },
    };

    for_each_backward(mdd, |e| {
        let ei = e as usize;
        let succ = mdd.successors(e);
        for (k, &a) in plan.minmax_attrs.iter().enumerate() {
            let col = &mut store.span[k];
            let v = mdd.attr(e, a);
            let mut info = SpanInfo { beta1: v, beta2: v };
            for &s in succ {
                let child = col[s as usize];
                info.beta1 = info.beta1.min(child.beta1);
                info.beta2 = info.beta2.max(child.beta2);
            }
            col[ei] = info;
        }
        for &k in &sum_needed {
            let (a, sign) = plan.sum_slots[k];
            let col = &mut store.sum[k];
            let best = succ.iter().map(|&s| col[s as usize].beta).max().unwrap_or(0);
            col[ei] = SumInfo { beta: sign * mdd.attr(e, a) + best.max(0) };
        }
        for (avg, &(slot, c)) in avg_specs.iter().enumerate() {
            let (a, sign) = plan.sum_slots[slot];
            let col = &mut store.avg[avg];
            let v = sign * mdd.attr(e, a);
            let score = |i: &AvgInfo| i.beta1 as i128 - c as i128 * i.beta2 as i128;
            let mut best = AvgInfo { beta1: v, beta2: 1 };
            for &s in succ {
                let child = col[s as usize];
                let cand = AvgInfo { beta1: v + child.beta1, beta2: 1 + child.beta2 };
                if score(&cand) > score(&best) {
                    best = cand;
                }
            }
            col[ei] = best;
        }
        if single {
            for (k, &(a, sign, c)) in plan.med_slots.iter().enumerate() {
                let col = &mut store.med[k];
                let v = sign * mdd.attr(e, a);
                let (lo, hi) = plan.sentinels(mdd.sid(e))[k];
                let mut best = MedInfo { beta1: 0, beta2: lo, beta3: hi }.fold(v, c);
                for &s in succ {
                    let cand = col[s as usize].fold(v, c);
                    if cand.rank(&best, c) == Ordering::Greater {
                        best = cand;
                    }
                }
                col[ei] = best;
            }
        }
        if plan.needs_longest {
            let col = &mut store.longest;
            col[ei] = 1 + succ.iter().map(|&s| col[s as usize]).max().unwrap_or(0);
        }
    });

    if !single {
        for (k, &(a, sign, c)) in plan.med_slots.iter().enumerate() {
            let mut sets: Vec<Vec<MedInfo>> = vec![Vec::new(); n];
            for_each_backward(mdd, |e| {
                let v = sign * mdd.attr(e, a);
                let (lo, hi) = plan.sentinels(mdd.sid(e))[k];
                let mut cands = vec![MedInfo { beta1: 0, beta2: lo, beta3: hi }.fold(v, c)];
                for &s in mdd.successors(e) {
                    cands.extend(sets[s as usize].iter().map(|t| t.fold(v, c)));
                }
                sets[e as usize] = pareto_front(cands);
            });
            let mut offsets = Vec::with_capacity(n + 1);
            let mut flat = Vec::new();
            offsets.push(0);
            for s in sets {
                flat.extend(s);
                offsets.push(flat.len() as u32);
            }
            store.med[k] = flat;
            store.med_offsets[k] = offsets;
        }
    }
    store
}

fn for_each_backward(mdd: &Mdd, mut f: impl FnMut(EventId)) {
    for sid in 1..=mdd.n_sequences() as Sid {
        for e in mdd.sequence_events(sid).rev() {
            f(e);
        }
    }
}

fn pareto_front(mut cands: Vec<MedInfo>) -> Vec<MedInfo> {
    cands.sort_unstable_by(|a, b| b.cmp(a));
    cands.dedup();
    let mut front: Vec<MedInfo> = Vec::new();
    for c in cands {
        if !front.iter().any(|f| f.dominates(&c)) {
            front.push(c);
        }
    }
    front
}

impl InfoStore {
    pub fn plan(&self) -> &ConstraintPlan {
        &self.plan
    }

    pub fn mode(&self) -> MedianMode {
        self.mode
    }

    /// Whether the occurrence `prefix + e` (length `len`) passes every
    /// feasible-extension test. `prefix` excludes `e`.
    pub fn extendable(&self, mdd: &Mdd, prefix: &[i64], e: EventId, len: usize, counter: &mut u64) -> bool {
        let plan = &self.plan;
        let attrs = mdd.label_attrs(e);
        let sb = plan.sum_base();
        let mb = plan.med_base();
        let ei = e as usize;
        for (_, check) in &plan.checks {
            *counter += 1;
            let mm = |slot: usize| MinMax { min: prefix[2 * slot], max: prefix[2 * slot + 1] };
            let ok = match *check {
                Check::LengthAtMost { c } => len as i64 <= c,
                Check::LengthAtLeast { c } => length_extendable(len as i64 - 1, self.longest[ei], c),
                Check::Span { slot, attr, direction, c } => {
                    span_extendable(mm(slot), attrs[attr], self.span[slot][ei], direction, c)
                }
                Check::Max { slot, attr, direction, c } => {
                    max_extendable(mm(slot), attrs[attr], self.span[slot][ei], direction, c)
                }
                Check::Min { slot, attr, direction, c } => {
                    min_extendable(mm(slot), attrs[attr], self.span[slot][ei], direction, c)
                }
                Check::Sum { slot, c } => sum_extendable(prefix[sb + slot], self.sum[slot][ei], c),
                Check::Avg { slot, avg, c } => avg_extendable(prefix[sb + slot], len as i64 - 1, self.avg[avg][ei], c),
                Check::Med { slot, c, .. } => {
                    let p = med_at(prefix, mb + 3 * slot);
                    self.med_infos(slot, e).iter().any(|&info| med_extendable(p, info, c))
                }
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub fn span_info(&self, attr: usize, e: EventId) -> Option<SpanInfo> {
        let slot = self.plan.minmax_attrs.iter().position(|&a| a == attr)?;
        Some(self.span[slot][e as usize])
    }

    /// Oriented sum information for `(attr, direction)`.
    pub fn sum_info(&self, attr: usize, direction: Direction, e: EventId) -> Option<SumInfo> {
        let slot = self.plan.sum_slots.iter().position(|&k| k == (attr, direction.sign()))?;
        self.sum[slot].get(e as usize).copied()
    }

    pub fn longest(&self, e: EventId) -> Option<u32> {
        self.longest.get(e as usize).copied()
    }

    fn med_infos(&self, slot: usize, e: EventId) -> &[MedInfo] {
        let ei = e as usize;
        match self.mode {
            MedianMode::Single => std::slice::from_ref(&self.med[slot][ei]),
            MedianMode::Pareto => {
                let off = &self.med_offsets[slot];
                &self.med[slot][off[ei] as usize..off[ei + 1] as usize]
            }
        }
    }

    /// Information consulted for the constraint at index `spec_idx` of the
    /// spec list the plan was built from.
    pub fn info_for(&self, spec_idx: usize, e: EventId) -> InfoValue {
        let Some((_, check)) = self.plan.checks.iter().find(|(i, _)| *i == spec_idx) else {
            return InfoValue::None;
        };
        let ei = e as usize;
        match *check {
            Check::LengthAtLeast { .. } => InfoValue::Longest(self.longest[ei]),
            Check::Span { slot, .. } | Check::Max { slot, .. } | Check::Min { slot, .. } => {
                InfoValue::Span(self.span[slot][ei])
            }
            Check::Sum { slot, .. } => InfoValue::Sum(self.sum[slot][ei]),
            Check::Avg { avg, .. } => InfoValue::Avg(self.avg[avg][ei]),
            Check::Med { slot, .. } => InfoValue::Med(self.med_infos(slot, e).to_vec()),
            Check::LengthAtMost { .. } => InfoValue::None,
        }
    }

    /// Oriented median threshold of the constraint at `spec_idx`, for tests
    /// that compare against enumerated extensions.
    pub fn oriented_threshold(&self, spec_idx: usize) -> Option<i64> {
        self.plan.checks.iter().find(|(i, _)| *i == spec_idx).and_then(|(_, c)| match *c {
            Check::Sum { c, .. } | Check::Avg { c, .. } | Check::Med { c, .. } => Some(c),
            _ => None,
        })
    }

    /// Tab-separated dump: `sid pos constraint beta...`.
    pub fn dump_tsv(&self, mdd: &Mdd) -> String {
        let mut out = String::from("sid\tpos\tconstraint\tbeta\n");
        let mut idxs: Vec<usize> = self.plan.checks.iter().map(|(i, _)| *i).collect();
        idxs.sort_unstable();
        for e in 0..mdd.n_events() as EventId {
            for &i in &idxs {
                let betas = match self.info_for(i, e) {
                    InfoValue::Span(s) => format!("{}\t{}", s.beta1, s.beta2),
                    InfoValue::Sum(s) => s.beta.to_string(),
                    InfoValue::Avg(a) => format!("{}\t{}", a.beta1, a.beta2),
                    InfoValue::Med(ts) => ts
                        .iter()
                        .map(|t| format!("{}\t{}\t{}", t.beta1, t.beta2, t.beta3))
                        .collect::<Vec<_>>()
                        .join("\t"),
                    InfoValue::Longest(l) => l.to_string(),
                    InfoValue::None => continue,
                };
                let _ = writeln!(out, "{}\t{}\t{i}\t{betas}", mdd.sid(e), mdd.pos(e));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{resolve_all, ConstraintSpec};
    use crate::mdd::build_mdd;
    use crate::seqdb::sample_database;

    fn setup(texts: &[&str], mode: MedianMode) -> (AttributedDatabase, Mdd, InfoStore) {
        let db = sample_database();
        let specs: Vec<ConstraintSpec> = texts.iter().map(|t| t.parse().unwrap()).collect();
        let resolved = resolve_all(&specs, &db).unwrap();
        let mdd = build_mdd(&db, &resolved);
        let plan = ConstraintPlan::new(&resolved, &db);
        let store = propagate(&mdd, &plan, mode);
        (db, mdd, store)
    }

    fn s2_first(mdd: &Mdd) -> EventId {
        mdd.sequence_events(2).start
    }

    #[test]
    fn span_info_on_s2() {
        let (_, mdd, store) = setup(&["span(time)>=5"], MedianMode::Single);
        let e = s2_first(&mdd);
        assert_eq!(store.span_info(0, e), Some(SpanInfo { beta1: 3, beta2: 9 }));
        let mut empty = Vec::new();
        store.plan().empty_stats(2, &mut empty);
        let mut n = 0;
        assert!(store.extendable(&mdd, &empty, e, 1, &mut n));
        let info = store.span_info(0, e).unwrap();
        assert!(span_extendable(MinMax::EMPTY, 3, info, Direction::AtLeast, 5));
        assert!(!span_extendable(MinMax::EMPTY, 3, info, Direction::AtLeast, 7));
        assert!(span_extendable(MinMax { min: 3, max: 9 }, 9, SpanInfo { beta1: 9, beta2: 9 }, Direction::AtLeast, 0));
    }

    #[test]
    fn sum_info_on_s2() {
        let (_, mdd, store) = setup(&["sum(price)>=7"], MedianMode::Single);
        let e = s2_first(&mdd);
        let info = store.sum_info(1, Direction::AtLeast, e).unwrap();
        assert_eq!(info.beta, 7);
        assert!(sum_extendable(0, info, 7));
        assert!(!sum_extendable(0, info, 8));
        assert!(sum_extendable(0, SumInfo { beta: 0 }, 0));
    }

    #[test]
    fn avg_info_on_s2() {
        let (_, mdd, store) = setup(&["avg(price)>=3"], MedianMode::Single);
        let e = s2_first(&mdd);
        let InfoValue::Avg(info) = store.info_for(0, e) else { panic!() };
        assert_eq!(info.beta1 - 3 * info.beta2, 0);
        assert!(avg_extendable(0, 0, info, 3));

        let (_, mdd, store) = setup(&["avg(price)>=4"], MedianMode::Single);
        let InfoValue::Avg(info) = store.info_for(0, s2_first(&mdd)) else { panic!() };
        assert_eq!(info.beta1 - 4 * info.beta2, -1);
        assert!(!avg_extendable(0, 0, info, 4));

        // every value equal to c passes both directions
        assert!(avg_extendable(10, 2, AvgInfo { beta1: 5, beta2: 1 }, 5));
        assert!(avg_extendable(-10, 2, AvgInfo { beta1: -5, beta2: 1 }, -5));
    }

    #[test]
    fn median_on_s2() {
        for mode in [MedianMode::Single, MedianMode::Pareto] {
            let (_, mdd, store) = setup(&["med(price)>=3"], mode);
            let mut counter = 0;
            let mut empty = Vec::new();
            store.plan().empty_stats(2, &mut empty);
            let e = s2_first(&mdd);
            assert!(store.extendable(&mdd, &empty, e, 1, &mut counter));
            // A at position 2 (price 1): extensions {1}, {1,3}
            assert!(!store.extendable(&mdd, &empty, e + 1, 1, &mut counter));
        }
        // a lone value equal to c
        let single = MedInfo { beta1: 0, beta2: -1, beta3: 100 }.fold(5, 5);
        assert!(med_extendable(MedInfo { beta1: 0, beta2: -1, beta3: 100 }, single, 5));
    }

    #[test]
    fn median_fold() {
        let t = MedInfo { beta1: 0, beta2: 0, beta3: 10 };
        assert_eq!(t.fold(7, 5), MedInfo { beta1: 1, beta2: 0, beta3: 7 });
        assert_eq!(t.fold(3, 5), MedInfo { beta1: -1, beta2: 3, beta3: 10 });
    }

    #[test]
    fn pareto_front_keeps_incomparable() {
        let a = MedInfo { beta1: 0, beta2: 9, beta3: 10 };
        let b = MedInfo { beta1: 0, beta2: 1, beta3: 30 };
        let c = MedInfo { beta1: 0, beta2: 1, beta3: 10 };
        let front = pareto_front(vec![a, b, c, a]);
        assert_eq!(front.len(), 2);
        assert!(front.contains(&a) && front.contains(&b));
    }

    #[test]
    fn stats_match_occurrence_evaluation() {
        let db = sample_database();
        let specs: Vec<ConstraintSpec> = ["span(time)<=5", "avg(price)>=2", "med(price)<=2", "sum(time)>=10"]
            .iter()
            .map(|t| t.parse().unwrap())
            .collect();
        let resolved = resolve_all(&specs, &db).unwrap();
        let plan = ConstraintPlan::new(&resolved, &db);
        let s3: Vec<&Event> = db.sequence(3).unwrap().events.iter().collect();
        let stats = plan.stats_of(3, &s3);
        let mut n = 0;
        let expected = crate::constraints::check_all(&s3, &resolved).unwrap();
        assert_eq!(plan.satisfied(&stats.values, stats.len, &mut n), expected);
    }

    #[test]
    fn dump_has_rows() {
        let (_, mdd, store) = setup(&["span(time)>=5", "med(price)<=2"], MedianMode::Single);
        let dump = store.dump_tsv(&mdd);
        assert_eq!(dump.lines().count(), 1 + 2 * mdd.n_events());
        assert!(dump.lines().nth(1).unwrap().starts_with("1\t1\t0\t1\t3"));
    }
}
