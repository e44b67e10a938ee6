//! Prefix-projection mining over the MDD.
//!
//! A projected database holds, per sequence, every live occurrence end of
//! the current pattern together with the statistics of the occurrence minus
//! its last event. New occurrences are produced by following the successor
//! arcs of each end; an occurrence is kept only while every
//! feasible-extension test passes. A pattern is emitted when at least
//! `theta` sequences own an occurrence that satisfies every constraint.

use std::collections::HashMap;
use std::ops::AddAssign;
use std::time::{Duration, Instant};

use crate::constraints::{resolve_all, ConstraintSpec, ResolvedSpec};
use crate::error::{Error, Result};
use crate::mdd::{build_mdd, EventId, Mdd};
use crate::nodeinfo::{propagate, ConstraintPlan, InfoStore, MedianMode};
use crate::pattern::PatternSet;
use crate::seqdb::{AttributedDatabase, Item, Sid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MineOptions {
    pub prop5: bool,
    pub median_mode: MedianMode,
    /// Longest pattern to enumerate; `None` means the longest sequence.
    pub max_len: Option<usize>,
    /// Mine the subtrees of frequent items concurrently.
    pub parallel: bool,
}

impl Default for MineOptions {
    fn default() -> Self {
        Self { prop5: true, median_mode: MedianMode::Single, max_len: None, parallel: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Projected sequences scanned while looking for extensions.
    pub sequences_scanned: u64,
    /// Scans cut short because no candidate could still become frequent.
    pub scans_aborted: u64,
    /// Successor events examined.
    pub arcs_followed: u64,
    /// Occurrence entries stored in projected databases.
    pub entries_created: u64,
    /// Individual constraint evaluations during mining.
    pub constraint_checks: u64,
    /// Patterns whose projected database was expanded.
    pub nodes_visited: u64,
    pub patterns_emitted: u64,
    /// Largest number of entries held on the search stack at once.
    pub peak_entries: u64,
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Self) {
        self.sequences_scanned += o.sequences_scanned;
        self.scans_aborted += o.scans_aborted;
        self.arcs_followed += o.arcs_followed;
        self.entries_created += o.entries_created;
        self.constraint_checks += o.constraint_checks;
        self.nodes_visited += o.nodes_visited;
        self.patterns_emitted += o.patterns_emitted;
        self.peak_entries = self.peak_entries.max(o.peak_entries);
    }
}

/// Occurrence ends of one pattern, grouped by ascending sid.
#[derive(Clone, Debug, Default)]
pub struct ProjectedDb {
    stride: usize,
    events: Vec<EventId>,
    sids: Vec<Sid>,
    stats: Vec<i64>,
    support: usize,
}

impl ProjectedDb {
    fn with_stride(stride: usize) -> Self {
        Self { stride, ..Self::default() }
    }

    fn push(&mut self, sid: Sid, event: EventId, stats: &[i64]) {
        if self.sids.last() != Some(&sid) {
            self.support += 1;
        }
        self.sids.push(sid);
        self.events.push(event);
        self.stats.extend_from_slice(stats);
    }

    fn clear(&mut self) {
        *self = Self::with_stride(self.stride);
    }

    /// Distinct sequences with at least one entry.
    pub fn support(&self) -> usize {
        self.support
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(sid, cursor event, prefix statistics)` per entry.
    pub fn entries(&self) -> impl Iterator<Item = (Sid, EventId, &[i64])> {
        (0..self.events.len()).map(move |i| (self.sids[i], self.events[i], self.entry_stats(i)))
    }

    fn entry_stats(&self, i: usize) -> &[i64] {
        &self.stats[i * self.stride..(i + 1) * self.stride]
    }

    fn sid_groups(&self) -> impl Iterator<Item = (Sid, std::ops::Range<usize>)> + '_ {
        let mut start = 0;
        std::iter::from_fn(move || {
            if start >= self.sids.len() {
                return None;
            }
            let sid = self.sids[start];
            let end = start + self.sids[start..].iter().take_while(|&&s| s == sid).count();
            let r = start..end;
            start = end;
            Some((sid, r))
        })
    }
}

/// Early-termination test while counting candidate `i`: after scanning `n`
/// sequences of a projection with support `sup_p`, of which `sup_i` contain
/// `i`, the candidate can no longer reach `theta`.
pub fn prop5_prune(n: usize, sup_i: usize, sup_p: usize, theta: usize) -> bool {
    n as i64 - sup_i as i64 > sup_p as i64 - theta as i64
}

struct Candidate {
    pdb: ProjectedDb,
    dead: bool,
}

pub struct MppMiner<'a> {
    mdd: &'a Mdd,
    info: &'a InfoStore,
    theta: usize,
    options: MineOptions,
}

impl<'a> MppMiner<'a> {
    pub fn new(mdd: &'a Mdd, info: &'a InfoStore, theta: usize, options: MineOptions) -> Result<Self> {
        if theta == 0 {
            return Err(Error::Argument("minimum support must be at least 1".into()));
        }
        Ok(Self { mdd, info, theta, options })
    }

    fn plan(&self) -> &ConstraintPlan {
        self.info.plan()
    }

    fn max_len(&self) -> usize {
        let m = self.mdd.n_layers();
        self.options.max_len.map_or(m, |l| l.min(m))
    }

    /// Frequent length-1 candidates, read from the children of the root.
    pub fn root_candidates(&self, counters: &mut Counters) -> Vec<(Item, ProjectedDb)> {
        let stride = self.plan().width();
        let n_seq = self.mdd.n_sequences();
        let mut scan = Scan::new(self, n_seq, counters);
        let mut empty = Vec::with_capacity(stride);
        for sid in 1..=n_seq as Sid {
            if scan.should_abort() {
                break;
            }
            scan.begin_sid();
            empty.clear();
            self.plan().empty_stats(sid, &mut empty);
            for e in self.mdd.root_successors(sid) {
                scan.offer(e, &empty, 1);
            }
            scan.end_sid(sid, stride);
        }
        scan.finish()
    }

    /// Extensions of a pattern of length `len - 1` with projection `pdb`
    /// into patterns of length `len`.
    pub fn extend(&self, pdb: &ProjectedDb, len: usize, counters: &mut Counters) -> Vec<(Item, ProjectedDb)> {
        let stride = self.plan().width();
        let mut scan = Scan::new(self, pdb.support(), counters);
        let mut folded = Vec::with_capacity(stride);
        for (sid, range) in pdb.sid_groups() {
            if scan.should_abort() {
                break;
            }
            scan.begin_sid();
            for i in range {
                let cur = pdb.events[i];
                folded.clear();
                self.plan().fold_into(pdb.entry_stats(i), self.mdd.label_attrs(cur), &mut folded);
                for &s in self.mdd.successors(cur) {
                    scan.offer(s, &folded, len);
                }
            }
            scan.end_sid(sid, stride);
        }
        scan.finish()
    }

    /// Constrained support of the pattern whose projection is `pdb`.
    fn emitted_support(&self, pdb: &ProjectedDb, len: usize, counters: &mut Counters) -> usize {
        let plan = self.plan();
        if !plan.has_checks() {
            return pdb.support();
        }
        let mut full = Vec::with_capacity(plan.width());
        let mut count = 0;
        for (_, range) in pdb.sid_groups() {
            let hit = range.into_iter().any(|i| {
                full.clear();
                plan.fold_into(pdb.entry_stats(i), self.mdd.label_attrs(pdb.events[i]), &mut full);
                plan.satisfied(&full, len, &mut counters.constraint_checks)
            });
            count += hit as usize;
        }
        count
    }

    /// Depth-first search below a length-1 pattern.
    pub fn mine_subtree(&self, item: Item, pdb: ProjectedDb) -> (PatternSet, Counters) {
        let mut out = PatternSet::new();
        let mut counters = Counters::default();
        let max_len = self.max_len();
        let mut stack: Vec<(Vec<Item>, ProjectedDb)> = vec![(vec![item], pdb)];
        let mut live_entries = stack[0].1.len() as u64;
        while let Some((items, pdb)) = stack.pop() {
            counters.peak_entries = counters.peak_entries.max(live_entries);
            live_entries -= pdb.len() as u64;
            counters.nodes_visited += 1;
            let len = items.len();
            let support = self.emitted_support(&pdb, len, &mut counters);
            if support >= self.theta {
                counters.patterns_emitted += 1;
                out.insert(items.clone(), support);
            }
            if len >= max_len {
                continue;
            }
            for (next, child) in self.extend(&pdb, len + 1, &mut counters).into_iter().rev() {
                live_entries += child.len() as u64;
                let mut pattern = items.clone();
                pattern.push(next);
                stack.push((pattern, child));
            }
        }
        (out, counters)
    }

    pub fn mine(&self) -> (PatternSet, Counters) {
        let mut counters = Counters::default();
        if self.max_len() == 0 {
            return (PatternSet::new(), counters);
        }
        let roots = self.root_candidates(&mut counters);
        let results = self.mine_roots(roots);
        let mut out = PatternSet::new();
        for (set, c) in results {
            out.extend(set);
            counters += c;
        }
        (out, counters)
    }

    #[cfg(feature = "parallel")]
    fn mine_roots(&self, roots: Vec<(Item, ProjectedDb)>) -> Vec<(PatternSet, Counters)> {
        use rayon::prelude::*;
        if self.options.parallel {
            roots.into_par_iter().map(|(i, p)| self.mine_subtree(i, p)).collect()
        } else {
            roots.into_iter().map(|(i, p)| self.mine_subtree(i, p)).collect()
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn mine_roots(&self, roots: Vec<(Item, ProjectedDb)>) -> Vec<(PatternSet, Counters)> {
        roots.into_iter().map(|(i, p)| self.mine_subtree(i, p)).collect()
    }
}

/// Candidate collection for one projection pass.
struct Scan<'m, 'c> {
    miner: &'m MppMiner<'m>,
    counters: &'c mut Counters,
    cands: HashMap<Item, Candidate>,
    slack: usize,
    scanned: usize,
    max_sup: usize,
    pending: Vec<(Item, EventId, usize)>,
    pending_stats: Vec<i64>,
}

impl<'m, 'c> Scan<'m, 'c> {
    fn new(miner: &'m MppMiner<'m>, sup_p: usize, counters: &'c mut Counters) -> Self {
        Self {
            miner,
            counters,
            cands: HashMap::new(),
            slack: sup_p.saturating_sub(miner.theta),
            scanned: 0,
            max_sup: 0,
            pending: Vec::new(),
            pending_stats: Vec::new(),
        }
    }

    fn should_abort(&mut self) -> bool {
        // every candidate so far has missed too many sequences, and a new
        // one would start with `scanned` misses
        let abort = self.miner.options.prop5 && self.scanned - self.max_sup > self.slack;
        if abort {
            self.counters.scans_aborted += 1;
        }
        abort
    }

    fn begin_sid(&mut self) {
        self.scanned += 1;
        self.counters.sequences_scanned += 1;
        self.pending.clear();
        self.pending_stats.clear();
    }

    fn offer(&mut self, e: EventId, prefix: &[i64], len: usize) {
        let m = self.miner;
        let item = m.mdd.item(e);
        self.counters.arcs_followed += 1;
        if m.options.prop5 {
            let before = self.scanned - 1;
            match self.cands.get_mut(&item) {
                None if before > self.slack => return,
                Some(c) if c.dead => return,
                Some(c) if prop5_prune(before, c.pdb.support(), before + self.slack + m.theta, m.theta) => {
                    c.dead = true;
                    c.pdb.clear();
                    return;
                }
                _ => {}
            }
        }
        if !m.info.extendable(m.mdd, prefix, e, len, &mut self.counters.constraint_checks) {
            return;
        }
        self.pending.push((item, e, self.pending_stats.len()));
        self.pending_stats.extend_from_slice(prefix);
    }

    fn end_sid(&mut self, sid: Sid, stride: usize) {
        let stats = &self.pending_stats;
        let key = |p: &(Item, EventId, usize)| (p.0, p.1, &stats[p.2..p.2 + stride]);
        self.pending.sort_unstable_by(|a, b| key(a).cmp(&key(b)));
        self.pending.dedup_by(|a, b| key(a) == key(b));
        for &(item, e, off) in &self.pending {
            let cand = self
                .cands
                .entry(item)
                .or_insert_with(|| Candidate { pdb: ProjectedDb::with_stride(stride), dead: false });
            if cand.dead {
                continue;
            }
            cand.pdb.push(sid, e, &stats[off..off + stride]);
            self.counters.entries_created += 1;
            self.max_sup = self.max_sup.max(cand.pdb.support());
        }
    }

    fn finish(self) -> Vec<(Item, ProjectedDb)> {
        let theta = self.miner.theta;
        let mut out: Vec<(Item, ProjectedDb)> = self
            .cands
            .into_iter()
            .filter(|(_, c)| !c.dead && c.pdb.support() >= theta)
            .map(|(i, c)| (i, c.pdb))
            .collect();
        out.sort_unstable_by_key(|(i, _)| *i);
        out
    }
}

/// Wall time per phase of one run.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimes {
    pub mdd_build: Duration,
    pub info_propagation: Duration,
    pub mining: Duration,
}

#[derive(Clone, Debug)]
pub struct MiningRun {
    pub patterns: PatternSet,
    pub counters: Counters,
    pub times: PhaseTimes,
    pub mdd_nodes: usize,
    pub mdd_arc_labels: usize,
    pub build_checks: u64,
}

/// Resolves `specs`, builds the MDD and its information, and mines.
pub fn mine_database(
    db: &AttributedDatabase,
    specs: &[ConstraintSpec],
    theta: usize,
    options: MineOptions,
) -> Result<MiningRun> {
    let resolved = resolve_all(specs, db)?;
    mine_resolved(db, &resolved, theta, options)
}

pub fn mine_resolved(
    db: &AttributedDatabase,
    specs: &[ResolvedSpec],
    theta: usize,
    options: MineOptions,
) -> Result<MiningRun> {
    if theta == 0 {
        return Err(Error::Argument("minimum support must be at least 1".into()));
    }
    let t0 = Instant::now();
    let mdd = build_mdd(db, specs);
    let t1 = Instant::now();
    let plan = ConstraintPlan::new(specs, db);
    let info = propagate(&mdd, &plan, options.median_mode);
    let t2 = Instant::now();
    let (patterns, counters) = MppMiner::new(&mdd, &info, theta, options)?.mine();
    let t3 = Instant::now();
    Ok(MiningRun {
        patterns,
        counters,
        times: PhaseTimes { mdd_build: t1 - t0, info_propagation: t2 - t1, mining: t3 - t2 },
        mdd_nodes: mdd.nodes().len(),
        mdd_arc_labels: mdd.n_arc_labels(),
        build_checks: mdd.build_checks(),
    })
}
