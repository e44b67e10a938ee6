//! Reference miners that work on the raw database rows.

use std::collections::{BTreeMap, BTreeSet};

use crate::constraints::{support_of, AttrKind, Constraint, Direction, ResolvedSpec};
use crate::error::{Error, Result};
use crate::mpp_miner::Counters;
use crate::nodeinfo::ConstraintPlan;
use crate::pattern::PatternSet;
use crate::seqdb::{AttributedDatabase, Item, Sid};

/// Pairwise and item restrictions checked while scanning candidates.
struct RowRules {
    gaps: Vec<(usize, Direction, i64)>,
    allowed: Option<BTreeSet<Item>>,
}

impl RowRules {
    fn new(specs: &[ResolvedSpec]) -> Self {
        let mut gaps = Vec::new();
        let mut allowed: Option<BTreeSet<Item>> = None;
        for spec in specs {
            match spec {
                Constraint::Attr { kind: AttrKind::Gap, attribute, direction, c } => {
                    gaps.push((*attribute, *direction, *c))
                }
                Constraint::ItemSet { allowed: set } => {
                    allowed = Some(match allowed {
                        None => set.clone(),
                        Some(prev) => prev.intersection(set).copied().collect(),
                    })
                }
                _ => {}
            }
        }
        Self { gaps, allowed }
    }

    fn item_ok(&self, item: Item, counter: &mut u64) -> bool {
        match &self.allowed {
            None => true,
            Some(set) => {
                *counter += 1;
                set.contains(&item)
            }
        }
    }

    fn gap_ok(&self, from: &[i64], to: &[i64], counter: &mut u64) -> bool {
        self.gaps.iter().all(|&(a, d, c)| {
            *counter += 1;
            d.holds(to[a] - from[a], c)
        })
    }
}

/// An occurrence end: position in the sequence and statistics of the whole
/// occurrence.
type Entry = (usize, Vec<i64>);

/// Entries of one pattern, grouped per sequence in ascending sid order.
type Projection = Vec<(Sid, Vec<Entry>)>;

/// Prefix projection with constraint checks. Anti-monotone and pairwise
/// constraints prune entries as soon as they fail; the remaining constraints
/// are only tested when a pattern is emitted.
pub fn mine_ppcc(db: &AttributedDatabase, specs: &[ResolvedSpec], theta: usize) -> Result<(PatternSet, Counters)> {
    if theta == 0 {
        return Err(Error::Argument("minimum support must be at least 1".into()));
    }
    let plan = ConstraintPlan::new(specs, db);
    let rules = RowRules::new(specs);
    let mut counters = Counters::default();
    let mut out = PatternSet::new();

    let mut roots: BTreeMap<Item, Projection> = BTreeMap::new();
    let mut empty = Vec::with_capacity(plan.width());
    for seq in db.sequences() {
        counters.sequences_scanned += 1;
        empty.clear();
        plan.empty_stats(seq.sid, &mut empty);
        let mut local: BTreeMap<Item, Vec<Entry>> = BTreeMap::new();
        for (j, ev) in seq.events.iter().enumerate() {
            counters.arcs_followed += 1;
            if !rules.item_ok(ev.item, &mut counters.constraint_checks)
                || !plan.anti_monotone_ok(&empty, &ev.attrs, 1, &mut counters.constraint_checks)
            {
                continue;
            }
            let mut stats = Vec::with_capacity(plan.width());
            plan.fold_into(&empty, &ev.attrs, &mut stats);
            counters.entries_created += 1;
            local.entry(ev.item).or_default().push((j, stats));
        }
        for (item, entries) in local {
            roots.entry(item).or_default().push((seq.sid, entries));
        }
    }

    let mut stack: Vec<(Vec<Item>, Projection)> =
        roots.into_iter().rev().filter(|(_, p)| p.len() >= theta).map(|(i, p)| (vec![i], p)).collect();
    let max_len = db.max_len();
    while let Some((items, proj)) = stack.pop() {
        counters.nodes_visited += 1;
        let len = items.len();
        let support = proj
            .iter()
            .filter(|(_, entries)| {
                entries.iter().any(|(_, stats)| plan.satisfied(stats, len, &mut counters.constraint_checks))
            })
            .count();
        if support >= theta {
            counters.patterns_emitted += 1;
            out.insert(items.clone(), support);
        }
        if len >= max_len {
            continue;
        }
        let mut next: BTreeMap<Item, Projection> = BTreeMap::new();
        for (sid, entries) in &proj {
            counters.sequences_scanned += 1;
            let events = &db.sequence(*sid).expect("sid from projection").events;
            let mut local: BTreeMap<Item, Vec<Entry>> = BTreeMap::new();
            for (j, stats) in entries {
                let prev = &events[*j].attrs;
                for (k, ev) in events.iter().enumerate().skip(j + 1) {
                    counters.arcs_followed += 1;
                    let checks = &mut counters.constraint_checks;
                    if !rules.item_ok(ev.item, checks)
                        || !rules.gap_ok(prev, &ev.attrs, checks)
                        || !plan.anti_monotone_ok(stats, &ev.attrs, len + 1, checks)
                    {
                        continue;
                    }
                    let mut folded = Vec::with_capacity(plan.width());
                    plan.fold_into(stats, &ev.attrs, &mut folded);
                    local.entry(ev.item).or_default().push((k, folded));
                }
            }
            for (item, mut list) in local {
                list.sort_unstable();
                list.dedup();
                counters.entries_created += list.len() as u64;
                next.entry(item).or_default().push((*sid, list));
            }
        }
        for (item, p) in next.into_iter().rev() {
            if p.len() >= theta {
                let mut pattern = items.clone();
                pattern.push(item);
                stack.push((pattern, p));
            }
        }
    }
    Ok((out, counters))
}

/// Every distinct subsequence of length at most `max_len` (default: the
/// longest sequence) whose constrained support reaches `theta`.
pub fn mine_bruteforce(
    db: &AttributedDatabase,
    specs: &[ResolvedSpec],
    theta: usize,
    max_len: Option<usize>,
) -> Result<PatternSet> {
    if theta == 0 {
        return Err(Error::Argument("minimum support must be at least 1".into()));
    }
    let max_len = max_len.unwrap_or(db.max_len());
    let mut candidates: BTreeSet<Vec<Item>> = BTreeSet::new();
    for seq in db.sequences() {
        let items: Vec<Item> = seq.items().collect();
        let mut chosen = Vec::new();
        subsequences(&items, 0, max_len, &mut chosen, &mut candidates);
    }
    Ok(candidates
        .into_iter()
        .filter_map(|p| {
            let sup = support_of(&p, db, specs);
            (sup >= theta).then_some((p, sup))
        })
        .collect())
}

fn subsequences(items: &[Item], from: usize, max_len: usize, chosen: &mut Vec<Item>, out: &mut BTreeSet<Vec<Item>>) {
    if chosen.len() == max_len {
        return;
    }
    for j in from..items.len() {
        chosen.push(items[j]);
        out.insert(chosen.clone());
        subsequences(items, j + 1, max_len, chosen, out);
        chosen.pop();
    }
}
