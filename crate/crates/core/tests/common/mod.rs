#![allow(dead_code)]

use std::collections::BTreeSet;

use mddmine::constraints::{AttrKind, Constraint, Direction, ResolvedSpec};
use mddmine::mdd::{EventId, Mdd};
use mddmine::{AttributedDatabase, Event, Item};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KINDS: usize = 9;

#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub db: AttributedDatabase,
    pub specs: Vec<ResolvedSpec>,
    pub theta: usize,
}

pub fn attr_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("a{k}")).collect()
}

pub fn random_db(rng: &mut impl Rng, n_seq: (usize, usize), seq_len: (usize, usize)) -> AttributedDatabase {
    let n = rng.random_range(n_seq.0..=n_seq.1);
    let n_items = rng.random_range(2..=6u32);
    let n_attrs = rng.random_range(1..=3usize);
    let sorted_first = rng.random_bool(0.5);
    let sequences = (0..n)
        .map(|_| {
            let len = rng.random_range(seq_len.0..=seq_len.1);
            let mut cols: Vec<Vec<i64>> =
                (0..n_attrs).map(|_| (0..len).map(|_| rng.random_range(0..=20)).collect()).collect();
            if sorted_first {
                cols[0].sort_unstable();
            }
            (0..len).map(|j| Event::new(rng.random_range(1..=n_items), cols.iter().map(|c| c[j]).collect())).collect()
        })
        .collect();
    AttributedDatabase::new(attr_names(n_attrs), sequences).unwrap()
}

/// Kind index: 0 length, 1 item set, 2.. attribute kinds in declaration order.
pub fn random_spec(
    rng: &mut impl Rng,
    kind: usize,
    direction: Direction,
    n_attrs: usize,
    n_items: u32,
) -> ResolvedSpec {
    match kind {
        0 => Constraint::Length { direction, c: rng.random_range(1..=4) },
        1 => {
            let mut items: Vec<Item> = (1..=n_items).collect();
            items.shuffle(rng);
            let k = rng.random_range(1..=items.len());
            Constraint::ItemSet { allowed: items[..k].iter().copied().collect() }
        }
        _ => {
            let kind = AttrKind::ALL[kind - 2];
            let c = match kind {
                AttrKind::Gap => rng.random_range(-6..=10),
                AttrKind::Span => rng.random_range(0..=16),
                AttrKind::Sum => rng.random_range(0..=60),
                _ => rng.random_range(0..=20),
            };
            Constraint::Attr { kind, attribute: rng.random_range(0..n_attrs), direction, c }
        }
    }
}

pub fn random_specs(rng: &mut impl Rng, db: &AttributedDatabase, count: (usize, usize)) -> Vec<ResolvedSpec> {
    let n_items = db.item_universe().iter().copied().max().unwrap_or(1);
    let n_attrs = db.attribute_names().len();
    let k = rng.random_range(count.0..=count.1);
    (0..k)
        .map(|_| {
            let kind = rng.random_range(0..KINDS);
            let dir = if rng.random_bool(0.5) { Direction::AtLeast } else { Direction::AtMost };
            random_spec(rng, kind, dir, n_attrs, n_items)
        })
        .collect()
}

/// Small support thresholds are more informative, so they are drawn more often.
pub fn random_theta(rng: &mut impl Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    1 + ((n as f64) * u * u * u) as usize
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let db = random_db(&mut rng, (5, 40), (1, 8));
    let specs = random_specs(&mut rng, &db, (1, 4));
    let theta = random_theta(&mut rng, db.len());
    Instance { seed, db, specs, theta }
}

/// Calls `f` on every path that starts at `e` and follows successor arcs,
/// including the single-event path.
pub fn for_each_path(mdd: &Mdd, e: EventId, f: &mut impl FnMut(&[EventId])) {
    fn go(mdd: &Mdd, path: &mut Vec<EventId>, f: &mut impl FnMut(&[EventId])) {
        f(path);
        let last = *path.last().unwrap();
        for &s in mdd.successors(last) {
            path.push(s);
            go(mdd, path, f);
            path.pop();
        }
    }
    go(mdd, &mut vec![e], f)
}

/// Every occurrence chain of the MDD for one sequence: paths starting at a
/// root successor.
pub fn for_each_chain(mdd: &Mdd, sid: u32, f: &mut impl FnMut(&[EventId])) {
    for e in mdd.root_successors(sid) {
        for_each_path(mdd, e, f);
    }
}

pub fn twice_median(vals: &mut [i64]) -> i64 {
    vals.sort_unstable();
    let m = vals.len();
    if m % 2 == 1 {
        2 * vals[m / 2]
    } else {
        vals[m / 2 - 1] + vals[m / 2]
    }
}

/// `db` with every attribute negated.
pub fn negated(db: &AttributedDatabase) -> AttributedDatabase {
    let seqs = db
        .sequences()
        .iter()
        .map(|s| s.events.iter().map(|e| Event::new(e.item, e.attrs.iter().map(|v| -v).collect())).collect())
        .collect();
    AttributedDatabase::new(db.attribute_names().to_vec(), seqs).unwrap()
}

fn flip(d: Direction) -> Direction {
    match d {
        Direction::AtLeast => Direction::AtMost,
        Direction::AtMost => Direction::AtLeast,
    }
}

/// The constraint on the negated database accepting the same occurrences.
pub fn mirrored(spec: &ResolvedSpec) -> ResolvedSpec {
    match spec {
        Constraint::Attr { kind, attribute, direction, c } => {
            let (kind, direction, c) = match kind {
                AttrKind::Span => (AttrKind::Span, *direction, *c),
                AttrKind::Max => (AttrKind::Min, flip(*direction), -c),
                AttrKind::Min => (AttrKind::Max, flip(*direction), -c),
                k => (*k, flip(*direction), -c),
            };
            Constraint::Attr { kind, attribute: *attribute, direction, c }
        }
        other => other.clone(),
    }
}

pub fn items_of(db: &AttributedDatabase) -> BTreeSet<Item> {
    db.item_universe().clone()
}

#[derive(Debug, Default)]
pub struct BetaReport {
    pub values_checked: u64,
    pub verdicts_checked: u64,
    /// Single-triple verdicts that disagreed with enumeration while the
    /// Pareto-set verdict agreed.
    pub single_mode_misses: u64,
    pub mismatches: Vec<String>,
}

/// Compares stored information against enumeration of MDD paths.
pub fn check_betas(inst: &Instance) -> BetaReport {
    use mddmine::nodeinfo::{med_extendable, InfoValue, MedInfo};
    use mddmine::{build_mdd, propagate, ConstraintPlan, MedianMode};

    let db = &inst.db;
    let mdd = build_mdd(db, &inst.specs);
    let plan = ConstraintPlan::new(&inst.specs, db);
    let single = propagate(&mdd, &plan, MedianMode::Single);
    let pareto = propagate(&mdd, &plan, MedianMode::Pareto);
    let mut rep = BetaReport::default();
    let vals =
        |path: &[EventId], a: usize, sign: i64| -> Vec<i64> { path.iter().map(|&e| sign * mdd.attr(e, a)).collect() };

    for (idx, spec) in inst.specs.iter().enumerate() {
        let Constraint::Attr { kind, attribute: a, direction, .. } = *spec else {
            if let Constraint::Length { direction: Direction::AtLeast, .. } = spec {
                for e in 0..mdd.n_events() as EventId {
                    let mut longest = 0;
                    for_each_path(&mdd, e, &mut |p| longest = longest.max(p.len() as u32));
                    rep.values_checked += 1;
                    if single.info_for(idx, e) != InfoValue::Longest(longest) {
                        rep.mismatches.push(format!("seed {} spec {idx} event {e}: longest", inst.seed));
                    }
                }
            }
            continue;
        };
        let sign = direction.sign();
        match kind {
            AttrKind::Span | AttrKind::Max | AttrKind::Min => {
                for e in 0..mdd.n_events() as EventId {
                    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
                    for_each_path(&mdd, e, &mut |p| {
                        for v in vals(p, a, 1) {
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    });
                    rep.values_checked += 1;
                    match single.info_for(idx, e) {
                        InfoValue::Span(s) if s.beta1 == lo && s.beta2 == hi => {}
                        other => rep.mismatches.push(format!(
                            "seed {} spec {idx} event {e}: span {other:?}, expected ({lo}, {hi})",
                            inst.seed
                        )),
                    }
                }
            }
            AttrKind::Sum => {
                for e in 0..mdd.n_events() as EventId {
                    let mut best = i64::MIN;
                    for_each_path(&mdd, e, &mut |p| best = best.max(vals(p, a, sign).iter().sum()));
                    rep.values_checked += 1;
                    match single.info_for(idx, e) {
                        InfoValue::Sum(s) if s.beta == best => {}
                        other => rep
                            .mismatches
                            .push(format!("seed {} spec {idx} event {e}: sum {other:?}, expected {best}", inst.seed)),
                    }
                }
            }
            AttrKind::Avg => {
                let c = single.oriented_threshold(idx).unwrap() as i128;
                for e in 0..mdd.n_events() as EventId {
                    let mut best = i128::MIN;
                    let mut achievable = std::collections::HashSet::new();
                    for_each_path(&mdd, e, &mut |p| {
                        let s: i64 = vals(p, a, sign).iter().sum();
                        best = best.max(s as i128 - c * p.len() as i128);
                        achievable.insert((s, p.len() as i64));
                    });
                    rep.values_checked += 1;
                    match single.info_for(idx, e) {
                        InfoValue::Avg(v)
                            if v.beta1 as i128 - c * v.beta2 as i128 == best
                                && achievable.contains(&(v.beta1, v.beta2)) => {}
                        other => rep
                            .mismatches
                            .push(format!("seed {} spec {idx} event {e}: avg {other:?}, best score {best}", inst.seed)),
                    }
                }
            }
            AttrKind::Med => {
                let c = single.oriented_threshold(idx).unwrap();
                for sid in 1..=mdd.n_sequences() as u32 {
                    let seq_vals = vals(&mdd.sequence_events(sid).collect::<Vec<_>>(), a, sign);
                    let lo = seq_vals.iter().min().unwrap() - 1;
                    let hi = seq_vals.iter().max().unwrap() + 1;
                    for_each_chain(&mdd, sid, &mut |chain| {
                        let e = *chain.last().unwrap();
                        let prefix = &chain[..chain.len() - 1];
                        let triple = vals(prefix, a, sign)
                            .into_iter()
                            .fold(MedInfo { beta1: 0, beta2: lo, beta3: hi }, |t, v| t.fold(v, c));
                        let mut truth = false;
                        for_each_path(&mdd, e, &mut |p| {
                            if !truth {
                                let mut all = vals(prefix, a, sign);
                                all.extend(vals(p, a, sign));
                                truth = twice_median(&mut all) >= 2 * c;
                            }
                        });
                        let verdict = |v: InfoValue| match v {
                            InfoValue::Med(ts) => ts.iter().any(|&t| med_extendable(triple, t, c)),
                            _ => false,
                        };
                        let (s, p) = (verdict(single.info_for(idx, e)), verdict(pareto.info_for(idx, e)));
                        rep.verdicts_checked += 1;
                        if p != truth {
                            rep.mismatches.push(format!(
                                "seed {} spec {idx} sid {sid} chain {chain:?}: pareto {p}, expected {truth}",
                                inst.seed
                            ));
                        } else if s != truth {
                            rep.single_mode_misses += 1;
                        }
                    });
                }
            }
            AttrKind::Gap => {}
        }
    }
    rep
}
