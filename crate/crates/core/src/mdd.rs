//! Layered MDD encoding of a sequence database.
//!
//! Layer `j` holds one node per distinct item found at position `j`. Every
//! node carries the events (one per sequence) that it represents, and arcs
//! carry the set of sequences for which the target is a feasible next step.
//! Arcs may skip layers: with no imposed constraints every later event of a
//! sequence is a successor of every earlier one.
//!
//! Besides the shared node/arc view, the MDD keeps a flat per-event
//! successor index; a `(node, sid)` pair identifies exactly one event, so the
//! two views describe the same arc set.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::Range;

use crate::constraints::{AttrKind, Constraint, Direction, ResolvedSpec};
use crate::error::{Error, Result};
use crate::seqdb::{AttributedDatabase, Item, Sid};

pub type EventId = u32;
pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub target: NodeId,
    /// Range into the MDD's shared sid pool; see [`Mdd::arc_sids`].
    sids: Range<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MddNode {
    /// 1-based position.
    pub layer: u32,
    pub item: Item,
    /// Events represented by this node, ascending by sid.
    pub labels: Vec<EventId>,
    pub out_arcs: Vec<Arc>,
    /// Sequences for which this node connects to the terminal.
    pub terminal_sids: Vec<Sid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct GapRule {
    attr: usize,
    direction: Direction,
    c: i64,
}

impl GapRule {
    fn allows(&self, from: i64, to: i64) -> bool {
        self.direction.holds(to - from, self.c)
    }
}

#[derive(Clone, Debug)]
pub struct Mdd {
    n_attrs: usize,
    ev_sid: Vec<Sid>,
    ev_pos: Vec<u32>,
    ev_item: Vec<Item>,
    ev_attrs: Vec<i64>,
    ev_node: Vec<NodeId>,
    ev_active: Vec<bool>,
    seq_offsets: Vec<u32>,
    succ_offsets: Vec<u32>,
    succ: Vec<EventId>,
    nodes: Vec<MddNode>,
    layer_offsets: Vec<u32>,
    root_arcs: Vec<Arc>,
    arc_sids: Vec<Sid>,
    gap_rules: Vec<GapRule>,
    allowed: Option<BTreeSet<Item>>,
    build_checks: u64,
}

/// Builds the MDD, imposing gap and item-set constraints as arc-existence
/// rules. Other constraints in `specs` are ignored here.
pub fn build_mdd(db: &AttributedDatabase, specs: &[ResolvedSpec]) -> Mdd {
    let mut gap_rules = Vec::new();
    let mut allowed: Option<BTreeSet<Item>> = None;
    for s in specs {
        match s {
            Constraint::Attr { kind: AttrKind::Gap, attribute, direction, c } => {
                gap_rules.push(GapRule { attr: *attribute, direction: *direction, c: *c })
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

    let n_attrs = db.attribute_names().len();
    let total = db.total_events();
    let mut mdd = Mdd {
        n_attrs,
        ev_sid: Vec::with_capacity(total),
        ev_pos: Vec::with_capacity(total),
        ev_item: Vec::with_capacity(total),
        ev_attrs: Vec::with_capacity(total * n_attrs),
        ev_node: vec![0; total],
        ev_active: Vec::with_capacity(total),
        seq_offsets: Vec::with_capacity(db.len() + 1),
        succ_offsets: Vec::with_capacity(total + 1),
        succ: Vec::new(),
        nodes: Vec::new(),
        layer_offsets: vec![0],
        root_arcs: Vec::new(),
        arc_sids: Vec::new(),
        gap_rules,
        allowed,
        build_checks: 0,
    };
    mdd.seq_offsets.push(0);
    for seq in db.sequences() {
        for (j, ev) in seq.events.iter().enumerate() {
            mdd.ev_sid.push(seq.sid);
            mdd.ev_pos.push(j as u32 + 1);
            mdd.ev_item.push(ev.item);
            mdd.ev_attrs.extend_from_slice(&ev.attrs);
            let active = mdd.allowed.as_ref().is_none_or(|a| a.contains(&ev.item));
            mdd.ev_active.push(active);
        }
        mdd.seq_offsets.push(mdd.ev_sid.len() as u32);
    }

    mdd.build_nodes(db.max_len());
    mdd.build_successors();
    mdd.build_shared_arcs();
    mdd
}

/// Appends one arc per run of equal targets in `pairs` (sorted by target).
fn push_grouped(arcs: &mut Vec<Arc>, pool: &mut Vec<Sid>, pairs: &[(NodeId, Sid)]) {
    for &(dst, sid) in pairs {
        if arcs.last().is_none_or(|a| a.target != dst) {
            let at = pool.len() as u32;
            arcs.push(Arc { target: dst, sids: at..at });
        }
        pool.push(sid);
        arcs.last_mut().unwrap().sids.end += 1;
    }
}

impl Mdd {
    fn build_nodes(&mut self, max_len: usize) {
        // bucket events by position, then order each layer by (item, event)
        let mut layer_start = vec![0usize; max_len + 1];
        for &pos in &self.ev_pos {
            layer_start[pos as usize] += 1;
        }
        for j in 1..=max_len {
            layer_start[j] += layer_start[j - 1];
        }
        let mut keys = vec![0u64; self.ev_pos.len()];
        let mut fill = layer_start.clone();
        for e in 0..self.ev_pos.len() {
            let slot = &mut fill[self.ev_pos[e] as usize - 1];
            keys[*slot] = (self.ev_item[e] as u64) << 32 | e as u64;
            *slot += 1;
        }
        for j in 0..max_len {
            let (lo, hi, layer) = (layer_start[j], layer_start[j + 1], j as u32 + 1);
            keys[lo..hi].sort_unstable();
            for &key in &keys[lo..hi] {
                let (item, e) = ((key >> 32) as Item, key as u32 as EventId);
                if self.nodes.last().is_none_or(|n| n.layer != layer || n.item != item) {
                    self.nodes.push(MddNode {
                        layer,
                        item,
                        labels: Vec::new(),
                        out_arcs: Vec::new(),
                        terminal_sids: Vec::new(),
                    });
                }
                let id = self.nodes.len() - 1;
                self.nodes[id].labels.push(e);
                self.ev_node[e as usize] = id as NodeId;
            }
            self.layer_offsets.push(self.nodes.len() as u32);
        }
    }

    /// Backward over each sequence: for position j (last to first) record
    /// every later position reachable under the pairwise rules.
    fn build_successors(&mut self) {
        let n_seq = self.seq_offsets.len() - 1;
        // per-sequence scratch: successors are found last position first
        let mut scratch: Vec<EventId> = Vec::new();
        let mut spans: Vec<(usize, usize)> = Vec::new();
        let mut checks = 0u64;
        self.succ_offsets.push(0);
        for s in 0..n_seq {
            let range = self.seq_offsets[s] as usize..self.seq_offsets[s + 1] as usize;
            let len = range.len();
            scratch.clear();
            spans.clear();
            spans.resize(len, (0, 0));
            // gap <= c on a non-decreasing attribute can stop at the first violation
            let stoppable: Vec<bool> = self
                .gap_rules
                .iter()
                .map(|r| {
                    r.direction == Direction::AtMost
                        && (range.start..range.end.saturating_sub(1))
                            .all(|e| self.attr(e as EventId, r.attr) <= self.attr(e as EventId + 1, r.attr))
                })
                .collect();
            for j in (0..len).rev() {
                let e = (range.start + j) as EventId;
                let start = scratch.len();
                if self.ev_active[e as usize] {
                    'next: for jp in j + 1..len {
                        let f = (range.start + jp) as EventId;
                        if !self.ev_active[f as usize] {
                            continue;
                        }
                        for (r, &stop) in self.gap_rules.iter().zip(&stoppable) {
                            checks += 1;
                            if !r.allows(self.attr(e, r.attr), self.attr(f, r.attr)) {
                                if stop {
                                    break 'next;
                                }
                                continue 'next;
                            }
                        }
                        scratch.push(f);
                    }
                }
                spans[j] = (start, scratch.len());
            }
            for &(lo, hi) in &spans {
                self.succ.extend_from_slice(&scratch[lo..hi]);
                self.succ_offsets.push(self.succ.len() as u32);
            }
        }
        self.build_checks = checks;
    }

    fn build_shared_arcs(&mut self) {
        // bucket (target, sid) pairs by source node with a counting pass;
        // events are visited in sid order, so buckets fill sid-ascending
        let n_nodes = self.nodes.len();
        let mut start = vec![0usize; n_nodes + 1];
        for e in 0..self.ev_sid.len() {
            start[self.ev_node[e] as usize + 1] += self.successors(e as EventId).len();
        }
        for k in 0..n_nodes {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut pairs: Vec<(NodeId, Sid)> = vec![(0, 0); self.succ.len()];
        for e in 0..self.ev_sid.len() {
            let (src, sid) = (self.ev_node[e] as usize, self.ev_sid[e]);
            for &f in self.successors(e as EventId) {
                pairs[fill[src]] = (self.ev_node[f as usize], sid);
                fill[src] += 1;
            }
        }
        for id in 0..n_nodes {
            let bucket = &mut pairs[start[id]..start[id + 1]];
            bucket.sort_unstable();
            push_grouped(&mut self.nodes[id].out_arcs, &mut self.arc_sids, bucket);
        }
        // nodes are ordered and labels ascend by sid, so this is sorted
        let mut roots: Vec<(NodeId, Sid)> = Vec::with_capacity(self.ev_sid.len());
        for (id, node) in self.nodes.iter_mut().enumerate() {
            for &e in &node.labels {
                if self.ev_active[e as usize] {
                    let sid = self.ev_sid[e as usize];
                    roots.push((id as NodeId, sid));
                    node.terminal_sids.push(sid);
                }
            }
        }
        push_grouped(&mut self.root_arcs, &mut self.arc_sids, &roots);
    }

    pub fn n_sequences(&self) -> usize {
        self.seq_offsets.len() - 1
    }

    pub fn n_events(&self) -> usize {
        self.ev_sid.len()
    }

    pub fn n_attrs(&self) -> usize {
        self.n_attrs
    }

    /// Number of interior layers (the maximum sequence length).
    pub fn n_layers(&self) -> usize {
        self.layer_offsets.len() - 1
    }

    pub fn nodes(&self) -> &[MddNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &MddNode {
        &self.nodes[id as usize]
    }

    /// Nodes of 1-based `layer`.
    pub fn layer(&self, layer: usize) -> &[MddNode] {
        let lo = self.layer_offsets[layer - 1] as usize;
        let hi = self.layer_offsets[layer] as usize;
        &self.nodes[lo..hi]
    }

    pub fn layer_node_ids(&self, layer: usize) -> Range<NodeId> {
        self.layer_offsets[layer - 1]..self.layer_offsets[layer]
    }

    /// Sequences labelling `arc`, ascending.
    pub fn arc_sids(&self, arc: &Arc) -> &[Sid] {
        &self.arc_sids[arc.sids.start as usize..arc.sids.end as usize]
    }

    pub fn root_arcs(&self) -> &[Arc] {
        &self.root_arcs
    }

    pub fn has_imposed_rules(&self) -> bool {
        !self.gap_rules.is_empty() || self.allowed.is_some()
    }

    /// Gap checks performed while building.
    pub fn build_checks(&self) -> u64 {
        self.build_checks
    }

    pub fn n_arc_labels(&self) -> usize {
        self.succ.len()
    }

    /// Events of 1-based sequence `sid`.
    pub fn sequence_events(&self, sid: Sid) -> Range<EventId> {
        let s = sid as usize - 1;
        self.seq_offsets[s]..self.seq_offsets[s + 1]
    }

    pub fn sid(&self, e: EventId) -> Sid {
        self.ev_sid[e as usize]
    }

    pub fn pos(&self, e: EventId) -> u32 {
        self.ev_pos[e as usize]
    }

    pub fn item(&self, e: EventId) -> Item {
        self.ev_item[e as usize]
    }

    pub fn node_of(&self, e: EventId) -> NodeId {
        self.ev_node[e as usize]
    }

    /// Whether the event may appear in a pattern (it passes item-set rules).
    pub fn is_active(&self, e: EventId) -> bool {
        self.ev_active[e as usize]
    }

    #[inline]
    pub fn attr(&self, e: EventId, a: usize) -> i64 {
        self.ev_attrs[e as usize * self.n_attrs + a]
    }

    /// The attribute label of a `(node, sid)` pair.
    pub fn label_attrs(&self, e: EventId) -> &[i64] {
        let s = e as usize * self.n_attrs;
        &self.ev_attrs[s..s + self.n_attrs]
    }

    /// Feasible next events after `e` within its sequence, ascending.
    #[inline]
    pub fn successors(&self, e: EventId) -> &[EventId] {
        let lo = self.succ_offsets[e as usize] as usize;
        let hi = self.succ_offsets[e as usize + 1] as usize;
        &self.succ[lo..hi]
    }

    /// Events of `sid` reachable from the root, ascending.
    pub fn root_successors(&self, sid: Sid) -> impl Iterator<Item = EventId> + '_ {
        self.sequence_events(sid).filter(|&e| self.is_active(e))
    }

    /// Event of sequence `sid` represented by `node`, if any.
    pub fn event_at(&self, node: NodeId, sid: Sid) -> Option<EventId> {
        let n = self.node(node);
        n.labels.binary_search_by_key(&sid, |&e| self.sid(e)).ok().map(|i| n.labels[i])
    }

    fn pair_allowed(&self, e: EventId, f: EventId) -> bool {
        self.is_active(e)
            && self.is_active(f)
            && self.gap_rules.iter().all(|r| r.allows(self.attr(e, r.attr), self.attr(f, r.attr)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub nodes: usize,
    pub arcs: usize,
    pub arc_labels: usize,
    pub reconstructed: usize,
}

/// Checks every structural invariant of `mdd` against the database it was
/// built from.
pub fn validate(mdd: &Mdd, db: &AttributedDatabase) -> Result<ValidationReport> {
    let fail = |msg: String| Err(Error::Validation(msg));
    if mdd.n_sequences() != db.len() || mdd.n_events() != db.total_events() {
        return fail("event count differs from database".into());
    }
    if mdd.n_layers() != db.max_len() {
        return fail(format!("{} layers for maximum length {}", mdd.n_layers(), db.max_len()));
    }
    for seq in db.sequences() {
        for (j, (e, ev)) in mdd.sequence_events(seq.sid).zip(&seq.events).enumerate() {
            if mdd.item(e) != ev.item || mdd.label_attrs(e) != ev.attrs.as_slice() {
                return fail(format!("event (sid={}, pos={}) differs from database", seq.sid, j + 1));
            }
        }
    }

    let mut seen = vec![false; mdd.n_events()];
    for layer in 1..=mdd.n_layers() {
        let mut prev: Option<Item> = None;
        for id in mdd.layer_node_ids(layer) {
            let node = mdd.node(id);
            let name = format!("node {}@{}", node.item, node.layer);
            if node.layer as usize != layer || prev.is_some_and(|p| p >= node.item) {
                return fail(format!("{name}: layer order broken"));
            }
            prev = Some(node.item);
            if node.labels.is_empty() {
                return fail(format!("{name}: empty label"));
            }
            let mut last_sid = 0;
            for &e in &node.labels {
                if mdd.pos(e) != node.layer || mdd.item(e) != node.item || mdd.node_of(e) != id {
                    return fail(format!("{name}: foreign event in label"));
                }
                if mdd.sid(e) <= last_sid || seen[e as usize] {
                    return fail(format!("{name}: duplicate label for sid {}", mdd.sid(e)));
                }
                last_sid = mdd.sid(e);
                seen[e as usize] = true;
            }
            let excluded = mdd.allowed.as_ref().is_some_and(|a| !a.contains(&node.item));
            if !excluded && !node.labels.iter().any(|&e| mdd.is_active(e)) {
                return fail(format!("{name}: not on any root-terminal path"));
            }
        }
    }
    if let Some(e) = seen.iter().position(|s| !s) {
        return fail(format!("event {e} is not labelled on any node"));
    }

    let mut from_arcs: Vec<(EventId, EventId)> = Vec::new();
    let mut n_arcs = 0;
    for (id, node) in mdd.nodes.iter().enumerate() {
        let name = format!("node {}@{}", node.item, node.layer);
        let mut prev_target = None;
        for arc in &node.out_arcs {
            n_arcs += 1;
            let target = mdd.node(arc.target);
            let arc_name = format!("arc {name} -> {}@{}", target.item, target.layer);
            if target.layer <= node.layer {
                return fail(format!("{arc_name}: target layer not greater than source"));
            }
            if prev_target.is_some_and(|p| p >= arc.target) || arc.sids.is_empty() {
                return fail(format!("{arc_name}: malformed arc list"));
            }
            prev_target = Some(arc.target);
            for &sid in mdd.arc_sids(arc) {
                let (Some(e), Some(f)) = (mdd.event_at(id as NodeId, sid), mdd.event_at(arc.target, sid)) else {
                    return fail(format!("{arc_name}: sid {sid} not labelled on both endpoints"));
                };
                from_arcs.push((e, f));
            }
        }
        for &sid in &node.terminal_sids {
            match mdd.event_at(id as NodeId, sid) {
                Some(e) if mdd.is_active(e) => {}
                _ => return fail(format!("{name}: terminal arc for sid {sid} without active label")),
            }
        }
    }
    for arc in &mdd.root_arcs {
        for &sid in mdd.arc_sids(arc) {
            if mdd.event_at(arc.target, sid).is_none_or(|e| !mdd.is_active(e)) {
                return fail(format!("root arc for sid {sid} without active label"));
            }
        }
    }

    let mut from_index: Vec<(EventId, EventId)> = Vec::new();
    let mut expected: Vec<(EventId, EventId)> = Vec::new();
    for sid in 1..=mdd.n_sequences() as Sid {
        let events = mdd.sequence_events(sid);
        for e in events.clone() {
            for &f in mdd.successors(e) {
                from_index.push((e, f));
            }
            for f in e + 1..events.end {
                if mdd.pair_allowed(e, f) {
                    expected.push((e, f));
                }
            }
        }
    }
    from_arcs.sort_unstable();
    if from_arcs != from_index {
        return fail("shared arcs disagree with the per-event successor index".into());
    }
    if from_index != expected {
        return fail("arc set differs from the one implied by the imposed rules".into());
    }

    let mut reconstructed = 0;
    if !mdd.has_imposed_rules() {
        for seq in db.sequences() {
            replay(mdd, seq.sid, &seq.items().collect::<Vec<_>>())?;
            reconstructed += 1;
        }
    }
    Ok(ValidationReport { nodes: mdd.nodes.len(), arcs: n_arcs, arc_labels: mdd.succ.len(), reconstructed })
}

/// Follows root and consecutive-layer arcs labelled `sid` and compares the
/// visited items with `items`.
fn replay(mdd: &Mdd, sid: Sid, items: &[Item]) -> Result<()> {
    let fail = |msg: &str| Err(Error::Validation(format!("replay of sequence {sid}: {msg}")));
    let labelled = |arcs: &[Arc], layer: u32| {
        arcs.iter()
            .find(|a| mdd.node(a.target).layer == layer && mdd.arc_sids(a).binary_search(&sid).is_ok())
            .map(|a| a.target)
    };
    let Some(mut cur) = labelled(&mdd.root_arcs, 1) else {
        return fail("no root arc into layer 1");
    };
    let mut visited = vec![mdd.node(cur).item];
    while visited.len() < items.len() {
        let next_layer = mdd.node(cur).layer + 1;
        match labelled(&mdd.node(cur).out_arcs, next_layer) {
            Some(n) => cur = n,
            None => return fail("path ends early"),
        }
        visited.push(mdd.node(cur).item);
    }
    if visited != items {
        return fail("items differ");
    }
    if mdd.node(cur).terminal_sids.binary_search(&sid).is_err() {
        return fail("last node has no terminal arc");
    }
    Ok(())
}

/// Deterministic Graphviz rendering: nodes `item@layer`, arcs labelled with
/// sid sets, consecutive-position arcs solid and layer-skipping arcs dashed.
pub fn export_dot(mdd: &Mdd) -> String {
    fn sid_set(sids: &[Sid]) -> String {
        let parts: Vec<String> = sids.iter().map(|s| s.to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }
    fn edge(out: &mut String, from: &str, to: &str, sids: &[Sid], skip: bool) {
        let style = if skip { ", style=dashed" } else { "" };
        let _ = writeln!(out, "  {from} -> {to} [label=\"{}\"{style}];", sid_set(sids));
    }
    let mut out = String::from("digraph mdd {\n  rankdir=TB;\n  r [label=\"r\"];\n  t [label=\"t\"];\n");
    for (id, n) in mdd.nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{id} [label=\"{}@{}\"];", n.item, n.layer);
    }
    for arc in &mdd.root_arcs {
        let skip = mdd.node(arc.target).layer != 1;
        edge(&mut out, "r", &format!("n{}", arc.target), mdd.arc_sids(arc), skip);
    }
    for (id, n) in mdd.nodes.iter().enumerate() {
        let from = format!("n{id}");
        for arc in &n.out_arcs {
            let skip = mdd.node(arc.target).layer != n.layer + 1;
            edge(&mut out, &from, &format!("n{}", arc.target), mdd.arc_sids(arc), skip);
        }
        let (last, inner): (Vec<Sid>, Vec<Sid>) = n.terminal_sids.iter().partition(|&&sid| {
            let ev = mdd.sequence_events(sid);
            ev.end - ev.start == n.layer
        });
        if !last.is_empty() {
            edge(&mut out, &from, "t", &last, false);
        }
        if !inner.is_empty() {
            edge(&mut out, &from, "t", &inner, true);
        }
    }
    out.push_str("}\n");
    out
}
