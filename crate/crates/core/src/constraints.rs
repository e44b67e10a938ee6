//! Constraint specifications, their monotonicity classes, and exact
//! evaluation on materialized occurrences.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seqdb::{AttributedDatabase, Event, Item};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    AtLeast,
    AtMost,
}

impl Direction {
    /// `+1` for `>=`, `-1` for `<=`. Negating values under `<=` turns every
    /// upper bound into a lower bound on the negated attribute.
    pub fn sign(self) -> i64 {
        match self {
            Direction::AtLeast => 1,
            Direction::AtMost => -1,
        }
    }

    pub fn holds(self, lhs: i64, c: i64) -> bool {
        match self {
            Direction::AtLeast => lhs >= c,
            Direction::AtMost => lhs <= c,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Direction::AtLeast => ">=",
            Direction::AtMost => "<=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrKind {
    Gap,
    Span,
    Max,
    Min,
    Sum,
    Avg,
    Med,
}

impl AttrKind {
    pub const ALL: [AttrKind; 7] =
        [AttrKind::Gap, AttrKind::Span, AttrKind::Max, AttrKind::Min, AttrKind::Sum, AttrKind::Avg, AttrKind::Med];

    fn name(self) -> &'static str {
        match self {
            AttrKind::Gap => "gap",
            AttrKind::Span => "span",
            AttrKind::Max => "max",
            AttrKind::Min => "min",
            AttrKind::Sum => "sum",
            AttrKind::Avg => "avg",
            AttrKind::Med => "med",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Length,
    ItemSet,
    Attr(AttrKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonotonicityClass {
    Monotone,
    AntiMonotone,
    PrefixAntiMonotone,
    NonMonotone,
}

/// A constraint over a named attribute (`attribute` is an index once
/// resolved against a database).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint<A> {
    Length { direction: Direction, c: i64 },
    ItemSet { allowed: BTreeSet<Item> },
    Attr { kind: AttrKind, attribute: A, direction: Direction, c: i64 },
}

pub type ConstraintSpec = Constraint<String>;
pub type ResolvedSpec = Constraint<usize>;

impl<A> Constraint<A> {
    pub fn kind(&self) -> Kind {
        match self {
            Constraint::Length { .. } => Kind::Length,
            Constraint::ItemSet { .. } => Kind::ItemSet,
            Constraint::Attr { kind, .. } => Kind::Attr(*kind),
        }
    }

    pub fn direction(&self) -> Option<Direction> {
        match self {
            Constraint::Length { direction, .. } | Constraint::Attr { direction, .. } => Some(*direction),
            Constraint::ItemSet { .. } => None,
        }
    }
}

impl ConstraintSpec {
    pub fn attr(kind: AttrKind, attribute: &str, direction: Direction, c: i64) -> Self {
        Constraint::Attr { kind, attribute: attribute.to_string(), direction, c }
    }

    pub fn resolve(&self, db: &AttributedDatabase) -> Result<ResolvedSpec> {
        Ok(match self {
            Constraint::Length { direction, c } => Constraint::Length { direction: *direction, c: *c },
            Constraint::ItemSet { allowed } => Constraint::ItemSet { allowed: allowed.clone() },
            Constraint::Attr { kind, attribute, direction, c } => Constraint::Attr {
                kind: *kind,
                attribute: db.attribute_index(attribute)?,
                direction: *direction,
                c: *c,
            },
        })
    }
}

pub fn resolve_all(specs: &[ConstraintSpec], db: &AttributedDatabase) -> Result<Vec<ResolvedSpec>> {
    specs.iter().map(|s| s.resolve(db)).collect()
}

pub fn classify<A>(spec: &Constraint<A>) -> MonotonicityClass {
    use Direction::*;
    use MonotonicityClass::*;
    match spec {
        Constraint::Length { direction: AtLeast, .. } => Monotone,
        Constraint::Length { direction: AtMost, .. } => AntiMonotone,
        Constraint::ItemSet { .. } => PrefixAntiMonotone,
        Constraint::Attr { kind, direction, .. } => match (kind, direction) {
            (AttrKind::Gap, AtMost) => PrefixAntiMonotone,
            (AttrKind::Gap, AtLeast) => AntiMonotone,
            (AttrKind::Span, AtMost) => AntiMonotone,
            (AttrKind::Span, AtLeast) => Monotone,
            (AttrKind::Max, AtLeast) | (AttrKind::Min, AtMost) => Monotone,
            (AttrKind::Max, AtMost) | (AttrKind::Min, AtLeast) => AntiMonotone,
            (AttrKind::Sum | AttrKind::Avg | AttrKind::Med, _) => NonMonotone,
        },
    }
}

/// Gap and item-set constraints only relate consecutive pattern items, so the
/// MDD can enforce them through arc existence.
pub fn is_pairwise<A>(spec: &Constraint<A>) -> bool {
    matches!(spec, Constraint::ItemSet { .. } | Constraint::Attr { kind: AttrKind::Gap, .. })
}

/// Exact evaluation of `spec` on a concrete occurrence.
pub fn check_occurrence(occ: &[&Event], spec: &ResolvedSpec) -> Result<bool> {
    if occ.is_empty() {
        return Err(Error::EmptyOccurrence);
    }
    let n = occ.len() as i64;
    Ok(match spec {
        Constraint::Length { direction, c } => direction.holds(n, *c),
        Constraint::ItemSet { allowed } => occ.iter().all(|e| allowed.contains(&e.item)),
        Constraint::Attr { kind, attribute, direction, c } => {
            let vals: Vec<i64> = occ.iter().map(|e| e.attrs[*attribute]).collect();
            let (lo, hi) = (*vals.iter().min().unwrap(), *vals.iter().max().unwrap());
            match kind {
                AttrKind::Gap => vals.windows(2).all(|w| direction.holds(w[1] - w[0], *c)),
                AttrKind::Span => direction.holds(hi - lo, *c),
                AttrKind::Max => direction.holds(hi, *c),
                AttrKind::Min => direction.holds(lo, *c),
                AttrKind::Sum => direction.holds(vals.iter().sum(), *c),
                // sum / n  vs  c  <=>  sum  vs  c * n  (n > 0)
                AttrKind::Avg => direction.holds(vals.iter().sum(), c * n),
                AttrKind::Med => {
                    let mut sorted = vals;
                    sorted.sort_unstable();
                    let m = sorted.len();
                    // twice the median, so even-length medians stay integral
                    let twice = if m % 2 == 1 { 2 * sorted[m / 2] } else { sorted[m / 2 - 1] + sorted[m / 2] };
                    direction.holds(twice, 2 * c)
                }
            }
        }
    })
}

pub fn check_all(occ: &[&Event], specs: &[ResolvedSpec]) -> Result<bool> {
    for s in specs {
        if !check_occurrence(occ, s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of sequences with at least one embedding of `pattern` that
/// satisfies every spec. Embeddings are enumerated exhaustively.
pub fn support_of(pattern: &[Item], db: &AttributedDatabase, specs: &[ResolvedSpec]) -> usize {
    assert!(!pattern.is_empty(), "support of the empty pattern is undefined");
    fn search<'a>(
        events: &'a [Event],
        from: usize,
        pattern: &[Item],
        chosen: &mut Vec<&'a Event>,
        specs: &[ResolvedSpec],
    ) -> bool {
        let Some((&head, rest)) = pattern.split_first() else {
            return check_all(chosen, specs).expect("non-empty occurrence");
        };
        for j in from..events.len() {
            if events[j].item == head {
                chosen.push(&events[j]);
                let found = search(events, j + 1, rest, chosen, specs);
                chosen.pop();
                if found {
                    return true;
                }
            }
        }
        false
    }
    db.sequences().iter().filter(|s| search(&s.events, 0, pattern, &mut Vec::new(), specs)).count()
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Length { direction, c } => write!(f, "length{}{c}", direction.symbol()),
            Constraint::ItemSet { allowed } => {
                let items: Vec<String> = allowed.iter().map(|i| i.to_string()).collect();
                write!(f, "itemset{{{}}}", items.join(","))
            }
            Constraint::Attr { kind, attribute, direction, c } => {
                write!(f, "{}({attribute}){}{c}", kind.name(), direction.symbol())
            }
        }
    }
}

impl FromStr for ConstraintSpec {
    type Err = Error;

    /// `<kind>(<attr>)<op><int>`, `length<op><int>` or `itemset{i,j,...}`.
    fn from_str(text: &str) -> Result<Self> {
        let err = |msg: &str| Error::ConstraintSyntax { text: text.to_string(), msg: msg.to_string() };
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(body) = s.strip_prefix("itemset") {
            let inner = body
                .strip_prefix('{')
                .and_then(|b| b.strip_suffix('}'))
                .ok_or_else(|| err("expected itemset{i,j,...}"))?;
            let allowed = inner
                .split(',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<Item>().map_err(|_| err("item identifiers must be non-negative integers")))
                .collect::<Result<BTreeSet<_>>>()?;
            if allowed.is_empty() {
                return Err(err("empty item set"));
            }
            return Ok(Constraint::ItemSet { allowed });
        }
        let (lhs, direction, rhs) = if let Some((l, r)) = s.split_once(">=") {
            (l, Direction::AtLeast, r)
        } else if let Some((l, r)) = s.split_once("<=") {
            (l, Direction::AtMost, r)
        } else if let Some((l, r)) = s.split_once('≥') {
            (l, Direction::AtLeast, r)
        } else if let Some((l, r)) = s.split_once('≤') {
            (l, Direction::AtMost, r)
        } else {
            return Err(err("expected `>=` or `<=`"));
        };
        let c: i64 = rhs.parse().map_err(|_| err("bound must be an integer"))?;
        if lhs == "length" || lhs == "len" || lhs == "length()" || lhs == "len()" {
            return Ok(Constraint::Length { direction, c });
        }
        let (name, attr) =
            lhs.strip_suffix(')').and_then(|l| l.split_once('(')).ok_or_else(|| err("expected <kind>(<attr>)"))?;
        let kind = AttrKind::from_name(name).ok_or_else(|| err("unknown constraint kind"))?;
        if attr.is_empty() {
            return Err(err("missing attribute name"));
        }
        Ok(ConstraintSpec::attr(kind, attr, direction, c))
    }
}

/// Constraint presets over the `time`, `price` and `quality` attributes:
/// scenario 1 constrains time only, 2 adds price, 3 adds quality.
pub fn scenario(n: u8) -> Result<Vec<ConstraintSpec>> {
    use AttrKind::*;
    use Direction::*;
    if !(1..=3).contains(&n) {
        return Err(Error::Argument(format!("scenario must be 1, 2 or 3, got {n}")));
    }
    let range = |kind, attr: &str, lo, hi| {
        [ConstraintSpec::attr(kind, attr, AtLeast, lo), ConstraintSpec::attr(kind, attr, AtMost, hi)]
    };
    let mut specs = Vec::new();
    specs.extend(range(Gap, "time", 30, 900));
    specs.extend(range(Span, "time", 900, 3600));
    if n >= 2 {
        specs.extend(range(Avg, "price", 30, 70));
        specs.extend(range(Med, "price", 40, 60));
    }
    if n >= 3 {
        specs.extend(range(Avg, "quality", 40, 60));
        specs.extend(range(Med, "quality", 30, 70));
    }
    Ok(specs)
}
