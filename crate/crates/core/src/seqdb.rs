//! Sequence database model, SPMF ingestion and attribute handling.
//!
//! Events carry exactly one item and one integer value per declared
//! attribute. Attributes belong to the event occurrence, so the same item may
//! carry different values in different places.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};

pub type Item = u32;
pub type Sid = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub item: Item,
    /// One value per entry of [`AttributedDatabase::attribute_names`].
    pub attrs: Vec<i64>,
}

impl Event {
    pub fn new(item: Item, attrs: Vec<i64>) -> Self {
        Self { item, attrs }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    /// 1-based.
    pub sid: Sid,
    pub events: Vec<Event>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.events.iter().map(|e| e.item)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributedDatabase {
    sequences: Vec<Sequence>,
    attribute_names: Vec<String>,
    ordering: Option<usize>,
    item_universe: BTreeSet<Item>,
}

impl AttributedDatabase {
    /// Builds a database from per-sequence event lists. Sids are assigned
    /// 1..=N in order.
    pub fn new(attribute_names: Vec<String>, sequences: Vec<Vec<Event>>) -> Result<Self> {
        let width = attribute_names.len();
        let mut item_universe = BTreeSet::new();
        let mut out = Vec::with_capacity(sequences.len());
        for (idx, events) in sequences.into_iter().enumerate() {
            let sid = idx as Sid + 1;
            if events.is_empty() {
                return Err(Error::Argument(format!("sequence {sid} is empty")));
            }
            for (pos, ev) in events.iter().enumerate() {
                if ev.attrs.len() != width {
                    return Err(Error::Coverage(format!(
                        "sequence {sid} position {} has {} attribute values, expected {width}",
                        pos + 1,
                        ev.attrs.len()
                    )));
                }
                item_universe.insert(ev.item);
            }
            out.push(Sequence { sid, events });
        }
        Ok(Self { sequences: out, attribute_names, ordering: None, item_universe })
    }

    /// Attribute-free database from plain item lists.
    pub fn from_items(sequences: Vec<Vec<Item>>) -> Result<Self> {
        let seqs = sequences.into_iter().map(|s| s.into_iter().map(|i| Event::new(i, Vec::new())).collect()).collect();
        Self::new(Vec::new(), seqs)
    }

    /// Declares `name` as the ordering attribute and validates that it is
    /// strictly increasing along every sequence.
    pub fn with_ordering(mut self, name: &str) -> Result<Self> {
        let idx = self.attribute_index(name)?;
        for seq in &self.sequences {
            for (j, pair) in seq.events.windows(2).enumerate() {
                if pair[1].attrs[idx] <= pair[0].attrs[idx] {
                    return Err(Error::Ordering { attr: name.to_string(), sid: seq.sid, pos: j + 2 });
                }
            }
        }
        self.ordering = Some(idx);
        Ok(self)
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn sequence(&self, sid: Sid) -> Option<&Sequence> {
        self.sequences.get((sid as usize).checked_sub(1)?)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attribute_names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn ordering_attribute(&self) -> Option<usize> {
        self.ordering
    }

    pub fn item_universe(&self) -> &BTreeSet<Item> {
        &self.item_universe
    }

    pub fn max_len(&self) -> usize {
        self.sequences.iter().map(Sequence::len).max().unwrap_or(0)
    }

    pub fn total_events(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbStats {
    pub n_sequences: usize,
    pub n_items: usize,
    pub max_len: usize,
    /// Exact mean sequence length; zero for an empty database.
    pub avg_len: Ratio<u64>,
}

pub fn stats(db: &AttributedDatabase) -> DbStats {
    let n = db.len();
    let avg_len = if n == 0 { Ratio::from_integer(0) } else { Ratio::new(db.total_events() as u64, n as u64) };
    DbStats { n_sequences: n, n_items: db.item_universe().len(), max_len: db.max_len(), avg_len }
}

/// Parses the SPMF sequence format restricted to single-item itemsets.
///
/// Lines starting with `#`, `%` or `@` are metadata and skipped. A trailing
/// item not closed by `-1` before `-2` is accepted as its own itemset.
pub fn parse_spmf(text: &str) -> Result<AttributedDatabase> {
    let mut sequences = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(['#', '%', '@']) {
            continue;
        }
        let mut seq = Vec::new();
        let mut itemset: Vec<Item> = Vec::new();
        let mut terminated = false;
        for tok in line.split_whitespace() {
            if terminated {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("token `{tok}` after end-of-sequence marker -2"),
                });
            }
            let value: i64 =
                tok.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("malformed token `{tok}`") })?;
            match value {
                -1 | -2 => {
                    match itemset.len() {
                        0 if value == -1 => return Err(Error::Parse { line: line_no, msg: "empty itemset".into() }),
                        0 => {}
                        1 => seq.push(Event::new(itemset[0], Vec::new())),
                        size => return Err(Error::UnsupportedFormat { line: line_no, size }),
                    }
                    itemset.clear();
                    terminated = value == -2;
                }
                v if v >= 0 && v <= Item::MAX as i64 => itemset.push(v as Item),
                _ => return Err(Error::Parse { line: line_no, msg: format!("malformed token `{tok}`") }),
            }
        }
        if !terminated {
            return Err(Error::Parse { line: line_no, msg: "missing end-of-sequence marker -2".into() });
        }
        if seq.is_empty() {
            return Err(Error::Parse { line: line_no, msg: "sequence without items".into() });
        }
        sequences.push(seq);
    }
    AttributedDatabase::new(Vec::new(), sequences)
}

pub fn to_spmf(db: &AttributedDatabase) -> String {
    let mut out = String::new();
    for seq in db.sequences() {
        for item in seq.items() {
            let _ = write!(out, "{item} -1 ");
        }
        out.push_str("-2\n");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeRow {
    pub sid: Sid,
    /// 1-based position inside the sequence.
    pub pos: usize,
    pub values: Vec<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributeTable {
    pub names: Vec<String>,
    pub rows: Vec<AttributeRow>,
}

impl AttributeTable {
    /// Parses the tab-separated `sid pos <attr>...` format.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Ok(Self::default());
        };
        let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "sid" || cols[1] != "pos" {
            return Err(Error::Parse { line: 1, msg: "header must start with `sid\\tpos`".into() });
        }
        let names: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (ln, line) in lines {
            let line_no = ln + 1;
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != names.len() + 2 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {} fields, found {}", names.len() + 2, fields.len()),
                });
            }
            let bad = |f: &str| Error::Parse { line: line_no, msg: format!("malformed value `{f}`") };
            let sid: Sid = fields[0].parse().map_err(|_| bad(fields[0]))?;
            let pos: usize = fields[1].parse().map_err(|_| bad(fields[1]))?;
            let values =
                fields[2..].iter().map(|f| f.parse::<i64>().map_err(|_| bad(f))).collect::<Result<Vec<_>>>()?;
            rows.push(AttributeRow { sid, pos, values });
        }
        Ok(Self { names, rows })
    }

    /// Writes the table with rows sorted by `(sid, pos)`.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<&AttributeRow> = self.rows.iter().collect();
        rows.sort_by_key(|r| (r.sid, r.pos));
        let mut out = String::from("sid\tpos");
        for n in &self.names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for r in rows {
            let _ = write!(out, "{}\t{}", r.sid, r.pos);
            for v in &r.values {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    /// The table describing the attributes already present in `db`.
    pub fn from_database(db: &AttributedDatabase) -> Self {
        let rows = db
            .sequences()
            .iter()
            .flat_map(|s| {
                s.events.iter().enumerate().map(move |(j, e)| AttributeRow {
                    sid: s.sid,
                    pos: j + 1,
                    values: e.attrs.clone(),
                })
            })
            .collect();
        Self { names: db.attribute_names().to_vec(), rows }
    }
}

/// Replaces the attributes of every event with the values from `table`.
///
/// The table must cover each `(sid, pos)` exactly once. When `ordering` is
/// given, that attribute must be strictly increasing along each sequence.
pub fn attach_attributes(
    db: AttributedDatabase,
    table: &AttributeTable,
    ordering: Option<&str>,
) -> Result<AttributedDatabase> {
    let width = table.names.len();
    let mut filled: Vec<Vec<Option<Vec<i64>>>> = db.sequences().iter().map(|s| vec![None; s.len()]).collect();
    for row in &table.rows {
        if row.values.len() != width {
            return Err(Error::Coverage(format!(
                "row (sid={}, pos={}) has {} values, expected {width}",
                row.sid,
                row.pos,
                row.values.len()
            )));
        }
        let slot = (row.sid as usize)
            .checked_sub(1)
            .and_then(|s| filled.get_mut(s))
            .and_then(|seq| seq.get_mut(row.pos.checked_sub(1)?))
            .ok_or_else(|| {
                Error::Coverage(format!("row (sid={}, pos={}) does not match any event", row.sid, row.pos))
            })?;
        if slot.is_some() {
            return Err(Error::Coverage(format!("duplicate row (sid={}, pos={})", row.sid, row.pos)));
        }
        *slot = Some(row.values.clone());
    }
    let mut sequences = Vec::with_capacity(db.len());
    for (seq, values) in db.sequences.into_iter().zip(filled) {
        let mut events = Vec::with_capacity(seq.len());
        for (j, (ev, vals)) in seq.events.into_iter().zip(values).enumerate() {
            let attrs = vals.ok_or_else(|| Error::Coverage(format!("missing row (sid={}, pos={})", seq.sid, j + 1)))?;
            events.push(Event::new(ev.item, attrs));
        }
        sequences.push(events);
    }
    let out = AttributedDatabase::new(table.names.clone(), sequences)?;
    match ordering {
        Some(name) => out.with_ordering(name),
        None => Ok(out),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenerationProfile {
    /// Cumulative click timestamps in seconds: the first click is at 0, each
    /// following click adds a delay in [1, 600], or with probability 5% a
    /// session break in [3600, 36000].
    Time,
    /// Independent uniform integers in [1, 100].
    Uniform1To100,
}

pub const SHORT_DELAY: (i64, i64) = (1, 600);
pub const LONG_DELAY: (i64, i64) = (3_600, 36_000);
pub const LONG_DELAY_PROBABILITY: f64 = 0.05;

impl GenerationProfile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Self::Time),
            "uniform" | "uniform-1-100" => Ok(Self::Uniform1To100),
            other => Err(Error::Argument(format!("unknown generation profile `{other}`"))),
        }
    }
}

/// The three attributes used for click-stream experiments.
pub fn default_generation_columns() -> Vec<(String, GenerationProfile)> {
    vec![
        ("time".into(), GenerationProfile::Time),
        ("price".into(), GenerationProfile::Uniform1To100),
        ("quality".into(), GenerationProfile::Uniform1To100),
    ]
}

/// Generates attribute rows for `db`. Each column draws from its own ChaCha
/// stream so adding a column never perturbs the others.
pub fn generate_attributes(
    db: &AttributedDatabase,
    seed: u64,
    columns: &[(String, GenerationProfile)],
) -> AttributeTable {
    let mut per_column: Vec<Vec<i64>> = Vec::with_capacity(columns.len());
    for (k, (_, profile)) in columns.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut values = Vec::with_capacity(db.total_events());
        for seq in db.sequences() {
            let mut t = 0i64;
            for j in 0..seq.len() {
                let v = match profile {
                    GenerationProfile::Time => {
                        if j > 0 {
                            t += time_delta(&mut rng);
                        }
                        t
                    }
                    GenerationProfile::Uniform1To100 => rng.random_range(1..=100),
                };
                values.push(v);
            }
        }
        per_column.push(values);
    }
    let mut rows = Vec::with_capacity(db.total_events());
    let mut idx = 0;
    for seq in db.sequences() {
        for j in 0..seq.len() {
            rows.push(AttributeRow { sid: seq.sid, pos: j + 1, values: per_column.iter().map(|c| c[idx]).collect() });
            idx += 1;
        }
    }
    AttributeTable { names: columns.iter().map(|(n, _)| n.clone()).collect(), rows }
}

fn time_delta(rng: &mut impl Rng) -> i64 {
    if rng.random_bool(LONG_DELAY_PROBABILITY) {
        rng.random_range(LONG_DELAY.0..=LONG_DELAY.1)
    } else {
        rng.random_range(SHORT_DELAY.0..=SHORT_DELAY.1)
    }
}

/// Attribute-free click-stream-like database: Zipf(1.0) item popularity over
/// `1..=n_items`, sequence lengths uniform in `[1, 2*avg_len - 1]`, items
/// not repeated back-to-back more often than chance.
pub fn synthetic_database(n_sequences: usize, avg_len: usize, n_items: usize, seed: u64) -> AttributedDatabase {
    assert!(avg_len >= 1 && n_items >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(n_items as f64, 1.0).expect("valid zipf parameters");
    let max_len = 2 * avg_len - 1;
    let sequences = (0..n_sequences)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len).map(|_| Event::new(zipf.sample(&mut rng) as Item, Vec::new())).collect()
        })
        .collect();
    AttributedDatabase::new(Vec::new(), sequences).expect("generated sequences are non-empty")
}

/// Three-sequence database with `time` and `price` used throughout the
/// documentation and tests. Items: A = 1, B = 2, C = 3.
pub fn sample_database() -> AttributedDatabase {
    const A: Item = 1;
    const B: Item = 2;
    const C: Item = 3;
    let ev = |i, t, p| Event::new(i, vec![t, p]);
    AttributedDatabase::new(
        vec!["time".into(), "price".into()],
        vec![
            vec![ev(B, 1, 5), ev(B, 3, 3)],
            vec![ev(B, 3, 3), ev(A, 8, 1), ev(B, 9, 3)],
            vec![ev(C, 2, 1), ev(C, 5, 2), ev(A, 8, 3)],
        ],
    )
    .and_then(|db| db.with_ordering("time"))
    .expect("sample database is well formed")
}

/// Distinct items appearing at 1-based position `pos` across the database.
pub fn items_at_position(db: &AttributedDatabase, pos: usize) -> BTreeSet<Item> {
    db.sequences().iter().filter_map(|s| s.events.get(pos.wrapping_sub(1)).map(|e| e.item)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_two_sequences() {
        let db = parse_spmf("1 -1 2 -1 -2\n3 -1 -2").unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.sequences()[0].items().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(db.sequences()[1].items().collect::<Vec<_>>(), vec![3]);
        assert_eq!(db.sequences()[1].sid, 2);
    }

    #[test]
    fn parse_empty() {
        let db = parse_spmf("").unwrap();
        assert!(db.is_empty());
        assert!(db.item_universe().is_empty());
    }

    #[test]
    fn parse_rejects_multi_item_itemset() {
        assert_eq!(parse_spmf("1 2 -1 -2"), Err(Error::UnsupportedFormat { line: 1, size: 2 }));
    }

    #[test]
    fn parse_reports_line_of_bad_token() {
        match parse_spmf("1 -1 -2\n1 x -1 -2") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_spmf("1 -1 -3 -2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_spmf("1 -1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_spmf("1 -1 -2 4"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn parse_skips_metadata() {
        let db = parse_spmf("@CONVERTED_FROM_TEXT\n# comment\n5 -1 -2\n").unwrap();
        assert_eq!(db.len(), 1);
    }

    #[test]
    fn attach_sample_rows() {
        let table = AttributeTable::from_database(&sample_database());
        let plain = AttributedDatabase::from_items(vec![vec![2, 2], vec![2, 1, 2], vec![3, 3, 1]]).unwrap();
        let db = attach_attributes(plain, &table, Some("time")).unwrap();
        let s2 = db.sequence(2).unwrap();
        assert_eq!(s2.events, vec![Event::new(2, vec![3, 3]), Event::new(1, vec![8, 1]), Event::new(2, vec![9, 3])]);
        assert_eq!(db.ordering_attribute(), Some(0));
    }

    #[test]
    fn attach_empty_table_to_empty_db() {
        let db = attach_attributes(AttributedDatabase::default(), &AttributeTable::default(), None).unwrap();
        assert!(db.is_empty());
    }

    #[test]
    fn attach_coverage_errors() {
        let mut table = AttributeTable::from_database(&sample_database());
        let plain = || AttributedDatabase::from_items(vec![vec![2, 2], vec![2, 1, 2], vec![3, 3, 1]]).unwrap();
        table.rows.push(AttributeRow { sid: 4, pos: 1, values: vec![0, 0] });
        assert!(matches!(attach_attributes(plain(), &table, None), Err(Error::Coverage(_))));

        let mut dup = AttributeTable::from_database(&sample_database());
        let first = dup.rows[0].clone();
        dup.rows.push(first);
        assert!(matches!(attach_attributes(plain(), &dup, None), Err(Error::Coverage(_))));

        let mut missing = AttributeTable::from_database(&sample_database());
        missing.rows.pop();
        assert!(matches!(attach_attributes(plain(), &missing, None), Err(Error::Coverage(_))));
    }

    #[test]
    fn attach_ordering_error() {
        let mut table = AttributeTable::from_database(&sample_database());
        table.rows[1].values[0] = 1;
        let plain = AttributedDatabase::from_items(vec![vec![2, 2], vec![2, 1, 2], vec![3, 3, 1]]).unwrap();
        assert_eq!(
            attach_attributes(plain, &table, Some("time")),
            Err(Error::Ordering { attr: "time".into(), sid: 1, pos: 2 })
        );
    }

    #[test]
    fn tsv_roundtrip_sorted() {
        let table = AttributeTable::from_database(&sample_database());
        let text = table.to_tsv();
        assert!(text.starts_with("sid\tpos\ttime\tprice\n1\t1\t1\t5\n"));
        assert_eq!(AttributeTable::parse_tsv(&text).unwrap(), table);
    }

    #[test]
    fn generation_is_deterministic() {
        let db = synthetic_database(50, 5, 20, 3);
        let cols = default_generation_columns();
        assert_eq!(generate_attributes(&db, 11, &cols), generate_attributes(&db, 11, &cols));
        assert_ne!(generate_attributes(&db, 11, &cols), generate_attributes(&db, 12, &cols));
    }

    #[test]
    fn generated_time_is_strictly_increasing() {
        let db = synthetic_database(200, 8, 20, 5);
        let table = generate_attributes(&db, 1, &default_generation_columns());
        assert!(attach_attributes(db, &table, Some("time")).is_ok());
    }

    #[test]
    fn uniform_profile_single_event() {
        let db = AttributedDatabase::from_items(vec![vec![7]]).unwrap();
        for seed in 0..50 {
            let t = generate_attributes(&db, seed, &[("p".into(), GenerationProfile::Uniform1To100)]);
            let v = t.rows[0].values[0];
            assert!((1..=100).contains(&v));
        }
    }

    #[test]
    fn stats_examples() {
        let s = stats(&sample_database());
        assert_eq!((s.n_sequences, s.n_items, s.max_len), (3, 3, 3));
        // lengths 2, 3, 3
        assert_eq!(s.avg_len, Ratio::new(8, 3));

        let empty = stats(&AttributedDatabase::default());
        assert_eq!((empty.n_sequences, empty.n_items, empty.max_len), (0, 0, 0));

        let one = stats(&AttributedDatabase::from_items(vec![vec![1]]).unwrap());
        assert_eq!((one.n_sequences, one.n_items, one.max_len), (1, 1, 1));
        assert_eq!(one.avg_len, Ratio::from_integer(1));
    }

    #[test]
    fn synthetic_shape() {
        let db = synthetic_database(2_000, 10, 1_000, 9);
        let s = stats(&db);
        assert_eq!(s.n_sequences, 2_000);
        assert!(s.max_len <= 19);
        let avg = *s.avg_len.numer() as f64 / *s.avg_len.denom() as f64;
        assert!((avg - 10.0).abs() < 0.5, "avg {avg}");
    }
}
