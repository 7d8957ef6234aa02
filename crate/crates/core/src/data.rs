//! Feature and preference ingestion, the stratified 3:1 split, and pair
//! generation under the three labeling strategies.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::numerics::{Matrix, SeededRng};
use crate::tsv::{self, fmt_real};
use crate::{Error, Result};

/// Song ids mapped to equal-length feature vectors, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    entries: IndexMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, features: Vec<f64>) -> Result<()> {
        let id = id.into();
        if features.len() != self.dim {
            return Err(Error::shape("feature vector", self.dim, features.len()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "song `{id}` has non-finite features"
            )));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::InvalidInput(format!("duplicate song id `{id}`")));
        }
        self.entries.insert(id, features);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Stacks the rows for `ids` into a `len × dim` matrix.
    pub fn matrix_for<S: AsRef<str>>(&self, ids: &[S]) -> Result<Matrix> {
        let mut values = Vec::with_capacity(ids.len() * self.dim);
        for id in ids {
            let row = self
                .get(id.as_ref())
                .ok_or_else(|| Error::UnknownSong(id.as_ref().to_owned()))?;
            values.extend_from_slice(row);
        }
        Matrix::from_vec(ids.len(), self.dim, values)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("song_id");
        for k in 0..self.dim {
            out.push_str(&format!("\tf{k}"));
        }
        out.push('\n');
        for (id, row) in &self.entries {
            out.push_str(id);
            for v in row {
                out.push('\t');
                out.push_str(&fmt_real(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        tsv::write(path.as_ref(), &self.to_tsv())
    }
}

/// Reads a feature TSV: header `song_id<TAB>f0<TAB>f1...`, one song per row.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let file = tsv::read(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    if file.header.first().map(String::as_str) != Some("song_id") || file.header.len() < 2 {
        return Err(parse_err(1, "header must be `song_id<TAB>f0...`".into()));
    }
    let dim = file.header.len() - 1;
    if file.rows.is_empty() {
        return Err(parse_err(2, "no feature rows".into()));
    }
    let mut table = FeatureTable::new(dim);
    for (line, cells) in file.rows {
        if cells.len() != dim + 1 {
            return Err(parse_err(
                line,
                format!("expected {dim} feature values, found {}", cells.len() - 1),
            ));
        }
        let id = cells[0].clone();
        let values = cells[1..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("`{c}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if table.contains(&id) {
            return Err(parse_err(line, format!("duplicate song id `{id}`")));
        }
        table.insert(id, values)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preference {
    Like,
    Dislike,
}

impl Preference {
    pub fn is_like(self) -> bool {
        self == Preference::Like
    }

    /// 1 for LIKE, 0 for DISLIKE.
    pub fn as_target(self) -> u8 {
        u8::from(self.is_like())
    }

    pub fn flipped(self) -> Self {
        match self {
            Preference::Like => Preference::Dislike,
            Preference::Dislike => Preference::Like,
        }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preference::Like => "like",
            Preference::Dislike => "dislike",
        })
    }
}

impl FromStr for Preference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "like" => Ok(Preference::Like),
            "dislike" => Ok(Preference::Dislike),
            other => Err(Error::InvalidInput(format!("unknown label `{other}`"))),
        }
    }
}

/// One user's binary judgments.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceSet {
    pub user_id: String,
    labels: IndexMap<String, Preference>,
}

impl PreferenceSet {
    pub fn new(user_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            labels: IndexMap::new(),
        }
    }

    pub fn from_pairs<I, S>(user_id: impl Into<String>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Preference)>,
        S: Into<String>,
    {
        let mut set = Self::new(user_id);
        for (id, p) in pairs {
            set.insert(id, p)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, id: impl Into<String>, pref: Preference) -> Result<()> {
        let id = id.into();
        if self.labels.contains_key(&id) {
            return Err(Error::InvalidInput(format!("song `{id}` labeled twice")));
        }
        self.labels.insert(id, pref);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Preference> {
        self.labels.get(id).copied()
    }

    pub fn label(&self, id: &str) -> Result<Preference> {
        self.get(id)
            .ok_or_else(|| Error::UnknownSong(id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Preference)> {
        self.labels.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    /// `(likes, dislikes)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let likes = self.labels.values().filter(|p| p.is_like()).count();
        (likes, self.labels.len() - likes)
    }

    /// Labels restricted to `ids`, in the order given.
    pub fn subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<PreferenceSet> {
        let mut out = PreferenceSet::new(self.user_id.clone());
        for id in ids {
            out.insert(id.as_ref(), self.label(id.as_ref())?)?;
        }
        Ok(out)
    }

    /// Every labeled song must exist in `features`; both classes need at
    /// least two songs.
    pub fn validate(&self, features: &FeatureTable) -> Result<()> {
        if let Some(missing) = self.ids().find(|id| !features.contains(id)) {
            return Err(Error::UnknownSong(missing.to_owned()));
        }
        let (likes, dislikes) = self.class_counts();
        if likes < 2 || dislikes < 2 {
            return Err(Error::InvalidInput(format!(
                "user `{}` needs at least 2 likes and 2 dislikes, has {likes} and {dislikes}",
                self.user_id
            )));
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("song_id\tlabel\n");
        for (id, p) in &self.labels {
            out.push_str(&format!("{id}\t{p}\n"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        tsv::write(path.as_ref(), &self.to_tsv())
    }
}

/// Reads a preference TSV with header `song_id<TAB>label`.
pub fn load_preferences(
    path: impl AsRef<Path>,
    user_id: impl Into<String>,
) -> Result<PreferenceSet> {
    let path = path.as_ref();
    let file = tsv::read(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    if file.header != ["song_id", "label"] {
        return Err(parse_err(1, "header must be `song_id<TAB>label`".into()));
    }
    let mut set = PreferenceSet::new(user_id);
    for (line, cells) in file.rows {
        if cells.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 columns, found {}", cells.len()),
            ));
        }
        let pref = cells[1]
            .parse::<Preference>()
            .map_err(|e| parse_err(line, e.to_string()))?;
        set.insert(cells[0].clone(), pref)
            .map_err(|e| parse_err(line, e.to_string()))?;
    }
    if set.is_empty() {
        return Err(parse_err(2, "no preference rows".into()));
    }
    Ok(set)
}

/// Disjoint train/test song lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
}

impl SplitSpec {
    /// Audit manifest: `song_id<TAB>{train|test}` in preference-file order.
    pub fn manifest_tsv(&self, prefs: &PreferenceSet) -> String {
        let train: std::collections::HashSet<&str> =
            self.train_ids.iter().map(String::as_str).collect();
        let mut out = String::from("song_id\tsplit\n");
        for id in prefs.ids() {
            let side = if train.contains(id) { "train" } else { "test" };
            out.push_str(&format!("{id}\t{side}\n"));
        }
        out
    }
}

/// `round(fraction · n)` with halves rounded up.
fn round_half_up(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Shuffles each class with the seed and splits it at `fraction`, halves
/// rounded toward the first side. Returns `(first, second)` preserving the
/// order of `ids`.
pub(crate) fn stratified_partition(
    ids: &[String],
    prefs: &PreferenceSet,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut rng = SeededRng::new(seed);
    let mut first = std::collections::HashSet::new();
    for class in [Preference::Like, Preference::Dislike] {
        let mut members = Vec::new();
        for id in ids {
            if prefs.label(id)? == class {
                members.push(id.as_str());
            }
        }
        rng.shuffle(&mut members);
        let n_first = round_half_up(fraction, members.len());
        first.extend(members.into_iter().take(n_first));
    }
    Ok(ids
        .iter()
        .cloned()
        .partition(|id| first.contains(id.as_str())))
}

/// Stratified 3:1 split; each class sends `round_half_up(0.75·n)` songs to
/// train.
pub fn split_train_test(prefs: &PreferenceSet, seed: u64) -> Result<SplitSpec> {
    let (likes, dislikes) = prefs.class_counts();
    if likes < 2 || dislikes < 2 {
        return Err(Error::InvalidInput(format!(
            "split needs at least 2 songs per class, got {likes} likes and {dislikes} dislikes"
        )));
    }
    let ids: Vec<String> = prefs.ids().map(str::to_owned).collect();
    let (train_ids, test_ids) = stratified_partition(&ids, prefs, 0.75, seed)?;
    Ok(SplitSpec {
        train_ids,
        test_ids,
        seed,
    })
}

/// Which same-preference pairs are labeled `y = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Both like-like and dislike-dislike pairs attract.
    PN,
    /// Only like-like pairs attract.
    P,
    /// Only dislike-dislike pairs attract.
    N,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::PN, Strategy::P, Strategy::N];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::PN => "PN",
            Strategy::P => "P",
            Strategy::N => "N",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        match t.strip_prefix("CLEP-").unwrap_or(&t) {
            "PN" => Ok(Strategy::PN),
            "P" => Ok(Strategy::P),
            "N" => Ok(Strategy::N),
            _ => Err(Error::InvalidInput(format!("unknown strategy `{s}`"))),
        }
    }
}

pub fn pair_label(a: Preference, b: Preference, strategy: Strategy) -> u8 {
    let attract = match strategy {
        Strategy::PN => a == b,
        Strategy::P => a == Preference::Like && b == Preference::Like,
        Strategy::N => a == Preference::Dislike && b == Preference::Dislike,
    };
    u8::from(attract)
}

/// Unordered song pair, stored with `left < right`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledPair {
    pub left: String,
    pub right: String,
    pub y: u8,
}

impl LabeledPair {
    pub fn new(a: &str, b: &str, y: u8) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidInput(format!(
                "song `{a}` paired with itself"
            )));
        }
        let (left, right) = if a < b { (a, b) } else { (b, a) };
        Ok(Self {
            left: left.to_owned(),
            right: right.to_owned(),
            y,
        })
    }
}

/// Pair between two positions of a [`PairBatch`]'s song list, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexedPair {
    pub a: usize,
    pub b: usize,
    pub y: u8,
}

/// One group of songs and all unordered pairs within it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    pub songs: Vec<String>,
    pub pairs: Vec<IndexedPair>,
}

impl PairBatch {
    pub fn from_group(
        songs: Vec<String>,
        prefs: &PreferenceSet,
        strategy: Strategy,
    ) -> Result<Self> {
        let labels = songs
            .iter()
            .map(|s| prefs.label(s))
            .collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::with_capacity(songs.len() * songs.len().saturating_sub(1) / 2);
        for a in 0..songs.len() {
            for b in a + 1..songs.len() {
                pairs.push(IndexedPair {
                    a,
                    b,
                    y: pair_label(labels[a], labels[b], strategy),
                });
            }
        }
        Ok(Self { songs, pairs })
    }

    pub fn labeled_pairs(&self) -> Vec<LabeledPair> {
        self.pairs
            .iter()
            .map(|p| {
                LabeledPair::new(&self.songs[p.a], &self.songs[p.b], p.y).expect("distinct songs")
            })
            .collect()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.y == 1).count()
    }
}

/// Pair batches for one epoch.
///
/// Train songs are shuffled with a stream keyed by `(seed, epoch)` and cut
/// into groups of `batch_songs`; a trailing single song joins the previous
/// group so that every group holds at least two songs.
pub fn make_pair_batches<S: AsRef<str>>(
    train_ids: &[S],
    prefs: &PreferenceSet,
    strategy: Strategy,
    batch_songs: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<PairBatch>> {
    if batch_songs < 2 {
        return Err(Error::Config(format!(
            "batch_songs must be >= 2, got {batch_songs}"
        )));
    }
    if train_ids.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "pair generation needs at least 2 train songs, got {}",
            train_ids.len()
        )));
    }
    let mut order: Vec<String> = train_ids.iter().map(|s| s.as_ref().to_owned()).collect();
    SeededRng::new(seed).split(epoch as u64).shuffle(&mut order);

    let mut groups: Vec<Vec<String>> = order.chunks(batch_songs).map(<[String]>::to_vec).collect();
    if groups.len() > 1 && groups.last().is_some_and(|g| g.len() == 1) {
        let tail = groups.pop().expect("non-empty");
        groups.last_mut().expect("non-empty").extend(tail);
    }
    groups
        .into_iter()
        .map(|g| PairBatch::from_group(g, prefs, strategy))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn prefs(likes: usize, dislikes: usize) -> PreferenceSet {
        let mut p = PreferenceSet::new("u");
        for i in 0..likes + dislikes {
            let pref = if i < likes {
                Preference::Like
            } else {
                Preference::Dislike
            };
            p.insert(format!("s{i:03}"), pref).unwrap();
        }
        p
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn header(dim: usize) -> String {
        let mut h = String::from("song_id");
        for k in 0..dim {
            h.push_str(&format!("\tf{k}"));
        }
        h
    }

    #[test]
    fn loads_512_dim_table() {
        let row = |id: &str| {
            let vals: Vec<String> = (0..512).map(|k| format!("{}", k as f64 * 1e-3)).collect();
            format!("{id}\t{}", vals.join("\t"))
        };
        let f = write_tmp(&format!("{}\n{}\n{}\n", header(512), row("a"), row("b")));
        let t = load_features(f.path()).unwrap();
        assert_eq!(t.dim(), 512);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b").unwrap()[3], 0.003);
    }

    #[test]
    fn rejects_empty_body() {
        let f = write_tmp(&format!("{}\n", header(4)));
        let err = load_features(f.path()).unwrap_err();
        assert!(err.to_string().contains("no feature rows"), "{err}");
    }

    #[test]
    fn rejects_ragged_row_with_line() {
        let short: Vec<String> = (0..511).map(|_| "1.0".to_owned()).collect();
        let f = write_tmp(&format!("{}\nx\t{}\n", header(512), short.join("\t")));
        let err = load_features(f.path()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_non_numeric_and_duplicates() {
        let f = write_tmp("song_id\tf0\na\t1e-3\nb\tabc\n");
        assert!(matches!(
            load_features(f.path()),
            Err(Error::Parse { line: 3, .. })
        ));
        let f = write_tmp("song_id\tf0\na\t1\na\t2\n");
        assert!(matches!(
            load_features(f.path()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            load_features("/nonexistent/features.tsv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn preferences_parse_case_insensitively() {
        let f = write_tmp("song_id\tlabel\na\tLIKE\nb\tDislike\n");
        let p = load_preferences(f.path(), "u1").unwrap();
        assert_eq!(p.get("a"), Some(Preference::Like));
        assert_eq!(p.get("b"), Some(Preference::Dislike));
        let f = write_tmp("song_id\tlabel\na\tmeh\n");
        assert!(matches!(
            load_preferences(f.path(), "u"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn validate_checks_membership_and_class_sizes() {
        let mut t = FeatureTable::new(1);
        for i in 0..4 {
            t.insert(format!("s{i:03}"), vec![i as f64]).unwrap();
        }
        assert!(prefs(2, 2).validate(&t).is_ok());
        assert!(prefs(3, 1).validate(&t).is_err());
        assert!(matches!(
            prefs(3, 2).validate(&t),
            Err(Error::UnknownSong(_))
        ));
    }

    #[test]
    fn split_200_balanced() {
        let p = prefs(100, 100);
        let s = split_train_test(&p, 1).unwrap();
        assert_eq!(s.train_ids.len(), 150);
        assert_eq!(s.test_ids.len(), 50);
        let train_likes = s
            .train_ids
            .iter()
            .filter(|id| p.get(id) == Some(Preference::Like))
            .count();
        assert_eq!(train_likes, 75);
        assert_eq!(s, split_train_test(&p, 1).unwrap());
        assert_ne!(s.train_ids, split_train_test(&p, 2).unwrap().train_ids);
    }

    #[test]
    fn split_rounds_halves_to_train() {
        // 98 → 73.5 → 74, 102 → 76.5 → 77
        let s = split_train_test(&prefs(98, 102), 3).unwrap();
        assert_eq!(s.train_ids.len(), 151);
        assert_eq!(s.test_ids.len(), 49);
        assert!(split_train_test(&prefs(1, 10), 0).is_err());
    }

    #[test]
    fn pair_labels() {
        use Preference::*;
        assert_eq!(pair_label(Like, Like, Strategy::PN), 1);
        assert_eq!(pair_label(Dislike, Dislike, Strategy::PN), 1);
        assert_eq!(pair_label(Like, Dislike, Strategy::PN), 0);
        assert_eq!(pair_label(Like, Like, Strategy::P), 1);
        assert_eq!(pair_label(Dislike, Dislike, Strategy::P), 0);
        assert_eq!(pair_label(Dislike, Like, Strategy::P), 0);
        assert_eq!(pair_label(Dislike, Dislike, Strategy::N), 1);
        assert_eq!(pair_label(Like, Like, Strategy::N), 0);
    }

    #[test]
    fn group_sizes_give_binomial_pair_counts() {
        let p = prefs(10, 10);
        let ids: Vec<String> = p.ids().map(str::to_owned).collect();
        let batches = make_pair_batches(&ids[..16], &p, Strategy::PN, 16, 5, 0).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].pairs.len(), 120);
        let batches = make_pair_batches(&ids[..4], &p, Strategy::PN, 16, 5, 0).unwrap();
        assert_eq!(batches[0].pairs.len(), 6);
    }

    #[test]
    fn trailing_singleton_is_merged() {
        let p = prefs(10, 7);
        let ids: Vec<String> = p.ids().map(str::to_owned).collect();
        let batches = make_pair_batches(&ids, &p, Strategy::N, 16, 5, 0).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].songs.len(), 17);
        assert!(make_pair_batches(&ids[..1], &p, Strategy::N, 16, 5, 0).is_err());
        assert!(make_pair_batches(&ids, &p, Strategy::N, 1, 5, 0).is_err());
    }

    #[test]
    fn batches_are_deterministic_per_epoch() {
        let p = prefs(30, 30);
        let ids: Vec<String> = p.ids().map(str::to_owned).collect();
        let a = make_pair_batches(&ids, &p, Strategy::P, 16, 9, 3).unwrap();
        assert_eq!(
            a,
            make_pair_batches(&ids, &p, Strategy::P, 16, 9, 3).unwrap()
        );
        assert_ne!(
            a,
            make_pair_batches(&ids, &p, Strategy::P, 16, 9, 4).unwrap()
        );
    }

    #[test]
    fn labeled_pairs_are_canonical() {
        let pair = LabeledPair::new("b", "a", 1).unwrap();
        assert_eq!((pair.left.as_str(), pair.right.as_str()), ("a", "b"));
        assert!(LabeledPair::new("a", "a", 0).is_err());
    }

    #[test]
    fn manifest_lists_every_song() {
        let p = prefs(4, 4);
        let s = split_train_test(&p, 0).unwrap();
        let m = s.manifest_tsv(&p);
        assert_eq!(m.lines().count(), 9);
        assert_eq!(m.matches("\ttest").count(), s.test_ids.len());
    }
}
