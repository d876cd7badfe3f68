//! Boundary-marked n-gram cues and the sparse binary cue matrix.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::data::Lexicon;
use crate::error::{Error, Result};
use crate::matrix::Design;

pub const DEFAULT_BOUNDARY: char = '#';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CueSource {
    Orthography,
    Pronunciation,
}

/// One family of cues extracted from a form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// n-grams over the segments, tone digits stripped.
    Segmental,
    /// n-grams over the sequence of tone digits.
    Tritone,
    /// n-grams over segments where the tone-bearing vowel carries its digit.
    ToneMarked,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Segmental => "segmental",
            Channel::Tritone => "tritone",
            Channel::ToneMarked => "tone_marked",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "segmental" => Some(Channel::Segmental),
            "tritone" | "tone" => Some(Channel::Tritone),
            "tone_marked" | "tone-marked" => Some(Channel::ToneMarked),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueScheme {
    pub gram_size: usize,
    pub boundary: char,
    pub source: CueSource,
    /// Non-empty; anything beyond `Segmental` needs tone-annotated input.
    pub channels: Vec<Channel>,
}

impl CueScheme {
    pub fn orthographic(gram_size: usize) -> Self {
        CueScheme { gram_size, boundary: DEFAULT_BOUNDARY, source: CueSource::Orthography, channels: vec![Channel::Segmental] }
    }

    pub fn with_source(mut self, source: CueSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_channels(mut self, channels: Vec<Channel>) -> Self {
        self.channels = channels;
        self
    }

    /// Cues of a single form under this scheme, in extraction order. A
    /// segmental-only scheme takes the form verbatim, digits included.
    pub fn extract(&self, form: &str) -> Result<Vec<String>> {
        if self.channels.is_empty() {
            return Err(Error::Validation("cue scheme has no channels".into()));
        }
        if self.channels == [Channel::Segmental] {
            return extract_ngrams(form, self.gram_size, self.boundary);
        }
        extract_multichannel(form, self.gram_size, self.boundary, &self.channels)
    }
}

fn windows(units: &[String], n: usize, boundary: char) -> Vec<String> {
    let b = boundary.to_string();
    let mut padded = Vec::with_capacity(units.len() + 2);
    padded.push(b.as_str());
    padded.extend(units.iter().map(String::as_str));
    padded.push(b.as_str());
    padded.windows(n).map(|w| w.concat()).collect()
}

fn check_gram(form: &str, units: usize, n: usize) -> Result<()> {
    if form.is_empty() || units == 0 {
        return Err(Error::Validation("cannot extract cues from an empty form".into()));
    }
    if n == 0 {
        return Err(Error::Validation("gram size must be at least 1".into()));
    }
    if units + 2 < n {
        return Err(Error::Validation(format!("`{form}` is too short for {n}-grams")));
    }
    Ok(())
}

/// All length-`n` windows of `boundary + form + boundary`, over unicode
/// scalar values, duplicates preserved.
pub fn extract_ngrams(form: &str, n: usize, boundary: char) -> Result<Vec<String>> {
    let units: Vec<String> = form.chars().map(String::from).collect();
    check_gram(form, units.len(), n)?;
    Ok(windows(&units, n, boundary))
}

fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u' | 'v' | 'ü')
}

/// Splits a tone-annotated string like `wen4ti2` into syllables, each a list
/// of segments plus an optional trailing tone digit.
fn syllables(form: &str) -> Vec<(Vec<char>, Option<char>)> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for c in form.chars() {
        if c.is_ascii_digit() {
            out.push((std::mem::take(&mut current), Some(c)));
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push((current, None));
    }
    out
}

/// Pinyin placement: `a`, else `e`, else the `o` of `ou`, else the last vowel.
/// Syllables without a vowel put the tone on their last segment.
fn tone_bearer(segments: &[char]) -> Option<usize> {
    let lower: Vec<char> = segments.iter().map(|c| c.to_ascii_lowercase()).collect();
    if let Some(i) = lower.iter().position(|&c| c == 'a') {
        return Some(i);
    }
    if let Some(i) = lower.iter().position(|&c| c == 'e') {
        return Some(i);
    }
    if let Some(i) = lower.windows(2).position(|w| w == ['o', 'u']) {
        return Some(i);
    }
    lower.iter().rposition(|&c| is_vowel(c)).or(segments.len().checked_sub(1))
}

/// Cues from one channel of a tone-annotated form.
pub fn extract_channel(form: &str, n: usize, boundary: char, channel: Channel) -> Result<Vec<String>> {
    let syls = syllables(form);
    let has_tones = syls.iter().any(|(_, t)| t.is_some());
    if channel != Channel::Segmental && !has_tones {
        return Err(Error::Validation(format!("`{form}` carries no tone digits for the {} channel", channel.name())));
    }
    let units: Vec<String> = match channel {
        Channel::Segmental => syls.iter().flat_map(|(s, _)| s.iter().map(|c| c.to_string())).collect(),
        Channel::Tritone => syls.iter().filter_map(|(_, t)| t.map(String::from)).collect(),
        Channel::ToneMarked => {
            let mut units = Vec::new();
            for (segs, tone) in &syls {
                let bearer = tone.and_then(|_| tone_bearer(segs));
                for (i, c) in segs.iter().enumerate() {
                    let mut unit = c.to_string();
                    if Some(i) == bearer {
                        unit.push(tone.expect("bearer implies tone"));
                    }
                    units.push(unit);
                }
            }
            units
        }
    };
    check_gram(form, units.len(), n)?;
    Ok(windows(&units, n, boundary))
}

/// Union of the requested channels' cues, channel by channel.
///
/// Channels draw on different alphabets, so cue strings from different
/// channels coincide only when they encode the same unit sequence.
pub fn extract_multichannel(form: &str, n: usize, boundary: char, channels: &[Channel]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for &channel in channels {
        out.extend(extract_channel(form, n, boundary, channel)?);
    }
    Ok(out)
}

/// Sparse binary word-by-cue matrix in compressed row form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    cues: Vec<String>,
    index: HashMap<String, usize>,
}

impl CueMatrix {
    /// Builds from per-row column lists. Columns are sorted and deduplicated;
    /// every column must be used by at least one row.
    pub fn from_rows(rows: Vec<Vec<usize>>, cues: Vec<String>) -> Result<Self> {
        let r = cues.len();
        let mut used = vec![false; r];
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable();
            row.dedup();
            if row.is_empty() {
                return Err(Error::Validation(format!("row {i} has no cues")));
            }
            if let Some(&j) = row.iter().find(|&&j| j >= r) {
                return Err(Error::Dimension(format!("row {i} references cue {j} of {r}")));
            }
            for &j in &row {
                used[j] = true;
            }
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(Error::Validation(format!("cue {j} (`{}`) occurs in no word", cues[j])));
        }
        let mut index = HashMap::with_capacity(r);
        for (j, c) in cues.iter().enumerate() {
            if index.insert(c.clone(), j).is_some() {
                return Err(Error::Validation(format!("duplicate cue `{c}`")));
            }
        }
        Ok(CueMatrix { row_ptr, cols, cues, index })
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cues.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Sorted cue columns present in word `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn cue(&self, j: usize) -> &str {
        &self.cues[j]
    }

    pub fn cues(&self) -> &[String] {
        &self.cues
    }

    pub fn index_of(&self, cue: &str) -> Option<usize> {
        self.index.get(cue).copied()
    }

    /// Writes `m r`, then `id idx…` per word; the sidecar holds `idx<TAB>cue`.
    pub fn export(&self, matrix_path: &Path, index_path: &Path) -> Result<()> {
        let file = File::create(matrix_path).map_err(|e| Error::io(matrix_path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(matrix_path, e);
        writeln!(w, "{} {}", self.rows(), self.cols()).map_err(io)?;
        for i in 0..self.rows() {
            write!(w, "{i}").map_err(io)?;
            for j in self.row(i) {
                write!(w, " {j}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)?;

        let file = File::create(index_path).map_err(|e| Error::io(index_path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(index_path, e);
        for (j, c) in self.cues.iter().enumerate() {
            writeln!(w, "{j}\t{c}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn import(matrix_path: &Path, index_path: &Path) -> Result<Self> {
        let file = File::open(index_path).map_err(|e| Error::io(index_path, e))?;
        let mut cues = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(index_path, e))?;
            let (idx, cue) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(index_path, n as u64 + 1, "expected `idx<TAB>cue`"))?;
            if idx.parse::<usize>().ok() != Some(cues.len()) {
                return Err(Error::parse(index_path, n as u64 + 1, format!("expected index {}", cues.len())));
            }
            cues.push(cue.to_string());
        }

        let file = File::open(matrix_path).map_err(|e| Error::io(matrix_path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(matrix_path, 1, "missing `m r` header"))?
            .map_err(|e| Error::io(matrix_path, e))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| Error::parse(matrix_path, 1, "bad header"))?;
        let [m, r] = dims[..] else {
            return Err(Error::parse(matrix_path, 1, "expected `m r`"));
        };
        if r != cues.len() {
            return Err(Error::Dimension(format!("matrix declares {r} cues, index lists {}", cues.len())));
        }
        let mut rows = Vec::with_capacity(m);
        for (n, line) in lines.enumerate() {
            let line_no = n as u64 + 2;
            let line = line.map_err(|e| Error::io(matrix_path, e))?;
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| Error::parse(matrix_path, line_no, "non-integer entry"))?;
            if nums.first() != Some(&rows.len()) {
                return Err(Error::parse(matrix_path, line_no, format!("expected row id {}", rows.len())));
            }
            rows.push(nums[1..].to_vec());
        }
        if rows.len() != m {
            return Err(Error::Dimension(format!("header declares {m} rows, found {}", rows.len())));
        }
        Self::from_rows(rows, cues)
    }
}

impl Design for CueMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn row_into(&self, i: usize, buf: &mut Vec<(usize, f64)>) {
        buf.clear();
        buf.extend(self.row(i).iter().map(|&j| (j, 1.0)));
    }

    fn all_finite(&self) -> bool {
        true
    }

    fn weighted_gram(&self, weights: Option<&[f64]>) -> nalgebra::DMatrix<f64> {
        let r = self.cols();
        let mut gram = nalgebra::DMatrix::zeros(r, r);
        for i in 0..self.rows() {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            let row = self.row(i);
            for &k in row {
                let mut col = gram.column_mut(k);
                for &j in row {
                    col[j] += w;
                }
            }
        }
        gram
    }
}

/// Cue matrix for a lexicon; columns are numbered by first appearance.
pub fn build_cue_matrix(lexicon: &Lexicon, scheme: &CueScheme) -> Result<CueMatrix> {
    let grams: Vec<Vec<String>> = lexicon
        .entries()
        .par_iter()
        .map(|e| {
            let text = match scheme.source {
                CueSource::Orthography => e.form.as_str(),
                CueSource::Pronunciation => e.pronunciation.as_deref().ok_or_else(|| {
                    Error::Validation(format!("entry {} (`{}`) has no pronunciation", e.id, e.form))
                })?,
            };
            let grams = scheme
                .extract(text)
                .map_err(|err| Error::Validation(format!("entry {} (`{}`): {err}", e.id, e.form)))?;
            if grams.is_empty() {
                return Err(Error::Validation(format!("entry {} (`{}`) yields no cues", e.id, e.form)));
            }
            Ok(grams)
        })
        .collect::<Result<_>>()?;

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cues = Vec::new();
    let mut rows = Vec::with_capacity(grams.len());
    for word in grams {
        let mut row = Vec::with_capacity(word.len());
        for g in word {
            let next = cues.len();
            let j = *index.entry(g).or_insert_with_key(|g| {
                cues.push(g.clone());
                next
            });
            row.push(j);
        }
        rows.push(row);
    }
    CueMatrix::from_rows(rows, cues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bigrams_of_aap() {
        assert_eq!(extract_ngrams("aap", 2, '#').unwrap(), strs(&["#a", "aa", "ap", "p#"]));
    }

    #[test]
    fn disc_bigrams() {
        assert_eq!(extract_ngrams("TIN", 2, '#').unwrap(), strs(&["#T", "TI", "IN", "N#"]));
    }

    #[test]
    fn single_letter_and_too_short() {
        assert_eq!(extract_ngrams("a", 2, '#').unwrap(), strs(&["#a", "a#"]));
        assert_eq!(extract_ngrams("a", 3, '#').unwrap(), strs(&["#a#"]));
        assert!(extract_ngrams("a", 4, '#').is_err());
        assert!(extract_ngrams("", 2, '#').is_err());
        assert!(extract_ngrams("ab", 0, '#').is_err());
    }

    #[test]
    fn grams_are_unicode_scalars() {
        assert_eq!(extract_ngrams("né", 2, '#').unwrap(), strs(&["#n", "né", "é#"]));
    }

    #[test]
    fn mandarin_channels() {
        let seg = extract_channel("wen4ti2", 3, '#', Channel::Segmental).unwrap();
        assert_eq!(seg, strs(&["#we", "wen", "ent", "nti", "ti#"]));
        let tones = extract_channel("wen4ti2", 3, '#', Channel::Tritone).unwrap();
        assert_eq!(tones, strs(&["#42", "42#"]));
        let marked = extract_channel("wen4ti2", 3, '#', Channel::ToneMarked).unwrap();
        assert_eq!(marked, strs(&["#we4", "we4n", "e4nt", "nti2", "ti2#"]));
        let all = extract_multichannel("wen4ti2", 3, '#', &[Channel::Segmental, Channel::Tritone, Channel::ToneMarked]).unwrap();
        assert_eq!(all.len(), 12);
    }

    #[test]
    fn tone_placement() {
        let marked = extract_channel("hou3", 2, '#', Channel::ToneMarked).unwrap();
        assert_eq!(marked, strs(&["#h", "ho3", "o3u", "u#"]));
        let marked = extract_channel("gui4", 2, '#', Channel::ToneMarked).unwrap();
        assert_eq!(marked, strs(&["#g", "gu", "ui4", "i4#"]));
    }

    #[test]
    fn tone_channels_need_digits() {
        assert!(extract_channel("wenti", 3, '#', Channel::Tritone).is_err());
        assert!(extract_channel("wenti", 3, '#', Channel::ToneMarked).is_err());
    }

    #[test]
    fn matrix_for_single_word() {
        let lex = Lexicon::from_forms([("aa", 1)]);
        let c = build_cue_matrix(&lex, &CueScheme::orthographic(2)).unwrap();
        assert_eq!((c.rows(), c.cols()), (1, 3));
        assert_eq!(c.cues(), &strs(&["#a", "aa", "a#"])[..]);
        assert_eq!(c.row(0), &[0, 1, 2]);
    }

    #[test]
    fn repeated_grams_code_presence() {
        let lex = Lexicon::from_forms([("aaa", 1)]);
        let c = build_cue_matrix(&lex, &CueScheme::orthographic(2)).unwrap();
        assert_eq!(c.cols(), 3);
        assert_eq!(c.nnz(), 3);
    }

    #[test]
    fn pronunciation_source_requires_transcription() {
        let lex = Lexicon::new(vec![("thing", 1, Some("TIN".to_string())), ("the", 1, None)]);
        let scheme = CueScheme::orthographic(2).with_source(CueSource::Pronunciation);
        let err = build_cue_matrix(&lex, &scheme).unwrap_err();
        assert!(err.to_string().contains("`the`"));
        let ok = Lexicon::new(vec![("thing", 1, Some("TIN".to_string()))]);
        assert_eq!(build_cue_matrix(&ok, &scheme).unwrap().cues(), &strs(&["#T", "TI", "IN", "N#"])[..]);
    }

    #[test]
    fn short_word_is_an_error_naming_the_entry() {
        let lex = Lexicon::from_forms([("abc", 1), ("a", 1)]);
        let err = build_cue_matrix(&lex, &CueScheme::orthographic(4)).unwrap_err();
        assert!(err.to_string().contains("entry 1"));
    }

    #[test]
    fn export_import_round_trip() {
        let lex = Lexicon::from_forms([("aap", 1), ("pap", 2), ("aap", 3)]);
        let c = build_cue_matrix(&lex, &CueScheme::orthographic(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (mp, ip) = (dir.path().join("c.txt"), dir.path().join("c.idx"));
        c.export(&mp, &ip).unwrap();
        assert_eq!(CueMatrix::import(&mp, &ip).unwrap(), c);
    }

    #[test]
    fn orphan_columns_rejected() {
        assert!(CueMatrix::from_rows(vec![vec![0]], strs(&["a", "b"])).is_err());
    }

    proptest! {
        #[test]
        fn window_count_and_popcount(form in "[a-d]{1,8}", n in 1usize..5) {
            let len = form.chars().count();
            match extract_ngrams(&form, n, '#') {
                Ok(grams) => {
                    prop_assert_eq!(grams.len(), len + 3 - n);
                    let lex = Lexicon::from_forms([(form.clone(), 1), (form.clone(), 2)]);
                    let c = build_cue_matrix(&lex, &CueScheme::orthographic(n)).unwrap();
                    let distinct: std::collections::HashSet<_> = grams.iter().collect();
                    prop_assert_eq!(c.row(0).len(), distinct.len());
                    prop_assert_eq!(c.row(0), c.row(1));
                    for j in 0..c.cols() {
                        prop_assert_eq!(c.index_of(c.cue(j)), Some(j));
                    }
                    prop_assert_eq!(build_cue_matrix(&lex, &CueScheme::orthographic(n)).unwrap(), c);
                }
                Err(_) => prop_assert!(len + 2 < n),
            }
        }
    }
}
