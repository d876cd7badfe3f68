//! Lexicons, embedding tables and event streams: loading, alignment and
//! synthetic generation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::SemanticMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub id: usize,
    pub form: String,
    pub frequency: u64,
    /// Phonological transcription, e.g. CELEX DISC.
    pub pronunciation: Option<String>,
}

/// Ordered word list. Entry ids always equal their position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    /// `.tsv` and `.tab` are tab-separated, everything else comma-separated.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => TableFormat::Tsv,
            _ => TableFormat::Csv,
        }
    }

    fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }
}

impl Lexicon {
    /// Builds a lexicon from `(form, frequency, pronunciation)` triples,
    /// assigning contiguous ids. Empty pronunciations are stored as `None`.
    pub fn new<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = (S, u64, Option<String>)>,
        S: Into<String>,
    {
        let entries = items
            .into_iter()
            .enumerate()
            .map(|(id, (form, frequency, pron))| LexiconEntry {
                id,
                form: form.into(),
                frequency,
                pronunciation: pron.filter(|p| !p.is_empty()),
            })
            .collect();
        Lexicon { entries }
    }

    pub fn from_forms<S: Into<String>>(items: impl IntoIterator<Item = (S, u64)>) -> Self {
        Self::new(items.into_iter().map(|(f, n)| (f, n, None)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&LexiconEntry> {
        self.entries.get(id)
    }

    pub fn frequencies(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.frequency).collect()
    }

    /// First row carrying `form`; homographs resolve to their earliest row.
    pub fn first_id_of(&self, form: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.form == form)
    }

    pub(crate) fn form_index(&self) -> HashMap<&str, usize> {
        let mut index = HashMap::with_capacity(self.len());
        for e in &self.entries {
            index.entry(e.form.as_str()).or_insert(e.id);
        }
        index
    }

    /// Same words with new frequencies.
    pub fn with_frequencies(&self, freqs: &[u64]) -> Result<Lexicon> {
        if freqs.len() != self.len() {
            return Err(Error::Dimension(format!("{} frequencies for {} words", freqs.len(), self.len())));
        }
        let mut out = self.clone();
        for (e, &f) in out.entries.iter_mut().zip(freqs) {
            e.frequency = f;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path, format: TableFormat) -> Result<()> {
        let with_pron = self.entries.iter().any(|e| e.pronunciation.is_some());
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::WriterBuilder::new().delimiter(format.delimiter()).from_writer(file);
        let csv_err = |e: csv::Error| Error::Validation(format!("{}: {e}", path.display()));
        if with_pron {
            w.write_record(["form", "frequency", "pronunciation"]).map_err(csv_err)?;
        } else {
            w.write_record(["form", "frequency"]).map_err(csv_err)?;
        }
        for e in &self.entries {
            let freq = e.frequency.to_string();
            if with_pron {
                let pron = e.pronunciation.as_deref().unwrap_or("");
                w.write_record([e.form.as_str(), freq.as_str(), pron]).map_err(csv_err)?;
            } else {
                w.write_record([e.form.as_str(), freq.as_str()]).map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads a lexicon table with a `form,frequency[,pronunciation]` header.
pub fn load_lexicon(path: &Path, format: TableFormat) -> Result<Lexicon> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().delimiter(format.delimiter()).from_reader(file);
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let form_col = column("form").ok_or_else(|| Error::parse(path, 1, "header lacks a `form` column"))?;
    let freq_col = column("frequency").ok_or_else(|| Error::parse(path, 1, "header lacks a `frequency` column"))?;
    let pron_col = column("pronunciation");

    let mut items = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let form = record.get(form_col).unwrap_or("").to_string();
        if form.is_empty() {
            return Err(Error::parse(path, line, "empty form"));
        }
        let raw = record.get(freq_col).unwrap_or("").trim();
        let freq: i64 = raw
            .parse()
            .map_err(|_| Error::parse(path, line, format!("frequency `{raw}` is not an integer")))?;
        if freq < 0 {
            return Err(Error::Validation(format!(
                "{}:{line}: negative frequency {freq} for `{form}`",
                path.display()
            )));
        }
        let pron = pron_col.and_then(|c| record.get(c)).map(str::to_string);
        items.push((form, freq as u64, pron));
    }
    Ok(Lexicon::new(items))
}

/// Word vectors keyed by form, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dimension: usize,
    pub entries: IndexMap<String, Vec<f64>>,
    /// Rows skipped because their form was already present.
    pub duplicates: usize,
}

impl EmbeddingTable {
    pub fn get(&self, form: &str) -> Option<&[f64]> {
        self.entries.get(form).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.entries.len(), self.dimension).map_err(io)?;
        for (form, v) in &self.entries {
            write!(w, "{form}").map_err(io)?;
            for x in v {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Reads a word-vector text file: a `m q` header, then `form v1 … vq` lines.
/// Repeated forms keep their first vector.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing `m q` header")),
    };
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| Error::parse(path, 1, format!("bad header `{header}`")))?;
    let [_, dimension] = counts[..] else {
        return Err(Error::parse(path, 1, format!("expected `m q`, found `{header}`")));
    };
    if dimension == 0 {
        return Err(Error::parse(path, 1, "dimension must be positive"));
    }

    let mut entries = IndexMap::new();
    let mut duplicates = 0;
    for (idx, line) in lines.enumerate() {
        let line_no = idx as u64 + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut tokens = line.split_whitespace();
        let Some(form) = tokens.next() else { continue };
        let vector = tokens
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|t| Error::parse(path, line_no, format!("component `{t}` is not a finite number")))?;
        if vector.len() != dimension {
            return Err(Error::parse(
                path,
                line_no,
                format!("`{form}` has {} components, expected {dimension}", vector.len()),
            ));
        }
        if entries.contains_key(form) {
            duplicates += 1;
        } else {
            entries.insert(form.to_string(), vector);
        }
    }
    Ok(EmbeddingTable { dimension, entries, duplicates })
}

/// Drops words without a vector and stacks the remaining vectors into a
/// semantic matrix aligned with the returned lexicon.
pub fn align(lexicon: &Lexicon, table: &EmbeddingTable) -> Result<(Lexicon, SemanticMatrix, Vec<String>)> {
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for e in lexicon.entries() {
        match table.get(&e.form) {
            Some(v) => {
                kept.push((e.form.clone(), e.frequency, e.pronunciation.clone()));
                rows.push(v);
            }
            None => dropped.push(e.form.clone()),
        }
    }
    if kept.is_empty() {
        return Err(Error::Validation("no lexicon entry has an embedding".into()));
    }
    let q = table.dimension;
    let s = DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]);
    Ok((Lexicon::new(kept), SemanticMatrix::new(s)?, dropped))
}

/// Sequence of lexicon row ids in learning order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    ids: Vec<usize>,
}

impl EventStream {
    /// Validates every id against a lexicon of `m` words.
    pub fn new(ids: Vec<usize>, m: usize) -> Result<Self> {
        if let Some(bad) = ids.iter().find(|&&id| id >= m) {
            return Err(Error::Validation(format!("event id {bad} outside lexicon of {m} words")));
        }
        Ok(EventStream { ids })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Occurrences of each of `m` ids.
    pub fn counts(&self, m: usize) -> Vec<u64> {
        let mut counts = vec![0; m];
        for &id in &self.ids {
            counts[id] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShufflePolicy {
    SeededShuffle,
    AsListed,
}

/// Repeats each row id `counts[id]` times, optionally shuffled.
pub fn expand_counts(counts: &[u64], policy: ShufflePolicy, seed: u64) -> Result<EventStream> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Validation("all frequencies are zero; nothing to learn".into()));
    }
    let mut ids = Vec::with_capacity(total as usize);
    for (id, &n) in counts.iter().enumerate() {
        ids.extend(std::iter::repeat_n(id, n as usize));
    }
    if policy == ShufflePolicy::SeededShuffle {
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(EventStream { ids })
}

/// One learning event per token: each word appears `frequency` times.
pub fn expand_to_events(lexicon: &Lexicon, policy: ShufflePolicy, seed: u64) -> Result<EventStream> {
    expand_counts(&lexicon.frequencies(), policy, seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedStream {
    pub stream: EventStream,
    /// Lines whose form is not in the lexicon.
    pub skipped: usize,
    pub unknown_forms: IndexMap<String, usize>,
}

/// Reads one form per line, in temporal order, resolving forms against the
/// lexicon. Unknown forms are skipped and counted.
pub fn load_event_stream(path: &Path, lexicon: &Lexicon) -> Result<LoadedStream> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let index = lexicon.form_index();
    let mut ids = Vec::new();
    let mut unknown_forms: IndexMap<String, usize> = IndexMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let form = line.trim();
        if form.is_empty() {
            continue;
        }
        match index.get(form) {
            Some(&id) => ids.push(id),
            None => *unknown_forms.entry(form.to_string()).or_default() += 1,
        }
    }
    if ids.is_empty() {
        return Err(Error::Validation(format!("{}: no resolvable events", path.display())));
    }
    let skipped = unknown_forms.values().sum();
    Ok(LoadedStream { stream: EventStream { ids }, skipped, unknown_forms })
}

pub fn save_event_stream(path: &Path, stream: &EventStream, lexicon: &Lexicon) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for &id in stream.ids() {
        writeln!(w, "{}", lexicon.entries()[id].form).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Settings for [`synth_lexicon_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub words: usize,
    pub dimension: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
    /// Frequency of the rank-1 word.
    pub base_count: u64,
    pub consonants: String,
    pub vowels: String,
    pub min_syllables: usize,
    pub max_syllables: usize,
}

impl SynthOptions {
    pub fn new(words: usize, dimension: usize, zipf_exponent: f64, seed: u64) -> Self {
        SynthOptions {
            words,
            dimension,
            zipf_exponent,
            seed,
            base_count: 10_000,
            consonants: "ptkm".into(),
            vowels: "ai".into(),
            min_syllables: 2,
            max_syllables: 3,
        }
    }
}

/// Zipfian frequencies `round(base · i^-s)`, floored at 1, for ranks `1..=m`.
pub fn zipf_frequencies(m: usize, exponent: f64, base_count: u64) -> Vec<u64> {
    (1..=m)
        .map(|rank| ((base_count as f64) * (rank as f64).powf(-exponent)).round().max(1.0) as u64)
        .collect()
}

/// Synthetic lexicon with default generator settings.
pub fn synth_lexicon(m: usize, q: usize, zipf_exponent: f64, seed: u64) -> Result<(Lexicon, SemanticMatrix)> {
    synth_lexicon_with(&SynthOptions::new(m, q, zipf_exponent, seed))
}

/// Seeded pseudo-word lexicon in frequency-rank order, with standard-normal
/// semantic vectors drawn independently of form.
pub fn synth_lexicon_with(opts: &SynthOptions) -> Result<(Lexicon, SemanticMatrix)> {
    if opts.words < 2 {
        return Err(Error::Validation(format!("synthetic lexicon needs at least 2 words, got {}", opts.words)));
    }
    if opts.dimension == 0 {
        return Err(Error::Validation("semantic dimension must be positive".into()));
    }
    if opts.zipf_exponent <= 0.0 || !opts.zipf_exponent.is_finite() {
        return Err(Error::Validation(format!("zipf exponent must be positive, got {}", opts.zipf_exponent)));
    }
    let consonants: Vec<char> = opts.consonants.chars().collect();
    let vowels: Vec<char> = opts.vowels.chars().collect();
    if consonants.is_empty() || vowels.is_empty() || opts.min_syllables == 0 || opts.min_syllables > opts.max_syllables {
        return Err(Error::Validation("invalid pseudo-word alphabet or syllable range".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut seen = std::collections::HashSet::new();
    let mut forms = Vec::with_capacity(opts.words);
    let mut max_syl = opts.max_syllables;
    let mut misses = 0;
    while forms.len() < opts.words {
        let n_syl = rng.random_range(opts.min_syllables..=max_syl);
        let mut form = String::new();
        for _ in 0..n_syl {
            form.push(consonants[rng.random_range(0..consonants.len())]);
            form.push(vowels[rng.random_range(0..vowels.len())]);
        }
        if seen.insert(form.clone()) {
            forms.push(form);
            misses = 0;
        } else {
            misses += 1;
            // space exhausted at this length; allow longer words
            if misses > 1000 {
                max_syl += 1;
                misses = 0;
            }
        }
    }

    let freqs = zipf_frequencies(opts.words, opts.zipf_exponent, opts.base_count);
    let values: Vec<f64> = (0..opts.words * opts.dimension).map(|_| rng.sample(StandardNormal)).collect();
    let s = DMatrix::from_row_slice(opts.words, opts.dimension, &values);
    let lexicon = Lexicon::from_forms(forms.into_iter().zip(freqs));
    Ok((lexicon, SemanticMatrix::new(s)?))
}
