//! Run configuration: defaults, then a `key=value` file, then flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lexmap_core::cues::DEFAULT_BOUNDARY;
use lexmap_core::{Channel, CueScheme, CueSource, Direction, Method, WeightTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub conditions: Option<PathBuf>,
    pub out: PathBuf,
    pub gram: usize,
    pub source: CueSource,
    pub channels: Vec<Channel>,
    pub boundary: char,
    pub method: String,
    pub direction: Direction,
    pub transform: WeightTransform,
    pub ridge: f64,
    pub eta: f64,
    pub seed: u64,
    pub interval: usize,
    pub k: Vec<usize>,
    pub words: usize,
    pub dimension: usize,
    pub exponent: f64,
    pub base_count: u64,
    pub emit_events: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lexicon: None,
            embeddings: None,
            events: None,
            mapping: None,
            conditions: None,
            out: PathBuf::from("out"),
            gram: 3,
            source: CueSource::Orthography,
            channels: vec![Channel::Segmental],
            boundary: DEFAULT_BOUNDARY,
            method: Method::Endstate.name().to_string(),
            direction: Direction::Comprehension,
            transform: WeightTransform::Raw,
            ridge: 0.0,
            eta: 0.01,
            seed: 1,
            interval: lexmap_core::trajectory::DEFAULT_INTERVAL,
            k: vec![1, 10],
            words: 200,
            dimension: 20,
            exponent: 1.0,
            base_count: 10_000,
            emit_events: true,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow!("{key}: cannot parse `{value}`: {e}"))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "lexicon" => self.lexicon = optional_path(value),
            "embeddings" => self.embeddings = optional_path(value),
            "events" => self.events = optional_path(value),
            "mapping" => self.mapping = optional_path(value),
            "conditions" => self.conditions = optional_path(value),
            "out" => self.out = PathBuf::from(value),
            "gram" => self.gram = parse_num(key, value)?,
            "source" => {
                self.source = match value {
                    "orthography" => CueSource::Orthography,
                    "pronunciation" => CueSource::Pronunciation,
                    other => bail!("source: expected orthography or pronunciation, got `{other}`"),
                }
            }
            "channels" => {
                let channels = value
                    .split(',')
                    .map(|c| Channel::parse(c).ok_or_else(|| anyhow!("channels: unknown channel `{}`", c.trim())))
                    .collect::<Result<Vec<_>>>()?;
                if channels.is_empty() {
                    bail!("channels: at least one channel is required");
                }
                self.channels = channels;
            }
            "boundary" => {
                let mut chars = value.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => self.boundary = c,
                    _ => bail!("boundary: expected a single character, got `{value}`"),
                }
            }
            "method" => self.method = value.to_ascii_lowercase(),
            "direction" => self.direction = value.parse()?,
            "transform" => self.transform = value.parse()?,
            "ridge" => self.ridge = parse_num(key, value)?,
            "eta" => self.eta = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "interval" => self.interval = parse_num(key, value)?,
            "k" => {
                let k = value.split(',').map(|s| parse_num::<usize>(key, s.trim())).collect::<Result<Vec<_>>>()?;
                if k.is_empty() || k.contains(&0) {
                    bail!("k: expected a comma-separated list of positive integers, got `{value}`");
                }
                self.k = k;
            }
            "words" => self.words = parse_num(key, value)?,
            "dimension" => self.dimension = parse_num(key, value)?,
            "exponent" => self.exponent = parse_num(key, value)?,
            "base_count" => self.base_count = parse_num(key, value)?,
            "emit_events" => self.emit_events = parse_num(key, value)?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Applies a `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), n + 1))?;
            self.set(key, value).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn scheme(&self) -> CueScheme {
        let mut scheme =
            CueScheme::orthographic(self.gram).with_source(self.source).with_channels(self.channels.clone());
        scheme.boundary = self.boundary;
        scheme
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        field.as_deref().ok_or_else(|| anyhow!("`{key}` is required for this command"))
    }

    /// Every key with its resolved value, readable back by `apply_file`.
    pub fn to_meta(&self, command: &str) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |v: Vec<String>| v.join(",");
        let source = match self.source {
            CueSource::Orthography => "orthography",
            CueSource::Pronunciation => "pronunciation",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("lexicon", path(&self.lexicon)),
            ("embeddings", path(&self.embeddings)),
            ("events", path(&self.events)),
            ("mapping", path(&self.mapping)),
            ("conditions", path(&self.conditions)),
            ("out", self.out.display().to_string()),
            ("gram", self.gram.to_string()),
            ("source", source.to_string()),
            ("channels", join(self.channels.iter().map(|c| c.name().to_string()).collect())),
            ("boundary", self.boundary.to_string()),
            ("method", self.method.clone()),
            ("direction", self.direction.to_string()),
            ("transform", self.transform.to_string()),
            ("ridge", self.ridge.to_string()),
            ("eta", self.eta.to_string()),
            ("seed", self.seed.to_string()),
            ("interval", self.interval.to_string()),
            ("k", join(self.k.iter().map(|k| k.to_string()).collect())),
            ("words", self.words.to_string()),
            ("dimension", self.dimension.to_string()),
            ("exponent", self.exponent.to_string()),
            ("base_count", self.base_count.to_string()),
            ("emit_events", self.emit_events.to_string()),
        ];
        let mut text = format!("# lexmap {command}\n");
        for (key, value) in pairs {
            let _ = writeln!(text, "{key}={value}");
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("method", "fil").unwrap();
        cfg.set("transform", "scaled:100").unwrap();
        cfg.set("channels", "segmental,tritone").unwrap();
        cfg.set("k", "1,5,10").unwrap();
        cfg.set("eta", "0.003").unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        fs::write(file.path(), cfg.to_meta("train")).unwrap();
        let mut back = RunConfig::default();
        back.apply_file(file.path()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.set("k", "0").is_err());
        assert!(cfg.set("boundary", "##").is_err());
        assert!(cfg.set("channels", "segmental,nope").is_err());
    }
}
