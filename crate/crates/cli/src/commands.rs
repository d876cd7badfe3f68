use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use lexmap_core::data::{load_embeddings, load_event_stream, load_lexicon, save_event_stream, synth_lexicon_with, SynthOptions};
use lexmap_core::eval::rt_measure;
use lexmap_core::solvers::{load_mapping, save_mapping, FitProblem};
use lexmap_core::{
    accuracy_at_k, align, build_cue_matrix, compare_whl_fil, expand_to_events, freq_time_stats,
    logistic_freq_summary, predict, priming_measure, run_trajectory, solve_fil, weights_from_freqs,
    CueMatrix, Design, Direction, EvalReport, EventStream, Lexicon, Mapping, SemanticMatrix, ShufflePolicy,
    SolverParams, SolverRegistry, TableFormat, WeightTransform,
};
use nalgebra::DMatrix;

use crate::config::RunConfig;
use crate::output::Outputs;

struct Data {
    lexicon: Lexicon,
    semantics: SemanticMatrix,
    cues: CueMatrix,
    stream: Option<EventStream>,
}

impl Data {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let lex_path = cfg.require(&cfg.lexicon, "lexicon")?;
        let emb_path = cfg.require(&cfg.embeddings, "embeddings")?;
        let lexicon = load_lexicon(lex_path, TableFormat::from_path(lex_path))?;
        let table = load_embeddings(emb_path)?;
        if table.duplicates > 0 {
            eprintln!("note: {} repeated forms in {}; kept the first vector", table.duplicates, emb_path.display());
        }
        let (lexicon, semantics, dropped) = align(&lexicon, &table)?;
        if !dropped.is_empty() {
            eprintln!("note: {} lexicon forms have no embedding and were dropped", dropped.len());
        }
        let cues = build_cue_matrix(&lexicon, &cfg.scheme())?;
        let stream = match &cfg.events {
            Some(path) => {
                let loaded = load_event_stream(path, &lexicon)?;
                if loaded.skipped > 0 {
                    eprintln!(
                        "note: skipped {} events with {} forms outside the lexicon",
                        loaded.skipped,
                        loaded.unknown_forms.len()
                    );
                }
                Some(loaded.stream)
            }
            None => None,
        };
        eprintln!("loaded {} words, {} cues, {} semantic dimensions", lexicon.len(), cues.cols(), semantics.ncols());
        Ok(Data { lexicon, semantics, cues, stream })
    }

    /// Token counts: from the event stream when there is one, else the lexicon.
    fn frequencies(&self) -> Vec<u64> {
        match &self.stream {
            Some(stream) => stream.counts(self.lexicon.len()),
            None => self.lexicon.frequencies(),
        }
    }

    /// Design and target matrices for a direction.
    fn problem(&self, direction: Direction) -> (&dyn Design, DMatrix<f64>) {
        match direction {
            Direction::Comprehension => (&self.cues, self.semantics.matrix().clone()),
            Direction::Production => (&self.semantics, self.cues.to_dense()),
        }
    }
}

fn params(cfg: &RunConfig) -> SolverParams {
    SolverParams { ridge: cfg.ridge, transform: cfg.transform, eta: cfg.eta, seed: cfg.seed }
}

fn fit(cfg: &RunConfig, data: &Data, method: &str, freqs: &[u64]) -> Result<Mapping> {
    let registry = SolverRegistry::default();
    let solver = registry.get(method)?;
    let (design, target) = data.problem(cfg.direction);
    let mut problem = FitProblem::new(design, &target).direction(cfg.direction).frequencies(freqs);
    if let Some(stream) = &data.stream {
        problem = problem.stream(stream);
    }
    let mapping = solver.fit(&problem, &params(cfg)).with_context(|| format!("fitting {method}"))?;
    if let Some(jitter) = mapping.hyperparams.jitter {
        eprintln!("note: {method}: gram matrix was singular; added ridge {jitter:e}");
    }
    Ok(mapping)
}

struct Scored {
    report: EvalReport,
    rt: Vec<f64>,
}

fn score(cfg: &RunConfig, data: &Data, mapping: &Mapping) -> Result<Scored> {
    let (design, target) = data.problem(mapping.direction);
    let predicted = predict(design, mapping)?;
    let report = accuracy_at_k(&predicted, &target, &cfg.k)?;
    let rt = rt_measure(&predicted, &target)?;
    Ok(Scored { report, rt })
}

fn write_report(out: &mut Outputs, cfg: &RunConfig, data: &Data, scored: &Scored, freqs: &[u64]) -> Result<()> {
    let mut header = vec!["id".to_string(), "form".into(), "frequency".into(), "target_r".into(), "rank".into()];
    header.extend(cfg.k.iter().map(|k| format!("correct_at_{k}")));
    header.extend(["rt_measure".to_string(), "degenerate".into()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = out.csv("report.csv", &header)?;
    for (i, (entry, word)) in data.lexicon.entries().iter().zip(&scored.report.words).enumerate() {
        let mut row =
            vec![i.to_string(), entry.form.clone(), freqs[i].to_string(), word.target_r.to_string(), word.rank.to_string()];
        row.extend(cfg.k.iter().map(|&k| u8::from(word.rank <= k).to_string()));
        row.extend([scored.rt[i].to_string(), word.degenerate.to_string()]);
        csv.row(&row)?;
    }
    csv.finish()?;

    let mut csv = out.csv("summary.csv", &["metric", "value"])?;
    for (metric, value) in summary_rows(cfg, scored, freqs)? {
        csv.row([metric, value])?;
    }
    csv.finish()
}

fn summary_rows(cfg: &RunConfig, scored: &Scored, freqs: &[u64]) -> Result<Vec<(String, String)>> {
    let report = &scored.report;
    let mut rows = vec![("words".to_string(), report.words.len().to_string())];
    for &k in &cfg.k {
        rows.push((format!("type_accuracy_at_{k}"), report.type_accuracy[&k].to_string()));
        rows.push((format!("token_accuracy_at_{k}"), report.token_accuracy(freqs, k)?.to_string()));
    }
    rows.push(("mean_target_r".into(), report.mean_r().to_string()));
    match logistic_freq_summary(&report.correct_flags(1), freqs) {
        Ok(fit) => {
            rows.push(("logit_intercept".into(), fit.intercept.to_string()));
            rows.push(("logit_slope".into(), fit.slope.to_string()));
            rows.push(("logit_slope_se".into(), fit.slope_std_error.to_string()));
            rows.push(("logit_wald_z".into(), fit.wald_z.to_string()));
            rows.push(("logit_converged".into(), fit.converged.to_string()));
            rows.push(("logit_separated".into(), fit.separated.to_string()));
        }
        Err(e) => eprintln!("note: no logistic fit: {e}"),
    }
    Ok(rows)
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let data = Data::load(cfg)?;
    let freqs = data.frequencies();
    let mapping = fit(cfg, &data, &cfg.method, &freqs)?;
    let scored = score(cfg, &data, &mapping)?;
    let mut out = Outputs::create(&cfg.out)?;
    save_mapping(&out.path("mapping.txt"), &mapping)?;
    write_report(&mut out, cfg, &data, &scored, &freqs)?;
    out.text("run.meta", &cfg.to_meta("train"))?;
    out.commit();
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let mapping_path = cfg.require(&cfg.mapping, "mapping")?;
    let mapping = load_mapping(mapping_path)?;
    let data = Data::load(cfg)?;
    let freqs = data.frequencies();
    let scored = score(cfg, &data, &mapping).with_context(|| format!("applying {}", mapping_path.display()))?;
    let mut out = Outputs::create(&cfg.out)?;
    write_report(&mut out, cfg, &data, &scored, &freqs)?;
    out.text("run.meta", &cfg.to_meta("eval"))?;
    out.commit();
    Ok(())
}

pub fn trajectory(cfg: &RunConfig) -> Result<()> {
    cfg.require(&cfg.events, "events")?;
    let data = Data::load(cfg)?;
    let stream = data.stream.as_ref().expect("events were loaded");
    let s = data.semantics.matrix();
    let traj = run_trajectory(&data.cues, s, stream, cfg.eta, cfg.interval)?;
    let counts = stream.counts(data.lexicon.len());
    let fil = solve_fil(&data.cues, s, &weights_from_freqs(&counts, WeightTransform::Raw)?, cfg.ridge)?;
    let cmp = compare_whl_fil(&traj, &fil, &data.cues, s, &counts)?;

    let mut out = Outputs::create(&cfg.out)?;
    let mut csv = out.csv("trajectory.csv", &["checkpoint_event_index", "word_id", "target_r"])?;
    for cp in &traj.checkpoints {
        for (i, r) in cp.correlations.iter().enumerate() {
            csv.row([cp.event_index.to_string(), i.to_string(), r.to_string()])?;
        }
    }
    csv.finish()?;

    let mut csv = out.csv(
        "stats.csv",
        &["word_id", "form", "total_count", "mean", "mode", "skewness", "kurtosis_t", "degenerate", "delta_whl_fil"],
    )?;
    for (i, entry) in data.lexicon.entries().iter().enumerate() {
        let delta = cmp.per_word_delta[i].to_string();
        let row = match freq_time_stats(&traj.batch_counts[i]) {
            Ok(st) => [
                i.to_string(),
                entry.form.clone(),
                st.total.to_string(),
                st.mean.to_string(),
                st.mode.to_string(),
                st.skewness.to_string(),
                st.kurtosis_t.to_string(),
                st.degenerate.to_string(),
                delta,
            ],
            // never seen in the stream: no distribution to describe
            Err(_) => [i.to_string(), entry.form.clone(), "0".into(), "".into(), "".into(), "".into(), "".into(), "".into(), delta],
        };
        csv.row(&row)?;
    }
    csv.finish()?;

    let normalized = traj.normalized_counts();
    let mut csv = out.csv("batch_counts.csv", &["word_id", "batch", "count", "normalized"])?;
    for (i, row) in traj.batch_counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate().filter(|(_, &c)| c > 0) {
            csv.row([i.to_string(), (b + 1).to_string(), c.to_string(), normalized[i][b].to_string()])?;
        }
    }
    csv.finish()?;

    let mut csv = out.csv("comparison.csv", &["word_id", "form", "r_whl", "r_fil", "delta"])?;
    for (i, entry) in data.lexicon.entries().iter().enumerate() {
        csv.row([
            i.to_string(),
            entry.form.clone(),
            cmp.whl[i].to_string(),
            cmp.fil[i].to_string(),
            cmp.per_word_delta[i].to_string(),
        ])?;
    }
    csv.finish()?;

    let mut csv = out.csv("summary.csv", &["metric", "value"])?;
    csv.row(["events", &stream.len().to_string()])?;
    csv.row(["checkpoints", &traj.checkpoints.len().to_string()])?;
    csv.row(["pearson_r_whl_fil", &cmp.pearson_r.to_string()])?;
    csv.finish()?;

    save_mapping(&out.path("mapping.txt"), &traj.final_mapping)?;
    out.text("run.meta", &cfg.to_meta("trajectory"))?;
    out.commit();
    Ok(())
}

struct Condition {
    prime: usize,
    target: usize,
    row: [String; 3],
}

fn read_conditions(path: &Path, lexicon: &Lexicon) -> Result<Vec<Condition>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| anyhow!("{}: missing `{name}` column", path.display()))
    };
    let (pc, tc, cc) = (column("prime")?, column("target")?, column("condition")?);
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: line {}", path.display(), n + 2))?;
        let field = |c: usize| record.get(c).unwrap_or("").trim().to_string();
        let (prime, target, condition) = (field(pc), field(tc), field(cc));
        let id = |form: &str| {
            lexicon
                .first_id_of(form)
                .ok_or_else(|| anyhow!("{}: line {}: unknown form `{form}`", path.display(), n + 2))
        };
        rows.push(Condition { prime: id(&prime)?, target: id(&target)?, row: [prime, target, condition] });
    }
    Ok(rows)
}

pub fn prime(cfg: &RunConfig) -> Result<()> {
    let cond_path = cfg.require(&cfg.conditions, "conditions")?;
    let data = Data::load(cfg)?;
    let conditions = read_conditions(cond_path, &data.lexicon)?;
    let mapping = match &cfg.mapping {
        Some(path) => load_mapping(path)?,
        None => fit(cfg, &data, &cfg.method, &data.frequencies())?,
    };
    if mapping.direction != Direction::Comprehension {
        bail!("priming needs a comprehension mapping");
    }
    let mut out = Outputs::create(&cfg.out)?;
    let mut csv = out.csv("priming.csv", &["prime", "target", "condition", "measure"])?;
    for c in &conditions {
        let measure = priming_measure(c.prime, c.target, &mapping, &data.cues, data.semantics.matrix())?;
        let [p, t, cond] = &c.row;
        csv.row([p.as_str(), t, cond, &measure.to_string()])?;
    }
    csv.finish()?;
    out.text("run.meta", &cfg.to_meta("prime"))?;
    out.commit();
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let mut opts = SynthOptions::new(cfg.words, cfg.dimension, cfg.exponent, cfg.seed);
    opts.base_count = cfg.base_count;
    let (lexicon, semantics) = synth_lexicon_with(&opts)?;
    let stream =
        if cfg.emit_events { Some(expand_to_events(&lexicon, ShufflePolicy::SeededShuffle, cfg.seed)?) } else { None };
    let mut out = Outputs::create(&cfg.out)?;
    lexicon.save(&out.path("lexicon.csv"), TableFormat::Csv)?;
    let table = lexmap_core::data::EmbeddingTable {
        dimension: semantics.ncols(),
        entries: lexicon
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| (e.form.clone(), semantics.row_vec(i)))
            .collect(),
        duplicates: 0,
    };
    table.save(&out.path("embeddings.txt"))?;
    if let Some(stream) = &stream {
        save_event_stream(&out.path("events.txt"), stream, &lexicon)?;
    }
    out.text("run.meta", &cfg.to_meta("synth"))?;
    out.commit();
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> Result<()> {
    let data = Data::load(cfg)?;
    let freqs = data.frequencies();
    let registry = SolverRegistry::default();
    let mut results = Vec::new();
    for name in registry.names() {
        let mapping = fit(cfg, &data, name, &freqs)?;
        results.push((name, score(cfg, &data, &mapping)?));
    }

    let mut out = Outputs::create(&cfg.out)?;
    let mut header = vec!["id".to_string(), "form".into(), "frequency".into()];
    for (name, _) in &results {
        header.push(format!("target_r_{name}"));
        header.push(format!("rank_{name}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = out.csv("compare.csv", &header)?;
    for (i, entry) in data.lexicon.entries().iter().enumerate() {
        let mut row = vec![i.to_string(), entry.form.clone(), freqs[i].to_string()];
        for (_, scored) in &results {
            let w = &scored.report.words[i];
            row.push(w.target_r.to_string());
            row.push(w.rank.to_string());
        }
        csv.row(&row)?;
    }
    csv.finish()?;

    let mut csv = out.csv("summary.csv", &["method", "metric", "value"])?;
    for (name, scored) in &results {
        for (metric, value) in summary_rows(cfg, scored, &freqs)? {
            csv.row([*name, &metric, &value])?;
        }
    }
    csv.finish()?;
    out.text("run.meta", &cfg.to_meta("compare"))?;
    out.commit();
    Ok(())
}
