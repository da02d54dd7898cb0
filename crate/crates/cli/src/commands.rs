use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use morphseg_core::data::{
    corpus_stats, generate_random_strings, load_aux_words, load_dataset, Dataset, LangTag, Mode,
    SegExample, Vocabulary,
};
use morphseg_core::evaluation::{evaluate, DECODE_BATCH};
use morphseg_core::model::max_decode_len;
use morphseg_core::training::{
    default_m, run_replicates, Checkpoint, Experiment, ReplicateSummary, TrainConfig, TrainEvent,
};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::{EvalArgs, MakeAuxArgs, SegmentArgs, StatsArgs, TrainArgs};

fn print_config(pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        eprintln!("{k}={v}");
    }
}

fn parse_lang(s: &str) -> Result<LangTag, CliError> {
    s.parse().map_err(CliError::from)
}

/// A data file argument, `path` or `tag:path`.
#[derive(Debug, Clone)]
struct DataSpec {
    lang: Option<LangTag>,
    path: PathBuf,
}

impl DataSpec {
    fn parse(arg: &str) -> Self {
        if let Some((tag, path)) = arg.split_once(':') {
            if let Ok(lang) = tag.parse::<LangTag>() {
                return DataSpec {
                    lang: Some(lang),
                    path: path.into(),
                };
            }
        }
        DataSpec {
            lang: None,
            path: arg.into(),
        }
    }

    fn display(&self) -> String {
        match self.lang {
            Some(l) => format!("{}:{}", l.code(), self.path.display()),
            None => self.path.display().to_string(),
        }
    }
}

/// The i-th `--lang-tag` tags the i-th untagged file of each list.
fn resolve_specs(args: &[String], tags: &[LangTag]) -> Vec<DataSpec> {
    let mut untagged = 0;
    args.iter()
        .map(|a| {
            let mut spec = DataSpec::parse(a);
            if spec.lang.is_none() {
                spec.lang = tags.get(untagged).copied();
                untagged += 1;
            }
            spec
        })
        .collect()
}

fn load_specs(specs: &[DataSpec]) -> Result<Vec<Dataset>, CliError> {
    specs
        .iter()
        .map(|s| load_dataset(&s.path, s.lang).map_err(CliError::from))
        .collect()
}

fn key_set_in(text: &str, key: &str) -> bool {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .any(|(k, _)| k.trim() == key)
}

fn resolve_config(a: &TrainArgs, single_lang: Option<LangTag>) -> Result<TrainConfig, CliError> {
    let mut cfg = TrainConfig::default();
    let mut m_given = false;
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
        m_given = key_set_in(&text, "m");
    }
    if let Some(mode) = &a.mode {
        cfg.set("mode", mode)?;
    }
    let overrides = [
        ("m", a.m.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("replicates", a.replicates.map(|v| v.to_string())),
        ("max_epochs", a.max_epochs.map(|v| v.to_string())),
        ("eval_every", a.eval_every.map(|v| v.to_string())),
        ("batch_size", a.batch_size.map(|v| v.to_string())),
        ("embed", a.embed.map(|v| v.to_string())),
        ("hidden", a.hidden.map(|v| v.to_string())),
        ("attention", a.attention.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if a.stop_on_perfect_dev {
        cfg.stop_on_perfect_dev = true;
    }
    if !m_given && a.m.is_none() {
        cfg.m = default_m(cfg.mode, single_lang);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

fn history_text(run: &morphseg_core::training::ReplicateRun) -> String {
    let h = &run.outcome.history;
    let mut s = String::new();
    let _ = writeln!(s, "seed={}", run.seed);
    let _ = writeln!(s, "corpus_size={}", run.corpus_size);
    for w in &run.corpus_warnings {
        let _ = writeln!(s, "warning={w}");
    }
    let _ = writeln!(s, "selected_epoch={}", h.selected_epoch);
    let _ = writeln!(s, "selected_dev_accuracy={}", h.selected_accuracy);
    let _ = writeln!(s, "stopped_early={}", h.stopped_early);
    let _ = writeln!(s, "clamped_probabilities={}", h.clamped);
    if let Some(t) = &run.test {
        let _ = writeln!(s, "test_accuracy={}", t.accuracy);
        let _ = writeln!(s, "test_f1={}", t.f1);
    }
    let _ = writeln!(s, "\nepoch\tdev_accuracy");
    for p in &h.evaluations {
        let _ = writeln!(s, "{}\t{}", p.epoch, p.dev_accuracy);
    }
    let _ = writeln!(s, "\nepoch\ttrain_loss");
    for (i, l) in h.epoch_losses.iter().enumerate() {
        let _ = writeln!(s, "{}\t{}", i + 1, l);
    }
    s
}

fn manifest(out: &Path, files: &[PathBuf]) -> Result<String, CliError> {
    let mut s = String::new();
    for f in files {
        let bytes = fs::read(out.join(f)).map_err(|e| CliError::io("cannot read back output", e))?;
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(s, "{digest}  {:>10}  {}", bytes.len(), f.display());
    }
    Ok(s)
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let tags = a
        .lang_tag
        .iter()
        .map(|t| parse_lang(t))
        .collect::<Result<Vec<_>, _>>()?;
    let train_specs = resolve_specs(&a.train, &tags);
    let dev_specs = resolve_specs(&a.dev, &tags);
    let test_specs = resolve_specs(&a.test, &tags);
    let single_lang = match train_specs.as_slice() {
        [one] => one.lang,
        _ => None,
    };
    let cfg = resolve_config(&a, single_lang)?;
    if cfg.mode == Mode::Xling {
        if let Some(s) = train_specs.iter().chain(&dev_specs).chain(&test_specs).find(|s| s.lang.is_none()) {
            return Err(CliError::Usage(format!(
                "xling mode needs a language tag for {}",
                s.path.display()
            )));
        }
    }
    let aux_words = match (&a.aux, cfg.mode.needs_aux_words()) {
        (Some(p), true) => Some(load_aux_words(p)?),
        (None, true) => {
            return Err(CliError::Usage(format!("mode {} needs --aux", cfg.mode)));
        }
        (Some(_), false) => {
            eprintln!("warning: --aux is ignored in mode {}", cfg.mode);
            None
        }
        (None, false) => None,
    };

    let mut resolved = cfg.to_pairs();
    let join = |specs: &[DataSpec]| specs.iter().map(DataSpec::display).collect::<Vec<_>>().join(",");
    resolved.push(("train", join(&train_specs)));
    resolved.push(("dev", join(&dev_specs)));
    resolved.push(("test", join(&test_specs)));
    resolved.push(("aux", a.aux.as_ref().map(|p| p.display().to_string()).unwrap_or_default()));
    resolved.push(("out", a.out.display().to_string()));
    print_config(&resolved);

    let labeled = load_specs(&train_specs)?;
    let flatten = |sets: Vec<Dataset>| -> Vec<SegExample> {
        sets.into_iter().flat_map(|d| d.examples).collect()
    };
    let dev = flatten(load_specs(&dev_specs)?);
    let test = flatten(load_specs(&test_specs)?);
    let labeled_count: usize = labeled.iter().map(Dataset::len).sum();

    let exp = Experiment {
        config: cfg.clone(),
        labeled,
        aux_words,
        dev,
        test,
    };
    fs::create_dir_all(&a.out).map_err(|e| CliError::io("cannot create output directory", e))?;
    let summary: ReplicateSummary = run_replicates(&exp, &mut |r, event| {
        if let TrainEvent::Eval { epoch, dev_accuracy, best } = event {
            eprintln!(
                "replicate {} epoch {epoch} dev_accuracy={dev_accuracy:.4}{}",
                r + 1,
                if *best { " *" } else { "" }
            );
        }
    })?;

    let mut files: Vec<PathBuf> = Vec::new();
    let mut config_text = String::new();
    for (k, v) in &resolved {
        let _ = writeln!(config_text, "{k}={v}");
    }
    write(&a.out.join("config.txt"), &config_text)?;
    files.push("config.txt".into());

    for (i, run) in summary.runs.iter().enumerate() {
        let dir = PathBuf::from(format!("replicate-{}", i + 1));
        fs::create_dir_all(a.out.join(&dir)).map_err(|e| CliError::io("cannot create replicate directory", e))?;
        run.outcome.checkpoint.save(a.out.join(dir.join("model.ckpt")))?;
        files.push(dir.join("model.ckpt"));
        write(&a.out.join(dir.join("history.txt")), history_text(run))?;
        files.push(dir.join("history.txt"));
        if let Some(t) = &run.test {
            write(&a.out.join(dir.join("test-report.json")), t.to_json())?;
            files.push(dir.join("test-report.json"));
        }
    }
    // earliest replicate wins ties
    let best = summary
        .runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| {
            let acc = |k: usize| summary.runs[k].outcome.history.selected_accuracy;
            if r.outcome.history.selected_accuracy > acc(b) { i } else { b }
        });
    summary.runs[best].outcome.checkpoint.save(a.out.join("model.ckpt"))?;
    files.push("model.ckpt".into());

    let corpus_size = summary.runs[0].corpus_size;
    let mut history = format!(
        "corpus_examples={corpus_size}\nlabeled_examples={labeled_count}\nauxiliary_examples={}\nbest_replicate={}\n",
        corpus_size - labeled_count,
        best + 1
    );
    history.push_str(&summary.to_text());
    write(&a.out.join("history.txt"), &history)?;
    files.push("history.txt".into());
    write(&a.out.join("manifest.txt"), manifest(&a.out, &files)?)?;

    print!("{history}");
    Ok(())
}

/// Language symbol to apply for `ck`, validated against its training languages.
fn model_lang(ck: &Checkpoint, lang: Option<&str>) -> Result<Option<LangTag>, CliError> {
    let lang = lang.map(parse_lang).transpose()?;
    if ck.meta.mode != Mode::Xling {
        if lang.is_some() {
            eprintln!("warning: --lang is ignored for a {} model", ck.meta.mode);
        }
        return Ok(None);
    }
    let lang = lang.ok_or_else(|| {
        CliError::Usage("this cross-lingual model needs --lang for its input".into())
    })?;
    if !ck.meta.langs.contains(&lang) {
        return Err(CliError::Data(format!(
            "model was not trained on language {}",
            lang.code()
        )));
    }
    Ok(Some(lang))
}

fn checkpoint_pairs(path: &Path, ck: &Checkpoint, lang: Option<LangTag>) -> Vec<(&'static str, String)> {
    vec![
        ("model", path.display().to_string()),
        ("mode", ck.meta.mode.to_string()),
        ("m", ck.meta.m.to_string()),
        ("seed", ck.meta.seed.to_string()),
        ("epoch", ck.meta.epoch.to_string()),
        ("dev_accuracy", ck.meta.dev_accuracy.to_string()),
        ("lang", lang.map(|l| l.code().to_string()).unwrap_or_default()),
    ]
}

fn warn_unknown_chars(vocab: &Vocabulary, word: &str) -> bool {
    let unknown: String = word.chars().filter(|&c| !vocab.contains_char(c)).collect();
    if !unknown.is_empty() {
        eprintln!("warning: `{word}`: characters `{unknown}` are outside the model vocabulary and read as <unk>");
    }
    !unknown.is_empty()
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let ck = Checkpoint::load(&a.model)?;
    let lang = model_lang(&ck, a.lang.as_deref())?;
    let mut pairs = checkpoint_pairs(&a.model, &ck, lang);
    pairs.push(("test", a.test.display().to_string()));
    print_config(&pairs);

    let ds = load_dataset(&a.test, None)?;
    if ds.is_empty() {
        return Err(CliError::Data(format!("{} has no examples", a.test.display())));
    }
    let task = ck.meta.mode.segmentation_marker();
    let examples: Vec<SegExample> = ds
        .examples
        .into_iter()
        .map(|e| e.with_task(task).with_lang(lang))
        .collect();
    for e in &examples {
        warn_unknown_chars(&ck.vocab, &e.source);
    }
    let report = evaluate(&ck.model, &ck.vocab, &examples)?;
    if let Some(p) = &a.report {
        write(p, report.to_text())?;
    }
    if let Some(p) = &a.json {
        write(p, report.to_json())?;
    }
    print!("{}", report.to_text());
    Ok(())
}

pub fn segment(a: SegmentArgs) -> Result<(), CliError> {
    let ck = Checkpoint::load(&a.model)?;
    let lang = model_lang(&ck, a.lang.as_deref())?;
    let mut pairs = checkpoint_pairs(&a.model, &ck, lang);
    if let Some(p) = &a.input_file {
        pairs.push(("input_file", p.display().to_string()));
    }
    print_config(&pairs);

    let words: Vec<String> = match &a.input_file {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
        None => a.word.clone(),
    };
    let task = ck.meta.mode.segmentation_marker();
    let mut out = String::new();
    for chunk in words.chunks(DECODE_BATCH) {
        let encoded: Vec<Vec<usize>> = chunk
            .iter()
            .map(|w| {
                warn_unknown_chars(&ck.vocab, w);
                ck.vocab.encode_word(w, task, lang).0
            })
            .collect();
        let sources: Vec<&[usize]> = encoded.iter().map(Vec::as_slice).collect();
        let limits: Vec<usize> = chunk.iter().map(|w| max_decode_len(w.chars().count())).collect();
        let decoded = ck
            .model
            .greedy_decode_batch(&ck.vocab, &sources, &limits)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        for (w, d) in chunk.iter().zip(decoded) {
            let _ = writeln!(out, "{w}\t{}", d.text);
        }
    }
    print!("{out}");
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    print_config(&[
        ("data", a.data.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")),
        ("top_k", a.top_k.to_string()),
    ]);
    let mut examples = Vec::new();
    for p in &a.data {
        examples.extend(load_dataset(p, None)?.examples);
    }
    let st = corpus_stats(&Dataset::new(examples, None), a.top_k)?;
    print!("{}", st.to_report());
    Ok(())
}

pub fn make_aux(a: MakeAuxArgs) -> Result<(), CliError> {
    print_config(&[
        ("alphabet_from", a.alphabet_from.display().to_string()),
        ("n", a.n.to_string()),
        ("seed", a.seed.to_string()),
        ("out", a.out.display().to_string()),
    ]);
    let ds = load_dataset(&a.alphabet_from, None)?;
    if ds.is_empty() {
        return Err(CliError::Data(format!("{} has no examples", a.alphabet_from.display())));
    }
    let strings = generate_random_strings(&ds.alphabet(), a.n, &ds.source_lengths(), a.seed)?;
    let mut text = String::new();
    for s in strings {
        text.push_str(&s);
        text.push('\n');
    }
    write(&a.out, text)
}
