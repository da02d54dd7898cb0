use crate::data::{build_training_corpus, AugmentationConfig, Dataset, LangTag, SegExample, Vocabulary};
use crate::evaluation::{evaluate, EvalReport};

use super::{mark_for_mode, train_with, TrainConfig, TrainError, TrainEvent, TrainOutcome};

/// Everything a multi-replicate experiment needs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: TrainConfig,
    /// One dataset per language; several only in xling mode.
    pub labeled: Vec<Dataset>,
    pub aux_words: Option<Vec<String>>,
    pub dev: Vec<SegExample>,
    pub test: Vec<SegExample>,
}

impl Experiment {
    /// Shared by all replicates: labeled characters plus auxiliary words.
    pub fn vocabulary(&self) -> Vocabulary {
        let aux = self.aux_words.as_deref().unwrap_or(&[]);
        Vocabulary::build(self.labeled.iter(), aux)
    }

    pub fn langs(&self) -> Vec<LangTag> {
        let mut langs: Vec<LangTag> = self.labeled.iter().filter_map(|d| d.lang).collect();
        langs.sort();
        langs.dedup();
        langs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRun {
    pub seed: u64,
    pub corpus_size: usize,
    pub corpus_warnings: Vec<String>,
    pub outcome: TrainOutcome,
    pub test: Option<EvalReport>,
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(MeanStd { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub runs: Vec<ReplicateRun>,
    /// Seeds whose run failed, with the reason.
    pub failures: Vec<(u64, String)>,
    pub accuracy: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub dev_accuracy: Option<MeanStd>,
}

impl ReplicateSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for run in &self.runs {
            s.push_str(&format!(
                "replicate seed={} corpus={} selected_epoch={} dev_accuracy={:.4}",
                run.seed,
                run.corpus_size,
                run.outcome.history.selected_epoch,
                run.outcome.history.selected_accuracy
            ));
            if let Some(t) = &run.test {
                s.push_str(&format!(" test_accuracy={:.4} test_f1={:.4}", t.accuracy, t.f1));
            }
            s.push('\n');
        }
        for (seed, why) in &self.failures {
            s.push_str(&format!("failed seed={seed}: {why}\n"));
        }
        for (name, v) in [("dev_accuracy", self.dev_accuracy), ("test_accuracy", self.accuracy), ("test_f1", self.f1)] {
            if let Some(v) = v {
                s.push_str(&format!("{name}_mean={:.4}\n{name}_std={:.4}\n", v.mean, v.std));
            }
        }
        s
    }
}

/// Trains `config.replicates` models with seeds `seed, seed+1, …`.
///
/// A failing replicate is recorded and skipped; the call fails only when
/// no replicate completes.
pub fn run_replicates(
    exp: &Experiment,
    observer: &mut dyn FnMut(usize, &TrainEvent),
) -> Result<ReplicateSummary, TrainError> {
    exp.config.validate()?;
    let vocab = exp.vocabulary();
    let langs = exp.langs();
    let test = mark_for_mode(&exp.config, &exp.test);
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut last_err = None;
    for i in 0..exp.config.replicates {
        let seed = exp.config.seed.wrapping_add(i as u64);
        let mut aug = AugmentationConfig::new(exp.config.mode, exp.config.m, seed);
        aug.aux_words = exp.aux_words.clone();
        let corpus = build_training_corpus(&exp.labeled, &aug)?;
        let config = TrainConfig {
            seed,
            ..exp.config.clone()
        };
        let result = train_with(&config, &vocab, &corpus.examples, &exp.dev, &langs, &mut |e| {
            observer(i, e)
        });
        match result {
            Ok(outcome) => {
                let test = if test.is_empty() {
                    None
                } else {
                    Some(evaluate(&outcome.checkpoint.model, &vocab, &test)?)
                };
                runs.push(ReplicateRun {
                    seed,
                    corpus_size: corpus.examples.len(),
                    corpus_warnings: corpus.warnings,
                    outcome,
                    test,
                });
            }
            Err(e @ TrainError::NonFinite { .. }) => {
                failures.push((seed, e.to_string()));
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if runs.is_empty() {
        return Err(last_err.expect("no runs means at least one failure"));
    }
    let collect = |f: &dyn Fn(&ReplicateRun) -> Option<f64>| -> Option<MeanStd> {
        MeanStd::of(&runs.iter().filter_map(f).collect::<Vec<_>>())
    };
    Ok(ReplicateSummary {
        accuracy: collect(&|r| r.test.as_ref().map(|t| t.accuracy)),
        f1: collect(&|r| r.test.as_ref().map(|t| t.f1)),
        dev_accuracy: collect(&|r| Some(r.outcome.history.selected_accuracy)),
        runs,
        failures,
    })
}
