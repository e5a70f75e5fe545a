use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use super::manifest::RunManifest;
use super::output::{to_json, Cell, Table};
use super::*;
use crate::attribution::{
    in_word_relative_importance, osw_source_importance, position_curve, CurveOptions, GroupImportance, OswConfig,
};
use crate::control_set::{
    copying_accuracy, generate_control, load_replacements, proper_noun_rate, write_replacements, ProperNounTags,
};
use crate::corpus_io::{
    load_attributions, load_language_metadata, load_score_table, parse_alignments, parse_corpus, parse_tags,
    AttributionRecord, Corpus,
};
use crate::metrics::{bleu, chrf, paired_t_test, ChrfParams};
use crate::word_accuracy::{
    accuracy_by_frequency, accuracy_by_similarity, build_frequency_table, default_similarity_thresholds,
    evaluate_pairs, AccuracyBin, EvaluatedPair,
};
use crate::zeroshot::{degradation_by_script, evaluate_predictor, ScriptGrouping};

pub(crate) fn execute(cmd: &Command, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    match cmd {
        Command::Score(a) => score(a, m, json),
        Command::Compare(a) => compare(a, m, json),
        Command::Osw(a) => osw(a, m, json),
        Command::Freq(a) => freq(a, m, json),
        Command::AttrCurves(a) => attr_curves(a, m, json),
        Command::AttrWords(a) => attr_words(a, m, json),
        Command::AttrOsw(a) => attr_osw(a, m, json),
        Command::ZeroshotPredict(a) => zeroshot_predict(a, m, json),
        Command::Degrade(a) => degrade(a, m, json),
        Command::ControlGen(a) => control_gen(a, m),
        Command::ControlScore(a) => control_score(a, m, json),
    }
}

fn render(json: bool, table: &Table, value: impl Serialize) -> Result<Vec<u8>> {
    if json {
        let v = serde_json::to_value(value).map_err(|e| Error::Internal(format!("JSON encoding failed: {e}")))?;
        Ok(to_json(&v))
    } else {
        table.to_csv()
    }
}

fn artifact(role: &'static str, path: &Option<PathBuf>, bytes: Vec<u8>) -> Artifact {
    Artifact {
        role,
        path: path.clone(),
        bytes,
    }
}

fn done(artifacts: Vec<Artifact>, summary: Option<String>) -> Result<Outcome> {
    Ok(Outcome { artifacts, summary })
}

// ---------------------------------------------------------------------------

fn score(a: &ScoreArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.input("corpus", &a.corpus)?;
    m.param("system", &a.system);
    m.param("metric", a.metric.name());
    let corpus = parse_corpus(&a.corpus)?;
    let hyps = corpus.hypotheses(&a.system)?;
    let refs = corpus.references();
    let per = a.per_sentence.is_some();
    let result = match a.metric {
        Metric::Chrfpp => chrf(&hyps, &refs, &ChrfParams::default(), per)?,
        Metric::Chrf => chrf(&hyps, &refs, &ChrfParams::chrf(), per)?,
        Metric::Bleu if per => {
            return Err(Error::invalid(
                "per-sentence scores are only available for chrf and chrfpp",
            ))
        }
        Metric::Bleu => bleu(&hyps, &refs)?,
    };

    let mut t = Table::new(["system", "metric", "n", "score"]);
    t.push(vec![
        a.system.as_str().into(),
        a.metric.name().into(),
        corpus.len().into(),
        result.value.into(),
    ]);
    let value = json!({
        "system": a.system, "metric": a.metric.name(), "n": corpus.len(), "score": result.value,
    });
    let mut artifacts = vec![artifact("score", &a.out, render(json, &t, &value)?)];

    if let (Some(path), Some(scores)) = (&a.per_sentence, &result.per_sentence) {
        let mut t = Table::new(["id", "score"]);
        for (r, s) in corpus.records().iter().zip(scores) {
            t.push(vec![r.id.as_str().into(), (*s).into()]);
        }
        let rows: Vec<_> = corpus
            .records()
            .iter()
            .zip(scores)
            .map(|(r, s)| json!({"id": r.id, "score": s}))
            .collect();
        artifacts.push(artifact("per_sentence", &Some(path.clone()), render(json, &t, rows)?));
    }
    done(artifacts, None)
}

fn compare(a: &CompareArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.input("corpus", &a.corpus)?;
    m.param("systems", a.systems.to_string());
    let params = match a.metric {
        SentenceMetric::Chrfpp => ChrfParams::default(),
        SentenceMetric::Chrf => ChrfParams::chrf(),
    };
    m.param("metric", if params.word_order > 0 { "chrfpp" } else { "chrf" });
    m.param("alpha", a.alpha);
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    let corpus = parse_corpus(&a.corpus)?;
    let refs = corpus.references();
    let sentence_scores = |system: &str| -> Result<Vec<f64>> {
        let hyps = corpus.hypotheses(system)?;
        let s = chrf(&hyps, &refs, &params, true)?;
        Ok(s.per_sentence.unwrap_or_default())
    };
    let first = sentence_scores(&a.systems.first)?;
    let second = sentence_scores(&a.systems.second)?;
    let r = paired_t_test(&first, &second)?;
    let significant = r.significant(a.alpha);

    let mut t = Table::new(["t", "p", "n", "mean_a", "mean_b", "significant", "system_a", "system_b"]);
    t.push(vec![
        r.t.into(),
        r.p.into(),
        r.n.into(),
        r.mean_a.into(),
        r.mean_b.into(),
        significant.into(),
        a.systems.first.as_str().into(),
        a.systems.second.as_str().into(),
    ]);
    let value = json!({
        "system_a": a.systems.first, "system_b": a.systems.second,
        "t": r.t, "p": r.p, "n": r.n, "mean_a": r.mean_a, "mean_b": r.mean_b,
        "alpha": a.alpha, "significant": significant,
    });
    let marker = if significant { " *" } else { "" };
    let summary = format!(
        "{} vs {}: t = {:.4}, p = {:.4}{marker} (n = {})",
        a.systems.first, a.systems.second, r.t, r.p, r.n
    );
    done(
        vec![artifact("comparison", &a.out, render(json, &t, value)?)],
        Some(summary),
    )
}

// ---------------------------------------------------------------------------

fn load_pairs(p: &PairInputs, m: &mut RunManifest) -> Result<Vec<EvaluatedPair>> {
    m.input("corpus", &p.corpus)?;
    m.input("align_src_ref", &p.align_src_ref)?;
    m.input("align_src_hyp_a", &p.align_src_hyp_a)?;
    m.input("align_src_hyp_b", &p.align_src_hyp_b)?;
    m.param("systems", p.systems.to_string());
    let corpus = parse_corpus(&p.corpus)?;
    let src_ref = parse_alignments(&p.align_src_ref)?;
    let hyp_a = parse_alignments(&p.align_src_hyp_a)?;
    let hyp_b = parse_alignments(&p.align_src_hyp_b)?;
    evaluate_pairs(&corpus, &src_ref, &p.systems, [&hyp_a, &hyp_b])
}

fn bin_header(framing: bool, systems: &SystemPair) -> Vec<String> {
    let mut h: Vec<String> = Vec::new();
    if framing {
        h.push("framing".into());
    }
    h.extend(["label", "lower", "upper", "n_pairs"].map(String::from));
    h.push(format!("accuracy_{}", systems.first));
    h.push(format!("accuracy_{}", systems.second));
    h.push("delta".into());
    h
}

fn bin_row(framing: Option<&str>, b: &AccuracyBin) -> Vec<Cell> {
    let mut row: Vec<Cell> = framing.map(Cell::from).into_iter().collect();
    row.extend([
        b.label.as_str().into(),
        b.lower.into(),
        b.upper.into(),
        b.n_pairs.into(),
        b.accuracy[0].into(),
        b.accuracy[1].into(),
        b.delta.into(),
    ]);
    row
}

fn osw(a: &OswArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    let thresholds = a.thresholds.clone().unwrap_or_else(default_similarity_thresholds);
    m.param("thresholds", &thresholds);
    let pairs = load_pairs(&a.pairs, m)?;
    let acc = accuracy_by_similarity(&pairs, &thresholds)?;

    let mut t = Table::new(bin_header(true, &a.pairs.systems));
    for b in &acc.cumulative {
        t.push(bin_row(Some("cumulative"), b));
    }
    for b in &acc.binned.bins {
        t.push(bin_row(Some("binned"), b));
    }
    let value = json!({"systems": a.pairs.systems, "n_pairs": pairs.len(), "accuracy": acc});
    let summary = format!("{} word pairs", pairs.len());
    done(
        vec![artifact("accuracy", &a.out, render(json, &t, value)?)],
        Some(summary),
    )
}

fn freq(a: &FreqArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.param("bins", &a.bins);
    let pairs = load_pairs(&a.pairs, m)?;
    m.input("train_target", &a.train_target)?;
    let text = std::fs::read_to_string(&a.train_target).map_err(|e| Error::io(&a.train_target, e))?;
    let table = build_frequency_table(text.lines());
    let binned = accuracy_by_frequency(&pairs, &table, &a.bins)?;

    let mut t = Table::new(bin_header(false, &a.pairs.systems));
    for b in &binned.bins {
        t.push(bin_row(None, b));
    }
    let value = json!({"systems": a.pairs.systems, "n_pairs": pairs.len(), "accuracy": binned});
    let summary = format!("{} word pairs, {} distinct training words", pairs.len(), table.len());
    done(
        vec![artifact("accuracy", &a.out, render(json, &t, value)?)],
        Some(summary),
    )
}

// ---------------------------------------------------------------------------

fn load_records(c: &CurveArgs, m: &mut RunManifest) -> Result<(Vec<AttributionRecord>, CurveOptions)> {
    m.input("attributions", &c.attributions)?;
    m.param("window", c.window);
    m.param("smoothing", "trailing");
    m.param("drop_eos", c.drop_eos);
    m.param("exclude_prompt", c.exclude_prompt);
    let mut records = load_attributions(&c.attributions)?;
    if c.exclude_prompt {
        records = records.iter().map(AttributionRecord::without_prompt).collect();
    }
    let opts = CurveOptions {
        window: c.window,
        drop_eos: c.drop_eos,
    };
    Ok((records, opts))
}

fn attr_curves(a: &AttrCurvesArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    let (records, opts) = load_records(&a.curve, m)?;
    let curve = position_curve(&records, &opts)?;

    let mut t = Table::new(["position", "raw", "smoothed", "support"]);
    for i in 0..curve.len() {
        t.push(vec![
            i.into(),
            curve.raw[i].into(),
            curve.values[i].into(),
            curve.support[i].into(),
        ]);
    }
    let value = json!({
        "smoothing": "trailing", "window": curve.window, "drop_eos": opts.drop_eos,
        "raw": curve.raw, "smoothed": curve.values, "support": curve.support,
    });
    let summary = format!("{} records, {} positions", records.len(), curve.len());
    done(vec![artifact("curve", &a.out, render(json, &t, value)?)], Some(summary))
}

fn attr_words(a: &AttrWordsArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.param("max_pos", a.max_pos);
    let (records, opts) = load_records(&a.curve, m)?;
    let curve = position_curve(&records, &opts)?;
    let points = in_word_relative_importance(&records, &curve, a.max_pos)?;

    let mut t = Table::new(["position", "relative_pct", "count"]);
    for p in &points {
        t.push(vec![p.position.into(), p.relative_pct.into(), p.count.into()]);
    }
    let value = json!({"smoothing": "trailing", "window": curve.window, "points": points});
    done(vec![artifact("in_word", &a.out, render(json, &t, value)?)], None)
}

fn group_row(name: &str, g: Option<&GroupImportance>) -> Vec<Cell> {
    match g {
        Some(g) => vec![
            name.into(),
            g.relative_pct.into(),
            g.raw_share.into(),
            g.focus.into(),
            g.n_words.into(),
            g.n_bytes.into(),
        ],
        None => vec![
            name.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            0usize.into(),
            0usize.into(),
        ],
    }
}

fn attr_osw(a: &AttrOswArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    let (records, curve) = load_records(&a.curve, m)?;
    m.input("corpus", &a.corpus)?;
    m.input("align_src_ref", &a.align_src_ref)?;
    m.param("osw_min", a.osw_min);
    m.param("nonosw_max", a.nonosw_max);
    let corpus = parse_corpus(&a.corpus)?;
    let alignments = parse_alignments(&a.align_src_ref)?;
    let config = OswConfig {
        osw_min: a.osw_min,
        nonosw_max: a.nonosw_max,
        curve,
    };
    let report = osw_source_importance(&records, &corpus, &alignments, &config)?;

    let mut t = Table::new(["group", "relative_pct", "raw_share", "focus", "n_words", "n_bytes"]);
    t.push(group_row("osw", report.osw.as_ref()));
    t.push(group_row("non_osw", report.non_osw.as_ref()));
    let summary = format!(
        "{} qualifying pairs had no match in the generated text",
        report.unmatched
    );
    done(
        vec![artifact("importance", &a.out, render(json, &t, &report)?)],
        Some(summary),
    )
}

// ---------------------------------------------------------------------------

fn zeroshot_predict(a: &ZeroshotArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.input("scores", &a.scores)?;
    m.input("metadata", &a.metadata)?;
    let rule = PredictorRule::from(a.rule);
    m.param("rule", rule);
    m.param("systems", a.systems.to_string());
    let scores = load_score_table(&a.scores)?;
    let metadata = load_language_metadata(&a.metadata)?;
    let condition = match &a.condition {
        Some(c) => c.clone(),
        None => match scores.conditions().as_slice() {
            [only] => only.to_string(),
            [] => return Err(Error::invalid("score table is empty")),
            many => {
                return Err(Error::invalid(format!(
                    "score table holds several conditions ({}); pass --condition",
                    many.join(", ")
                )))
            }
        },
    };
    m.param("condition", &condition);
    let report = evaluate_predictor(&scores, &metadata, rule, &a.systems, &condition)?;

    let mut header: Vec<String> = ["code", "script", "subgrouping", "in_pretraining", "category"]
        .map(String::from)
        .to_vec();
    header.push(format!("score_{}", a.systems.first));
    header.push(format!("score_{}", a.systems.second));
    header.extend(["delta", "predicted", "actual", "correct", "skipped"].map(String::from));
    let mut t = Table::new(header);
    for r in &report.rows {
        t.push(vec![
            r.code.as_str().into(),
            r.script.as_str().into(),
            r.subgrouping.as_str().into(),
            r.in_pretraining.into(),
            r.category.to_string().into(),
            r.score_first.into(),
            r.score_second.into(),
            r.delta.into(),
            r.predicted.as_str().into(),
            r.actual.as_deref().into(),
            r.correct.into(),
            Cell::Empty,
        ]);
    }
    for s in &report.skipped {
        let mut row = vec![Cell::from(s.code.as_str()), s.script.as_str().into()];
        row.extend(std::iter::repeat_n(Cell::Empty, 9));
        row.push(s.reason.as_str().into());
        t.push(row);
    }
    let summary = format!(
        "{} rule, {}: {}/{} correct (accuracy {:.4}); {} ties counted incorrect; {} skipped",
        a.rule_name(),
        condition,
        report.correct,
        report.evaluated(),
        report.accuracy,
        report.ties(),
        report.skipped.len()
    );
    done(
        vec![artifact("predictions", &a.out, render(json, &t, &report)?)],
        Some(summary),
    )
}

impl ZeroshotArgs {
    fn rule_name(&self) -> &'static str {
        match self.rule {
            Rule::Full => "full",
            Rule::Presence => "presence",
        }
    }
}

fn degrade(a: &DegradeArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.input("scores_low", &a.scores_low)?;
    m.input("scores_high", &a.scores_high)?;
    m.param("floor", a.floor);
    m.param("groups", &a.groups);
    let groups = ScriptGrouping::parse(&a.groups)?;
    let low = load_score_table(&a.scores_low)?;
    let high = load_score_table(&a.scores_high)?;
    let systems: Vec<String> = match &a.system {
        Some(s) => s.clone(),
        None => low.systems().into_iter().map(str::to_owned).collect(),
    };
    m.param("systems", &systems);
    let reports = systems
        .iter()
        .map(|s| degradation_by_script(&low, &high, &groups, a.floor, s))
        .collect::<Result<Vec<_>>>()?;

    let mut t = Table::new([
        "system",
        "group",
        "n",
        "mean_low",
        "mean_high",
        "mean_drop",
        "mean_ratio",
        "median_drop",
        "median_ratio",
    ]);
    let mut ex = Table::new(["system", "code", "script", "reason"]);
    let mut summary = Vec::new();
    for r in &reports {
        for g in &r.groups {
            t.push(vec![
                r.system.as_str().into(),
                g.group.as_str().into(),
                g.n.into(),
                g.mean_low.into(),
                g.mean_high.into(),
                g.mean_drop.into(),
                g.mean_ratio.into(),
                g.median_drop.into(),
                g.median_ratio.into(),
            ]);
        }
        for (reason, list) in [
            ("at_or_below_floor", &r.excluded),
            ("missing_high", &r.missing_high),
            ("ungrouped", &r.ungrouped),
        ] {
            for k in list {
                ex.push(vec![
                    r.system.as_str().into(),
                    k.code.as_str().into(),
                    k.script.as_str().into(),
                    reason.into(),
                ]);
            }
        }
        summary.push(format!(
            "{}: {} excluded at or below {}, {} missing high, {} ungrouped",
            r.system,
            r.excluded.len(),
            a.floor,
            r.missing_high.len(),
            r.ungrouped.len()
        ));
    }
    let mut artifacts = vec![artifact("degradation", &a.out, render(json, &t, &reports)?)];
    if let Some(p) = &a.excluded_out {
        let value: Vec<_> = reports
            .iter()
            .map(|r| json!({"system": r.system, "excluded": r.excluded, "missing_high": r.missing_high, "ungrouped": r.ungrouped}))
            .collect();
        artifacts.push(artifact("excluded", &Some(p.clone()), render(json, &ex, value)?));
    }
    done(artifacts, Some(summary.join("\n")))
}

// ---------------------------------------------------------------------------

pub(crate) const SEED_ENV: &str = "CHARMT_SEED";

fn control_gen(a: &ControlGenArgs, m: &mut RunManifest) -> Result<Outcome> {
    m.input("corpus", &a.corpus)?;
    m.input("align", &a.align)?;
    m.input("src_tags", &a.src_tags)?;
    m.input("ref_tags", &a.ref_tags)?;
    let seed = match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
        Err(_) => a.seed,
    };
    m.param("seed", seed);
    m.param("proper_noun_tags", &a.proper_noun_tags);
    let corpus = parse_corpus(&a.corpus)?;
    let alignments = parse_alignments(&a.align)?;
    let src_tags = parse_tags(&a.src_tags)?;
    let ref_tags = parse_tags(&a.ref_tags)?;
    let tags = ProperNounTags::new(a.proper_noun_tags.iter().cloned());
    let control = generate_control(&corpus, &alignments, &src_tags, &ref_tags, seed, &tags)?;
    let rate = proper_noun_rate(&corpus, &ref_tags, &tags)?;

    let mut log = Vec::new();
    write_replacements(&control.replacements, &mut log).map_err(|e| Error::Internal(e.to_string()))?;
    let summary = format!(
        "{} replacements in {} sentences (seed {seed}); proper-noun rate of references {:.4}",
        control.replacements.len(),
        control.corpus.len(),
        rate
    );
    done(
        vec![
            artifact(
                "control_corpus",
                &Some(a.out_corpus.clone()),
                control.corpus.to_jsonl().into_bytes(),
            ),
            artifact("replacement_log", &Some(a.out_log.clone()), log),
        ],
        Some(summary),
    )
}

fn control_score(a: &ControlScoreArgs, m: &mut RunManifest, json: bool) -> Result<Outcome> {
    m.input("log", &a.log)?;
    m.input("hyps", &a.hyps)?;
    let replacements = load_replacements(&a.log)?;
    let hyps: Corpus = parse_corpus(&a.hyps)?;
    let systems = hyps.systems();
    if systems.is_empty() {
        return Err(Error::invalid("hypothesis corpus holds no system outputs"));
    }
    let mut t = Table::new(["system", "replacements", "copied", "accuracy"]);
    let mut rows = Vec::new();
    for system in systems {
        let by_id: HashMap<String, String> = hyps
            .records()
            .iter()
            .filter_map(|r| r.hypotheses.get(system).map(|h| (r.id.clone(), h.clone())))
            .collect();
        let acc = copying_accuracy(&replacements, &by_id)?;
        let copied = replacements
            .iter()
            .filter(|r| by_id.get(&r.record_id).is_some_and(|h| h.contains(&r.replacement)))
            .count();
        t.push(vec![
            system.into(),
            replacements.len().into(),
            copied.into(),
            acc.into(),
        ]);
        rows.push(json!({"system": system, "replacements": replacements.len(), "copied": copied, "accuracy": acc}));
    }
    done(
        vec![artifact("copying_accuracy", &a.out, render(json, &t, rows)?)],
        None,
    )
}
