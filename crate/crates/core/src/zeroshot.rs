//! Zero-shot analyses over score tables: resourcedness categories, a
//! winner predictor built on them, and score degradation grouped by script.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::corpus_io::{LanguageInfo, ScoreTable};
use crate::error::{Error, Result};
use crate::word_accuracy::SystemPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResourceCategory {
    /// In the pretraining data.
    HighResource,
    /// Shares subgrouping and script with a pretraining language.
    LowRelated,
    LowUnrelated,
}

impl fmt::Display for ResourceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceCategory::HighResource => "HIGH_RESOURCE",
            ResourceCategory::LowRelated => "LOW_RELATED",
            ResourceCategory::LowUnrelated => "LOW_UNRELATED",
        })
    }
}

pub fn classify_resourcedness(lang: &LanguageInfo, table: &[LanguageInfo]) -> Result<ResourceCategory> {
    if !table.iter().any(|l| l.in_pretraining) {
        return Err(Error::invalid("metadata lists no pretraining language"));
    }
    let entry = table
        .iter()
        .find(|l| l.code == lang.code && l.script == lang.script)
        .ok_or_else(|| Error::UnknownLanguage {
            code: lang.code.clone(),
            script: lang.script.clone(),
        })?;
    Ok(category_of(entry, table))
}

fn category_of(lang: &LanguageInfo, table: &[LanguageInfo]) -> ResourceCategory {
    if lang.in_pretraining {
        ResourceCategory::HighResource
    } else if table
        .iter()
        .any(|l| l.in_pretraining && l.subgrouping == lang.subgrouping && l.script == lang.script)
    {
        ResourceCategory::LowRelated
    } else {
        ResourceCategory::LowUnrelated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorRule {
    /// First system wins for high-resource and related low-resource languages.
    Full,
    /// First system wins exactly for languages in the pretraining data.
    Presence,
}

impl std::str::FromStr for PredictorRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(PredictorRule::Full),
            "presence" => Ok(PredictorRule::Presence),
            _ => Err(Error::invalid(format!("unknown rule {s:?} (full|presence)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorRow {
    pub code: String,
    pub script: String,
    pub subgrouping: String,
    pub in_pretraining: bool,
    pub category: ResourceCategory,
    pub score_first: f64,
    pub score_second: f64,
    /// `score_first - score_second`.
    pub delta: f64,
    pub predicted: String,
    /// `None` on an exact tie.
    pub actual: Option<String>,
    /// Ties count as incorrect.
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLanguage {
    pub code: String,
    pub script: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorReport {
    pub rule: PredictorRule,
    pub systems: SystemPair,
    pub condition: String,
    pub rows: Vec<PredictorRow>,
    pub skipped: Vec<SkippedLanguage>,
    pub correct: usize,
    pub accuracy: f64,
}

impl PredictorReport {
    pub fn evaluated(&self) -> usize {
        self.rows.len()
    }

    pub fn ties(&self) -> usize {
        self.rows.iter().filter(|r| r.actual.is_none()).count()
    }
}

/// Scores the predictor on every metadata language, in metadata order.
/// Languages lacking a score for either system are skipped and listed, as
/// are scored languages missing from the metadata.
pub fn evaluate_predictor(
    scores: &ScoreTable,
    table: &[LanguageInfo],
    rule: PredictorRule,
    systems: &SystemPair,
    condition: &str,
) -> Result<PredictorReport> {
    if !table.iter().any(|l| l.in_pretraining) {
        return Err(Error::invalid("metadata lists no pretraining language"));
    }
    let (first, second) = (systems.first.as_str(), systems.second.as_str());
    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for lang in table {
        let a = scores.get(first, &lang.code, &lang.script, condition);
        let b = scores.get(second, &lang.code, &lang.script, condition);
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let missing: Vec<&str> = [(first, a), (second, b)]
                    .iter()
                    .filter(|(_, s)| s.is_none())
                    .map(|(n, _)| *n)
                    .collect();
                skipped.push(SkippedLanguage {
                    code: lang.code.clone(),
                    script: lang.script.clone(),
                    reason: format!("no {condition} score for {}", missing.join(", ")),
                });
                continue;
            }
        };
        let category = category_of(lang, table);
        let first_predicted = match rule {
            PredictorRule::Full => category != ResourceCategory::LowUnrelated,
            PredictorRule::Presence => lang.in_pretraining,
        };
        let predicted = if first_predicted { first } else { second };
        let actual = if a > b {
            Some(first)
        } else if b > a {
            Some(second)
        } else {
            None
        };
        rows.push(PredictorRow {
            code: lang.code.clone(),
            script: lang.script.clone(),
            subgrouping: lang.subgrouping.clone(),
            in_pretraining: lang.in_pretraining,
            category,
            score_first: a,
            score_second: b,
            delta: a - b,
            predicted: predicted.to_owned(),
            actual: actual.map(str::to_owned),
            correct: actual == Some(predicted),
        });
    }

    let known: HashSet<(&str, &str)> = table.iter().map(|l| (l.code.as_str(), l.script.as_str())).collect();
    for (code, script) in scores.languages() {
        if !known.contains(&(code, script)) {
            skipped.push(SkippedLanguage {
                code: code.to_owned(),
                script: script.to_owned(),
                reason: "not in metadata".to_owned(),
            });
        }
    }

    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "no language has {condition} scores for both {first} and {second}"
        )));
    }
    let correct = rows.iter().filter(|r| r.correct).count();
    Ok(PredictorReport {
        rule,
        systems: systems.clone(),
        condition: condition.to_owned(),
        accuracy: correct as f64 / rows.len() as f64,
        correct,
        rows,
        skipped,
    })
}

// ---------------------------------------------------------------------------
// Degradation by script
// ---------------------------------------------------------------------------

/// Assigns scripts to labelled groups.
///
/// Written as colon-separated tokens: `latin:cyrillic:multibyte`. A token
/// names a script (case-insensitive) and becomes its own group, or is
/// `label=Script+Script` for an explicit group. The tokens `nonlatin`,
/// `multibyte` and `other` denote the catch-all group for every script not
/// named elsewhere; at most one is allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptGrouping {
    labels: Vec<String>,
    by_script: HashMap<String, usize>,
    catch_all: Option<usize>,
}

const CATCH_ALL: [&str; 3] = ["nonlatin", "multibyte", "other"];

impl ScriptGrouping {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut g = ScriptGrouping {
            labels: Vec::new(),
            by_script: HashMap::new(),
            catch_all: None,
        };
        for token in spec.split(':').map(str::trim) {
            if token.is_empty() {
                return Err(Error::invalid(format!("empty group in {spec:?}")));
            }
            let idx = g.labels.len();
            if CATCH_ALL.contains(&token.to_lowercase().as_str()) {
                if g.catch_all.replace(idx).is_some() {
                    return Err(Error::invalid(format!("more than one catch-all group in {spec:?}")));
                }
                g.labels.push(token.to_owned());
                continue;
            }
            let (label, scripts) = token.split_once('=').unwrap_or((token, token));
            g.labels.push(label.to_owned());
            for script in scripts.split('+') {
                if g.by_script.insert(script.trim().to_lowercase(), idx).is_some() {
                    return Err(Error::invalid(format!("script {script:?} listed twice in {spec:?}")));
                }
            }
        }
        Ok(g)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Group index for a script, if it belongs to one.
    pub fn group_of(&self, script: &str) -> Option<usize> {
        self.by_script.get(&script.to_lowercase()).copied().or(self.catch_all)
    }
}

impl std::str::FromStr for ScriptGrouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScriptGrouping::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDegradation {
    pub group: String,
    pub n: usize,
    pub mean_low: Option<f64>,
    pub mean_high: Option<f64>,
    /// Mean of `low - high`; positive when the high condition scores worse.
    pub mean_drop: Option<f64>,
    /// Mean of `high / low`.
    pub mean_ratio: Option<f64>,
    pub median_drop: Option<f64>,
    pub median_ratio: Option<f64>,
}

impl GroupDegradation {
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LanguageKey {
    pub code: String,
    pub script: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationReport {
    pub system: String,
    pub floor: f64,
    pub groups: Vec<GroupDegradation>,
    /// Languages at or below the floor in the low condition.
    pub excluded: Vec<LanguageKey>,
    /// Languages above the floor with no high-condition score.
    pub missing_high: Vec<LanguageKey>,
    /// Languages whose script belongs to no group.
    pub ungrouped: Vec<LanguageKey>,
}

fn system_scores<'a>(table: &'a ScoreTable, system: &str, which: &str) -> Result<HashMap<(&'a str, &'a str), f64>> {
    let mut conditions = HashSet::new();
    let mut out = HashMap::new();
    for (k, v) in table.rows() {
        if k.system == system {
            conditions.insert(k.condition.as_str());
            out.insert((k.code.as_str(), k.script.as_str()), *v);
        }
    }
    if conditions.len() > 1 {
        let mut c: Vec<_> = conditions.into_iter().collect();
        c.sort_unstable();
        return Err(Error::invalid(format!(
            "{which} table holds several conditions for {system} ({}); pass one condition per table",
            c.join(", ")
        )));
    }
    Ok(out)
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// Mean and median of values summed in ascending order, so the result does
/// not depend on input order.
fn mean_median(xs: Vec<f64>) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let xs = sorted(xs);
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    };
    (Some(mean), Some(median))
}

/// Score change between a low- and a high-resource fine-tuning condition,
/// grouped by script, for one system. Languages scoring at or below `floor`
/// in the low condition are excluded.
pub fn degradation_by_script(
    low: &ScoreTable,
    high: &ScoreTable,
    groups: &ScriptGrouping,
    floor: f64,
    system: &str,
) -> Result<DegradationReport> {
    let lows = system_scores(low, system, "low")?;
    let highs = system_scores(high, system, "high")?;
    if lows.is_empty() {
        return Err(Error::invalid(format!("low table has no scores for {system}")));
    }

    let mut languages: Vec<(&str, &str)> = lows.keys().copied().collect();
    languages.sort_unstable();

    let key = |(c, s): (&str, &str)| LanguageKey {
        code: c.to_owned(),
        script: s.to_owned(),
    };
    let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); groups.labels().len()];
    let (mut excluded, mut missing_high, mut ungrouped) = (Vec::new(), Vec::new(), Vec::new());
    for lang in languages {
        let lo = lows[&lang];
        if lo <= floor {
            excluded.push(key(lang));
            continue;
        }
        let Some(&hi) = highs.get(&lang) else {
            missing_high.push(key(lang));
            continue;
        };
        match groups.group_of(lang.1) {
            Some(g) => members[g].push((lo, hi)),
            None => ungrouped.push(key(lang)),
        }
    }

    let groups = groups
        .labels()
        .iter()
        .zip(members)
        .map(|(label, m)| {
            let (mean_low, _) = mean_median(m.iter().map(|p| p.0).collect());
            let (mean_high, _) = mean_median(m.iter().map(|p| p.1).collect());
            let (mean_drop, median_drop) = mean_median(m.iter().map(|(l, h)| l - h).collect());
            let (mean_ratio, median_ratio) = mean_median(m.iter().map(|(l, h)| h / l).collect());
            GroupDegradation {
                group: label.clone(),
                n: m.len(),
                mean_low,
                mean_high,
                mean_drop,
                mean_ratio,
                median_drop,
                median_ratio,
            }
        })
        .collect();

    Ok(DegradationReport {
        system: system.to_owned(),
        floor,
        groups,
        excluded,
        missing_high,
        ungrouped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::{parse_score_table_str, ScoreKey};

    fn lang(code: &str, script: &str, sub: &str, pre: bool) -> LanguageInfo {
        LanguageInfo {
            code: code.into(),
            script: script.into(),
            subgrouping: sub.into(),
            in_pretraining: pre,
        }
    }

    fn meta() -> Vec<LanguageInfo> {
        vec![
            lang("ace_Latn", "Latin", "Malayo-Polynesian", false),
            lang("ace_Arab", "Arabic", "Malayo-Polynesian", false),
            lang("ind_Latn", "Latin", "Malayo-Polynesian", true),
            lang("deu_Latn", "Latin", "Germanic", true),
        ]
    }

    #[test]
    fn categories() {
        let m = meta();
        assert_eq!(classify_resourcedness(&m[0], &m).unwrap(), ResourceCategory::LowRelated);
        assert_eq!(
            classify_resourcedness(&m[1], &m).unwrap(),
            ResourceCategory::LowUnrelated
        );
        assert_eq!(
            classify_resourcedness(&m[3], &m).unwrap(),
            ResourceCategory::HighResource
        );
    }

    #[test]
    fn classification_errors() {
        let m = meta();
        let stranger = lang("xyz_Latn", "Latin", "Germanic", false);
        assert!(matches!(
            classify_resourcedness(&stranger, &m),
            Err(Error::UnknownLanguage { .. })
        ));
        let none: Vec<_> = m
            .iter()
            .cloned()
            .map(|mut l| {
                l.in_pretraining = false;
                l
            })
            .collect();
        assert!(classify_resourcedness(&none[0], &none).is_err());
    }

    #[test]
    fn adding_pretraining_language_only_promotes() {
        let mut m = meta();
        let before: Vec<_> = m.iter().map(|l| category_of(l, &m)).collect();
        m.push(lang("msa_Arab", "Arabic", "Malayo-Polynesian", true));
        let after: Vec<_> = m[..4].iter().map(|l| category_of(l, &m)).collect();
        let rank = |c: &ResourceCategory| match c {
            ResourceCategory::HighResource => 2,
            ResourceCategory::LowRelated => 1,
            ResourceCategory::LowUnrelated => 0,
        };
        for (b, a) in before.iter().zip(&after) {
            assert!(rank(a) >= rank(b));
        }
        assert_eq!(after[1], ResourceCategory::LowRelated);
    }

    fn scores(rows: &[(&str, &str, &str, f64)], condition: &str) -> ScoreTable {
        let mut t = ScoreTable::default();
        for &(system, code, script, v) in rows {
            t.insert(
                ScoreKey {
                    system: system.into(),
                    code: code.into(),
                    script: script.into(),
                    condition: condition.into(),
                },
                v,
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn predictor_counts_ties_against() {
        let s = scores(
            &[
                ("byt5", "ace_Latn", "Latin", 30.0),
                ("mt5", "ace_Latn", "Latin", 20.0),
                ("byt5", "ace_Arab", "Arabic", 10.0),
                ("mt5", "ace_Arab", "Arabic", 12.0),
                ("byt5", "ind_Latn", "Latin", 40.0),
                ("mt5", "ind_Latn", "Latin", 40.0),
                ("byt5", "xxx_Latn", "Latin", 5.0),
            ],
            "10k",
        );
        let sys = SystemPair::new("byt5", "mt5");
        let rep = evaluate_predictor(&s, &meta(), PredictorRule::Full, &sys, "10k").unwrap();
        assert_eq!(rep.evaluated(), 3);
        assert_eq!(rep.correct, 2);
        assert_eq!(rep.ties(), 1);
        assert_eq!(rep.accuracy, 2.0 / 3.0);
        let reasons: Vec<_> = rep
            .skipped
            .iter()
            .map(|s| (s.code.as_str(), s.reason.as_str()))
            .collect();
        assert_eq!(
            reasons,
            [
                ("deu_Latn", "no 10k score for byt5, mt5"),
                ("xxx_Latn", "not in metadata")
            ]
        );
        // accuracy reconstructs from the rows
        let c = rep.rows.iter().filter(|r| r.correct).count();
        assert_eq!(rep.accuracy, c as f64 / rep.rows.len() as f64);

        let rep = evaluate_predictor(&s, &meta(), PredictorRule::Presence, &sys, "10k").unwrap();
        // presence: ace_Latn predicted mt5 (wrong), ace_Arab mt5 (right), ind tie
        assert_eq!(rep.correct, 1);
    }

    #[test]
    fn perfect_predictor() {
        let s = scores(
            &[
                ("byt5", "ace_Latn", "Latin", 30.0),
                ("mt5", "ace_Latn", "Latin", 20.0),
                ("byt5", "ace_Arab", "Arabic", 10.0),
                ("mt5", "ace_Arab", "Arabic", 12.0),
            ],
            "10k",
        );
        let rep = evaluate_predictor(&s, &meta(), PredictorRule::Full, &SystemPair::new("byt5", "mt5"), "10k").unwrap();
        assert_eq!(rep.accuracy, 1.0);
        assert!(evaluate_predictor(
            &s,
            &meta(),
            PredictorRule::Full,
            &SystemPair::new("byt5", "mt5"),
            "250k"
        )
        .is_err());
    }

    #[test]
    fn grouping_parse() {
        let g = ScriptGrouping::parse("latin:cyrillic:multibyte").unwrap();
        assert_eq!(g.group_of("Latin"), Some(0));
        assert_eq!(g.group_of("Cyrillic"), Some(1));
        assert_eq!(g.group_of("Devanagari"), Some(2));
        let g = ScriptGrouping::parse("latin").unwrap();
        assert_eq!(g.group_of("Arabic"), None);
        let g = ScriptGrouping::parse("west=Latin+Greek:nonlatin").unwrap();
        assert_eq!(g.labels(), ["west", "nonlatin"]);
        assert_eq!(g.group_of("greek"), Some(0));
        assert!(ScriptGrouping::parse("nonlatin:other").is_err());
        assert!(ScriptGrouping::parse("latin::x").is_err());
        assert!(ScriptGrouping::parse("latin:a=Latin").is_err());
    }

    const LOW: &str = "system,code,script,condition,chrfpp
byt5,aaa_Latn,Latin,10k,40
byt5,bbb_Latn,Latin,10k,25
byt5,ccc_Latn,Latin,10k,60
byt5,ddd_Cyrl,Cyrillic,10k,50
byt5,eee_Arab,Arabic,10k,30
byt5,fff_Deva,Devanagari,10k,24.5
";
    const HIGH: &str = "system,code,script,condition,chrfpp
byt5,aaa_Latn,Latin,250k,30
byt5,bbb_Latn,Latin,250k,20
byt5,ccc_Latn,Latin,250k,45
byt5,ddd_Cyrl,Cyrillic,250k,45
byt5,eee_Arab,Arabic,250k,27
byt5,fff_Deva,Devanagari,250k,20
";

    #[test]
    fn degradation_hand_computed() {
        let low = parse_score_table_str(LOW, "low").unwrap();
        let high = parse_score_table_str(HIGH, "high").unwrap();
        let g = ScriptGrouping::parse("latin:nonlatin").unwrap();
        let rep = degradation_by_script(&low, &high, &g, 25.0, "byt5").unwrap();
        let excluded: Vec<_> = rep.excluded.iter().map(|k| k.code.as_str()).collect();
        assert_eq!(excluded, ["bbb_Latn", "fff_Deva"]);
        let latin = &rep.groups[0];
        assert_eq!(latin.n, 2);
        assert_eq!(latin.mean_low, Some(50.0));
        assert_eq!(latin.mean_high, Some(37.5));
        assert_eq!(latin.mean_drop, Some(12.5));
        assert_eq!(latin.mean_ratio, Some((0.75 + 0.75) / 2.0));
        let other = &rep.groups[1];
        assert_eq!(other.n, 2);
        assert_eq!(other.mean_drop, Some(4.0));
        assert_eq!(other.median_drop, Some(4.0));
        assert_eq!(other.mean_ratio, Some((0.9 + 0.9) / 2.0));
    }

    #[test]
    fn unchanged_scores_do_not_degrade() {
        let low = parse_score_table_str(LOW, "low").unwrap();
        let g = ScriptGrouping::parse("latin:cyrillic:multibyte").unwrap();
        let rep = degradation_by_script(&low, &low, &g, 25.0, "byt5").unwrap();
        for grp in &rep.groups {
            assert_eq!(grp.mean_drop, Some(0.0));
            assert_eq!(grp.mean_ratio, Some(1.0));
        }
    }

    #[test]
    fn empty_group_and_ungrouped() {
        let low = parse_score_table_str(LOW, "low").unwrap();
        let high = parse_score_table_str(HIGH, "high").unwrap();
        let g = ScriptGrouping::parse("latin:greek").unwrap();
        let rep = degradation_by_script(&low, &high, &g, 25.0, "byt5").unwrap();
        assert!(rep.groups[1].is_empty());
        assert_eq!(rep.groups[1].mean_drop, None);
        assert_eq!(rep.ungrouped.len(), 2);
    }

    #[test]
    fn mixed_conditions_rejected() {
        let mixed = format!("{LOW}byt5,aaa_Latn,Latin,100k,41\n");
        let low = parse_score_table_str(&mixed, "low").unwrap();
        let high = parse_score_table_str(HIGH, "high").unwrap();
        let g = ScriptGrouping::parse("latin:nonlatin").unwrap();
        assert!(degradation_by_script(&low, &high, &g, 25.0, "byt5").is_err());
    }
}
