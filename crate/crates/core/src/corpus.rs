//! Case corpus persistence, batch assessment and report output.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decimal::{self, round2};
use crate::error::{Error, Result};
use crate::files::{self, parse_json, to_canonical_json, TaxonomyFile};
use crate::model::{Assessment, Band, CaseDraft, CaseRecord, DetectorProfile, Mode, Taxonomy, WeightProfile};
use crate::scoring::assess_case;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub source: String,
    pub date: String,
}

/// A validated list of cases together with the taxonomy they are rated in.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub provenance: Option<Provenance>,
    pub taxonomy: Taxonomy,
    pub cases: Vec<CaseRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    #[serde(default)]
    provenance: Option<Provenance>,
    taxonomy: TaxonomyFile,
    cases: Vec<CaseDraft>,
}

#[derive(Serialize)]
struct CorpusOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a Provenance>,
    taxonomy: &'a Taxonomy,
    cases: &'a [CaseRecord],
}

impl Corpus {
    pub fn new(provenance: Option<Provenance>, taxonomy: Taxonomy, cases: Vec<CaseRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for case in &cases {
            case.validate(&taxonomy)?;
            if !seen.insert(case.id.as_str()) {
                return Err(Error::DuplicateCaseId(case.id.clone()));
            }
        }
        Ok(Self {
            provenance,
            taxonomy,
            cases,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CorpusFile = parse_json(text)?;
        let taxonomy = Taxonomy::new(file.taxonomy.categories)?;
        let cases = file
            .cases
            .into_iter()
            .map(|draft| draft.into_record(None))
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(file.provenance, taxonomy, cases)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(&CorpusOut {
            provenance: self.provenance.as_ref(),
            taxonomy: &self.taxonomy,
            cases: &self.cases,
        })
    }

    pub fn case(&self, id: &str) -> Option<&CaseRecord> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        files::write_text(path, &self.to_json())
    }

    /// Keeps only the named case.
    pub fn select(&self, id: &str) -> Result<Corpus> {
        let case = self
            .case(id)
            .cloned()
            .ok_or_else(|| Error::UnknownCaseId(id.to_string()))?;
        Ok(Corpus {
            provenance: self.provenance.clone(),
            taxonomy: self.taxonomy.clone(),
            cases: vec![case],
        })
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::from_json(&files::read_text(path)?)
}

/// One assessment per (case, mode), cases outermost.
pub fn batch_score(
    corpus: &Corpus,
    profile: &WeightProfile,
    detector: &DetectorProfile,
    modes: &[Mode],
) -> Result<Vec<Assessment>> {
    let mut out = Vec::with_capacity(corpus.cases.len() * modes.len());
    for case in &corpus.cases {
        for &mode in modes {
            let assessment = assess_case(case, &corpus.taxonomy, profile, detector, mode)
                .map_err(|e| Error::in_case(&case.id, e))?;
            out.push(assessment);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Canonical JSON.
    Machine,
    /// Markdown.
    Human,
}

/// Row of the machine report. `score` is the 2-decimal display value,
/// `score_exact` the unrounded one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub case_id: String,
    pub mode: Mode,
    pub adv: f64,
    pub det: f64,
    pub imp: f64,
    #[serde(serialize_with = "decimal::serialize_2dp")]
    pub score: f64,
    pub score_exact: f64,
    pub band: Band,
}

impl From<&Assessment> for ReportRow {
    fn from(a: &Assessment) -> Self {
        ReportRow {
            case_id: a.case_id.clone(),
            mode: a.mode,
            adv: a.adv,
            det: a.det,
            imp: a.imp,
            score: a.score,
            score_exact: a.score,
            band: a.band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandCounts {
    pub low: usize,
    pub medium: usize,
    pub high: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineReport {
    pub assessments: Vec<ReportRow>,
    pub band_counts: BandCounts,
}

impl MachineReport {
    pub fn from_assessments(assessments: &[Assessment]) -> Self {
        let count = |band| assessments.iter().filter(|a| a.band == band).count();
        MachineReport {
            assessments: assessments.iter().map(ReportRow::from).collect(),
            band_counts: BandCounts {
                low: count(Band::Low),
                medium: count(Band::Medium),
                high: count(Band::High),
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }
}

pub fn emit_report(assessments: &[Assessment], format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => to_canonical_json(&MachineReport::from_assessments(assessments)),
        ReportFormat::Human => human_report(assessments),
    }
}

fn human_report(assessments: &[Assessment]) -> String {
    let mut out = String::new();
    out.push_str("# Deceptive pattern risk report\n\n");
    out.push_str("| case | mode | ADV | DET | IMP | R | band |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for a in assessments {
        let _ = writeln!(
            out,
            "| {} | {} | {:.3} | {:.3} | {:.3} | {:.2} | {} |",
            a.case_id,
            a.mode,
            a.adv,
            a.det,
            a.imp,
            round2(a.score),
            a.band
        );
    }

    // case ids in first-seen order
    let mut ids: Vec<&str> = Vec::new();
    for a in assessments {
        if !ids.contains(&a.case_id.as_str()) {
            ids.push(&a.case_id);
        }
    }
    for id in ids {
        let _ = write!(out, "\n## {id}\n\n");
        let rows: Vec<&Assessment> = assessments.iter().filter(|a| a.case_id == id).collect();
        for a in &rows {
            let b = &a.breakdown;
            let _ = writeln!(out, "- mode `{}`", a.mode);
            if b.adv_terms.is_empty() {
                let _ = writeln!(out, "  - ADV = {:.3} (random-guess challenger)", a.adv);
            } else {
                let terms: Vec<String> = b
                    .adv_terms
                    .iter()
                    .map(|t| {
                        format!(
                            "{:?}={} ({:.3} x {:.3})",
                            t.factor, t.level, t.weight, t.level_value
                        )
                        .to_lowercase()
                    })
                    .collect();
                let _ = writeln!(out, "  - ADV = {:.3} from {}", a.adv, terms.join(", "));
            }
            let consequences: Vec<String> = b
                .imp_terms
                .terms
                .iter()
                .map(|t| format!("{} {:.3}", t.consequence, t.contribution))
                .collect();
            let _ = writeln!(
                out,
                "  - IMP = {:.3} from [{}]{}",
                a.imp,
                consequences.join(", "),
                if b.imp_terms.clamped { " (clamped at 1)" } else { "" }
            );
            let _ = writeln!(
                out,
                "  - R = {:.4} x {:.4} x {:.4} = {:.2} ({})",
                b.offset_term,
                b.impact_multiplier,
                b.beta,
                round2(a.score),
                a.band
            );
        }
        let with = rows.iter().find(|a| a.mode == Mode::WithChallenger);
        let base = rows.iter().find(|a| a.mode == Mode::BaselineChallenger);
        if let (Some(with), Some(base)) = (with, base) {
            let _ = writeln!(
                out,
                "- delta (with - baseline) = {:+.2} ({} -> {})",
                round2(with.score - base.score),
                base.band,
                with.band
            );
        }
    }
    out
}
