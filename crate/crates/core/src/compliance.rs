//! README structure checker for the PLUTUS reproducibility standard.
//!
//! A compliant repository documents itself through a fixed set of README
//! sections. The checker locates `README.md` (any casing), scans its top- and
//! second-level markdown headings, matches them against a ruleset, and scores
//! the repo as the fraction of required sections that are present with a
//! non-empty body. The ruleset ships as data (CSV) so the rubric can evolve
//! without code changes.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComplianceError {
    #[error("repository directory not found: {0}")]
    RepoNotFound(PathBuf),
    #[error("ruleset {path}, line {line}: {msg}")]
    Ruleset { path: PathBuf, line: usize, msg: String },
    #[error("ruleset {0} contains no rules")]
    EmptyRuleset(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One documentation requirement: a section title, whether it is mandatory,
/// accepted heading variants, and the development-process step it maps to
/// (empty when the section is not tied to a step).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionRule {
    pub name: String,
    pub required: bool,
    pub aliases: Vec<String>,
    pub step_tag: String,
}

impl SectionRule {
    fn new(name: &str, required: bool, aliases: &[&str], step_tag: &str) -> Self {
        SectionRule {
            name: name.into(),
            required,
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            step_tag: step_tag.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionStatus {
    Present,
    Missing,
    /// Heading found but no body text before the next scanned heading.
    /// Counts as missing for the score.
    Empty,
}

impl SectionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SectionStatus::Present => "present",
            SectionStatus::Missing => "missing",
            SectionStatus::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub rule: SectionRule,
    pub status: SectionStatus,
    /// The heading text that matched, verbatim from the README.
    pub matched_heading: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceReport {
    pub repo_path: PathBuf,
    /// README file name inside the repo, `None` when discovery failed.
    pub readme: Option<PathBuf>,
    pub findings: Vec<Finding>,
    /// required present / required total, in [0, 1].
    pub score: f64,
    pub required_total: usize,
    pub required_present: usize,
    pub required_missing: usize,
}

/// The standard's eleven README sections, in order. Exactly seven are
/// required; step tags follow the 9-step development process.
pub fn default_ruleset() -> Vec<SectionRule> {
    vec![
        SectionRule::new("Abstract", true, &[], ""),
        SectionRule::new("Introduction", true, &[], ""),
        SectionRule::new("Related Work", false, &[], ""),
        SectionRule::new("Trading Hypotheses", true, &["Trading Hypothesis"], "1"),
        SectionRule::new("Data", true, &[], "2-3"),
        SectionRule::new("Implementation", true, &[], "4-6+"),
        SectionRule::new("Backtesting & Optimization", true, &[], ""),
        SectionRule::new("Paper Trading", false, &[], "7"),
        SectionRule::new("Conclusion", false, &[], ""),
        SectionRule::new("References", true, &[], ""),
        SectionRule::new("Final Report or Paper", false, &["Final Report", "Paper"], ""),
    ]
}

/// Canonical form used for heading comparison: lowercase, `&` read as
/// "and", punctuation dropped, whitespace collapsed.
pub fn normalize_heading(s: &str) -> String {
    let lowered = s.to_lowercase().replace('&', " and ");
    let mut out = String::with_capacity(lowered.len());
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            out.push(c);
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Loads a ruleset from CSV with header `name,required,aliases,step_tag`;
/// aliases are `|`-separated inside the one field.
pub fn load_ruleset(path: &Path) -> Result<Vec<SectionRule>, ComplianceError> {
    let err = |line: usize, msg: String| ComplianceError::Ruleset {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| err(1, e.to_string()))?;
    {
        let headers = reader.headers().map_err(|e| err(1, e.to_string()))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != ["name", "required", "aliases", "step_tag"] {
            return Err(err(1, format!("expected header name,required,aliases,step_tag, got {}", got.join(","))));
        }
    }
    let mut rules = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| err(line, e.to_string()))?;
        if record.len() != 4 {
            return Err(err(line, format!("expected 4 fields, got {}", record.len())));
        }
        let name = record[0].trim().to_string();
        if name.is_empty() {
            return Err(err(line, "empty section name".into()));
        }
        let required = match record[1].trim() {
            "true" => true,
            "false" => false,
            other => return Err(err(line, format!("required must be true or false, got {other}"))),
        };
        let aliases: Vec<String> = record[2]
            .split('|')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        rules.push(SectionRule { name, required, aliases, step_tag: record[3].trim().to_string() });
    }
    if rules.is_empty() {
        return Err(ComplianceError::EmptyRuleset(path.to_path_buf()));
    }
    Ok(rules)
}

/// Serializes a ruleset back to the CSV layout `load_ruleset` accepts.
pub fn ruleset_to_csv(rules: &[SectionRule]) -> String {
    let mut out = String::from("name,required,aliases,step_tag\n");
    for r in rules {
        let quote = |s: &str| {
            if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            quote(&r.name),
            r.required,
            quote(&r.aliases.join("|")),
            quote(&r.step_tag)
        ));
    }
    out
}

/// Heading plus whether any body text follows it before the next scanned
/// heading. Only `#` and `##` headings outside code fences are scanned.
#[derive(Debug, PartialEq)]
struct Section {
    heading: String,
    has_body: bool,
}

fn scan_sections(markdown: &str) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    let mut in_fence = false;
    for line in markdown.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") || trimmed.starts_with("~~~") {
            in_fence = !in_fence;
            if let Some(last) = sections.last_mut() {
                last.has_body = true;
            }
            continue;
        }
        if in_fence {
            if let Some(last) = sections.last_mut() {
                last.has_body = true;
            }
            continue;
        }
        let is_scanned_heading = (trimmed.starts_with("# ") || trimmed.starts_with("## "))
            && !trimmed.starts_with("###");
        if is_scanned_heading {
            let text = trimmed.trim_start_matches('#').trim().trim_end_matches('#').trim();
            sections.push(Section { heading: text.to_string(), has_body: false });
        } else if !trimmed.is_empty() {
            if let Some(last) = sections.last_mut() {
                last.has_body = true;
            }
        }
    }
    sections
}

fn find_readme(repo: &Path) -> Result<Option<PathBuf>, ComplianceError> {
    let mut candidates: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(repo)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name();
        if name.to_string_lossy().to_lowercase() == "readme.md" {
            candidates.push(entry.path());
        }
    }
    candidates.sort();
    // Prefer the canonical casing when several casings coexist.
    Ok(candidates
        .iter()
        .find(|p| p.file_name().map(|n| n == "README.md").unwrap_or(false))
        .or_else(|| candidates.first())
        .cloned())
}

/// Checks one repository against a ruleset. A missing README is not an
/// error: it produces a report with score 0 and every rule missing.
pub fn check_repo(repo: &Path, rules: &[SectionRule]) -> Result<ComplianceReport, ComplianceError> {
    if !repo.is_dir() {
        return Err(ComplianceError::RepoNotFound(repo.to_path_buf()));
    }
    let readme = find_readme(repo)?;
    let sections = match &readme {
        Some(path) => scan_sections(&fs::read_to_string(path)?),
        None => Vec::new(),
    };

    let mut findings = Vec::with_capacity(rules.len());
    for rule in rules {
        let mut targets: Vec<String> = vec![normalize_heading(&rule.name)];
        targets.extend(rule.aliases.iter().map(|a| normalize_heading(a)));

        let mut status = SectionStatus::Missing;
        let mut matched_heading = None;
        for s in &sections {
            if !targets.contains(&normalize_heading(&s.heading)) {
                continue;
            }
            if s.has_body {
                status = SectionStatus::Present;
                matched_heading = Some(s.heading.clone());
                break;
            }
            if status == SectionStatus::Missing {
                status = SectionStatus::Empty;
                matched_heading = Some(s.heading.clone());
            }
        }
        findings.push(Finding { rule: rule.clone(), status, matched_heading });
    }

    let required_total = rules.iter().filter(|r| r.required).count();
    let required_present = findings
        .iter()
        .filter(|f| f.rule.required && f.status == SectionStatus::Present)
        .count();
    let score = if required_total == 0 {
        1.0
    } else {
        required_present as f64 / required_total as f64
    };

    Ok(ComplianceReport {
        repo_path: repo.to_path_buf(),
        readme: readme.and_then(|p| p.file_name().map(PathBuf::from)),
        findings,
        score,
        required_total,
        required_present,
        required_missing: required_total - required_present,
    })
}

impl ComplianceReport {
    /// Human-readable report. The header flags the scoring formula as a
    /// placeholder because no community rubric has been published yet.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("PLUTUS compliance report\n");
        out.push_str(
            "score formula: required sections present / required sections (placeholder standard)\n",
        );
        out.push_str(&format!("repo: {}\n", self.repo_path.display()));
        match &self.readme {
            Some(p) => out.push_str(&format!("readme: {}\n", p.display())),
            None => out.push_str("readme: NOT FOUND\n"),
        }
        out.push_str(&format!(
            "score: {} ({}/{} required sections present)\n",
            self.score, self.required_present, self.required_total
        ));
        out.push_str("findings:\n");
        for f in &self.findings {
            let kind = if f.rule.required { "required" } else { "optional" };
            let step = if f.rule.step_tag.is_empty() {
                String::new()
            } else {
                format!(", step {}", f.rule.step_tag)
            };
            out.push_str(&format!(
                "  [{:7}] {} ({kind}{step})\n",
                f.status.as_str(),
                f.rule.name
            ));
        }
        out
    }

    /// Machine-readable `key = value` lines for the optional report file.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("repo = {}\n", self.repo_path.display()));
        out.push_str(&format!(
            "readme = {}\n",
            self.readme.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        ));
        out.push_str(&format!("score = {}\n", self.score));
        out.push_str(&format!("required_total = {}\n", self.required_total));
        out.push_str(&format!("required_present = {}\n", self.required_present));
        out.push_str(&format!("required_missing = {}\n", self.required_missing));
        for f in &self.findings {
            let key = normalize_heading(&f.rule.name).replace(' ', "_");
            out.push_str(&format!("section.{key} = {}\n", f.status.as_str()));
        }
        out
    }

    pub fn all_required_present(&self) -> bool {
        self.required_missing == 0
    }
}
