//! Cohort records, CSV ingestion, marginal summaries and a seeded synthetic
//! generator calibrated to the published participation figures.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::{RawColumn, RawDataset};

pub const CSV_HEADER: [&str; 9] = [
    "student_id",
    "gender",
    "ethnicity",
    "education_level",
    "region",
    "mentoring_sessions",
    "workshop_hours",
    "research_projects",
    "employed",
];

/// Overall employment rate the default profile reproduces.
pub const EMPLOYMENT_TARGET: f64 = 0.8263;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohortError {
    #[error("line {row}, column `{column}`: {reason}")]
    SchemaViolation { row: u64, column: String, reason: String },
    #[error("line {row}: duplicate student_id `{id}`")]
    DuplicateStudentId { row: u64, id: String },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CohortError {
    pub fn kind(&self) -> &'static str {
        match self {
            CohortError::SchemaViolation { .. } => "SchemaViolation",
            CohortError::DuplicateStudentId { .. } => "DuplicateStudentId",
            CohortError::InvalidProfile(_) => "InvalidProfile",
            CohortError::Io { .. } => "Io",
        }
    }
}

macro_rules! category {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "`{other}` is not one of {}",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

category!(Gender { M => "M", F => "F" });
category!(Ethnicity {
    AfricanAmerican => "african_american",
    Hispanic => "hispanic",
    Asian => "asian",
    Other => "other",
});
category!(Education {
    Phd => "phd",
    Masters => "masters",
    Undergraduate => "undergraduate",
    HighSchool => "high_school",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRecord {
    pub student_id: String,
    pub gender: Option<Gender>,
    pub ethnicity: Option<Ethnicity>,
    pub education_level: Option<Education>,
    pub region: Option<String>,
    pub mentoring_sessions: Option<u32>,
    pub workshop_hours: Option<f64>,
    pub research_projects: Option<u32>,
    pub employed: u8,
}

/// Deterministic employment rule used instead of the engagement
/// probabilities: employed iff mentoring reaches `high_mentoring`, or it
/// reaches `low_mentoring` and the education level is listed. Each label is
/// then flipped with probability `flip_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedRule {
    pub low_mentoring: u32,
    pub high_mentoring: u32,
    pub education: Vec<Education>,
    pub flip_rate: f64,
}

/// Generator parameters. Vectors follow the declaration order of the
/// category enums; `gender_given_education` rows are (male, female).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortProfile {
    pub education: [f64; 4],
    pub gender_given_education: [[f64; 2]; 4],
    pub ethnicity: [f64; 4],
    pub regions: Vec<String>,
    pub engaged_fraction: f64,
    pub p_engaged: f64,
    pub p_other: f64,
    pub mentoring_max: u32,
    pub engaged_mentoring_shift: u32,
    pub max_workshop_hours: f64,
    pub max_research_projects: u32,
    pub missing_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedRule>,
}

impl CohortProfile {
    /// Participation table proportions, engaged share 0.70 with 85%
    /// employment, and the remaining group's rate solved so the overall rate
    /// is 82.63%.
    pub fn calibrated() -> Self {
        let q = 0.70;
        let p_engaged = 0.85;
        let by_gender = [[11.0, 6.0], [110.0, 119.0], [48.0, 74.0], [2.0, 10.0]];
        CohortProfile {
            education: [17.0 / 380.0, 229.0 / 380.0, 122.0 / 380.0, 12.0 / 380.0],
            gender_given_education: by_gender.map(|[m, f]| [m / (m + f), f / (m + f)]),
            ethnicity: [0.3632, 0.2368, 0.2105, 0.1895],
            regions: ["india", "africa", "europe", "usa"].map(String::from).to_vec(),
            engaged_fraction: q,
            p_engaged,
            p_other: (EMPLOYMENT_TARGET - q * p_engaged) / (1.0 - q),
            mentoring_max: 20,
            engaged_mentoring_shift: 5,
            max_workshop_hours: 40.0,
            max_research_projects: 3,
            missing_rate: 0.01,
            planted: None,
        }
    }

    /// The default profile with employment driven by mentoring and
    /// education, leaving gender, ethnicity, region and research projects as
    /// pure noise.
    pub fn planted() -> Self {
        CohortProfile {
            planted: Some(PlantedRule {
                low_mentoring: 6,
                high_mentoring: 12,
                education: vec![Education::Phd, Education::Masters],
                flip_rate: 0.03,
            }),
            ..Self::calibrated()
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, CohortError> {
        let profile: CohortProfile =
            serde_json::from_str(text).map_err(|e| CohortError::InvalidProfile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self, CohortError> {
        Self::from_json_str(&read(path)?)
    }

    pub fn validate(&self) -> Result<(), CohortError> {
        let bad = |m: String| Err(CohortError::InvalidProfile(m));
        let check_vec = |name: &str, v: &[f64]| -> Result<(), CohortError> {
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad(format!("{name} has a value outside [0, 1]"));
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("{name} sums to {sum}, not 1"));
            }
            Ok(())
        };
        check_vec("education", &self.education)?;
        check_vec("ethnicity", &self.ethnicity)?;
        for (row, e) in self.gender_given_education.iter().zip(Education::ALL) {
            check_vec(&format!("gender_given_education[{e}]"), row)?;
        }
        for (name, p) in [
            ("engaged_fraction", self.engaged_fraction),
            ("p_engaged", self.p_engaged),
            ("p_other", self.p_other),
            ("missing_rate", self.missing_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        if self.regions.is_empty() {
            return bad("regions is empty".into());
        }
        if !(self.max_workshop_hours >= 0.1 && self.max_workshop_hours.is_finite()) {
            return bad("max_workshop_hours must be at least 0.1".into());
        }
        if let Some(rule) = &self.planted {
            if !(0.0..=1.0).contains(&rule.flip_rate) {
                return bad(format!("planted flip_rate = {} is outside [0, 1]", rule.flip_rate));
            }
        }
        Ok(())
    }
}

impl Default for CohortProfile {
    fn default() -> Self {
        Self::calibrated()
    }
}

fn read(path: &Path) -> Result<String, CohortError> {
    std::fs::read_to_string(path).map_err(|e| CohortError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn generate_cohort(n: usize, seed: u64, profile: &CohortProfile) -> Result<Vec<CohortRecord>, CohortError> {
    profile.validate()?;
    let weights = |v: &[f64]| WeightedIndex::new(v).map_err(|e| CohortError::InvalidProfile(e.to_string()));
    let education = weights(&profile.education)?;
    let ethnicity = weights(&profile.ethnicity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let edu = Education::ALL[education.sample(&mut rng)];
        let female = rng.gen_bool(profile.gender_given_education[edu as usize][1]);
        let eth = Ethnicity::ALL[ethnicity.sample(&mut rng)];
        let region = profile.regions[rng.gen_range(0..profile.regions.len())].clone();
        let engaged = rng.gen_bool(profile.engaged_fraction);
        let mut mentoring = rng.gen_range(0..=profile.mentoring_max);
        if engaged {
            mentoring += profile.engaged_mentoring_shift;
        }
        let workshop = if engaged {
            let tenths = (profile.max_workshop_hours * 10.0).round() as u32;
            f64::from(rng.gen_range(1..=tenths)) / 10.0
        } else {
            0.0
        };
        let research = rng.gen_range(0..=profile.max_research_projects);
        let employed = match &profile.planted {
            None => rng.gen_bool(if engaged { profile.p_engaged } else { profile.p_other }),
            Some(rule) => {
                let hit = mentoring >= rule.high_mentoring
                    || (mentoring >= rule.low_mentoring && rule.education.contains(&edu));
                hit != rng.gen_bool(rule.flip_rate)
            }
        };
        let mentoring_missing = rng.gen_bool(profile.missing_rate);
        let workshop_missing = rng.gen_bool(profile.missing_rate);
        out.push(CohortRecord {
            student_id: format!("S{:05}", i + 1),
            gender: Some(if female { Gender::F } else { Gender::M }),
            ethnicity: Some(eth),
            education_level: Some(edu),
            region: Some(region),
            mentoring_sessions: (!mentoring_missing).then_some(mentoring),
            workshop_hours: (!workshop_missing).then_some(workshop),
            research_projects: Some(research),
            employed: u8::from(employed),
        });
    }
    Ok(out)
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn fmt_hours(v: &Option<f64>) -> String {
    v.map(|h| format!("{h:.1}")).unwrap_or_default()
}

pub fn to_csv_string(records: &[CohortRecord]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in records {
        w.write_record([
            r.student_id.clone(),
            fmt_opt(&r.gender),
            fmt_opt(&r.ethnicity),
            fmt_opt(&r.education_level),
            fmt_opt(&r.region),
            fmt_opt(&r.mentoring_sessions),
            fmt_hours(&r.workshop_hours),
            fmt_opt(&r.research_projects),
            r.employed.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn write_cohort_csv(records: &[CohortRecord], path: &Path) -> Result<(), CohortError> {
    std::fs::write(path, to_csv_string(records)).map_err(|e| CohortError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn violation(row: u64, column: &str, reason: impl Into<String>) -> CohortError {
    CohortError::SchemaViolation {
        row,
        column: column.to_string(),
        reason: reason.into(),
    }
}

fn optional<T: FromStr>(row: u64, column: &str, raw: &str) -> Result<Option<T>, CohortError>
where
    T::Err: fmt::Display,
{
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<T>().map(Some).map_err(|e| violation(row, column, e.to_string()))
}

/// Parses cohort CSV text. Rows are reported by line number, the header
/// being line 1.
pub fn parse_cohort_csv(text: &str) -> Result<Vec<CohortRecord>, CohortError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| violation(1, "header", e.to_string()))?,
        None => return Err(violation(1, "header", "file is empty")),
    };
    if header.iter().ne(CSV_HEADER) {
        return Err(violation(1, "header", format!("expected `{}`", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            violation(line, "record", e.to_string())
        })?;
        let row = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| rec.get(k).unwrap_or("");
        let student_id = field(0).to_string();
        if student_id.is_empty() {
            return Err(violation(row, "student_id", "required"));
        }
        if !seen.insert(student_id.clone()) {
            return Err(CohortError::DuplicateStudentId { row, id: student_id });
        }
        let hours: Option<f64> = optional(row, "workshop_hours", field(6))?;
        if let Some(h) = hours {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(violation(row, "workshop_hours", format!("{h} is not a nonnegative number")));
            }
        }
        let employed = match field(8) {
            "0" => 0,
            "1" => 1,
            other => return Err(violation(row, "employed", format!("`{other}` is not 0 or 1"))),
        };
        out.push(CohortRecord {
            student_id,
            gender: optional(row, "gender", field(1))?,
            ethnicity: optional(row, "ethnicity", field(2))?,
            education_level: optional(row, "education_level", field(3))?,
            region: Some(field(4).to_string()).filter(|s| !s.is_empty()),
            mentoring_sessions: optional(row, "mentoring_sessions", field(5))?,
            workshop_hours: hours,
            research_projects: optional(row, "research_projects", field(7))?,
            employed,
        });
    }
    Ok(out)
}

pub fn load_cohort_csv(path: &Path) -> Result<Vec<CohortRecord>, CohortError> {
    parse_cohort_csv(&read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub n: usize,
    pub gender: IndexMap<String, CategoryCount>,
    pub ethnicity: IndexMap<String, CategoryCount>,
    pub education_level: IndexMap<String, CategoryCount>,
    pub region: IndexMap<String, CategoryCount>,
    pub employment_rate: Option<f64>,
    pub mentoring_median: Option<f64>,
    pub engaged_count: usize,
    pub engaged_employment_rate: Option<f64>,
}

/// Counts over the present values; proportions are of the present values.
fn tally<'a>(keys: impl IntoIterator<Item = String>, values: impl Iterator<Item = Option<&'a str>>) -> IndexMap<String, CategoryCount> {
    let mut counts: IndexMap<String, usize> = keys.into_iter().map(|k| (k, 0)).collect();
    for v in values.flatten() {
        *counts.entry(v.to_string()).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(k, count)| {
            let proportion = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            (k, CategoryCount { count, proportion })
        })
        .collect()
}

fn rate(records: &[&CohortRecord]) -> Option<f64> {
    (!records.is_empty())
        .then(|| records.iter().filter(|r| r.employed == 1).count() as f64 / records.len() as f64)
}

/// Marginal counts and employment rates. The engaged subgroup is everyone
/// with workshop hours above zero and mentoring at or above the cohort's
/// median mentoring count.
pub fn summarize(records: &[CohortRecord]) -> MarginalReport {
    let names = |all: &[&'static str]| all.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut regions: Vec<String> = records.iter().filter_map(|r| r.region.clone()).collect();
    regions.sort();
    regions.dedup();

    let mut mentoring: Vec<u32> = records.iter().filter_map(|r| r.mentoring_sessions).collect();
    mentoring.sort_unstable();
    let median = match mentoring.len() {
        0 => None,
        m if m % 2 == 1 => Some(f64::from(mentoring[m / 2])),
        m => Some((f64::from(mentoring[m / 2 - 1]) + f64::from(mentoring[m / 2])) / 2.0),
    };
    let engaged: Vec<&CohortRecord> = match median {
        None => Vec::new(),
        Some(med) => records
            .iter()
            .filter(|r| {
                r.workshop_hours.is_some_and(|h| h > 0.0) && r.mentoring_sessions.is_some_and(|m| f64::from(m) >= med)
            })
            .collect(),
    };
    let all: Vec<&CohortRecord> = records.iter().collect();

    MarginalReport {
        n: records.len(),
        gender: tally(
            names(&Gender::ALL.iter().map(|g| g.as_str()).collect::<Vec<_>>()),
            records.iter().map(|r| r.gender.map(Gender::as_str)),
        ),
        ethnicity: tally(
            names(&Ethnicity::ALL.iter().map(|g| g.as_str()).collect::<Vec<_>>()),
            records.iter().map(|r| r.ethnicity.map(Ethnicity::as_str)),
        ),
        education_level: tally(
            names(&Education::ALL.iter().map(|g| g.as_str()).collect::<Vec<_>>()),
            records.iter().map(|r| r.education_level.map(Education::as_str)),
        ),
        region: tally(regions, records.iter().map(|r| r.region.as_deref())),
        employment_rate: rate(&all),
        mentoring_median: median,
        engaged_count: engaged.len(),
        engaged_employment_rate: rate(&engaged),
    }
}

/// Learner input: categoricals for gender, ethnicity, education and region,
/// numerics for mentoring, workshop hours and research projects, employment
/// as the label.
pub fn to_raw_table(records: &[CohortRecord]) -> RawDataset {
    let cat = |name: &str, f: &dyn Fn(&CohortRecord) -> Option<String>| RawColumn::Categorical {
        name: name.to_string(),
        values: records.iter().map(f).collect(),
    };
    let num = |name: &str, f: &dyn Fn(&CohortRecord) -> Option<f64>| RawColumn::Numeric {
        name: name.to_string(),
        values: records.iter().map(f).collect(),
    };
    let columns = vec![
        cat("gender", &|r| r.gender.map(|v| v.to_string())),
        cat("ethnicity", &|r| r.ethnicity.map(|v| v.to_string())),
        cat("education_level", &|r| r.education_level.map(|v| v.to_string())),
        cat("region", &|r| r.region.clone()),
        num("mentoring_sessions", &|r| r.mentoring_sessions.map(f64::from)),
        num("workshop_hours", &|r| r.workshop_hours),
        num("research_projects", &|r| r.research_projects.map(f64::from)),
    ];
    RawDataset {
        row_ids: records.iter().map(|r| r.student_id.clone()).collect(),
        columns,
        labels: records.iter().map(|r| usize::from(r.employed)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const THREE_ROWS: &str = "student_id,gender,ethnicity,education_level,region,mentoring_sessions,workshop_hours,research_projects,employed\n\
        a,F,asian,phd,india,3,2.5,1,1\n\
        b,M,other,masters,usa,,0.0,0,0\n\
        c,,hispanic,undergraduate,,12,,2,1\n";

    #[test]
    fn loads_three_rows() {
        let rows = parse_cohort_csv(THREE_ROWS).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].mentoring_sessions, None);
        assert_eq!(rows[2].gender, None);
        assert_eq!(rows[2].region, None);
        assert_eq!(rows[0].workshop_hours, Some(2.5));
        assert_eq!(to_csv_string(&rows), THREE_ROWS);
    }

    #[test]
    fn unknown_education_names_the_row() {
        let text = THREE_ROWS.replace("undergraduate", "postdoc");
        match parse_cohort_csv(&text).unwrap_err() {
            CohortError::SchemaViolation { row, column, .. } => {
                assert_eq!(row, 4);
                assert_eq!(column, "education_level");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_schema_errors() {
        let dup = THREE_ROWS.replace("\nb,", "\na,");
        assert!(matches!(parse_cohort_csv(&dup).unwrap_err(), CohortError::DuplicateStudentId { row: 3, .. }));
        let header = THREE_ROWS.replacen("region", "country", 1);
        assert!(matches!(parse_cohort_csv(&header).unwrap_err(), CohortError::SchemaViolation { row: 1, .. }));
        let negative = THREE_ROWS.replace(",3,2.5,", ",-3,2.5,");
        assert!(matches!(parse_cohort_csv(&negative).unwrap_err(), CohortError::SchemaViolation { row: 2, .. }));
        let employed = THREE_ROWS.replace(",1,1\n", ",1,yes\n");
        assert!(matches!(parse_cohort_csv(&employed).unwrap_err(), CohortError::SchemaViolation { row: 2, .. }));
    }

    #[test]
    fn default_profile_mixture() {
        let p = CohortProfile::calibrated();
        p.validate().unwrap();
        let mix = p.engaged_fraction * p.p_engaged + (1.0 - p.engaged_fraction) * p.p_other;
        assert!((mix - EMPLOYMENT_TARGET).abs() < 1e-9);
        assert!((p.p_other - 0.771).abs() < 1e-12);
    }

    #[test]
    fn invalid_profiles() {
        let mut p = CohortProfile::calibrated();
        p.education = [0.5, 0.5, 0.5, 0.0];
        assert!(matches!(generate_cohort(1, 0, &p).unwrap_err(), CohortError::InvalidProfile(_)));
        let mut p = CohortProfile::calibrated();
        p.p_engaged = 1.5;
        assert!(p.validate().is_err());
        assert!(CohortProfile::from_json_str("{\"education\": 1}").is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let p = CohortProfile::planted();
        let back = CohortProfile::from_json_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn empty_cohort() {
        assert!(generate_cohort(0, 5, &CohortProfile::default()).unwrap().is_empty());
        let r = summarize(&[]);
        assert_eq!(r.n, 0);
        assert!(r.education_level.values().all(|c| c.count == 0 && c.proportion == 0.0));
        assert_eq!(r.employment_rate, None);
        assert_eq!(r.engaged_employment_rate, None);
        assert_eq!(to_csv_string(&[]), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn engaged_members_have_workshop_hours() {
        let profile = CohortProfile::default();
        let rows = generate_cohort(2000, 3, &profile).unwrap();
        let mut engaged = 0;
        for r in &rows {
            if let (Some(h), Some(m)) = (r.workshop_hours, r.mentoring_sessions) {
                assert!((0.0..=profile.max_workshop_hours).contains(&h));
                if h > 0.0 {
                    engaged += 1;
                    assert!(m >= profile.engaged_mentoring_shift);
                    assert!(m <= profile.mentoring_max + profile.engaged_mentoring_shift);
                } else {
                    assert!(m <= profile.mentoring_max);
                }
            }
        }
        let share = f64::from(engaged) / rows.len() as f64;
        assert!((share - profile.engaged_fraction).abs() < 0.04, "{share}");
    }

    #[test]
    fn raw_table_shape() {
        let rows = parse_cohort_csv(THREE_ROWS).unwrap();
        let raw = to_raw_table(&rows);
        assert_eq!(raw.columns.len(), 7);
        assert_eq!(raw.labels, vec![1, 0, 1]);
        assert_eq!(raw.row_ids, vec!["a", "b", "c"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn generation_is_reproducible_and_loadable(n in 0usize..200, seed in any::<u64>(), planted in any::<bool>()) {
            let profile = if planted { CohortProfile::planted() } else { CohortProfile::default() };
            let a = to_csv_string(&generate_cohort(n, seed, &profile).unwrap());
            let b = to_csv_string(&generate_cohort(n, seed, &profile).unwrap());
            prop_assert_eq!(&a, &b);
            let loaded = parse_cohort_csv(&a).unwrap();
            prop_assert_eq!(loaded.len(), n);
            prop_assert_eq!(to_csv_string(&loaded), a);
        }

        #[test]
        fn report_proportions_sum_to_one(n in 1usize..300, seed in any::<u64>()) {
            let r = summarize(&generate_cohort(n, seed, &CohortProfile::default()).unwrap());
            for field in [&r.gender, &r.ethnicity, &r.education_level, &r.region] {
                let s: f64 = field.values().map(|c| c.proportion).sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
