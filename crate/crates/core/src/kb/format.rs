//! The tab-separated dataset format.
//!
//! Eight logical columns: code, name, latitude, longitude, genus, family,
//! country codes, features. Columns 1-7 are positional. Whatever follows the
//! seventh tab belongs to the feature column: stray tabs inside feature
//! values are folded into single spaces instead of shifting columns.

use std::collections::{BTreeMap, HashMap};

use super::{CellState, Dataset, FeatureMatrix, Language};
use crate::error::{Error, Result};

pub const HEADER: &str =
    "wals_code\tname\tlatitude\tlongitude\tgenus\tfamily\tcountrycodes\tfeatures";

const UNKNOWN: &str = "?";

#[derive(Debug, Clone, PartialEq)]
enum RawValue {
    Known(String),
    Unknown,
}

struct Record {
    line: usize,
    language: Language,
    features: Vec<(String, RawValue)>,
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() >= 3
        && fields[1].trim().eq_ignore_ascii_case("name")
        && fields[2].trim().to_ascii_lowercase().starts_with("lat")
}

fn parse_coordinate(raw: &str, what: &str, limit: f64, line: usize) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::record(line, format!("malformed {what} `{raw}`")))?;
    if !v.is_finite() || v.abs() > limit {
        return Err(Error::record(line, format!("{what} {v} out of range")));
    }
    Ok(v)
}

fn parse_features(field: &str, line: usize) -> Result<Vec<(String, RawValue)>> {
    let mut out = Vec::new();
    for segment in field.split('|') {
        let segment = segment.trim();
        if segment.is_empty() {
            continue;
        }
        let (name, value) = segment
            .split_once('=')
            .ok_or_else(|| Error::record(line, format!("feature segment `{segment}` has no `=`")))?;
        let (name, value) = (name.trim(), value.trim());
        if name.is_empty() {
            return Err(Error::record(line, format!("empty feature name in `{segment}`")));
        }
        if value.is_empty() {
            return Err(Error::record(line, format!("empty value for feature `{name}`")));
        }
        let value = if value == UNKNOWN {
            RawValue::Unknown
        } else {
            RawValue::Known(value.to_string())
        };
        out.push((name.to_string(), value));
    }
    Ok(out)
}

fn parse_records(text: &str) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !seen_content {
            seen_content = true;
            if is_header(&fields) {
                continue;
            }
        }
        if fields.len() < 8 {
            return Err(Error::record(
                line,
                format!("expected at least 8 tab-separated fields, found {}", fields.len()),
            ));
        }
        let language = Language {
            code: fields[0].trim().to_string(),
            name: fields[1].trim().to_string(),
            latitude: parse_coordinate(fields[2], "latitude", 90.0, line)?,
            longitude: parse_coordinate(fields[3], "longitude", 180.0, line)?,
            genus: fields[4].trim().to_string(),
            family: fields[5].trim().to_string(),
            country_codes: fields[6].split_whitespace().map(str::to_string).collect(),
        };
        if language.code.is_empty() {
            return Err(Error::record(line, "empty language code"));
        }
        let feature_field = fields[7..].join(" ");
        let features = parse_features(&feature_field, line)?;
        records.push(Record {
            line,
            language,
            features,
        });
    }
    Ok(records)
}

fn build(records: Vec<Record>, gold: Option<&HashMap<(String, String), String>>) -> Result<Dataset> {
    let mut languages = Vec::with_capacity(records.len());
    let mut matrix = FeatureMatrix::new();
    let mut codes = std::collections::HashSet::new();
    for rec in records {
        if !codes.insert(rec.language.code.clone()) {
            return Err(Error::DuplicateLanguage(rec.language.code));
        }
        for (feature, value) in rec.features {
            let state = match value {
                RawValue::Known(v) => CellState::Observed(v),
                RawValue::Unknown => match gold
                    .and_then(|g| g.get(&(rec.language.code.clone(), feature.clone())))
                {
                    Some(v) => CellState::Blanked(v.clone()),
                    None => CellState::Unknown,
                },
            };
            matrix
                .insert(&rec.language.code, &feature, state)
                .map_err(|_| Error::record(rec.line, format!("feature `{feature}` repeated")))?;
        }
        languages.push(rec.language);
    }
    Dataset::new(languages, matrix)
}

/// Parses a dataset; every `?` becomes an [`CellState::Unknown`] cell.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    build(parse_records(text)?, None)
}

/// Parses an evaluation input together with its gold companion file.
///
/// A `?` cell whose value is known in `gold` becomes
/// [`CellState::Blanked`] carrying that value; the rest stay unknown.
pub fn parse_dataset_with_gold(text: &str, gold: &str) -> Result<Dataset> {
    let mut gold_values = HashMap::new();
    for rec in parse_records(gold)? {
        for (feature, value) in rec.features {
            if let RawValue::Known(v) = value {
                gold_values.insert((rec.language.code.clone(), feature), v);
            }
        }
    }
    build(parse_records(text)?, Some(&gold_values))
}

fn format_coordinate(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn write_dataset(d: &Dataset, value_of: impl Fn(&str, &str, &CellState) -> String) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for lang in d.languages() {
        let features = d
            .matrix()
            .row(&lang.code)
            .map(|row| {
                row.iter()
                    .map(|(f, s)| format!("{f}={}", value_of(&lang.code, f, s)))
                    .collect::<Vec<_>>()
                    .join(" | ")
            })
            .unwrap_or_default();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            lang.code,
            lang.name,
            format_coordinate(lang.latitude),
            format_coordinate(lang.longitude),
            lang.genus,
            lang.family,
            lang.country_codes.join(" "),
            features
        ));
    }
    out
}

/// Writes the dataset as systems see it: blanked and unknown cells carry
/// `?` unless `fill` supplies a value for them.
pub fn serialize_dataset(
    d: &Dataset,
    fill: Option<&BTreeMap<(String, String), String>>,
) -> Result<String> {
    if let Some(fill) = fill {
        for (language, feature) in fill.keys() {
            match d.matrix().get(language, feature) {
                Some(s) if s.is_open() => {}
                _ => {
                    return Err(Error::BadFill {
                        language: language.clone(),
                        feature: feature.clone(),
                    })
                }
            }
        }
    }
    Ok(write_dataset(d, |lang, feat, state| match state {
        CellState::Observed(v) => v.clone(),
        _ => fill
            .and_then(|f| f.get(&(lang.to_string(), feat.to_string())))
            .cloned()
            .unwrap_or_else(|| UNKNOWN.to_string()),
    }))
}

/// Writes the gold companion: blanked cells carry their gold value.
pub fn serialize_gold(d: &Dataset) -> String {
    write_dataset(d, |_, _, state| match state {
        CellState::Observed(v) | CellState::Blanked(v) => v.clone(),
        CellState::Unknown => UNKNOWN.to_string(),
    })
}
