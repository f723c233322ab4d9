//! The twelve universal part-of-speech categories and fine-to-universal
//! mapping files.
//!
//! A mapping file is UTF-8 text with one `<fine-tag><TAB><universal-tag>`
//! entry per line. Blank lines are skipped and lines starting with `#` are
//! comments, except a line whose first field is exactly `#`: that is the
//! entry for the fine tag `#` (the Penn Treebank pound sign).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version of the mapping-file format understood by [`parse_mapping`].
pub const MAPPING_FORMAT_VERSION: u32 = 1;

/// The closed universal tagset. `Punct` renders as `"."`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UniversalTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Conj,
    Prt,
    Punct,
    X,
}

impl UniversalTag {
    pub const COUNT: usize = 12;

    pub const ALL: [UniversalTag; 12] = [
        UniversalTag::Noun,
        UniversalTag::Verb,
        UniversalTag::Adj,
        UniversalTag::Adv,
        UniversalTag::Pron,
        UniversalTag::Det,
        UniversalTag::Adp,
        UniversalTag::Num,
        UniversalTag::Conj,
        UniversalTag::Prt,
        UniversalTag::Punct,
        UniversalTag::X,
    ];

    /// Position in [`UniversalTag::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<UniversalTag> {
        Self::ALL.get(idx).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UniversalTag::Noun => "NOUN",
            UniversalTag::Verb => "VERB",
            UniversalTag::Adj => "ADJ",
            UniversalTag::Adv => "ADV",
            UniversalTag::Pron => "PRON",
            UniversalTag::Det => "DET",
            UniversalTag::Adp => "ADP",
            UniversalTag::Num => "NUM",
            UniversalTag::Conj => "CONJ",
            UniversalTag::Prt => "PRT",
            UniversalTag::Punct => ".",
            UniversalTag::X => "X",
        }
    }
}

impl fmt::Display for UniversalTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("not a universal tag: {0:?}")]
pub struct InvalidUniversalTag(pub String);

impl FromStr for UniversalTag {
    type Err = InvalidUniversalTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UniversalTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| InvalidUniversalTag(s.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("line {line}: fine tag {tag:?} is mapped more than once")]
    DuplicateKey { tag: String, line: usize },
    #[error("line {line}: {token:?} is not one of the twelve universal tags")]
    InvalidUniversalTag { token: String, line: usize },
    #[error("line {line}: expected `<fine-tag><TAB><universal-tag>`, found {fields} field(s)")]
    Parse { line: usize, fields: usize },
    #[error("mapping has no entries")]
    EmptyMapping,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("fine tag {tag:?} is not covered by mapping {treebank}")]
pub struct UnknownFineTag {
    pub tag: String,
    pub treebank: String,
}

/// A total function from one treebank's fine tags to universal tags.
///
/// Fine tags compare byte-exactly, so `NN` and `nn` are distinct keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagMapping {
    treebank_id: String,
    entries: BTreeMap<String, UniversalTag>,
}

impl TagMapping {
    pub fn from_entries<I, S>(treebank_id: &str, entries: I) -> Result<TagMapping, MappingError>
    where
        I: IntoIterator<Item = (S, UniversalTag)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (line, (fine, universal)) in entries.into_iter().enumerate() {
            let fine = fine.into();
            if map.contains_key(&fine) {
                return Err(MappingError::DuplicateKey {
                    tag: fine,
                    line: line + 1,
                });
            }
            map.insert(fine, universal);
        }
        if map.is_empty() {
            return Err(MappingError::EmptyMapping);
        }
        Ok(TagMapping {
            treebank_id: treebank_id.to_owned(),
            entries: map,
        })
    }

    /// The bundled English Penn Treebank mapping (45 tags).
    pub fn english_ptb() -> TagMapping {
        TagMapping::bundled("en-ptb").expect("bundled PTB mapping")
    }

    /// Names of the mappings shipped with the library.
    pub const BUNDLED: [&'static str; 3] = ["en-ptb", "de-tiger", "bg-btb"];

    /// A shipped mapping by treebank id.
    pub fn bundled(id: &str) -> Option<TagMapping> {
        let text = match id {
            "en-ptb" => include_str!("../data/en-ptb.map"),
            "de-tiger" => include_str!("../data/de-tiger.map"),
            "bg-btb" => include_str!("../data/bg-btb.map"),
            _ => return None,
        };
        Some(parse_mapping(id, text).expect("bundled mapping parses"))
    }

    pub fn treebank_id(&self) -> &str {
        &self.treebank_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, fine: &str) -> Option<UniversalTag> {
        self.entries.get(fine).copied()
    }

    pub fn contains(&self, fine: &str) -> bool {
        self.entries.contains_key(fine)
    }

    /// Entries in byte order of the fine tag.
    pub fn iter(&self) -> impl Iterator<Item = (&str, UniversalTag)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Strict lookup.
    pub fn map_tag(&self, fine: &str) -> Result<UniversalTag, UnknownFineTag> {
        self.get(fine).ok_or_else(|| UnknownFineTag {
            tag: fine.to_owned(),
            treebank: self.treebank_id.clone(),
        })
    }

    /// Lookup that maps absent tags to `X` when `fallback_x` is set.
    pub fn map_tag_with(&self, fine: &str, fallback_x: bool) -> Result<UniversalTag, UnknownFineTag> {
        match self.get(fine) {
            Some(t) => Ok(t),
            None if fallback_x => Ok(UniversalTag::X),
            None => self.map_tag(fine),
        }
    }

    /// Serializes to the mapping-file format, sorted by fine tag.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (fine, universal) in self.iter() {
            out.push_str(fine);
            out.push('\t');
            out.push_str(universal.as_str());
            out.push('\n');
        }
        out
    }
}

pub fn parse_mapping(treebank_id: &str, text: &str) -> Result<TagMapping, MappingError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if line.starts_with('#') && fields[0] != "#" {
            continue;
        }
        if fields.len() != 2 || fields[0].is_empty() {
            return Err(MappingError::Parse {
                line: line_no,
                fields: fields.len(),
            });
        }
        let universal = fields[1]
            .trim()
            .parse::<UniversalTag>()
            .map_err(|e| MappingError::InvalidUniversalTag {
                token: e.0,
                line: line_no,
            })?;
        if entries.insert(fields[0].to_owned(), universal).is_some() {
            return Err(MappingError::DuplicateKey {
                tag: fields[0].to_owned(),
                line: line_no,
            });
        }
    }
    if entries.is_empty() {
        return Err(MappingError::EmptyMapping);
    }
    Ok(TagMapping {
        treebank_id: treebank_id.to_owned(),
        entries,
    })
}

/// Coverage of a mapping against the fine tags seen in a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Observed tags absent from the mapping, sorted.
    pub unknown_tags: Vec<String>,
    /// Mapping keys never observed, sorted.
    pub unused_tags: Vec<String>,
    pub tag_histogram: BTreeMap<UniversalTag, usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.unknown_tags.is_empty()
    }
}

pub fn validate_mapping<I, S>(mapping: &TagMapping, observed: I) -> ValidationReport
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    let mut histogram = BTreeMap::new();
    for tag in observed {
        let tag = tag.as_ref();
        match mapping.get(tag) {
            Some(u) => {
                *histogram.entry(u).or_insert(0) += 1;
                if !seen.contains(tag) {
                    seen.insert(tag.to_owned());
                }
            }
            None => {
                if !unknown.contains(tag) {
                    unknown.insert(tag.to_owned());
                }
            }
        }
    }
    let unused_tags = mapping
        .entries
        .keys()
        .filter(|k| !seen.contains(k.as_str()))
        .cloned()
        .collect();
    ValidationReport {
        unknown_tags: unknown.into_iter().collect(),
        unused_tags,
        tag_histogram: histogram,
    }
}
