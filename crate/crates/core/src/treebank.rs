//! Tagged and dependency-annotated corpora: CoNLL-X and word/tag readers and
//! writers, mapping application, and the punctuation/length preprocessing
//! used before grammar induction.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::tagset::{TagMapping, UniversalTag};

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}token {token}: fine tag {tag:?} is not covered by mapping {treebank}", sentence.map(|s| format!("sentence {s}, ")).unwrap_or_default())]
    UnmappedTag {
        sentence: Option<usize>,
        token: usize,
        tag: String,
        treebank: String,
    },
    #[error("token {token} has no universal tag")]
    MissingUniversalTag { token: usize },
    #[error("invalid dependency tree: {0}")]
    InvalidTree(String),
}

/// Which tag column a consumer reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TagColumn {
    /// The treebank's own fine-grained tag.
    #[default]
    Original,
    Universal,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub lemma: Option<String>,
    /// Empty for untagged text.
    pub fine_tag: String,
    pub universal_tag: Option<UniversalTag>,
    /// 0 is the artificial root; tokens are numbered from 1.
    pub head: Option<usize>,
    pub deprel: Option<String>,
}

impl Token {
    pub fn new(form: impl Into<String>, fine_tag: impl Into<String>) -> Token {
        Token {
            form: form.into(),
            fine_tag: fine_tag.into(),
            ..Token::default()
        }
    }

    pub fn with_head(mut self, head: usize) -> Token {
        self.head = Some(head);
        self
    }

    pub fn with_universal(mut self, tag: UniversalTag) -> Token {
        self.universal_tag = Some(tag);
        self
    }

    pub fn is_punct(&self) -> bool {
        self.universal_tag == Some(UniversalTag::Punct)
    }

    /// The tag in `column`, rendered as a string.
    pub fn tag(&self, column: TagColumn) -> Option<&str> {
        match column {
            TagColumn::Original if !self.fine_tag.is_empty() => Some(&self.fine_tag),
            TagColumn::Original => None,
            TagColumn::Universal => self.universal_tag.map(UniversalTag::as_str),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Checks that heads are either all present or all absent and that each
    /// head is in range and not the token itself.
    pub fn new(tokens: Vec<Token>) -> Result<Sentence, TreebankError> {
        let n = tokens.len();
        let with_heads = tokens.iter().filter(|t| t.head.is_some()).count();
        if with_heads != 0 && with_heads != n {
            return Err(TreebankError::InvalidTree(format!(
                "{with_heads} of {n} tokens have a head"
            )));
        }
        for (i, t) in tokens.iter().enumerate() {
            if let Some(h) = t.head {
                if h > n || h == i + 1 {
                    return Err(TreebankError::InvalidTree(format!(
                        "token {} has head {h} in a sentence of length {n}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_heads(&self) -> bool {
        !self.tokens.is_empty() && self.tokens[0].head.is_some()
    }

    pub fn heads(&self) -> Option<Vec<usize>> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn universal_tags(&self) -> Option<Vec<UniversalTag>> {
        self.tokens.iter().map(|t| t.universal_tag).collect()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// `(form, tag)` pairs for tagger training and evaluation.
    pub fn tagged(&self, column: TagColumn) -> Result<Vec<(String, String)>, TreebankError> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| match t.tag(column) {
                Some(tag) => Ok((t.form.clone(), tag.to_owned())),
                None if column == TagColumn::Universal => {
                    Err(TreebankError::MissingUniversalTag { token: i + 1 })
                }
                None => Err(TreebankError::InvalidTree(format!("token {} has no tag", i + 1))),
            })
            .collect()
    }
}

/// How the CoNLL-X CPOSTAG column is interpreted on input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CpostagMode {
    /// Leave `universal_tag` unset.
    #[default]
    Ignore,
    /// Parse CPOSTAG as a universal tag; `_` leaves it unset.
    Universal,
}

pub fn read_conllx<R: BufRead>(reader: R) -> Result<Vec<Sentence>, TreebankError> {
    read_conllx_with(reader, CpostagMode::Ignore)
}

pub fn read_conllx_with<R: BufRead>(
    reader: R,
    cpostag: CpostagMode,
) -> Result<Vec<Sentence>, TreebankError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut first_line = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                sentences.push(finish_sentence(std::mem::take(&mut tokens), first_line)?);
            }
            continue;
        }
        if tokens.is_empty() {
            first_line = line_no;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(TreebankError::Parse {
                line: line_no,
                message: format!("expected 10 TAB-separated columns, found {}", cols.len()),
            });
        }
        let id: usize = cols[0].parse().map_err(|_| TreebankError::Parse {
            line: line_no,
            message: format!("token id {:?} is not an integer", cols[0]),
        })?;
        if id != tokens.len() + 1 {
            return Err(TreebankError::Parse {
                line: line_no,
                message: format!("expected token id {}, found {id}", tokens.len() + 1),
            });
        }
        let universal_tag = match (cpostag, cols[3]) {
            (CpostagMode::Ignore, _) | (CpostagMode::Universal, "_") => None,
            (CpostagMode::Universal, s) => {
                Some(s.parse::<UniversalTag>().map_err(|e| TreebankError::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?)
            }
        };
        let head = match cols[6] {
            "_" => None,
            s => Some(s.parse::<usize>().map_err(|_| TreebankError::Parse {
                line: line_no,
                message: format!("head {s:?} is not a non-negative integer"),
            })?),
        };
        tokens.push(Token {
            form: cols[1].to_owned(),
            lemma: optional(cols[2]),
            fine_tag: optional(cols[4]).unwrap_or_default(),
            universal_tag,
            head,
            deprel: optional(cols[7]),
        });
    }
    if !tokens.is_empty() {
        sentences.push(finish_sentence(tokens, first_line)?);
    }
    Ok(sentences)
}

fn optional(col: &str) -> Option<String> {
    (col != "_").then(|| col.to_owned())
}

fn finish_sentence(tokens: Vec<Token>, first_line: usize) -> Result<Sentence, TreebankError> {
    Sentence::new(tokens).map_err(|e| TreebankError::Parse {
        line: first_line,
        message: e.to_string(),
    })
}

/// Writes CoNLL-X. Universal tags go to CPOSTAG, fine tags to POSTAG, and
/// unmodeled columns are `_`.
pub fn write_conllx<W: Write>(mut w: W, sentences: &[Sentence]) -> io::Result<()> {
    for sentence in sentences {
        for (i, t) in sentence.tokens().iter().enumerate() {
            let head = t.head.map(|h| h.to_string());
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t_\t{}\t{}\t_\t_",
                i + 1,
                t.form,
                t.lemma.as_deref().unwrap_or("_"),
                t.universal_tag.map(UniversalTag::as_str).unwrap_or("_"),
                if t.fine_tag.is_empty() { "_" } else { &t.fine_tag },
                head.as_deref().unwrap_or("_"),
                t.deprel.as_deref().unwrap_or("_"),
            )?;
        }
        if !sentence.is_empty() {
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Reads `form<TAB>tag` lines with blank-line sentence breaks. A line with
/// only a form yields an untagged token.
pub fn read_wordtag<R: BufRead>(reader: R) -> Result<Vec<Sentence>, TreebankError> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                sentences.push(Sentence {
                    tokens: std::mem::take(&mut tokens),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match cols.as_slice() {
            [form] => tokens.push(Token::new(*form, "")),
            [form, tag] => tokens.push(Token::new(*form, *tag)),
            _ => {
                return Err(TreebankError::Parse {
                    line: idx + 1,
                    message: format!("expected `form<TAB>tag`, found {} columns", cols.len()),
                })
            }
        }
    }
    if !tokens.is_empty() {
        sentences.push(Sentence { tokens });
    }
    Ok(sentences)
}

pub fn write_wordtag<W: Write>(
    mut w: W,
    sentences: &[Sentence],
    column: TagColumn,
) -> io::Result<()> {
    for sentence in sentences {
        for t in sentence.tokens() {
            match t.tag(column) {
                Some(tag) => writeln!(w, "{}\t{}", t.form, tag)?,
                None => writeln!(w, "{}", t.form)?,
            }
        }
        if !sentence.is_empty() {
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Sets the universal tag of every token from its fine tag.
pub fn apply_mapping(
    sentence: &Sentence,
    mapping: &TagMapping,
    fallback_x: bool,
) -> Result<Sentence, TreebankError> {
    let tokens = sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let universal = mapping
                .map_tag_with(&t.fine_tag, fallback_x)
                .map_err(|e| TreebankError::UnmappedTag {
                    sentence: None,
                    token: i + 1,
                    tag: e.tag,
                    treebank: e.treebank,
                })?;
            Ok(Token {
                universal_tag: Some(universal),
                ..t.clone()
            })
        })
        .collect::<Result<Vec<_>, TreebankError>>()?;
    Ok(Sentence { tokens })
}

/// [`apply_mapping`] over a corpus; errors name the 1-based sentence.
pub fn map_corpus(
    corpus: &[Sentence],
    mapping: &TagMapping,
    fallback_x: bool,
) -> Result<Vec<Sentence>, TreebankError> {
    corpus
        .iter()
        .enumerate()
        .map(|(si, s)| {
            apply_mapping(s, mapping, fallback_x).map_err(|e| match e {
                TreebankError::UnmappedTag {
                    token,
                    tag,
                    treebank,
                    ..
                } => TreebankError::UnmappedTag {
                    sentence: Some(si + 1),
                    token,
                    tag,
                    treebank,
                },
                other => other,
            })
        })
        .collect()
}

/// Checks that following heads from every token reaches the root.
pub fn check_tree(heads: &[usize]) -> Result<(), TreebankError> {
    let n = heads.len();
    for start in 1..=n {
        let mut node = start;
        let mut steps = 0;
        while node != 0 {
            node = heads[node - 1];
            if node > n {
                return Err(TreebankError::InvalidTree(format!("head {node} out of range")));
            }
            steps += 1;
            if steps > n {
                return Err(TreebankError::InvalidTree(format!(
                    "cycle through token {start}"
                )));
            }
        }
    }
    Ok(())
}

/// Removes PUNCT tokens. Survivors are renumbered and any survivor whose
/// head was removed climbs to its nearest non-punctuation ancestor (or the
/// root).
pub fn strip_punctuation(sentence: &Sentence) -> Result<Sentence, TreebankError> {
    if let Some(i) = sentence.tokens.iter().position(|t| t.universal_tag.is_none()) {
        return Err(TreebankError::MissingUniversalTag { token: i + 1 });
    }
    let heads = sentence.heads();
    if let Some(heads) = &heads {
        check_tree(heads)?;
    }
    let mut new_index = vec![0usize; sentence.len() + 1];
    let mut next = 0;
    for (i, t) in sentence.tokens.iter().enumerate() {
        if !t.is_punct() {
            next += 1;
            new_index[i + 1] = next;
        }
    }
    let tokens = sentence
        .tokens
        .iter()
        .filter(|t| !t.is_punct())
        .map(|t| {
            let mut out = t.clone();
            if let (Some(heads), Some(mut h)) = (&heads, t.head) {
                while h != 0 && sentence.tokens[h - 1].is_punct() {
                    h = heads[h - 1];
                }
                out.head = Some(new_index[h]);
            }
            out
        })
        .collect();
    Ok(Sentence { tokens })
}

/// How sentence length is measured by [`filter_by_length`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LengthCount {
    /// Tokens that are not PUNCT.
    #[default]
    NonPunct,
    AllTokens,
}

pub fn filter_by_length(corpus: Vec<Sentence>, max_len: usize, count: LengthCount) -> Vec<Sentence> {
    corpus
        .into_iter()
        .filter(|s| {
            let len = match count {
                LengthCount::NonPunct => s.tokens.iter().filter(|t| !t.is_punct()).count(),
                LengthCount::AllTokens => s.len(),
            };
            len <= max_len
        })
        .collect()
}

/// Punctuation removal plus length filtering. By default sentences are
/// measured after stripping; `len_before_strip` measures the raw length.
pub fn prepare_for_induction(
    corpus: &[Sentence],
    max_len: usize,
    len_before_strip: bool,
) -> Result<Vec<Sentence>, TreebankError> {
    let corpus = if len_before_strip {
        filter_by_length(corpus.to_vec(), max_len, LengthCount::AllTokens)
    } else {
        corpus.to_vec()
    };
    let stripped = corpus
        .iter()
        .map(strip_punctuation)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(filter_by_length(stripped, max_len, LengthCount::NonPunct)
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect())
}
