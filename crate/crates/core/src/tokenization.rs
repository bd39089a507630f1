//! Shared vocabulary and a reversible whitespace/punctuation tokenizer.
//!
//! Both ensemble members must agree on token identifiers, so every model
//! file records the content digest of the vocabulary it was trained with.
//!
//! Splitting rule: runs of alphanumeric characters and `_` form one token;
//! every other non-whitespace character is a token on its own. Two ids are
//! reserved: [`TokenId::UNK`] (0) and [`TokenId::EOS`] (1). Their strings
//! contain `<`, which the splitter always isolates, so corpus text can
//! never produce them.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const HEADER: &str = "vocab-v1";
pub const UNK_STR: &str = "<unk>";
pub const EOS_STR: &str = "<eos>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const UNK: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type TokenSequence = Vec<TokenId>;

/// Split text into word and punctuation pieces.
pub fn split_tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() || c == '_' {
            if start.is_none() {
                start = Some(i);
            }
            continue;
        }
        if let Some(s) = start.take() {
            out.push(&text[s..i]);
        }
        if !c.is_whitespace() {
            out.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

/// Immutable token table. Ids are dense in `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != UNK_STR || tokens[1] != EOS_STR {
            return Err(Error::integrity("vocabulary must start with <unk>, <eos>"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::integrity(format!("invalid token string at id {i}")));
            }
            if index.insert(t.clone(), TokenId(i as u32)).is_some() {
                return Err(Error::integrity(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Result<&str> {
        self.tokens
            .get(id.index())
            .map(String::as_str)
            .ok_or_else(|| Error::integrity(format!("token id {id} out of range (|V| = {})", self.len())))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Out-of-vocabulary pieces become [`TokenId::UNK`].
    pub fn encode(&self, text: &str) -> TokenSequence {
        split_tokens(text)
            .into_iter()
            .map(|t| self.id(t).unwrap_or(TokenId::UNK))
            .collect()
    }

    /// Tokens joined by single spaces.
    pub fn decode(&self, tokens: &[TokenId]) -> Result<String> {
        let mut out = String::new();
        for (i, &t) in tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.token(t)?);
        }
        Ok(out)
    }

    pub fn check(&self, tokens: &[TokenId]) -> Result<()> {
        match tokens.iter().find(|t| t.index() >= self.len()) {
            Some(t) => Err(Error::integrity(format!(
                "token id {t} out of range (|V| = {})",
                self.len()
            ))),
            None => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER} {}\n", self.len());
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::integrity("empty vocabulary file"))?;
        let size: usize = header
            .strip_prefix(HEADER)
            .map(str::trim)
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::integrity(format!("bad vocabulary header {header:?}")))?;
        let tokens: Vec<String> = lines.map(str::to_owned).collect();
        if tokens.len() != size {
            return Err(Error::integrity(format!(
                "vocabulary header says {size} tokens, file has {}",
                tokens.len()
            )));
        }
        Self::from_tokens(tokens)
    }

    /// Hex SHA-256 of the serialized form; model files refer to their
    /// vocabulary by this value.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Keep the `max_size - 2` most frequent pieces; ties go to the piece seen
/// first.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[S], max_size: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::config("cannot build a vocabulary from an empty corpus"));
    }
    if max_size < 3 {
        return Err(Error::config(format!("max_size must be at least 3, got {max_size}")));
    }
    // (count, first occurrence)
    let mut stats: HashMap<&str, (u64, usize)> = HashMap::new();
    let mut order = 0usize;
    for doc in corpus {
        for piece in split_tokens(doc.as_ref()) {
            let e = stats.entry(piece).or_insert_with(|| {
                order += 1;
                (0, order)
            });
            e.0 += 1;
        }
    }
    let mut ranked: Vec<(&str, u64, usize)> = stats.into_iter().map(|(t, (c, o))| (t, c, o)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.truncate(max_size - 2);

    let mut tokens = vec![UNK_STR.to_owned(), EOS_STR.to_owned()];
    tokens.extend(ranked.into_iter().map(|(t, _, _)| t.to_owned()));
    Vocabulary::from_tokens(tokens)
}

/// One document per non-empty line.
pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

pub fn write_corpus<S: AsRef<str>>(path: &Path, docs: &[S]) -> Result<()> {
    let mut s = String::new();
    for d in docs {
        s.push_str(d.as_ref());
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
