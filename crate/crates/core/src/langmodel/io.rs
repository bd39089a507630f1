//! Model files.
//!
//! Layout: an ASCII header line (`ngram-v1` or `tinylm-v1`), a line
//! `vocab <sha256 hex>` naming the vocabulary, then a little-endian binary
//! body. Floats are IEEE-754 binary64, counts `u64`, token ids `u32`.

use std::collections::HashMap;
use std::path::Path;

use super::ngram::ContextCounts;
use super::{LanguageModel, LogitVector, NGramModel, NeuralShape, TinyNeuralLM};
use crate::error::{Error, Result};
use crate::tokenization::TokenId;

pub const NGRAM_HEADER: &str = "ngram-v1";
pub const TINYLM_HEADER: &str = "tinylm-v1";

struct Writer(Vec<u8>);

impl Writer {
    fn new(header: &str, digest: &str) -> Self {
        Writer(format!("{header}\nvocab {digest}\n").into_bytes())
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::integrity("model file truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.buf[self.pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::integrity("model file header truncated"))?;
        let s = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::integrity("model header is not UTF-8"))?;
        self.pos += nl + 1;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::integrity("count does not fit in usize"))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::integrity("trailing bytes in model file"));
        }
        Ok(())
    }
}

fn read_header<'a>(buf: &'a [u8], expected: &str) -> Result<(Reader<'a>, String)> {
    let mut r = Reader { buf, pos: 0 };
    let header = r.line()?;
    if header != expected {
        return Err(Error::integrity(format!(
            "expected {expected} header, found {header:?}"
        )));
    }
    let digest = r
        .line()?
        .strip_prefix("vocab ")
        .ok_or_else(|| Error::integrity("missing vocabulary digest line"))?
        .to_owned();
    Ok((r, digest))
}

pub fn ngram_to_bytes(m: &NGramModel) -> Vec<u8> {
    let mut w = Writer::new(NGRAM_HEADER, &m.digest);
    w.u64(m.order as u64);
    w.f64(m.add_k);
    w.u8(m.backoff as u8);
    w.u64(m.vocab_size as u64);
    let mut contexts: Vec<(&Vec<TokenId>, &ContextCounts)> = m.counts.iter().collect();
    contexts.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
    w.u64(contexts.len() as u64);
    for (ctx, c) in contexts {
        w.u64(ctx.len() as u64);
        ctx.iter().for_each(|t| w.u32(t.0));
        w.u64(c.total);
        let mut next: Vec<(&TokenId, &u64)> = c.next.iter().collect();
        next.sort();
        w.u64(next.len() as u64);
        for (t, n) in next {
            w.u32(t.0);
            w.u64(*n);
        }
    }
    w.0
}

pub fn ngram_from_bytes(buf: &[u8]) -> Result<NGramModel> {
    let (mut r, digest) = read_header(buf, NGRAM_HEADER)?;
    let order = r.usize()?;
    let add_k = r.f64()?;
    let backoff = r.u8()? != 0;
    let vocab_size = r.usize()?;
    if order == 0 || !(add_k.is_finite() && add_k > 0.0) || vocab_size == 0 {
        return Err(Error::integrity("invalid n-gram parameters"));
    }
    let n = r.usize()?;
    let mut counts = HashMap::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let len = r.usize()?;
        if len >= order {
            return Err(Error::integrity("n-gram context longer than order - 1"));
        }
        let ctx = (0..len).map(|_| r.u32().map(TokenId)).collect::<Result<Vec<_>>>()?;
        let total = r.u64()?;
        let k = r.usize()?;
        let mut next = HashMap::with_capacity(k.min(vocab_size));
        let mut sum = 0u64;
        for _ in 0..k {
            let t = TokenId(r.u32()?);
            let c = r.u64()?;
            if t.index() >= vocab_size {
                return Err(Error::integrity("n-gram token id out of range"));
            }
            sum += c;
            next.insert(t, c);
        }
        if sum != total || ctx.iter().any(|t| t.index() >= vocab_size) {
            return Err(Error::integrity("inconsistent n-gram counts"));
        }
        counts.insert(ctx, ContextCounts { total, next });
    }
    r.finish()?;
    Ok(NGramModel {
        order,
        add_k,
        backoff,
        vocab_size,
        digest,
        counts,
    })
}

pub fn tinylm_to_bytes(m: &TinyNeuralLM) -> Vec<u8> {
    let mut w = Writer::new(TINYLM_HEADER, &m.digest);
    w.u64(m.shape.vocab_size as u64);
    w.u64(m.shape.window as u64);
    w.u64(m.shape.dim as u64);
    w.u8(m.anchor.is_some() as u8);
    m.params.iter().for_each(|&p| w.f64(p));
    if let Some(a) = &m.anchor {
        a.iter().for_each(|&p| w.f64(p));
    }
    w.0
}

pub fn tinylm_from_bytes(buf: &[u8]) -> Result<TinyNeuralLM> {
    let (mut r, digest) = read_header(buf, TINYLM_HEADER)?;
    let shape = NeuralShape {
        vocab_size: r.usize()?,
        window: r.usize()?,
        dim: r.usize()?,
    };
    shape.validate().map_err(|e| Error::integrity(e.to_string()))?;
    let has_anchor = r.u8()? != 0;
    let n = shape.param_count();
    let params = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let anchor = if has_anchor {
        Some((0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    r.finish()?;
    TinyNeuralLM::from_parts(shape, params, anchor, digest)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Either trained model family, as loaded from disk.
#[derive(Debug, Clone)]
pub enum AnyModel {
    NGram(NGramModel),
    Neural(TinyNeuralLM),
}

impl AnyModel {
    pub fn load(path: &Path) -> Result<Self> {
        let buf = read(path)?;
        if buf.starts_with(format!("{NGRAM_HEADER}\n").as_bytes()) {
            Ok(AnyModel::NGram(ngram_from_bytes(&buf)?))
        } else if buf.starts_with(format!("{TINYLM_HEADER}\n").as_bytes()) {
            Ok(AnyModel::Neural(tinylm_from_bytes(&buf)?))
        } else {
            Err(Error::integrity(format!("{} is not a model file", path.display())))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            AnyModel::NGram(m) => write(path, &ngram_to_bytes(m)),
            AnyModel::Neural(m) => write(path, &tinylm_to_bytes(m)),
        }
    }

    pub fn into_neural(self) -> Result<TinyNeuralLM> {
        match self {
            AnyModel::Neural(m) => Ok(m),
            AnyModel::NGram(_) => Err(Error::config("expected a tinylm model file, found an n-gram model")),
        }
    }
}

impl From<NGramModel> for AnyModel {
    fn from(m: NGramModel) -> Self {
        AnyModel::NGram(m)
    }
}

impl From<TinyNeuralLM> for AnyModel {
    fn from(m: TinyNeuralLM) -> Self {
        AnyModel::Neural(m)
    }
}

impl LanguageModel for AnyModel {
    fn vocab_size(&self) -> usize {
        match self {
            AnyModel::NGram(m) => m.vocab_size(),
            AnyModel::Neural(m) => m.vocab_size(),
        }
    }
    fn vocab_digest(&self) -> &str {
        match self {
            AnyModel::NGram(m) => m.vocab_digest(),
            AnyModel::Neural(m) => m.vocab_digest(),
        }
    }
    fn context_window(&self) -> usize {
        match self {
            AnyModel::NGram(m) => m.context_window(),
            AnyModel::Neural(m) => m.context_window(),
        }
    }
    fn next_logits(&self, history: &[TokenId]) -> LogitVector {
        match self {
            AnyModel::NGram(m) => m.next_logits(history),
            AnyModel::Neural(m) => m.next_logits(history),
        }
    }
}
