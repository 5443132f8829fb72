//! The `RWC1` model file.
//!
//! All integers little-endian:
//!
//! ```text
//! magic      4 bytes  "RWC1"
//! version    u16      1
//! order      u32
//! smoothing  u64      IEEE-754 bits of the f64
//! glyphs     u32 n, then n x u32 scalar values (ascending)
//! precedence u32 n, then n x u32 symbol ids
//! tables     u32 t, then per table (ascending key order):
//!              u32 key length, key ids as u32,
//!              u32 entry count, then (u32 id, u64 count) for non-zero counts
//! ```

use std::collections::BTreeMap;

use super::{Alphabet, ContextModel, TieOrder};
use crate::ParseError;

pub const MAGIC: &[u8; 4] = b"RWC1";
pub const VERSION: u16 = 1;

pub fn serialize_model(model: &ContextModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, model.order() as u32);
    out.extend_from_slice(&model.smoothing().to_bits().to_le_bytes());

    let glyphs = model.alphabet().glyphs();
    put_u32(&mut out, glyphs.len() as u32);
    for &g in glyphs {
        put_u32(&mut out, g as u32);
    }

    let precedence = model.ties().precedence();
    put_u32(&mut out, precedence.len() as u32);
    for id in precedence {
        put_u32(&mut out, id);
    }

    let tables: Vec<_> = model.tables().collect();
    put_u32(&mut out, tables.len() as u32);
    for (key, row) in tables {
        put_u32(&mut out, key.len() as u32);
        for &id in key {
            put_u32(&mut out, id);
        }
        let entries: Vec<_> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .collect();
        put_u32(&mut out, entries.len() as u32);
        for (id, &count) in entries {
            put_u32(&mut out, id as u32);
            out.extend_from_slice(&count.to_le_bytes());
        }
    }
    out
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        if self.buf.len() < n {
            return Err(ParseError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, ParseError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ParseError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ParseError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Length prefix, sanity-checked against the bytes that remain.
    fn len(&mut self, item_size: usize) -> Result<usize, ParseError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(item_size) > self.buf.len() {
            return Err(ParseError::Truncated);
        }
        Ok(n)
    }
}

fn malformed(msg: impl Into<String>) -> ParseError {
    ParseError::Malformed(msg.into())
}

pub fn parse_model(bytes: &[u8]) -> Result<ContextModel, ParseError> {
    let mut r = Reader { buf: bytes };
    let magic = r.take(4).map_err(|_| ParseError::BadMagic)?;
    if magic != MAGIC {
        return Err(ParseError::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(ParseError::UnsupportedVersion(version));
    }
    let order = r.u32()? as usize;
    let smoothing = f64::from_bits(r.u64()?);
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(malformed(format!("smoothing {smoothing}")));
    }

    let n = r.len(4)?;
    let mut glyphs = Vec::with_capacity(n);
    for _ in 0..n {
        let v = r.u32()?;
        let g = char::from_u32(v).ok_or_else(|| malformed(format!("invalid scalar {v:#x}")))?;
        if glyphs.last().is_some_and(|&prev| prev >= g) {
            return Err(malformed("glyphs not strictly ascending"));
        }
        glyphs.push(g);
    }
    if glyphs.is_empty() {
        return Err(malformed("empty alphabet"));
    }
    let alphabet = Alphabet::from_glyphs(glyphs);
    let width = alphabet.len();

    let n = r.len(4)?;
    let mut precedence = Vec::with_capacity(n);
    let mut seen = vec![false; width];
    for _ in 0..n {
        let id = r.u32()?;
        if id == 0 || id as usize >= width || std::mem::replace(&mut seen[id as usize], true) {
            return Err(malformed(format!("bad precedence entry {id}")));
        }
        precedence.push(id);
    }
    if precedence.len() != width - 1 {
        return Err(malformed("precedence does not cover the alphabet"));
    }
    let ties = TieOrder::from_precedence(&precedence, width);

    let n = r.len(8)?;
    let mut tables = BTreeMap::new();
    for _ in 0..n {
        let klen = r.len(4)?;
        if klen > order {
            return Err(malformed(format!("history of length {klen} exceeds order {order}")));
        }
        let mut key = Vec::with_capacity(klen);
        for _ in 0..klen {
            let id = r.u32()?;
            if id as usize >= width {
                return Err(malformed(format!("history symbol {id} out of range")));
            }
            key.push(id);
        }
        let entries = r.len(12)?;
        let mut row = vec![0u64; width];
        for _ in 0..entries {
            let id = r.u32()? as usize;
            let count = r.u64()?;
            if id == 0 || id >= width {
                return Err(malformed(format!("count for symbol {id} out of range")));
            }
            row[id] = count;
        }
        if tables.insert(key, row).is_some() {
            return Err(malformed("duplicate history"));
        }
    }
    if !r.buf.is_empty() {
        return Err(malformed(format!("{} trailing bytes", r.buf.len())));
    }
    Ok(ContextModel::from_parts(order, smoothing, alphabet, ties, tables))
}
