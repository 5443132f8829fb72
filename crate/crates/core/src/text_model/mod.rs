//! Order-k character Markov models.
//!
//! Symbol ids index an [`Alphabet`]: id 0 is the begin-of-stream sentinel
//! (`BOS`), the remaining ids are the distinct characters of the corpus in
//! code-point order. Histories shorter than the model order are left-padded
//! with `BOS`, so the very first character of a document is predicted from
//! the all-`BOS` context.

mod distribution;
mod format;

use std::collections::BTreeMap;

pub use distribution::{entropy, surprise, Distribution, MASS_TOLERANCE};
pub use format::{parse_model, serialize_model, MAGIC, VERSION};

use crate::{Error, Result};

/// Id of the begin-of-stream sentinel.
pub const BOS: u32 = 0;

/// A character of the modelled text together with its alphabet id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub id: u32,
    pub glyph: char,
}

/// `BOS` followed by distinct characters sorted by code point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    glyphs: Vec<char>,
}

impl Alphabet {
    /// Builds an alphabet from arbitrary characters; duplicates are merged.
    pub fn from_glyphs(glyphs: impl IntoIterator<Item = char>) -> Self {
        let mut glyphs: Vec<char> = glyphs.into_iter().collect();
        glyphs.sort_unstable();
        glyphs.dedup();
        Self { glyphs }
    }

    /// Number of symbols including `BOS`.
    pub fn len(&self) -> usize {
        self.glyphs.len() + 1
    }

    /// True when the alphabet holds nothing but `BOS`.
    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }

    /// Characters in id order, without `BOS`.
    pub fn glyphs(&self) -> &[char] {
        &self.glyphs
    }

    pub fn id_of(&self, glyph: char) -> Option<u32> {
        self.glyphs
            .binary_search(&glyph)
            .ok()
            .map(|i| i as u32 + 1)
    }

    /// Glyph for `id`, or `None` for `BOS` and out-of-range ids.
    pub fn glyph(&self, id: u32) -> Option<char> {
        (id as usize)
            .checked_sub(1)
            .and_then(|i| self.glyphs.get(i).copied())
    }

    pub fn symbol(&self, id: u32) -> Option<Symbol> {
        self.glyph(id).map(|glyph| Symbol { id, glyph })
    }

    /// Maps text to symbol ids, reporting the first character that is missing.
    pub fn encode_text(&self, text: &str) -> Result<Vec<u32>> {
        text.chars()
            .enumerate()
            .map(|(position, glyph)| {
                self.id_of(glyph)
                    .ok_or(Error::OutsideAlphabet { position, glyph })
            })
            .collect()
    }
}

/// `BOS` plus the sorted distinct characters of `corpus`.
pub fn build_alphabet(corpus: &str) -> Alphabet {
    Alphabet::from_glyphs(corpus.chars())
}

/// Ranking used to break probability ties between symbols.
///
/// Encoder and decoder must agree on it, so it travels with the model.
/// Lower rank wins. Trained models rank characters by first appearance in
/// the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieOrder {
    rank: Vec<u32>,
}

impl TieOrder {
    /// Ranks symbols by ascending id.
    pub fn by_id(len: usize) -> Self {
        Self {
            rank: (0..len as u32).collect(),
        }
    }

    /// `precedence` lists non-`BOS` ids from highest to lowest priority.
    /// Ids it omits are ranked after it, by ascending id.
    pub fn from_precedence(precedence: &[u32], len: usize) -> Self {
        let mut rank = vec![u32::MAX; len];
        if len > 0 {
            rank[0] = 0;
        }
        let mut next = 1;
        for &id in precedence {
            if let Some(r) = rank.get_mut(id as usize) {
                if *r == u32::MAX && id != BOS {
                    *r = next;
                    next += 1;
                }
            }
        }
        for r in rank.iter_mut() {
            if *r == u32::MAX {
                *r = next;
                next += 1;
            }
        }
        Self { rank }
    }

    pub fn rank(&self, id: u32) -> u32 {
        self.rank.get(id as usize).copied().unwrap_or(u32::MAX)
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Non-`BOS` ids from highest to lowest priority.
    pub fn precedence(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = (1..self.rank.len() as u32).collect();
        ids.sort_by_key(|&id| self.rank(id));
        ids
    }
}

/// Per-context symbol counts for every order `0..=k`.
///
/// Keys are histories of symbol ids, oldest first. Order-k keys have length
/// exactly k; the shorter keys are marginals of the order-k table and serve
/// as backoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel {
    order: usize,
    smoothing: f64,
    alphabet: Alphabet,
    ties: TieOrder,
    tables: BTreeMap<Vec<u32>, Vec<u64>>,
}

/// Tallies every length-(k+1) window of the `BOS`-padded corpus.
pub fn train(corpus: &str, order: usize, smoothing: f64) -> Result<ContextModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    check_smoothing(smoothing)?;
    let alphabet = build_alphabet(corpus);
    let ids = alphabet.encode_text(corpus)?;

    let mut seen = vec![false; alphabet.len()];
    let mut precedence = Vec::new();
    for &id in &ids {
        if !std::mem::replace(&mut seen[id as usize], true) {
            precedence.push(id);
        }
    }
    let ties = TieOrder::from_precedence(&precedence, alphabet.len());

    let mut padded = vec![BOS; order];
    padded.extend_from_slice(&ids);
    let width = alphabet.len();
    let mut tables: BTreeMap<Vec<u32>, Vec<u64>> = BTreeMap::new();
    for window in padded.windows(order + 1) {
        let (context, next) = window.split_at(order);
        for j in 0..=order {
            let row = tables
                .entry(context[order - j..].to_vec())
                .or_insert_with(|| vec![0; width]);
            row[next[0] as usize] += 1;
        }
    }

    Ok(ContextModel {
        order,
        smoothing,
        alphabet,
        ties,
        tables,
    })
}

fn check_smoothing(smoothing: f64) -> Result<()> {
    if smoothing.is_finite() && smoothing >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "smoothing must be a finite value >= 0, got {smoothing}"
        )))
    }
}

impl ContextModel {
    /// Builds a model from hand-written order-k count tables.
    ///
    /// `precedence` lists every character of the alphabet, in tie-break
    /// order. Each table key is a history of exactly `order` entries where
    /// `None` stands for `BOS`. Lower-order tables are derived by
    /// marginalization.
    pub fn from_tables(
        order: usize,
        smoothing: f64,
        precedence: &str,
        tables: &[(&[Option<char>], &[(char, u64)])],
    ) -> Result<Self> {
        check_smoothing(smoothing)?;
        let alphabet = build_alphabet(precedence);
        if alphabet.is_empty() {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if alphabet.glyphs().len() != precedence.chars().count() {
            return Err(Error::InvalidModel(
                "precedence lists a character twice".into(),
            ));
        }
        let lookup = |glyph: char| {
            alphabet
                .id_of(glyph)
                .ok_or_else(|| Error::InvalidModel(format!("{glyph:?} not in precedence list")))
        };
        let precedence_ids = precedence
            .chars()
            .map(lookup)
            .collect::<Result<Vec<_>>>()?;
        let ties = TieOrder::from_precedence(&precedence_ids, alphabet.len());

        let width = alphabet.len();
        let mut full: BTreeMap<Vec<u32>, Vec<u64>> = BTreeMap::new();
        for (history, counts) in tables {
            if history.len() != order {
                return Err(Error::InvalidModel(format!(
                    "history of length {} in an order-{order} model",
                    history.len()
                )));
            }
            let key = history
                .iter()
                .map(|h| h.map_or(Ok(BOS), lookup))
                .collect::<Result<Vec<_>>>()?;
            let row = full.entry(key).or_insert_with(|| vec![0; width]);
            for &(glyph, count) in counts.iter() {
                row[lookup(glyph)? as usize] += count;
            }
        }

        let mut all = BTreeMap::new();
        for (key, row) in &full {
            for j in 0..=order {
                let acc = all
                    .entry(key[order - j..].to_vec())
                    .or_insert_with(|| vec![0u64; width]);
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += c;
                }
            }
        }

        Ok(Self {
            order,
            smoothing,
            alphabet,
            ties,
            tables: all,
        })
    }

    pub(crate) fn from_parts(
        order: usize,
        smoothing: f64,
        alphabet: Alphabet,
        ties: TieOrder,
        tables: BTreeMap<Vec<u32>, Vec<u64>>,
    ) -> Self {
        Self {
            order,
            smoothing,
            alphabet,
            ties,
            tables,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn ties(&self) -> &TieOrder {
        &self.ties
    }

    /// Count row for an exact history key (any order up to k).
    pub fn counts(&self, history: &[u32]) -> Option<&[u64]> {
        self.tables.get(history).map(Vec::as_slice)
    }

    /// All stored `(history, counts)` rows, in key order.
    pub fn tables(&self) -> impl Iterator<Item = (&[u32], &[u64])> {
        self.tables.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    /// The `BOS`-padded order-k context that follows `history`.
    pub fn context_of(&self, history: &[u32]) -> Vec<u32> {
        let k = self.order;
        let tail = &history[history.len().saturating_sub(k)..];
        let mut context = vec![BOS; k - tail.len()];
        context.extend_from_slice(tail);
        context
    }

    /// Next-symbol distribution after `history`.
    ///
    /// Uses the longest trained suffix of the padded context and applies
    /// additive smoothing there; with no trained suffix at all the result is
    /// uniform over the non-`BOS` symbols.
    pub fn predict(&self, history: &[u32]) -> Distribution {
        let context = self.context_of(history);
        let width = self.alphabet.len();
        let m = (width - 1) as f64;
        let matched = (0..=self.order).rev().find_map(|j| {
            self.tables
                .get(&context[self.order - j..])
                .map(|row| (row, row[1..].iter().sum::<u64>()))
                .filter(|(_, total)| *total > 0)
        });

        let mut probs = vec![0.0; width];
        match matched {
            Some((row, total)) => {
                let beta = self.smoothing;
                let denom = total as f64 + beta * m;
                for (p, &c) in probs.iter_mut().zip(row).skip(1) {
                    *p = (c as f64 + beta) / denom;
                }
            }
            None => probs[1..].fill(1.0 / m),
        }
        Distribution::from_vec_unchecked(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(model: &ContextModel, text: &str) -> Vec<u32> {
        model.alphabet().encode_text(text).unwrap()
    }

    #[test]
    fn alphabet_examples() {
        assert_eq!(build_alphabet("ETAT").glyphs(), &['A', 'E', 'T']);
        assert_eq!(build_alphabet("ETAT").len(), 4);
        assert!(build_alphabet("").is_empty());
        assert_eq!(build_alphabet("").len(), 1);
        assert_eq!(build_alphabet("aA").glyphs(), &['A', 'a']);
    }

    #[test]
    fn alphabet_ids_are_a_bijection() {
        let a = build_alphabet("the quick brown fox");
        for (i, &g) in a.glyphs().iter().enumerate() {
            let id = a.id_of(g).unwrap();
            assert_eq!(id, i as u32 + 1);
            assert_eq!(a.glyph(id), Some(g));
        }
        assert_eq!(a.glyph(BOS), None);
        assert_eq!(a.id_of('z'), None);
    }

    #[test]
    fn train_counts_order_zero() {
        let m = train("ETATEETTT", 0, 0.0).unwrap();
        let a = m.alphabet();
        let row = m.counts(&[]).unwrap();
        assert_eq!(row[a.id_of('E').unwrap() as usize], 3);
        assert_eq!(row[a.id_of('T').unwrap() as usize], 5);
        assert_eq!(row[a.id_of('A').unwrap() as usize], 1);
    }

    #[test]
    fn train_counts_order_one() {
        let m = train("AB", 1, 0.0).unwrap();
        let (a, b) = (1u32, 2u32);
        assert_eq!(m.counts(&[BOS]).unwrap(), &[0, 1, 0]);
        assert_eq!(m.counts(&[a]).unwrap(), &[0, 0, 1]);
        assert_eq!(m.counts(&[b]), None);
        assert_eq!(m.counts(&[]).unwrap(), &[0, 1, 1]);
    }

    #[test]
    fn train_rejects_empty_corpus() {
        assert_eq!(train("", 2, 0.1), Err(Error::EmptyCorpus));
        assert!(train("abc", 1, -1.0).is_err());
    }

    #[test]
    fn additive_smoothing() {
        let m = ContextModel::from_tables(0, 1.0, "ET", &[(&[], &[('E', 2)])]).unwrap();
        let d = m.predict(&[]);
        assert_eq!(d.p(m.alphabet().id_of('E').unwrap()), 0.75);
        assert_eq!(d.p(m.alphabet().id_of('T').unwrap()), 0.25);
        assert_eq!(d.p(BOS), 0.0);
    }

    #[test]
    fn trained_smoothing_matches_formula() {
        let m = train("EE", 0, 1.0).unwrap();
        // alphabet is {E} only: (2 + 1) / (2 + 1)
        assert_eq!(m.predict(&[]).p(1), 1.0);
    }

    #[test]
    fn chain_predictions() {
        let state0: &[(char, u64)] = &[('E', 49), ('T', 49), ('A', 2)];
        let m = ContextModel::from_tables(
            1,
            0.0,
            "ETASH",
            &[
                (&[None], state0),
                (&[Some('E')], state0),
                (&[Some('T')], state0),
                (&[Some('S')], state0),
                (&[Some('H')], state0),
                (&[Some('A')], &[('S', 1), ('H', 1)]),
            ],
        )
        .unwrap();
        let a = m.alphabet();
        let after_a = m.predict(&ids(&m, "ETA"));
        assert_eq!(after_a.p(a.id_of('S').unwrap()), 0.5);
        assert_eq!(after_a.p(a.id_of('H').unwrap()), 0.5);
        let after_t = m.predict(&ids(&m, "ET"));
        assert_eq!(after_t.p(a.id_of('E').unwrap()), 0.49);
        assert_eq!(after_t.p(a.id_of('T').unwrap()), 0.49);
        assert_eq!(after_t.p(a.id_of('A').unwrap()), 0.02);
        // tie order follows the precedence string, not code points
        assert!(m.ties().rank(a.id_of('S').unwrap()) < m.ties().rank(a.id_of('H').unwrap()));
    }

    #[test]
    fn untrained_context_falls_back_to_uniform() {
        let m = ContextModel::from_tables(1, 0.0, "ET", &[]).unwrap();
        let d = m.predict(&[1]);
        assert_eq!(d.probs(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn backoff_uses_longest_trained_suffix() {
        let m = train("abcabd", 2, 0.0).unwrap();
        let a = m.alphabet();
        let hist = ids(&m, "ab");
        let d = m.predict(&hist);
        assert_eq!(d.p(a.id_of('c').unwrap()), 0.5);
        assert_eq!(d.p(a.id_of('d').unwrap()), 0.5);
        // "db" never occurs; back off to "b"
        let d = m.predict(&ids(&m, "db"));
        assert_eq!(d.p(a.id_of('c').unwrap()), 0.5);
        // "dd" and "d" unseen as contexts; back off to order 0
        let d = m.predict(&ids(&m, "dd"));
        assert_eq!(d.p(a.id_of('a').unwrap()), 2.0 / 6.0);
    }

    #[test]
    fn tie_order_from_first_appearance() {
        let m = train("zya", 0, 0.0).unwrap();
        assert_eq!(m.ties().precedence(), vec![3, 2, 1]);
    }

    #[test]
    fn from_tables_validates() {
        assert!(ContextModel::from_tables(1, 0.0, "", &[]).is_err());
        assert!(ContextModel::from_tables(1, 0.0, "EE", &[]).is_err());
        assert!(ContextModel::from_tables(1, 0.0, "ET", &[(&[], &[])]).is_err());
        assert!(ContextModel::from_tables(0, 0.0, "ET", &[(&[], &[('X', 1)])]).is_err());
    }
}
