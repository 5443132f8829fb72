//! `2L + E` scoring, end-to-end evaluation and reproducible test sources.

use std::fmt;

use crate::rewind::{encode_document, run_trace, DecodeTrace, KeepRule};
use crate::text_model::{serialize_model, ContextModel, MASS_TOLERANCE};
use crate::{Error, Result};

/// Seed used by every shipped statistical check.
pub const DEFAULT_SEED: u64 = 0xDEAD_BEEF;

/// SplitMix64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`, as `next_u64 / 2^64`.
    pub fn next_unit(&mut self) -> f64 {
        self.next_u64() as f64 / 18_446_744_073_709_551_616.0
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

/// Index of the first entry whose cumulative probability exceeds `u`.
fn sample(probs: impl IntoIterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}

/// One outgoing edge of a chain state: emit `glyph`, then move to `next`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub glyph: char,
    pub prob: f64,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub start: usize,
    pub states: Vec<Vec<Transition>>,
}

impl MarkovChain {
    /// Two states: `E`/`T` loop at 49% each, `A` at 2% leads to a state
    /// that emits `S` or `H` at 50% each and returns.
    pub fn example_five() -> Self {
        let edge = |glyph, prob, next| Transition { glyph, prob, next };
        Self {
            start: 0,
            states: vec![
                vec![edge('E', 0.49, 0), edge('T', 0.49, 0), edge('A', 0.02, 1)],
                vec![edge('S', 0.5, 0), edge('H', 0.5, 0)],
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start >= self.states.len() {
            return Err(Error::InvalidDistribution(format!(
                "start state {} does not exist",
                self.start
            )));
        }
        for (s, edges) in self.states.iter().enumerate() {
            check_probs(edges.iter().map(|e| e.prob))?;
            if let Some(e) = edges.iter().find(|e| e.next >= self.states.len()) {
                return Err(Error::InvalidDistribution(format!(
                    "state {s} moves to missing state {}",
                    e.next
                )));
            }
        }
        Ok(())
    }
}

fn check_probs(probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("probability {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

/// A random process that produces test documents.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Iid(Vec<(char, f64)>),
    Markov(MarkovChain),
    RandomBytes,
}

impl SourceSpec {
    /// `E` 49%, `T` 49%, `A` 2%.
    pub fn eta() -> Self {
        SourceSpec::Iid(vec![('E', 0.49), ('T', 0.49), ('A', 0.02)])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::Iid(dist) => check_probs(dist.iter().map(|(_, p)| *p)),
            SourceSpec::Markov(chain) => chain.validate(),
            SourceSpec::RandomBytes => Ok(()),
        }
    }

    /// `n` symbols (characters, or bytes for [`SourceSpec::RandomBytes`]) as
    /// raw file contents.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<u8>> {
        self.validate()?;
        Ok(match self {
            SourceSpec::Iid(dist) => gen_iid(dist, n, seed).into_bytes(),
            SourceSpec::Markov(chain) => gen_markov(chain, n, seed).into_bytes(),
            SourceSpec::RandomBytes => gen_bytes(n, seed),
        })
    }
}

pub fn gen_iid(dist: &[(char, f64)], n: usize, seed: u64) -> String {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| dist[sample(dist.iter().map(|(_, p)| *p), rng.next_unit())].0)
        .collect()
}

pub fn gen_markov(chain: &MarkovChain, n: usize, seed: u64) -> String {
    let mut rng = Rng::new(seed);
    let mut state = chain.start;
    let mut out = String::with_capacity(n);
    for _ in 0..n {
        let edges = &chain.states[state];
        let edge = edges[sample(edges.iter().map(|e| e.prob), rng.next_unit())];
        out.push(edge.glyph);
        state = edge.next;
    }
    out
}

/// Low byte of successive generator outputs.
pub fn gen_bytes(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = Rng::new(seed);
    (0..n).map(|_| rng.next_u64() as u8).collect()
}

/// Reads each byte as the scalar with the same value (`U+0000..=U+00FF`).
pub fn bytes_as_text(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreReport {
    /// Hints length in bytes.
    pub hints_bytes: u64,
    pub errors: u64,
    pub model_bytes: Option<u64>,
    pub include_model: bool,
    pub score: u64,
    pub kept: u64,
    pub skipped: u64,
}

/// `2L + E`, or `2(L + model) + E` when the model is charged as well.
pub fn score(hints_bytes: u64, errors: u64, model_bytes: Option<u64>, include_model: bool) -> ScoreReport {
    let charged = if include_model {
        hints_bytes + model_bytes.unwrap_or(0)
    } else {
        hints_bytes
    };
    ScoreReport {
        hints_bytes,
        errors,
        model_bytes,
        include_model,
        score: 2 * charged + errors,
        kept: 0,
        skipped: 0,
    }
}

impl ScoreReport {
    /// Single `key=value` line, e.g. `L=1 E=1 score=3 kept=8 skipped=1`.
    pub fn to_key_values(&self) -> String {
        let mut line = format!(
            "L={} E={} score={} kept={} skipped={}",
            self.hints_bytes, self.errors, self.score, self.kept, self.skipped
        );
        if let Some(m) = self.model_bytes {
            line.push_str(&format!(" model_bytes={m}"));
        }
        line.push_str(&format!(" include_model={}", self.include_model));
        line
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hints bytes (L): {}", self.hints_bytes)?;
        writeln!(f, "errors (E):      {}", self.errors)?;
        if let Some(m) = self.model_bytes {
            let note = if self.include_model { "charged" } else { "not charged" };
            writeln!(f, "model bytes:     {m} ({note})")?;
        }
        writeln!(f, "kept/skipped:    {}/{}", self.kept, self.skipped)?;
        write!(f, "score:           {}", self.score)
    }
}

/// Encodes `text`, decodes it back through the rewind session and scores it.
pub fn evaluate(
    model: &ContextModel,
    rule: &KeepRule,
    text: &str,
    include_model: bool,
) -> Result<(ScoreReport, DecodeTrace)> {
    let (hints, encoded) = encode_document(model, rule, text)?;
    let trace = run_trace(model, rule, hints.payload(), text)?;
    if trace.errors != encoded.skipped {
        return Err(Error::Desync {
            errors: trace.errors,
            skipped: encoded.skipped,
        });
    }
    let model_bytes = serialize_model(model).len() as u64;
    let mut report = score(
        hints.len() as u64,
        trace.errors as u64,
        Some(model_bytes),
        include_model,
    );
    report.kept = encoded.kept as u64;
    report.skipped = encoded.skipped as u64;
    Ok((report, trace))
}
