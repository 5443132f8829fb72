//! Hints encoding and the guess/reveal decoder.
//!
//! The encoder walks the document with the true history. At every position
//! it asks the model for a distribution, picks the kept set and either codes
//! the character under the kept set's table or skips it. The decoder walks
//! the same histories because the truth is revealed after every guess, so
//! both sides derive identical tables. A wrong guess can only happen where
//! the encoder skipped: the decoded symbol really belongs to a later
//! position, so the decoder restores its checkpoint and decodes the same
//! bits again once the next context is known.

use std::fmt::Write as _;

use crate::coder::{quantize, Checkpoint, Decoder, Encoder, FrequencyTable};
use crate::selector::{select_kept_with, KeptSet, SelectorParams};
use crate::text_model::{ContextModel, Symbol};
use crate::{Error, Result};

/// How each context's kept set is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeepRule {
    /// Most likely characters only, per the `alpha` threshold.
    Selective(SelectorParams),
    /// Every character of the alphabet; coding is lossless.
    Everything,
}

impl Default for KeepRule {
    fn default() -> Self {
        KeepRule::Selective(SelectorParams::default())
    }
}

/// Kept set for the position after `history`. Shared by encoder and decoder.
pub fn kept_set(model: &ContextModel, rule: &KeepRule, history: &[u32]) -> KeptSet {
    let dist = model.predict(history);
    match rule {
        KeepRule::Selective(params) => select_kept_with(&dist, params, model.ties()),
        KeepRule::Everything => {
            let ties = model.ties();
            let mut members: Vec<u32> = (1..dist.len() as u32).collect();
            members.sort_by(|&a, &b| {
                dist.p(b)
                    .total_cmp(&dist.p(a))
                    .then(ties.rank(a).cmp(&ties.rank(b)))
            });
            KeptSet::from_members(&dist, members)
        }
    }
}

fn coding_table(
    model: &ContextModel,
    rule: &KeepRule,
    history: &[u32],
) -> Result<(KeptSet, FrequencyTable)> {
    let kept = kept_set(model, rule, history);
    let table = quantize(&kept)?;
    Ok((kept, table))
}

/// The hints payload; its byte length is the `L` of `2L + E`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HintsFile {
    payload: Vec<u8>,
    bit_count: u64,
}

impl HintsFile {
    /// Wraps raw hint bytes read back from disk. Without a header the exact
    /// bit count is unknown, so every bit counts; zero padding is harmless.
    pub fn from_bytes(payload: Vec<u8>) -> Self {
        let bit_count = payload.len() as u64 * 8;
        Self { payload, bit_count }
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn into_payload(self) -> Vec<u8> {
        self.payload
    }

    pub fn bit_count(&self) -> u64 {
        self.bit_count
    }

    /// `L`, in bytes.
    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EncodeReport {
    pub kept: usize,
    pub skipped: usize,
    pub bit_count: u64,
    /// `sum log2(p(S) / p(i))` over the kept positions.
    pub ideal_bits: f64,
}

pub fn encode_document(
    model: &ContextModel,
    rule: &KeepRule,
    text: &str,
) -> Result<(HintsFile, EncodeReport)> {
    let ids = model.alphabet().encode_text(text)?;
    let mut encoder = Encoder::new();
    let mut report = EncodeReport::default();
    for (i, &id) in ids.iter().enumerate() {
        let (kept, table) = coding_table(model, rule, &ids[..i])?;
        match kept.position(id) {
            Some(pos) => {
                encoder.encode(&table, id)?;
                report.kept += 1;
                report.ideal_bits -= kept.renorm().probs()[pos].log2();
            }
            None => report.skipped += 1,
        }
    }
    let payload = encoder.finish();
    report.bit_count = payload.bit_count;
    Ok((
        HintsFile {
            payload: payload.bytes,
            bit_count: payload.bit_count,
        },
        report,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub guessed: Symbol,
    pub truth: Symbol,
    pub correct: bool,
    pub rewound: bool,
    /// Coder bits this step settled for good; 0 after a rewind.
    pub bits_consumed_net: i64,
}

#[derive(Debug, Clone, Copy)]
struct PendingGuess {
    guess: Symbol,
    checkpoint: Checkpoint,
}

/// One decoding pass over a document that is revealed a character at a time.
///
/// Calls must alternate: [`Self::next_guess`] then [`Self::reveal`].
#[derive(Debug, Clone)]
pub struct DecoderSession<'a> {
    model: &'a ContextModel,
    rule: KeepRule,
    decoder: Decoder<'a>,
    history: Vec<u32>,
    pending: Option<PendingGuess>,
}

impl<'a> DecoderSession<'a> {
    pub fn new(model: &'a ContextModel, rule: KeepRule, hints: &'a [u8]) -> Self {
        Self {
            model,
            rule,
            decoder: Decoder::new(hints),
            history: Vec::new(),
            pending: None,
        }
    }

    /// Revealed characters so far, as symbol ids.
    pub fn history(&self) -> &[u32] {
        &self.history
    }

    pub fn next_guess(&mut self) -> Result<Symbol> {
        if let Some(p) = self.pending {
            return Ok(p.guess);
        }
        let (_, table) = coding_table(self.model, &self.rule, &self.history)?;
        let checkpoint = self.decoder.checkpoint();
        let id = self.decoder.decode(&table);
        let guess = self
            .model
            .alphabet()
            .symbol(id)
            .expect("kept sets never contain BOS");
        self.pending = Some(PendingGuess { guess, checkpoint });
        Ok(guess)
    }

    pub fn reveal(&mut self, truth: char) -> Result<StepOutcome> {
        let position = self.history.len();
        let truth = self
            .model
            .alphabet()
            .id_of(truth)
            .and_then(|id| self.model.alphabet().symbol(id))
            .ok_or(Error::OutsideAlphabet {
                position,
                glyph: truth,
            })?;
        let PendingGuess { guess, checkpoint } =
            self.pending.take().ok_or(Error::NoPendingGuess)?;

        let correct = guess == truth;
        let bits_consumed_net = if correct {
            (self.decoder.settled_bits() - checkpoint.settled_bits()) as i64
        } else {
            // the decoded bits belong to a later position
            self.decoder.restore(checkpoint);
            0
        };
        self.history.push(truth.id);
        Ok(StepOutcome {
            guessed: guess,
            truth,
            correct,
            rewound: !correct,
            bits_consumed_net,
        })
    }
}

/// How wrong guesses are marked when a trace is rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Highlight {
    #[default]
    Brackets,
    Ansi,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeTrace {
    pub steps: Vec<StepOutcome>,
    /// `E`.
    pub errors: usize,
    pub kept: usize,
    pub skipped: usize,
}

impl DecodeTrace {
    /// Every guess, in order.
    pub fn guesses(&self) -> String {
        self.steps.iter().map(|s| s.guessed.glyph).collect()
    }

    /// Guess stream with wrong guesses marked, e.g. `ET[T]HTETTT`.
    pub fn render_guesses(&self, style: Highlight) -> String {
        let mut out = String::new();
        for step in &self.steps {
            push_guess(&mut out, step, style);
        }
        out
    }

    /// Each document line followed by the guesses made while it was read.
    pub fn render(&self, style: Highlight) -> String {
        let mut blocks = Vec::new();
        let (mut original, mut guessed) = (String::new(), String::new());
        for step in &self.steps {
            if step.truth.glyph == '\n' {
                if !step.correct {
                    push_guess(&mut guessed, step, style);
                }
                blocks.push(format!("{original}\n{guessed}\n"));
                original.clear();
                guessed.clear();
            } else {
                original.push(step.truth.glyph);
                push_guess(&mut guessed, step, style);
            }
        }
        if !original.is_empty() || !guessed.is_empty() {
            blocks.push(format!("{original}\n{guessed}\n"));
        }
        blocks.join("\n")
    }
}

fn push_guess(out: &mut String, step: &StepOutcome, style: Highlight) {
    let g = step.guessed.glyph;
    let shown: String = if g.is_control() {
        g.escape_debug().collect()
    } else {
        g.to_string()
    };
    match (step.correct, style) {
        (true, _) => out.push_str(&shown),
        (false, Highlight::Brackets) => {
            let _ = write!(out, "[{shown}]");
        }
        (false, Highlight::Ansi) => {
            let _ = write!(out, "\x1b[41m{shown}\x1b[0m");
        }
    }
}

/// Decodes `text` against `hints`, revealing each true character in turn.
pub fn run_trace(
    model: &ContextModel,
    rule: &KeepRule,
    hints: &[u8],
    text: &str,
) -> Result<DecodeTrace> {
    let mut session = DecoderSession::new(model, *rule, hints);
    let mut trace = DecodeTrace::default();
    for truth in text.chars() {
        session.next_guess()?;
        let step = session.reveal(truth)?;
        if step.correct {
            trace.kept += 1;
        } else {
            trace.errors += 1;
            trace.skipped += 1;
        }
        trace.steps.push(step);
    }
    Ok(trace)
}
