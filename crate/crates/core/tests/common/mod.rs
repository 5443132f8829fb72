#![allow(dead_code)]

use rwc_core::harness::Rng;
use rwc_core::text_model::ContextModel;

/// Order-0 model with `E` 49%, `T` 49%, `A` 2%.
pub fn eta_model() -> ContextModel {
    ContextModel::from_tables(0, 0.0, "ETA", &[(&[], &[('E', 49), ('T', 49), ('A', 2)])]).unwrap()
}

/// Order-1 model of the two-state `E/T/A -> S/H` chain.
pub fn chain_model() -> ContextModel {
    let state0: &[(char, u64)] = &[('E', 49), ('T', 49), ('A', 2)];
    ContextModel::from_tables(
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
    .unwrap()
}

/// Order-0 model that is uniform over all 256 byte values.
pub fn uniform_byte_model() -> ContextModel {
    let glyphs: String = (0u8..=255).map(char::from).collect();
    let counts: Vec<(char, u64)> = glyphs.chars().map(|c| (c, 1)).collect();
    ContextModel::from_tables(0, 0.0, &glyphs, &[(&[], &counts)]).unwrap()
}

const WORDS: &[&str] = &[
    "the", "of", "and", "a", "to", "in", "that", "his", "it", "i", "he", "but", "as", "is",
    "with", "was", "for", "all", "this", "at", "whale", "by", "not", "from", "on", "so", "him",
    "one", "you", "there", "now", "had", "have", "or", "were", "they", "which", "like", "me",
    "then", "their", "some", "what", "are", "when", "been", "sea", "ship", "upon", "old",
    "into", "more", "man", "boat", "captain", "ahab", "white", "head", "time", "long", "still",
    "though", "great", "said", "water", "deck", "over", "sperm", "these", "thing", "way",
    "would", "down", "those", "must", "whales", "seemed", "stubb", "queequeg", "last", "see",
    "own", "thou", "yet", "first", "little", "side", "world", "never", "hand", "good", "ye",
    "almost", "out", "came", "well", "line", "day", "three", "men", "eyes", "ishmael",
    "harpoon", "voyage", "ocean", "wind", "night", "crew", "pequod", "starbuck", "strange",
];

/// Deterministic English-like prose: Zipf-weighted words, sentences, line breaks.
pub fn prose(bytes: usize, seed: u64) -> String {
    let mut rng = Rng::new(seed);
    let weights: Vec<f64> = (1..=WORDS.len()).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut out = String::with_capacity(bytes + 32);
    let mut line = 0usize;
    let mut capital = true;
    while out.len() < bytes {
        let mut u = rng.next_unit() * total;
        let mut word = WORDS[WORDS.len() - 1];
        for (w, p) in WORDS.iter().zip(&weights) {
            if u < *p {
                word = w;
                break;
            }
            u -= p;
        }
        let mut token = String::from(word);
        if capital {
            token[..1].make_ascii_uppercase();
            capital = false;
        }
        match rng.below(20) {
            0 | 1 => {
                token.push('.');
                capital = true;
            }
            2 => token.push(','),
            3 if rng.below(4) == 0 => token.push_str("--"),
            _ => {}
        }
        if line + token.len() + 1 > 72 {
            out.push('\n');
            line = 0;
        } else if line > 0 {
            out.push(' ');
            line += 1;
        }
        line += token.len();
        out.push_str(&token);
    }
    out
}

/// Splits at the largest char boundary not above `at`.
pub fn split_at_boundary(text: &str, at: usize) -> (&str, &str) {
    let mut cut = at.min(text.len());
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.split_at(cut)
}

use rwc_core::rewind::{encode_document, run_trace, KeepRule};
use rwc_core::selector::select_kept_with;
use rwc_core::text_model::train;

/// A small random model together with a document drawn from the same source.
pub fn random_instance(rng: &mut Rng) -> (ContextModel, String) {
    const LETTERS: &[char] = &['a', 'b', 'c', 'd', 'e', ' ', '.', 'é', '\n'];
    let size = 2 + rng.below(7) as usize;
    let letters = &LETTERS[..size];
    let weights: Vec<f64> = (0..size).map(|_| rng.next_unit() + 0.01).collect();
    let total: f64 = weights.iter().sum();
    // sticky source: repeat the previous letter with some probability
    let stick = rng.next_unit() * 0.6;
    let draw = |rng: &mut Rng, n: usize| -> String {
        let mut prev = letters[0];
        (0..n)
            .map(|_| {
                if rng.next_unit() < stick {
                    return prev;
                }
                let mut u = rng.next_unit() * total;
                prev = letters[size - 1];
                for (c, w) in letters.iter().zip(&weights) {
                    if u < *w {
                        prev = *c;
                        break;
                    }
                    u -= w;
                }
                prev
            })
            .collect()
    };
    let corpus_len = 1 + rng.below(400) as usize;
    let corpus = draw(rng, corpus_len);
    let order = rng.below(4) as usize;
    let beta = [0.0, 0.05, 0.5][rng.below(3) as usize];
    let model = train(&corpus, order, beta).unwrap();
    let text_len = rng.below(300) as usize;
    let text: String = draw(rng, text_len)
        .chars()
        .filter(|&c| model.alphabet().id_of(c).is_some())
        .collect();
    (model, text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub errors: usize,
    pub outside_kept: usize,
    pub bit_count: u64,
    pub ideal_bits: f64,
}

/// Checks the decoder invariants on one document and reports the totals.
pub fn verify_run(model: &ContextModel, rule: &KeepRule, text: &str) -> Result<RunSummary, String> {
    let err = |e: rwc_core::Error| e.to_string();
    let (hints, report) = encode_document(model, rule, text).map_err(err)?;
    let trace = run_trace(model, rule, hints.payload(), text).map_err(err)?;
    let again = run_trace(model, rule, hints.payload(), text).map_err(err)?;
    if trace != again {
        return Err("two decoding runs differ".into());
    }
    let mut padded = hints.payload().to_vec();
    padded.extend_from_slice(&[0; 8]);
    if run_trace(model, rule, &padded, text).map_err(err)? != trace {
        return Err("extra zero padding changed the trace".into());
    }

    let ids = model.alphabet().encode_text(text).map_err(err)?;
    let mut outside_kept = 0;
    for (i, (&id, step)) in ids.iter().zip(&trace.steps).enumerate() {
        let kept = match rule {
            KeepRule::Selective(params) => {
                select_kept_with(&model.predict(&ids[..i]), params, model.ties()).contains(id)
            }
            KeepRule::Everything => true,
        };
        if !kept {
            outside_kept += 1;
        } else if step.guessed.id != id {
            return Err(format!("position {i}: kept character decoded wrongly"));
        }
        if step.correct != (step.guessed == step.truth) || (step.rewound && step.correct) {
            return Err(format!("position {i}: inconsistent step {step:?}"));
        }
    }
    if trace.errors != outside_kept || report.skipped != outside_kept {
        return Err(format!(
            "E={} skipped={} but {outside_kept} characters fell outside their kept sets",
            trace.errors, report.skipped
        ));
    }
    Ok(RunSummary {
        errors: trace.errors,
        outside_kept,
        bit_count: hints.bit_count(),
        ideal_bits: report.ideal_bits,
    })
}
