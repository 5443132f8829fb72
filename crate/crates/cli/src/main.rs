use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rwc_core::harness::{self, MarkovChain, SourceSpec, DEFAULT_SEED};
use rwc_core::rewind::{self, Highlight, KeepRule};
use rwc_core::selector::{self, SelectorParams};
use rwc_core::text_model::{self, ContextModel};
use rwc_core::{Error, ParseError};

const DEFAULT_ORDER: usize = 2;
const DEFAULT_SMOOTHING: f64 = 0.1;
const DEFAULT_TOL: f64 = selector::DEFAULT_TOLERANCE;

const EXIT_FAILURE: u8 = 1;
const EXIT_IO: u8 = 3;
const EXIT_BAD_MODEL: u8 = 4;
const EXIT_ALPHABET: u8 = 5;

/// Lossy text compression with a rewinding guess decoder.
#[derive(Debug, Parser)]
#[command(name = "rwc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RuleArgs {
    /// Bisection tolerance for the kept-set threshold.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Keep every character (lossless hints, no errors).
    #[arg(long)]
    lossless: bool,
}

impl RuleArgs {
    fn rule(&self) -> KeepRule {
        if self.lossless {
            KeepRule::Everything
        } else {
            KeepRule::Selective(SelectorParams::new(self.tol))
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Source {
    /// E 49%, T 49%, A 2%, independent.
    Eta,
    /// E and T, 50% each.
    Et,
    /// Two-state chain: E/T, or A followed by S or H.
    Chain,
    /// Uniform random bytes.
    Bytes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Example {
    /// Order-0 E/T/A model with document ETATEETTT.
    Eta,
    /// Order-1 two-state chain model with document ETAHTETTT.
    Chain,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the kept-set threshold alpha.
    Alpha {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Train an order-k character model on a UTF-8 corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short = 'k', default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        smoothing: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the hints file for a document.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Replay the guess/reveal protocol and report L and E.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        hints: PathBuf,
        #[arg(long)]
        text: PathBuf,
        /// Also write the guessed characters here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Print each document line above the guesses made for it.
    Trace {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        hints: PathBuf,
        #[arg(long)]
        text: PathBuf,
        /// Highlight wrong guesses with ANSI colours instead of brackets.
        #[arg(long)]
        ansi: bool,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Compute 2L+E from its parts.
    Score {
        #[arg(long = "hints-bytes", short = 'L')]
        hints_bytes: u64,
        #[arg(long, short = 'E')]
        errors: u64,
        #[arg(long)]
        model_bytes: Option<u64>,
        #[arg(long)]
        include_model: bool,
    },
    /// Encode, decode and score a document in one go.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        include_model: bool,
        /// Print the multi-line report instead of key=value.
        #[arg(long)]
        verbose: bool,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Generate a document from a seeded random source.
    Gen {
        #[arg(long, value_enum)]
        source: Source,
        #[arg(long, short = 'n')]
        n: usize,
        #[arg(long, env = "RWC_SEED", value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-character surprise and order-0 entropy of a corpus.
    Analyze {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Write one of the built-in worked examples (model and document).
    Example {
        #[arg(value_enum)]
        which: Example,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: PathBuf,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn read_bytes(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_model(path: &Path) -> anyhow::Result<ContextModel> {
    let bytes = read_bytes(path)?;
    text_model::parse_model(&bytes).with_context(|| format!("{} is not a valid model", path.display()))
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot write into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Alpha { tol } => {
            if !(tol > 0.0) {
                return Err(anyhow!("--tol must be positive"));
            }
            let alpha = selector::solve_alpha(tol);
            let residual = (1.0 + alpha).powf(1.0 + alpha) - (16.0 * alpha).powf(alpha);
            writeln!(stdout, "{alpha:.10}")?;
            writeln!(stdout, "residual={:.3e}", residual.abs())?;
        }
        Command::Train {
            corpus,
            order,
            smoothing,
            out,
        } => {
            let text = read_text(&corpus)?;
            let model = text_model::train(&text, order, smoothing)?;
            let bytes = text_model::serialize_model(&model);
            write_atomic(&out, &bytes)?;
            writeln!(
                stdout,
                "order={order} smoothing={smoothing} alphabet={} contexts={} model_bytes={}",
                model.alphabet().glyphs().len(),
                model.tables().count(),
                bytes.len()
            )?;
        }
        Command::Encode {
            model,
            text,
            out,
            rule,
        } => {
            let model = read_model(&model)?;
            let text = read_text(&text)?;
            let (hints, report) = rewind::encode_document(&model, &rule.rule(), &text)?;
            write_atomic(&out, hints.payload())?;
            writeln!(
                stdout,
                "L={} bits={} kept={} skipped={}",
                hints.len(),
                report.bit_count,
                report.kept,
                report.skipped
            )?;
        }
        Command::Decode {
            model,
            hints,
            text,
            out,
            rule,
        } => {
            let model = read_model(&model)?;
            let hints = read_bytes(&hints)?;
            let text = read_text(&text)?;
            let trace = rewind::run_trace(&model, &rule.rule(), &hints, &text)?;
            if let Some(out) = out {
                write_atomic(&out, trace.guesses().as_bytes())?;
            }
            let mut report = harness::score(hints.len() as u64, trace.errors as u64, None, false);
            report.kept = trace.kept as u64;
            report.skipped = trace.skipped as u64;
            writeln!(stdout, "{}", report.to_key_values())?;
        }
        Command::Trace {
            model,
            hints,
            text,
            ansi,
            rule,
        } => {
            let model = read_model(&model)?;
            let hints = read_bytes(&hints)?;
            let text = read_text(&text)?;
            let trace = rewind::run_trace(&model, &rule.rule(), &hints, &text)?;
            let style = if ansi { Highlight::Ansi } else { Highlight::Brackets };
            write!(stdout, "{}", trace.render(style))?;
        }
        Command::Score {
            hints_bytes,
            errors,
            model_bytes,
            include_model,
        } => {
            let report = harness::score(hints_bytes, errors, model_bytes, include_model);
            writeln!(stdout, "{}", report.to_key_values())?;
        }
        Command::Eval {
            model,
            text,
            include_model,
            verbose,
            rule,
        } => {
            let model = read_model(&model)?;
            let text = read_text(&text)?;
            let (report, _) = harness::evaluate(&model, &rule.rule(), &text, include_model)?;
            if verbose {
                writeln!(stdout, "{report}")?;
            } else {
                writeln!(stdout, "{}", report.to_key_values())?;
            }
        }
        Command::Gen { source, n, seed, out } => {
            let spec = match source {
                Source::Eta => SourceSpec::eta(),
                Source::Et => SourceSpec::Iid(vec![('E', 0.5), ('T', 0.5)]),
                Source::Chain => SourceSpec::Markov(MarkovChain::example_five()),
                Source::Bytes => SourceSpec::RandomBytes,
            };
            let bytes = spec.generate(n, seed)?;
            match out {
                Some(path) => write_atomic(&path, &bytes)?,
                None => stdout.write_all(&bytes)?,
            }
        }
        Command::Analyze { corpus } => {
            let text = read_text(&corpus)?;
            let model = text_model::train(&text, 0, 0.0)?;
            let dist = model.predict(&[]);
            let counts = model.counts(&[]).unwrap_or_default();
            writeln!(stdout, "char\tcount\tprob\tsurprise_bits")?;
            for (i, &glyph) in model.alphabet().glyphs().iter().enumerate() {
                let id = i + 1;
                let p = dist.probs()[id];
                writeln!(
                    stdout,
                    "{}\t{}\t{p:.6}\t{:.4}",
                    glyph.escape_debug(),
                    counts[id],
                    text_model::surprise(p)?
                )?;
            }
            let h = text_model::entropy(&dist);
            let n = text.chars().count();
            writeln!(stdout, "characters={n} distinct={}", model.alphabet().glyphs().len())?;
            writeln!(stdout, "entropy_bits_per_char={h:.4}")?;
            writeln!(stdout, "order0_bytes={:.0}", h * n as f64 / 8.0)?;
        }
        Command::Example { which, model, text } => {
            let (m, doc) = match which {
                Example::Eta => (
                    ContextModel::from_tables(
                        0,
                        0.0,
                        "ETA",
                        &[(&[], &[('E', 49), ('T', 49), ('A', 2)])],
                    )?,
                    "ETATEETTT",
                ),
                Example::Chain => {
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
                    )?;
                    (m, "ETAHTETTT")
                }
            };
            write_atomic(&model, &text_model::serialize_model(&m))?;
            write_atomic(&text, doc.as_bytes())?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ParseError>() {
            return EXIT_BAD_MODEL;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parse(_) => EXIT_BAD_MODEL,
                Error::OutsideAlphabet { .. } => EXIT_ALPHABET,
                _ => EXIT_FAILURE,
            };
        }
        if cause.is::<io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("rwc: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
