//! Bit-level integer arithmetic coder.
//!
//! 32-bit low/high interval with pending underflow bits (the classic
//! Witten-Neal-Cleary layout), driven by frequency tables whose totals are
//! fixed at 2^16. Output is MSB-first. Finishing emits the shortest bit
//! string whose zero-extension lies in the final interval, so the decoder
//! treats every bit past the end of the payload as 0.
//!
//! When every table halves the interval exactly, the payload is the branch
//! indices verbatim.

use crate::selector::KeptSet;
use crate::{Error, Result};

pub const PRECISION: u32 = 32;
/// Sum of the frequencies of every table.
pub const TABLE_TOTAL: u32 = 1 << 16;

const WHOLE: u64 = 1 << PRECISION;
const HALF: u64 = WHOLE / 2;
const QUARTER: u64 = WHOLE / 4;
const THREE_QUARTERS: u64 = 3 * QUARTER;

/// Integer frequencies for the members of a kept set, in coding order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    members: Vec<u32>,
    freqs: Vec<u32>,
    cumulative: Vec<u32>,
}

/// Rounds a renormalized kept set onto a table of total [`TABLE_TOTAL`].
///
/// Largest-remainder rounding with a floor of 1 per member; remainder ties go
/// to the earlier member.
pub fn quantize(kept: &KeptSet) -> Result<FrequencyTable> {
    quantize_probs(kept.members().to_vec(), kept.renorm().probs())
}

pub(crate) fn quantize_probs(members: Vec<u32>, probs: &[f64]) -> Result<FrequencyTable> {
    let n = members.len();
    if n > TABLE_TOTAL as usize {
        return Err(Error::TooManyMembers(n));
    }
    if n == 0 || probs.len() != n {
        return Err(Error::InvalidDistribution(
            "a frequency table needs at least one member".into(),
        ));
    }
    let total = TABLE_TOTAL as i64;
    let raw: Vec<f64> = probs.iter().map(|p| p * TABLE_TOTAL as f64).collect();
    let mut freqs: Vec<i64> = raw.iter().map(|r| (r.floor() as i64).max(1)).collect();
    let mut sum: i64 = freqs.iter().sum();

    if sum < total {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ra = raw[a] - raw[a].floor();
            let rb = raw[b] - raw[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take((total - sum) as usize) {
            freqs[i] += 1;
        }
        sum = total;
    }
    // The floor of 1 can overshoot; take the excess from the largest entries.
    while sum > total {
        let i = (0..n).max_by(|&a, &b| freqs[a].cmp(&freqs[b]).then(b.cmp(&a))).unwrap();
        let cut = (sum - total).min(freqs[i] - 1);
        freqs[i] -= cut;
        sum -= cut;
    }

    let freqs: Vec<u32> = freqs.into_iter().map(|f| f as u32).collect();
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut acc = 0u32;
    cumulative.push(0);
    for &f in &freqs {
        acc += f;
        cumulative.push(acc);
    }
    debug_assert_eq!(acc, TABLE_TOTAL);
    Ok(FrequencyTable {
        members,
        freqs,
        cumulative,
    })
}

impl FrequencyTable {
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freqs
    }

    /// Prefix sums, one longer than `members`.
    pub fn cumulative(&self) -> &[u32] {
        &self.cumulative
    }

    pub fn position(&self, sym: u32) -> Option<usize> {
        self.members.iter().position(|&m| m == sym)
    }

    fn bounds(&self, index: usize) -> (u64, u64) {
        (
            self.cumulative[index] as u64,
            self.cumulative[index + 1] as u64,
        )
    }

    /// Member whose cumulative range contains `target`.
    fn lookup(&self, target: u64) -> usize {
        self.cumulative[1..].partition_point(|&c| c as u64 <= target)
    }
}

/// MSB-first bit buffer that remembers where its last 1 bit is.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct BitSink {
    bytes: Vec<u8>,
    len: u64,
    significant: u64,
}

impl BitSink {
    fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
            self.significant = self.len + 1;
        }
        self.len += 1;
    }
}

/// Encoded payload and the exact bit count before zero padding.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Payload {
    pub bytes: Vec<u8>,
    pub bit_count: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitSink,
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            high: WHOLE - 1,
            pending: 0,
            out: BitSink::default(),
        }
    }

    /// Interval width `high - low + 1`.
    pub fn width(&self) -> u64 {
        self.high - self.low + 1
    }

    pub fn low(&self) -> u64 {
        self.low
    }

    /// Bits settled so far, pending underflow bits included.
    pub fn settled_bits(&self) -> u64 {
        self.out.len + self.pending
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub fn encode(&mut self, table: &FrequencyTable, sym: u32) -> Result<()> {
        let index = table.position(sym).ok_or(Error::SymbolNotKept(sym))?;
        let (lo, hi) = table.bounds(index);
        let range = self.width();
        let total = TABLE_TOTAL as u64;
        self.high = self.low + range * hi / total - 1;
        self.low += range * lo / total;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
        Ok(())
    }

    /// Emits the shortest expansion inside the final interval.
    ///
    /// After renormalization `low < 1/2 <= high` in window coordinates, and
    /// pending underflow steps fix the midpoint, so a single `1` bit always
    /// suffices; no bit at all is needed when the interval already starts at
    /// zero. Trailing zeros are dropped since the decoder pads with zeros.
    pub fn finish(mut self) -> Payload {
        if self.pending > 0 || self.low > 0 {
            self.emit(true);
        }
        let mut sink = self.out;
        let keep = sink.significant.div_ceil(8) as usize;
        sink.bytes.truncate(keep);
        Payload {
            bytes: sink.bytes,
            bit_count: sink.significant,
        }
    }
}

/// Complete decoder state; restoring one replays decoding exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    low: u64,
    high: u64,
    value: u64,
    read: u64,
    settled: u64,
}

impl Checkpoint {
    pub fn settled_bits(&self) -> u64 {
        self.settled
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    payload: &'a [u8],
    state: Checkpoint,
}

impl<'a> Decoder<'a> {
    pub fn new(payload: &'a [u8]) -> Self {
        let mut dec = Self {
            payload,
            state: Checkpoint {
                low: 0,
                high: WHOLE - 1,
                value: 0,
                read: 0,
                settled: 0,
            },
        };
        for _ in 0..PRECISION {
            let bit = dec.next_bit();
            dec.state.value = (dec.state.value << 1) | bit;
        }
        dec
    }

    /// Reads the next payload bit, 0 past the end.
    fn next_bit(&mut self) -> u64 {
        let i = self.state.read;
        self.state.read += 1;
        self.payload
            .get((i / 8) as usize)
            .map_or(0, |b| (b >> (7 - i % 8)) as u64 & 1)
    }

    /// Bits settled so far; mirrors [`Encoder::settled_bits`].
    pub fn settled_bits(&self) -> u64 {
        self.state.settled
    }

    pub fn decode(&mut self, table: &FrequencyTable) -> u32 {
        let Checkpoint {
            mut low,
            mut high,
            mut value,
            ..
        } = self.state;
        let range = high - low + 1;
        let total = TABLE_TOTAL as u64;
        let target = ((value - low + 1) * total - 1) / range;
        let index = table.lookup(target);
        let (lo, hi) = table.bounds(index);

        high = low + range * hi / total - 1;
        low += range * lo / total;
        loop {
            if high < HALF {
            } else if low >= HALF {
                low -= HALF;
                high -= HALF;
                value -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                low -= QUARTER;
                high -= QUARTER;
                value -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
            value = (value << 1) | self.next_bit();
            self.state.settled += 1;
        }
        self.state.low = low;
        self.state.high = high;
        self.state.value = value;
        table.members[index]
    }

    pub fn checkpoint(&self) -> Checkpoint {
        self.state
    }

    pub fn restore(&mut self, checkpoint: Checkpoint) {
        self.state = checkpoint;
    }
}
