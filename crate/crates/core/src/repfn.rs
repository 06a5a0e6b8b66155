//! Exact representation counts `R_A(n) = #{(a, a') in A x A : a + a' = n}`.
//!
//! Pairs are ordered: `(a, a')` and `(a', a)` are both counted when `a != a'`,
//! so `R_A(n)` is odd exactly when `n` is even and `n / 2` lies in `A`.
//!
//! Truncation contract: a set stored up to `n_max` produces the same
//! `R_A(n)` for every `n <= n_max` as any extension of it beyond `n_max`,
//! because only elements `<= n` contribute to `R_A(n)`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::transform::self_convolve_counts;

const WORD: usize = 64;

/// Largest `n_max` accepted by the fft engine.
pub const FFT_MAX_N: usize = 1 << 26;

/// A finite set `A` of `{0, ..., n_max}` packed into 64-bit words, bit `k`
/// of the stream being `chi_A(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerSet {
    n_max: usize,
    words: Vec<u64>,
}

fn word_count(n_max: usize) -> usize {
    n_max / WORD + 1
}

impl IntegerSet {
    pub fn empty(n_max: usize) -> Self {
        Self {
            n_max,
            words: vec![0; word_count(n_max)],
        }
    }

    /// `{0, ..., n_max}`.
    pub fn full(n_max: usize) -> Self {
        let mut set = Self::empty(n_max);
        set.words.iter_mut().for_each(|w| *w = u64::MAX);
        set.clear_tail();
        set
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(n_max: usize, elements: I) -> Result<Self> {
        let mut set = Self::empty(n_max);
        for a in elements {
            set.insert(a)?;
        }
        Ok(set)
    }

    /// Builds a set from packed words; bits above `n_max` must be clear.
    pub fn from_words(n_max: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != word_count(n_max) {
            return Err(Error::format(format!(
                "expected {} words for n_max = {n_max}, got {}",
                word_count(n_max),
                words.len()
            )));
        }
        let set = Self { n_max, words };
        let mut trimmed = set.clone();
        trimmed.clear_tail();
        if trimmed != set {
            return Err(Error::format(format!("set has an element above n_max = {n_max}")));
        }
        Ok(set)
    }

    fn clear_tail(&mut self) {
        let used = (self.n_max + 1) % WORD;
        if used != 0 {
            *self.words.last_mut().expect("at least one word") &= (1u64 << used) - 1;
        }
    }

    pub fn insert(&mut self, a: usize) -> Result<()> {
        if a > self.n_max {
            return Err(Error::param(format!("element {a} exceeds n_max = {}", self.n_max)));
        }
        self.words[a / WORD] |= 1 << (a % WORD);
        Ok(())
    }

    pub fn contains(&self, a: usize) -> bool {
        a <= self.n_max && self.words[a / WORD] >> (a % WORD) & 1 == 1
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Cardinality (popcount of the bit vector).
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Elements in strictly increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * WORD + bit)
            })
        })
    }

    /// Restriction to `{0, ..., n_max}` for a smaller `n_max`.
    pub fn truncate(&self, n_max: usize) -> Self {
        if n_max >= self.n_max {
            return self.clone();
        }
        let mut set = Self {
            n_max,
            words: self.words[..word_count(n_max)].to_vec(),
        };
        set.clear_tail();
        set
    }

    /// Membership string `chi_A(0) chi_A(1) ... chi_A(n_max)` as '0'/'1'.
    pub fn membership_string(&self) -> String {
        (0..=self.n_max)
            .map(|k| if self.contains(k) { '1' } else { '0' })
            .collect()
    }
}

/// `R_A(0), ..., R_A(n_max)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepProfile {
    r: Vec<u64>,
}

impl RepProfile {
    pub fn from_values(r: Vec<u64>) -> Self {
        Self { r }
    }

    pub fn n_max(&self) -> usize {
        self.r.len() - 1
    }

    pub fn values(&self) -> &[u64] {
        &self.r
    }

    pub fn get(&self, n: usize) -> u64 {
        self.r[n]
    }

    /// Checks `R(n) <= n + 1` and the parity law against `set`.
    pub fn satisfies_invariants(&self, set: &IntegerSet) -> bool {
        self.r.iter().enumerate().all(|(n, &r)| {
            let odd_expected = n % 2 == 0 && set.contains(n / 2);
            r <= n as u64 + 1 && (r % 2 == 1) == odd_expected
        })
    }
}

/// `S(N) = sum_{n<=N} R_A(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulativeProfile {
    s: Vec<u64>,
}

impl CumulativeProfile {
    pub fn n_max(&self) -> usize {
        self.s.len() - 1
    }

    pub fn values(&self) -> &[u64] {
        &self.s
    }

    pub fn get(&self, big_n: usize) -> u64 {
        self.s[big_n]
    }
}

/// Double loop over ordered pairs of elements, `O(|A|^2)`.
pub fn repfn_naive(set: &IntegerSet) -> RepProfile {
    let n_max = set.n_max();
    let elems: Vec<usize> = set.iter().collect();
    let mut r = vec![0u64; n_max + 1];
    for (i, &a) in elems.iter().enumerate() {
        if 2 * a <= n_max {
            r[2 * a] += 1;
        }
        for &b in &elems[i + 1..] {
            let n = a + b;
            if n > n_max {
                break;
            }
            r[n] += 2;
        }
    }
    RepProfile { r }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Wordwise AND/popcount against the reversed set, `O(n_max^2 / 64)`.
    Bitset,
    /// Float FFT squaring with rounding and an exactness guard.
    Fft,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitset" => Ok(Engine::Bitset),
            "fft" => Ok(Engine::Fft),
            other => Err(Error::param(format!("unknown engine '{other}'"))),
        }
    }
}

/// Same output as [`repfn_naive`], computed with the chosen engine.
pub fn repfn_fast(set: &IntegerSet, engine: Engine) -> Result<RepProfile> {
    match engine {
        Engine::Bitset => Ok(repfn_bitset(set)),
        Engine::Fft => repfn_fft(set),
    }
}

/// The fft engine, falling back to the bitset sweep when the set is too large
/// for it or the exactness guard trips.
pub fn repfn_auto(set: &IntegerSet) -> RepProfile {
    repfn_fft(set).unwrap_or_else(|_| repfn_bitset(set))
}

fn repfn_fft(set: &IntegerSet) -> Result<RepProfile> {
    let n_max = set.n_max();
    if n_max > FFT_MAX_N {
        return Err(Error::param(format!(
            "fft engine supports n_max <= {FFT_MAX_N}, got {n_max}"
        )));
    }
    let bits = (0..=n_max).map(|k| u64::from(set.contains(k)));
    let r = self_convolve_counts(bits, n_max + 1, n_max + 1)?;
    Ok(RepProfile { r })
}

/// Popcount of `a[k] & b[k + shift]` over `k < len`, with `b` read as zero
/// past its end.
fn and_popcount_shifted(a: &[u64], b: &[u64], shift: usize, len: usize) -> u64 {
    if len == 0 {
        return 0;
    }
    let full = len / WORD;
    let tail = len % WORD;
    let q = shift / WORD;
    let r = shift % WORD;
    let word_at = |i: usize| -> u64 {
        let lo = b.get(q + i).copied().unwrap_or(0);
        if r == 0 {
            lo
        } else {
            let hi = b.get(q + i + 1).copied().unwrap_or(0);
            (lo >> r) | (hi << (WORD - r))
        }
    };
    let mut count = 0u64;
    if r == 0 && q + full <= b.len() {
        for (x, y) in a[..full].iter().zip(&b[q..q + full]) {
            count += (x & y).count_ones() as u64;
        }
    } else if q + full < b.len() {
        let bs = &b[q..q + full + 1];
        for (i, x) in a[..full].iter().enumerate() {
            let y = (bs[i] >> r) | (bs[i + 1] << (WORD - r));
            count += (x & y).count_ones() as u64;
        }
    } else {
        for (i, x) in a[..full].iter().enumerate() {
            count += (x & word_at(i)).count_ones() as u64;
        }
    }
    if tail != 0 {
        let mask = (1u64 << tail) - 1;
        count += (a[full] & word_at(full) & mask).count_ones() as u64;
    }
    count
}

const BITSET_CHUNK: usize = 1024;

fn repfn_bitset(set: &IntegerSet) -> RepProfile {
    let n_max = set.n_max();
    // rev bit j = chi_A(n_max - j), padded by one word.
    let mut rev = vec![0u64; word_count(n_max) + 1];
    for a in set.iter() {
        let j = n_max - a;
        rev[j / WORD] |= 1 << (j % WORD);
    }
    let a = set.words();
    let mut r = vec![0u64; n_max + 1];
    // chi(n - k) = rev bit (n_max - n + k); count k < n - k and double.
    r.par_chunks_mut(BITSET_CHUNK).enumerate().for_each(|(chunk, out)| {
        for (offset, slot) in out.iter_mut().enumerate() {
            let n = chunk * BITSET_CHUNK + offset;
            let half = (n + 1) / 2;
            let below = and_popcount_shifted(a, &rev, n_max - n, half);
            let middle = u64::from(n % 2 == 0 && set.contains(n / 2));
            *slot = 2 * below + middle;
        }
    });
    RepProfile { r }
}

/// Exact prefix sums of `R`; overflow is an error, never a wraparound.
pub fn cumulative_rep(profile: &RepProfile) -> Result<CumulativeProfile> {
    let mut acc = 0u64;
    let mut s = Vec::with_capacity(profile.r.len());
    for &r in &profile.r {
        acc = acc
            .checked_add(r)
            .ok_or(Error::Overflow("cumulative representation count"))?;
        s.push(acc);
    }
    Ok(CumulativeProfile { s })
}

/// Writes `n,R,S` rows.
pub fn write_profile_csv<W: Write>(mut out: W, profile: &RepProfile, cumulative: &CumulativeProfile) -> Result<()> {
    writeln!(out, "n,R,S")?;
    for (n, (r, s)) in profile.values().iter().zip(cumulative.values()).enumerate() {
        writeln!(out, "{n},{r},{s}")?;
    }
    Ok(())
}
