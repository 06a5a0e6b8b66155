//! The two randomized constructions and the block-diagonal decomposition of
//! the cumulative count used to analyse the first one.
//!
//! * Block sampler: for every block `[nq, nq + q - 1]` pick a uniformly random
//!   `p`-subset, independently across blocks. Every integer is then in `A`
//!   with probability `p / q` and the cumulative count tracks
//!   `0.5 (p/q)^2 N^2 + 1.5 (p/q)^2 N`.
//! * Bernoulli set: each `n` joins `A` independently with probability `b_n`.
//!
//! Both realize finite truncations; see the truncation contract in
//! [`crate::repfn`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repfn::IntegerSet;
use crate::rng::StreamRng;
use crate::transform::self_convolve_counts;
use crate::weights::WeightSequence;

/// Indices per independent stream of the Bernoulli sampler (word aligned).
pub const BERNOULLI_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSamplerParams {
    pub p: u64,
    pub q: u64,
    pub n_blocks: u64,
    pub seed: u64,
}

impl BlockSamplerParams {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p >= self.q {
            return Err(Error::param(format!(
                "block sampler needs 0 < p < q, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if self.n_blocks == 0 {
            return Err(Error::param("block sampler needs at least one block"));
        }
        Ok(())
    }

    /// `n_blocks * q - 1`.
    pub fn n_max(&self) -> Result<usize> {
        self.n_blocks
            .checked_mul(self.q)
            .and_then(|len| usize::try_from(len - 1).ok())
            .ok_or_else(|| Error::param("n_blocks * q overflows"))
    }
}

/// `A = union of X_n`, `X_n` a uniform `p`-subset of `{nq, ..., nq + q - 1}`.
///
/// Block `n` draws from its own stream (substream `n` of the seed) and
/// selects its offsets with a partial Fisher–Yates shuffle: for
/// `i = 0..p`, swap position `i` with `i + below(q - i)` in the identity
/// arrangement `0..q`; the first `p` positions are the chosen offsets.
pub fn sample_block_set(params: &BlockSamplerParams) -> Result<IntegerSet> {
    params.validate()?;
    let n_max = params.n_max()?;
    let q = params.q as usize;
    let p = params.p as usize;
    let n_blocks = params.n_blocks as usize;
    let mut words = vec![0u64; n_max / 64 + 1];

    // 64 consecutive blocks cover exactly q words.
    words.par_chunks_mut(q).enumerate().for_each(|(chunk, out)| {
        let mut offsets: Vec<usize> = (0..q).collect();
        let first = chunk * 64;
        for block in first..(first + 64).min(n_blocks) {
            offsets.iter_mut().enumerate().for_each(|(i, o)| *o = i);
            let mut rng = StreamRng::substream(params.seed, block as u64);
            for i in 0..p {
                let j = i + rng.below((q - i) as u64) as usize;
                offsets.swap(i, j);
            }
            let base = (block - first) * q;
            for &off in &offsets[..p] {
                let bit = base + off;
                out[bit / 64] |= 1 << (bit % 64);
            }
        }
    });
    IntegerSet::from_words(n_max, words)
}

/// Independent inclusions: `n` is kept when `u_n < b_n`, `u_n` uniform in
/// `[0, 1)`. Indices `[c * BERNOULLI_CHUNK, (c + 1) * BERNOULLI_CHUNK)` use
/// substream `c` and draw one real per index in increasing order.
pub fn sample_bernoulli_set(weights: &WeightSequence, n_max: usize, seed: u64) -> Result<IntegerSet> {
    let b = weights.weights_upto(n_max)?;
    if let Some((n, v)) = b.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::param(format!("b_{n} = {v} is not a probability")));
    }
    let mut words = vec![0u64; n_max / 64 + 1];
    words
        .par_chunks_mut(BERNOULLI_CHUNK / 64)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = StreamRng::substream(seed, chunk as u64);
            let start = chunk * BERNOULLI_CHUNK;
            let end = (start + BERNOULLI_CHUNK).min(n_max + 1);
            for n in start..end {
                if rng.unit() < b[n] {
                    let bit = n - start;
                    out[bit / 64] |= 1 << (bit % 64);
                }
            }
        });
    IntegerSet::from_words(n_max, words)
}

/// Block-diagonal decomposition of `sum_{n<=N} R_A(n)`.
///
/// With `K = floor(N / q)` and `Y_{u,v}` the number of ordered pairs
/// `(a, a')`, `a` in block `u`, `a'` in block `v`, `a + a' <= N`:
/// every pair with `u + v <= K - 2` is automatically under the horizon, no
/// pair with `u + v > K` is, and so the cumulative count splits into the
/// interior diagonals plus the two boundary diagonals `K - 1` and `K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalCounts {
    pub horizon: usize,
    pub q: usize,
    /// `diagonals[M] = sum_m Y_{m, M - m}` for `M = 0..=K`.
    pub diagonals: Vec<u64>,
    /// Sum of diagonals `0..=K-2`.
    pub interior_total: u64,
    /// Diagonal `K - 1` (zero when `K = 0`).
    pub boundary_lower: u64,
    /// Diagonal `K`.
    pub boundary_upper: u64,
    /// Ordered pairs with `a + a' <= N`, counted directly from the elements.
    pub pair_total: u64,
}

impl DiagonalCounts {
    pub fn parts_sum(&self) -> u64 {
        self.interior_total + self.boundary_lower + self.boundary_upper
    }

    pub fn blocks_on_horizon(&self) -> usize {
        self.horizon / self.q
    }
}

fn block_elements(set: &IntegerSet, q: usize, horizon: usize, u: usize) -> Vec<usize> {
    let lo = u * q;
    let hi = (lo + q - 1).min(horizon);
    (lo..=hi).filter(|&k| set.contains(k)).collect()
}

/// Ordered pairs `(a, a')` with `a` in `xs`, `a'` in `ys`, `a + a' <= limit`.
fn pairs_within(xs: &[usize], ys: &[usize], limit: usize) -> u64 {
    let mut j = ys.len();
    let mut count = 0u64;
    for &x in xs {
        while j > 0 && x + ys[j - 1] > limit {
            j -= 1;
        }
        count += j as u64;
    }
    count
}

/// `Y_{u,v}`.
pub fn block_pair_count(set: &IntegerSet, q: usize, horizon: usize, u: usize, v: usize) -> u64 {
    let xs = block_elements(set, q, horizon, u);
    let ys = block_elements(set, q, horizon, v);
    pairs_within(&xs, &ys, horizon)
}

pub fn block_diagonal_counts(set: &IntegerSet, q: usize, horizon: usize) -> Result<DiagonalCounts> {
    if q == 0 {
        return Err(Error::param("block length q must be positive"));
    }
    if horizon > set.n_max() {
        return Err(Error::OutOfRange {
            index: horizon,
            cap: set.n_max(),
        });
    }
    let k = horizon / q;

    let mut diagonals = vec![0u64; k + 1];
    if k >= 2 {
        let interior_blocks = k - 1;
        let counts = (0..interior_blocks).map(|u| {
            let lo = u * q;
            (lo..lo + q).filter(|&x| set.contains(x)).count() as u64
        });
        let conv = self_convolve_counts(counts, interior_blocks, interior_blocks)?;
        diagonals[..interior_blocks].copy_from_slice(&conv);
    }
    let blocks: Vec<Vec<usize>> = (0..=k).map(|u| block_elements(set, q, horizon, u)).collect();
    for m_diag in k.saturating_sub(1)..=k {
        diagonals[m_diag] = (0..=m_diag)
            .map(|m| pairs_within(&blocks[m], &blocks[m_diag - m], horizon))
            .sum();
    }
    let interior_total = diagonals[..k.saturating_sub(1)].iter().sum();
    let boundary_lower = if k >= 1 { diagonals[k - 1] } else { 0 };
    let boundary_upper = diagonals[k];

    let elems: Vec<usize> = set.iter().take_while(|&a| a <= horizon).collect();
    let pair_total = pairs_within(&elems, &elems, horizon);

    let counts = DiagonalCounts {
        horizon,
        q,
        diagonals,
        interior_total,
        boundary_lower,
        boundary_upper,
        pair_total,
    };
    assert_eq!(
        counts.parts_sum(),
        counts.pair_total,
        "block-diagonal parts must reconstruct the cumulative count"
    );
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repfn::{cumulative_rep, repfn_naive};

    fn params(p: u64, q: u64, n_blocks: u64, seed: u64) -> BlockSamplerParams {
        BlockSamplerParams { p, q, n_blocks, seed }
    }

    #[test]
    fn rejects_bad_block_params() {
        assert!(matches!(sample_block_set(&params(1, 1, 10, 0)), Err(Error::Param(_))));
        assert!(matches!(sample_block_set(&params(0, 3, 10, 0)), Err(Error::Param(_))));
        assert!(matches!(sample_block_set(&params(3, 2, 10, 0)), Err(Error::Param(_))));
        assert!(matches!(sample_block_set(&params(1, 2, 0, 0)), Err(Error::Param(_))));
    }

    #[test]
    fn exactly_p_per_block() {
        for seed in [0, 1, 99] {
            let set = sample_block_set(&params(2, 5, 1000, seed)).unwrap();
            assert_eq!(set.n_max(), 4999);
            assert_eq!(set.len(), 2000);
            for block in 0..1000 {
                let inside = (block * 5..block * 5 + 5).filter(|&k| set.contains(k)).count();
                assert_eq!(inside, 2);
            }
        }
    }

    #[test]
    fn block_sampler_is_deterministic() {
        let a = sample_block_set(&params(3, 70, 123, 5)).unwrap();
        let b = sample_block_set(&params(3, 70, 123, 5)).unwrap();
        let c = sample_block_set(&params(3, 70, 123, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bernoulli_extremes() {
        let full = sample_bernoulli_set(&WeightSequence::constant(1.0).unwrap(), 1000, 3).unwrap();
        assert_eq!(full, IntegerSet::full(1000));
        let none = sample_bernoulli_set(&WeightSequence::constant(0.0).unwrap(), 1000, 3).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn bernoulli_first_chunk_follows_single_stream() {
        let w = WeightSequence::constant(0.25).unwrap();
        let set = sample_bernoulli_set(&w, 500, 11).unwrap();
        let mut rng = StreamRng::substream(11, 0);
        for n in 0..=500 {
            assert_eq!(set.contains(n), rng.unit() < 0.5, "index {n}");
        }
    }

    #[test]
    fn bernoulli_rejects_short_table() {
        let w = WeightSequence::table(vec![0.5; 10]).unwrap();
        assert!(sample_bernoulli_set(&w, 10, 0).is_err());
    }

    #[test]
    fn diagonal_counts_of_empty_set() {
        let set = IntegerSet::empty(100);
        let d = block_diagonal_counts(&set, 3, 100).unwrap();
        assert!(d.diagonals.iter().all(|&x| x == 0));
        assert_eq!(d.parts_sum(), 0);
        assert_eq!(d.pair_total, 0);
    }

    #[test]
    fn diagonal_counts_match_cumulative() {
        let set = IntegerSet::from_elements(25, [0, 1, 4, 5, 7, 11, 12, 13, 19, 24]).unwrap();
        let s = cumulative_rep(&repfn_naive(&set)).unwrap();
        for horizon in 0..=25 {
            for q in 1..=7 {
                let d = block_diagonal_counts(&set, q, horizon).unwrap();
                assert_eq!(d.parts_sum(), s.get(horizon), "q={q} N={horizon}");
            }
        }
    }

    #[test]
    fn diagonal_counts_of_block_set() {
        let (p, q) = (2u64, 5u64);
        let set = sample_block_set(&params(p, q, 400, 17)).unwrap();
        let horizon = 1234;
        let d = block_diagonal_counts(&set, q as usize, horizon).unwrap();
        let k = (horizon / q as usize) as u64;
        assert_eq!(d.interior_total, p * p * (k - 1) * k / 2);
        for (m, &diag) in d.diagonals[..k as usize - 1].iter().enumerate() {
            assert_eq!(diag, (m as u64 + 1) * p * p);
        }
        for u in 0..=k as usize {
            assert!(block_pair_count(&set, q as usize, horizon, u, k as usize - u) <= p * p);
        }
    }

    #[test]
    fn diagonal_counts_range_check() {
        let set = IntegerSet::empty(10);
        assert!(block_diagonal_counts(&set, 3, 11).is_err());
        assert!(block_diagonal_counts(&set, 0, 5).is_err());
    }
}
