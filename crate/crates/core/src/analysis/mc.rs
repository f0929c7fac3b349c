use rand::Rng;

use crate::dist::JointDistribution;
use crate::num::Moments;
use crate::rent::CrEstimate;
use crate::seed::{self, TAG_TEST};
use crate::{Error, Result, Threshold, ThresholdPolicy};

/// Draws per block. Blocks are the unit of parallel work; merging block
/// moments in block order makes the result independent of the worker count.
pub const MC_BLOCK: u64 = 1 << 16;

pub fn block_count(n: u64) -> u64 {
    n.div_ceil(MC_BLOCK)
}

/// Draw indices of block `b` out of `n` draws.
pub fn block_range(n: u64, b: u64) -> core::ops::Range<u64> {
    let start = b * MC_BLOCK;
    start..(start + MC_BLOCK).min(n)
}

/// Ratio moments over one block of test draws.
pub fn mc_block(policy: &ThresholdPolicy, dist: &JointDistribution, n: u64, seed: u64, block: u64) -> Moments {
    let stream = seed::derive_seed(seed, TAG_TEST);
    block_range(n, block)
        .map(|i| {
            let s = dist.draw_with_stream(stream, i);
            policy.ratio(&s.x, s.y)
        })
        .collect()
}

pub fn merge_blocks<I: IntoIterator<Item = Moments>>(blocks: I) -> Moments {
    blocks.into_iter().fold(Moments::default(), |acc, m| acc.merge(&m))
}

fn check_draws(n: u64, dist: &JointDistribution) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("Monte Carlo needs at least one draw"));
    }
    dist.family.validate()
}

/// Estimate `E[g(theta(x), y)]` from `n` fresh draws. Randomized policies
/// contribute their exact expectation over the threshold for each draw.
pub fn monte_carlo_cr(policy: &ThresholdPolicy, dist: &JointDistribution, n: u64, seed: u64) -> Result<CrEstimate> {
    check_draws(n, dist)?;
    let m = merge_blocks((0..block_count(n)).map(|b| mc_block(policy, dist, n, seed, b)));
    Ok(CrEstimate::from_moments(&m, seed))
}

/// The season that hurts a threshold the most: `theta` itself (ratio
/// `1 + 1/theta` below 1, `1 + theta` above). Randomized policies are hit at
/// the top of their support.
fn worst_season(t: Threshold<'_>) -> f64 {
    match t {
        Threshold::Fixed(theta) => theta,
        Threshold::Random(d) => d.support().1.max(1.0),
    }
}

/// One block of [`adversarial_noise_cr`].
pub fn adversarial_block(
    policy: &ThresholdPolicy,
    dist: &JointDistribution,
    p: f64,
    n: u64,
    seed: u64,
    block: u64,
) -> Moments {
    let stream = seed::derive_seed(seed, TAG_TEST);
    let coins = seed::derive_seed(stream, p.to_bits());
    block_range(n, block)
        .map(|i| {
            let s = dist.draw_with_stream(stream, i);
            let corrupt = seed::stream(coins, i).random::<f64>() < p;
            let y = if corrupt { worst_season(policy.threshold(&s.x)) } else { s.y };
            policy.ratio(&s.x, y)
        })
        .collect()
}

/// CR when an adversary who knows the policy replaces each season, with
/// probability `p`, by the one that maximizes the ratio at that `x`.
pub fn adversarial_noise_cr(
    policy: &ThresholdPolicy,
    dist: &JointDistribution,
    p: f64,
    n: u64,
    seed: u64,
) -> Result<CrEstimate> {
    check_draws(n, dist)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("corruption probability must lie in [0, 1]"));
    }
    let m = merge_blocks((0..block_count(n)).map(|b| adversarial_block(policy, dist, p, n, seed, b)));
    Ok(CrEstimate::from_moments(&m, seed))
}
