//! Reverse auction with (n+1)-th price payments.
//!
//! Clients are ranked by quality per unit of bid. When the top `n` clients
//! win, every winner is paid at the price ratio of the first loser, scaled
//! by its own quality: `r_i = (b_{n+1} / q_{n+1}) * q_i`. That ratio is at
//! least every winner's own `b_i / q_i`, so payments never undercut bids.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One client's bid and quality score for a single round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientQuote {
    pub client_id: u32,
    pub bid: f64,
    pub quality: f64,
}

impl ClientQuote {
    pub fn new(client_id: u32, bid: f64, quality: f64) -> Self {
        Self { client_id, bid, quality }
    }

    /// Quality per unit of bid; the ranking key.
    pub fn value_ratio(&self) -> f64 {
        self.quality / self.bid
    }

    /// Price per unit of quality this client asks for.
    pub fn price_ratio(&self) -> f64 {
        self.bid / self.quality
    }

    fn is_valid(&self) -> bool {
        self.bid.is_finite() && self.quality.is_finite() && self.bid > 0.0 && self.quality > 0.0
    }
}

/// Quotes sorted by non-increasing quality/bid, ties by ascending client id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedQuotes(Vec<ClientQuote>);

impl RankedQuotes {
    pub fn as_slice(&self) -> &[ClientQuote] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClientQuote> {
        self.0.iter()
    }

    fn check_count(&self, n: usize) -> Result<()> {
        if n == 0 || n >= self.0.len() {
            return Err(Error::CountOutOfRange { n, quotes: self.0.len() });
        }
        Ok(())
    }

    // Shared by `budget_for_count` and `run_auction` so that the total spend
    // is bit-identical between the two.
    fn payments(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let price = self.0[n].price_ratio();
        self.0[..n].iter().map(move |q| price * q.quality)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionOutcome {
    pub winner_ids: Vec<u32>,
    pub payments: Vec<f64>,
    pub total_spend: f64,
    pub n: usize,
}

fn rank_order(a: &ClientQuote, b: &ClientQuote) -> Ordering {
    b.value_ratio()
        .total_cmp(&a.value_ratio())
        .then_with(|| a.client_id.cmp(&b.client_id))
}

pub fn rank_clients(quotes: &[ClientQuote]) -> Result<RankedQuotes> {
    if quotes.is_empty() {
        return Err(Error::NoQuotes);
    }
    if let Some(bad) = quotes.iter().find(|q| !q.is_valid()) {
        return Err(Error::InvalidQuote {
            client_id: bad.client_id,
            bid: bad.bid,
            quality: bad.quality,
        });
    }
    let mut sorted = quotes.to_vec();
    sorted.sort_by(rank_order);
    Ok(RankedQuotes(sorted))
}

/// Minimum spend `B_t(n)` needed to recruit the top `n` ranked clients.
pub fn budget_for_count(ranked: &RankedQuotes, n: usize) -> Result<f64> {
    ranked.check_count(n)?;
    Ok(ranked.payments(n).sum())
}

/// Largest affordable winner count under `budget_limit`, or 0 when even a
/// single winner costs more than the limit.
///
/// `budget_for_count` is non-decreasing in `n` (the price ratio only grows
/// down the ranking and every extra winner adds a positive payment), so the
/// affordable counts form a prefix of `1..N`.
pub fn winners_for_budget(ranked: &RankedQuotes, budget_limit: f64) -> usize {
    if ranked.len() < 2 {
        return 0;
    }
    let affordable = |n: usize| ranked.payments(n).sum::<f64>() <= budget_limit;
    let (mut lo, mut hi) = (1usize, ranked.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if affordable(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo - 1
}

pub fn run_auction(quotes: &[ClientQuote], n: usize) -> Result<AuctionOutcome> {
    let ranked = rank_clients(quotes)?;
    settle(&ranked, n)
}

/// Same as [`run_auction`] for quotes that are already ranked.
pub fn settle(ranked: &RankedQuotes, n: usize) -> Result<AuctionOutcome> {
    ranked.check_count(n)?;
    let payments: Vec<f64> = ranked.payments(n).collect();
    let total_spend = payments.iter().sum();
    Ok(AuctionOutcome {
        winner_ids: ranked.0[..n].iter().map(|q| q.client_id).collect(),
        payments,
        total_spend,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_quality(bids: &[f64]) -> Vec<ClientQuote> {
        bids.iter()
            .enumerate()
            .map(|(i, &b)| ClientQuote::new(i as u32, b, 1.0))
            .collect()
    }

    #[test]
    fn equal_quality_ranks_by_ascending_bid() {
        let ranked = rank_clients(&unit_quality(&[0.7, 0.6, 0.9])).unwrap();
        let ids: Vec<u32> = ranked.iter().map(|q| q.client_id).collect();
        assert_eq!(ids, vec![1, 0, 2]);
    }

    #[test]
    fn singleton_ranks_alone() {
        let q = [ClientQuote::new(9, 1.2, 0.4)];
        assert_eq!(rank_clients(&q).unwrap().as_slice(), &q);
    }

    #[test]
    fn ratio_ordering_with_quality() {
        // 2.0/1.0 = 2.0 beats 1.0/0.6 = 1.667
        let q = [ClientQuote::new(0, 1.0, 2.0), ClientQuote::new(1, 0.6, 1.0)];
        let ranked = rank_clients(&q).unwrap();
        assert_eq!(ranked.as_slice()[0].client_id, 0);
    }

    #[test]
    fn ties_break_by_client_id() {
        let q = [
            ClientQuote::new(5, 1.0, 1.0),
            ClientQuote::new(2, 2.0, 2.0),
            ClientQuote::new(3, 0.5, 0.5),
        ];
        let ids: Vec<u32> = rank_clients(&q).unwrap().iter().map(|q| q.client_id).collect();
        assert_eq!(ids, vec![2, 3, 5]);
    }

    #[test]
    fn rejects_empty_and_invalid() {
        assert!(matches!(rank_clients(&[]), Err(Error::NoQuotes)));
        let bad = [ClientQuote::new(0, 0.0, 1.0)];
        assert!(matches!(rank_clients(&bad), Err(Error::InvalidQuote { .. })));
        let bad = [ClientQuote::new(0, 1.0, -1.0)];
        assert!(matches!(rank_clients(&bad), Err(Error::InvalidQuote { .. })));
    }

    #[test]
    fn budget_for_count_examples() {
        let ranked = rank_clients(&unit_quality(&[0.6, 0.7, 0.8, 0.9, 1.0])).unwrap();
        assert!((budget_for_count(&ranked, 3).unwrap() - 2.7).abs() < 1e-12);

        let ranked = rank_clients(&unit_quality(&[0.5, 1.5])).unwrap();
        assert_eq!(budget_for_count(&ranked, 1).unwrap(), 1.5);

        let q = [
            ClientQuote::new(0, 0.5, 2.0),
            ClientQuote::new(1, 0.6, 1.0),
            ClientQuote::new(2, 1.0, 1.0),
        ];
        let ranked = rank_clients(&q).unwrap();
        assert!((budget_for_count(&ranked, 2).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_for_count_range() {
        let ranked = rank_clients(&unit_quality(&[0.5, 1.5])).unwrap();
        assert!(matches!(budget_for_count(&ranked, 0), Err(Error::CountOutOfRange { .. })));
        assert!(matches!(budget_for_count(&ranked, 2), Err(Error::CountOutOfRange { .. })));
    }

    #[test]
    fn winners_for_budget_examples() {
        let ranked = rank_clients(&unit_quality(&[0.6, 0.7, 0.8, 0.9, 1.0])).unwrap();
        assert_eq!(winners_for_budget(&ranked, 2.5), 2);
        assert_eq!(winners_for_budget(&ranked, 1e9), 4);
        let ranked = rank_clients(&unit_quality(&[0.5, 1.5])).unwrap();
        assert_eq!(winners_for_budget(&ranked, 0.1), 0);
    }

    #[test]
    fn run_auction_pays_second_price() {
        let out = run_auction(&unit_quality(&[0.6, 0.7, 0.8]), 2).unwrap();
        assert_eq!(out.payments, vec![0.8, 0.8]);
        assert!((out.total_spend - 1.6).abs() < 1e-12);
        assert_eq!(out.winner_ids, vec![0, 1]);

        let out = run_auction(&unit_quality(&[0.5, 1.5]), 1).unwrap();
        assert_eq!(out.payments, vec![1.5]);
    }

    #[test]
    fn settle_matches_budget_for_count() {
        let ranked = rank_clients(&unit_quality(&[1.1, 0.55, 0.93, 1.41, 0.77])).unwrap();
        for n in 1..ranked.len() {
            let out = settle(&ranked, n).unwrap();
            assert_eq!(out.total_spend, budget_for_count(&ranked, n).unwrap());
            assert_eq!(out.payments.len(), n);
        }
    }
}
