use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-player ordered price lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    prices: Vec<Vec<f64>>,
}

impl PriceGrid {
    pub fn new(prices: Vec<Vec<f64>>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidSpec("price grid has no players".into()));
        }
        for (i, list) in prices.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidSpec(format!("player {i} has an empty price list")));
            }
            if list.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidSpec(format!("player {i} has a non-finite price")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSpec(format!(
                    "player {i} prices are not strictly increasing"
                )));
            }
        }
        Ok(Self { prices })
    }

    /// `count` evenly spaced prices from `lo` to `hi` (inclusive) for every player.
    ///
    /// Price `k` is `lo + k * (hi - lo) / (count - 1)`; every consumer sees the
    /// exact same doubles, so ties can be tested with `==`.
    pub fn uniform(players: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![Self::evenly_spaced(lo, hi, count)?; players])
    }

    pub fn evenly_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidSpec("grid count must be positive".into()));
        }
        if count > 1 && !(hi > lo) {
            return Err(Error::InvalidSpec(format!("grid range [{lo}, {hi}] is empty")));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        Ok((0..count).map(|k| lo + k as f64 * step).collect())
    }

    pub fn players(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self, player: usize) -> &[f64] {
        &self.prices[player]
    }

    pub fn all(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn price(&self, player: usize, index: usize) -> f64 {
        self.prices[player][index]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.prices.iter().map(Vec::len).collect()
    }

    /// Index of an exact grid value.
    pub fn index_of(&self, player: usize, price: f64) -> Option<usize> {
        self.prices[player].iter().position(|&p| p == price)
    }

    pub fn is_symmetric(&self) -> bool {
        self.prices.windows(2).all(|w| w[0] == w[1])
    }

    pub fn lo(&self, player: usize) -> f64 {
        self.prices[player][0]
    }

    pub fn hi(&self, player: usize) -> f64 {
        *self.prices[player].last().expect("nonempty by construction")
    }
}
