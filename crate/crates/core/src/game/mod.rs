//! Oligopoly specifications, demand models and finite normal-form games.

mod demand;
mod grid;
mod normal_form;
mod normalizer;

pub use demand::{BertrandSpec, DemandModel};
pub use grid::PriceGrid;
pub use normal_form::{
    build_game, build_game_with_budget, cell_count, increment, NormalFormGame, DEFAULT_CELL_BUDGET,
};
pub use normalizer::{reward_normalizer, Affine, RewardNormalizer};
