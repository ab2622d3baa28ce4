//! Drivers that turn raw data into quality universes.

pub mod itemsets;
pub mod pac;

pub use itemsets::{
    basket_neighbor, basket_neighbor_pair, binomial, itemset_quality, load_baskets, BasketDataset,
    CombinationIndex, ItemsetUniverse, UniverseSource,
};
pub use pac::{
    derived_constant, empirical_quality, shell_count, shell_decomposition, t_star, HypothesisClass,
    ShellDecomposition, SyntheticClassSpec, TStar, DEFAULT_C0, DEFAULT_DELTA0,
};
