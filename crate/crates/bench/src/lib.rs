//! Shared fixtures for the dynamics benchmarks.

/// Bodies per branch of the five-branch trees (N = 1 + 5·b).
pub const BODIES_PER_BRANCH: [usize; 6] = [1, 4, 16, 32, 64, 99];

/// Order used for the sweep over tree size.
pub const SIZE_SWEEP_ORDER: usize = 3;

/// Bodies per branch used for the sweep over order (N = 101).
pub const ORDER_SWEEP_BODIES: usize = 20;

/// Orders of the sweep over order.
pub const ORDERS: [usize; 9] = [0, 1, 2, 3, 4, 5, 6, 7, 8];

/// Seed of the random benchmark inputs.
pub const SEED: u64 = 0;
