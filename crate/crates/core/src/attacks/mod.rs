//! Eavesdropper models acting on Bob's half of the source state.
//!
//! * [`mower`]: the block-scaling covariance map and its phase-insensitive
//!   channel interpretation.
//! * [`alternate`]: a loss-plus-phase-sensitive-noise channel with the same
//!   correlated variances as the block-scaling map.
//! * [`table`]: closed-form ratios of all eight correlated variances.
//! * [`search`]: numerical worst case over all single-mode Gaussian channels.

pub mod alternate;
pub mod channel;
pub mod mower;
mod nelder_mead;
pub mod search;
pub mod table;

pub use alternate::{alternate_epsilons, channel_from_alternate, AlternateAttack};
pub use channel::{apply_channel_bob, GaussianChannel};
pub use mower::{
    apply_mower, epsilon_from_xi, mower_channel, mower_eta_limit,
    mower_params_from_phase_insensitive, phase_insensitive_channel, scale_blocks,
    three_step_attack, MowerAttack, PhaseInsensitiveKind,
};
pub use nelder_mead::{minimize as nelder_mead, NelderMeadOptions, SimplexMinimum};
pub use search::{search_worst_attack, ObservedVariances, SearchOptions, SearchResult};
pub use table::delta_prime_table;
