//! Adversaries: sandwich attackers, arbitrageurs, exploit sequences and the
//! informed insider of the ideal benchmark.

pub mod arbitrage;
pub mod exploit;
pub mod insider;
pub mod sandwich;

pub use arbitrage::{best_two_pool_arbitrage, no_arbitrage_certificate, ArbLeg, ArbitrageCycle, CertificateReport};
pub use exploit::{replay_exploit_sequence, ExploitReport, PoolDelta};
pub use insider::{insider_optimal_trades, InsiderPlan};
pub use sandwich::{
    cpmm_in_for_out, sandwich_profit_beta, sandwich_profit_cpmm_closed, sandwich_profit_gmm_closed, sandwich_profit_nsplit,
    simulate_sandwich, SandwichReport, SandwichSpec,
};
