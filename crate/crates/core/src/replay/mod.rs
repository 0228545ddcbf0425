//! Counterfactual replay of logged sandwich attacks.
//!
//! A log lists swaps with their pre-trade pool reserves and a role flag
//! (normal, front-run, victim, back-run). Each attack is re-priced in closed
//! form under a scenario: plain constant product, GMM with external reserves
//! `beta` times the logged pool, or GMM with the pool split into `n` equal
//! pools. Attacks are evaluated independently from their logged snapshot.

mod counterfactual;
mod il;
mod log;
mod synthetic;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::AmmError;
use crate::num::Exact;

pub use counterfactual::{
    attack_outcomes, run_counterfactual, write_attacks_csv, Arithmetic, AttackOutcome, PairSummary, ReplaySummary,
    ScenarioAlgorithm, ScenarioConfig,
};
pub use il::{il_portfolio_report, ClassTotals, ExcludedPair, ILOptions, ILScenarioReport, PairIl};
pub use log::{parse_log, parse_log_with, write_log, ParseOptions, LOG_HEADER};
pub use synthetic::{synthetic_fixture, SyntheticOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Normal,
    Frontrun,
    Victim,
    Backrun,
}

impl Role {
    fn parse(s: &str) -> Option<Role> {
        match s {
            "normal" => Some(Role::Normal),
            "frontrun" => Some(Role::Frontrun),
            "victim" => Some(Role::Victim),
            "backrun" => Some(Role::Backrun),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Normal => "normal",
            Role::Frontrun => "frontrun",
            Role::Victim => "victim",
            Role::Backrun => "backrun",
        })
    }
}

/// Asset a logged swap sends into the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    X,
    Y,
}

impl Token {
    pub fn other(self) -> Token {
        match self {
            Token::X => Token::Y,
            Token::Y => Token::X,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Token::X => "X",
            Token::Y => "Y",
        })
    }
}

/// One logged swap. Decimal fields are kept exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRecord {
    pub block_number: u64,
    pub tx_index: u64,
    pub pair_id: String,
    pub role: Role,
    /// Empty for normal swaps.
    pub attack_id: String,
    pub token_in: Token,
    pub amount_in: Exact,
    pub reserve_x_before: Exact,
    pub reserve_y_before: Exact,
    pub price_usd_x: Option<Exact>,
    pub price_usd_y: Option<Exact>,
}

impl ReplayRecord {
    /// Pre-trade reserve of the asset this swap sends.
    pub fn reserve_in(&self) -> &Exact {
        match self.token_in {
            Token::X => &self.reserve_x_before,
            Token::Y => &self.reserve_y_before,
        }
    }

    /// Pre-trade reserve of the asset this swap receives.
    pub fn reserve_out(&self) -> &Exact {
        match self.token_in {
            Token::X => &self.reserve_y_before,
            Token::Y => &self.reserve_x_before,
        }
    }

    pub fn price_usd(&self, token: Token) -> Option<&Exact> {
        match token {
            Token::X => self.price_usd_x.as_ref(),
            Token::Y => self.price_usd_y.as_ref(),
        }
    }

    fn sort_key(&self) -> (u64, u64) {
        (self.block_number, self.tx_index)
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("line {line}: records are not sorted by (block_number, tx_index)")]
    Unsorted { line: u64 },

    #[error("attack {attack_id}: {message}")]
    Attack { attack_id: String, message: String },

    #[error("invalid scenario: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Amm(#[from] AmmError),
}
