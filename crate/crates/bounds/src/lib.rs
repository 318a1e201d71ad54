//! Exact value-error bounds for a deterministic environment paired with a
//! stochastic learned model, on MDPs small enough to tabulate.

use hdmc_core::mdp::MdpError;
use thiserror::Error;

pub mod instance;
pub mod joint;
pub mod lemma1;
pub mod oracle;
pub mod sweep;
pub mod terms;

pub use instance::{chain_instance, random_instance, random_xi, BoundInstance, InstanceParams};
pub use joint::{compute_h, JointH};
pub use lemma1::{check_lemma1, comparison_policies, Lemma1Check};
pub use sweep::{run_sweep, Check, InstanceReport, Replay, SweepConfig};
pub use terms::{
    check_lemma2, check_thm4, eps_val, eps_val_policy, rhs_thm1, rhs_thm2, rhs_thm3, DynamicsTerms,
    Lemma2Check, RewardTerms, Thm4Check,
};

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("discount {0} outside [0, 1)")]
    Discount(f64),
    #[error("reward {0} outside [0, M]")]
    RewardRange(f64),
    #[error("true dynamics must be deterministic")]
    StochasticTruth,
    #[error("model reward must equal the true reward")]
    UnknownReward,
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Mdp(MdpError),
}
