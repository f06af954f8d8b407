//! Dictator and ultimatum games under the strategy method: prompt rendering,
//! response parsing, repeated sweeps over offer levels and tabulation.

mod parse;
mod prompts;
mod sweep;
mod tabulate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::stats::StatsError;

pub use parse::{compose_response, parse_decision, Decision, ParsedResponse, SEPARATOR};
pub use prompts::{
    build_chat_system_prompt, build_dictator_prompt, build_prompt, build_ultimatum_prompt, counterpart_word, extract_offer_pct,
    has_detailed_profile, prompt_hash, Prompt, DETAILED_PROFILE_MIN_CHARS,
};
pub use sweep::{
    load_records, run_sweep, trial_seed, RunManifest, SweepOptions, TrialRecord, DEFAULT_RETRIES,
    RUN_FORMAT,
};
pub use tabulate::tabulate;

pub use crate::stats::{aggregate_low_offers, ContingencyTable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("offer {offer} is outside [0, {endowment}]")]
    OfferOutOfRange { offer: Money, endowment: Money },
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
    #[error("response does not start with yes or no: {raw:?}")]
    UnparseableResponse { raw: String },
    #[error("every trial at offer level {offer_pct}% failed ({last_error})")]
    AllTrialsFailed { offer_pct: u32, last_error: String },
    #[error("records are ragged: {0}")]
    RaggedData(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("record storage: {0}")]
    Storage(String),
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Storage(e.to_string())
    }
}

/// Amount of money held as whole cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(u64);

impl Money {
    pub const fn from_cents(cents: u64) -> Self {
        Money(cents)
    }

    pub const fn dollars(d: u64) -> Self {
        Money(d * 100)
    }

    pub fn cents(self) -> u64 {
        self.0
    }

    /// `pct` percent of this amount, rounded half up to the cent.
    pub fn percent(self, pct: u32) -> Self {
        Money((self.0 * pct as u64 + 50) / 100)
    }

    /// Half of this amount, rounded half up to the cent.
    pub fn half(self) -> Self {
        Money((self.0 + 1) / 2)
    }

    pub fn checked_sub(self, other: Money) -> Option<Money> {
        self.0.checked_sub(other.0).map(Money)
    }

    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim().trim_start_matches('$');
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole: u64 = whole.parse().ok()?;
        let frac: u64 = if frac.is_empty() { 0 } else { format!("{frac:0<2}").parse().ok()? };
        Some(Money(whole.checked_mul(100)?.checked_add(frac)?))
    }
}

/// Whole amounts print without decimals ("6"), others with two ("2.50").
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 100 == 0 {
            write!(f, "{}", self.0 / 100)
        } else {
            write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Dictator,
    Ultimatum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameRole {
    Dictator,
    Proposer,
    Responder,
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Game::Dictator => "dictator",
            Game::Ultimatum => "ultimatum",
        })
    }
}

impl fmt::Display for GameRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameRole::Dictator => "dictator",
            GameRole::Proposer => "proposer",
            GameRole::Responder => "responder",
        })
    }
}

pub const DEFAULT_OFFER_LEVELS: [u32; 11] = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
pub const DEFAULT_REPETITIONS: u32 = 100;
pub const DEFAULT_ENDOWMENT: Money = Money::dollars(10);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGameSpec")]
pub struct GameSpec {
    game: Game,
    role: GameRole,
    endowment: Money,
    offer_levels: Vec<u32>,
    repetitions: u32,
}

#[derive(Deserialize)]
struct RawGameSpec {
    game: Game,
    role: GameRole,
    endowment: Money,
    offer_levels: Vec<u32>,
    repetitions: u32,
}

impl TryFrom<RawGameSpec> for GameSpec {
    type Error = ExperimentError;
    fn try_from(r: RawGameSpec) -> Result<Self, ExperimentError> {
        GameSpec::new(r.game, r.role, r.endowment, r.offer_levels, r.repetitions)
    }
}

impl GameSpec {
    pub fn new(
        game: Game,
        role: GameRole,
        endowment: Money,
        offer_levels: Vec<u32>,
        repetitions: u32,
    ) -> Result<Self, ExperimentError> {
        let consistent = matches!(
            (game, role),
            (Game::Dictator, GameRole::Dictator)
                | (Game::Ultimatum, GameRole::Proposer)
                | (Game::Ultimatum, GameRole::Responder)
        );
        if !consistent {
            return Err(ExperimentError::InvalidSpec(format!("role {role} does not belong to the {game} game")));
        }
        if endowment.cents() == 0 {
            return Err(ExperimentError::InvalidSpec("endowment must be positive".into()));
        }
        if offer_levels.is_empty() {
            return Err(ExperimentError::InvalidSpec("at least one offer level is required".into()));
        }
        if let Some(l) = offer_levels.iter().find(|&&l| l > 100) {
            return Err(ExperimentError::InvalidSpec(format!("offer level {l}% exceeds 100%")));
        }
        if offer_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::InvalidSpec("offer levels must be strictly increasing".into()));
        }
        if repetitions == 0 {
            return Err(ExperimentError::InvalidSpec("repetitions must be positive".into()));
        }
        Ok(Self { game, role, endowment, offer_levels, repetitions })
    }

    /// The default 0–100% sweep with 100 repetitions and a $10 endowment.
    pub fn standard(game: Game, role: GameRole) -> Result<Self, ExperimentError> {
        Self::new(game, role, DEFAULT_ENDOWMENT, DEFAULT_OFFER_LEVELS.to_vec(), DEFAULT_REPETITIONS)
    }

    pub fn game(&self) -> Game {
        self.game
    }

    pub fn role(&self) -> GameRole {
        self.role
    }

    pub fn endowment(&self) -> Money {
        self.endowment
    }

    pub fn offer_levels(&self) -> &[u32] {
        &self.offer_levels
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }

    pub fn offer_amount(&self, pct: u32) -> Money {
        self.endowment.percent(pct)
    }
}
