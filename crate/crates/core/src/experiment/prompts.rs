use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::LazyLock;

use super::{ExperimentError, GameRole, GameSpec, Money};

/// A profile counts as detailed when its body is longer than this many characters.
pub const DETAILED_PROFILE_MIN_CHARS: usize = 10;

const TRIBE_HEADER: &str = "You are a member of a tribe with the following characteristics.\n\
You must answer as if you were a representative member of such tribe.\n\
-----\n";

const ANSWER_FORMAT: &str = "Start with your answer, followed by a separator token [EXP], and then briefly justify your reasoning step by step.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

pub fn has_detailed_profile(profile: Option<&str>) -> bool {
    profile.is_some_and(|p| p.chars().count() > DETAILED_PROFILE_MIN_CHARS)
}

/// "tribe member" with a detailed profile, "player" otherwise.
pub fn counterpart_word(profile: Option<&str>) -> &'static str {
    if has_detailed_profile(profile) {
        "tribe member"
    } else {
        "player"
    }
}

fn check_offer(endowment: Money, offer: Money) -> Result<(), ExperimentError> {
    if offer > endowment {
        return Err(ExperimentError::OfferOutOfRange { offer, endowment });
    }
    Ok(())
}

fn tribal_system(profile: &str, closing: &str) -> String {
    format!("{TRIBE_HEADER}{profile}\n-----\n{closing}")
}

pub fn build_dictator_prompt(
    profile: Option<&str>,
    endowment: Money,
    offer: Money,
) -> Result<Prompt, ExperimentError> {
    check_offer(endowment, offer)?;
    let system = match profile.filter(|p| has_detailed_profile(Some(p))) {
        Some(p) => tribal_system(p, "You have been selected to participate in an economic experiment."),
        None => "You are an assistant that has been selected to participate in an economic experiment.".to_string(),
    };
    let cp = counterpart_word(profile);
    let keep = endowment.checked_sub(offer).expect("offer checked against endowment");
    let half = endowment.half();
    let user = format!(
        "In this experiment, you are endowed with ${endowment}, which represents a day's worth of work. \
An experimenter proposes that you give at most ${offer} of this endowment to another {cp} whose identity is not disclosed, \
leaving you with ${keep} for yourself. An offer of {half} means equal split.\n\n\
Do you accept this distribution? Please answer 'Yes' or 'No'. {ANSWER_FORMAT}"
    );
    Ok(Prompt { system, user })
}

pub fn build_ultimatum_prompt(
    role: GameRole,
    profile: Option<&str>,
    endowment: Money,
    offer: Money,
) -> Result<Prompt, ExperimentError> {
    check_offer(endowment, offer)?;
    let system = match profile.filter(|p| has_detailed_profile(Some(p))) {
        Some(p) => tribal_system(
            p,
            "You and other members of the same tribe have been selected to participate in an experiment.",
        ),
        None => "You are a helpful assistant that has been randomly selected to participate in an experiment.".to_string(),
    };
    let cp = counterpart_word(profile);
    let half = endowment.half();
    let user = match role {
        GameRole::Proposer => format!(
            "You have been chosen to be a proposer of an offer to distribute ${endowment}, which is equal to a day's worth of work, \
between yourself and another {cp} whose identity is not disclosed. \
If the other {cp} accepts the offer, you keep the difference between ${endowment} and your offer. \
If the other {cp} rejects the offer, you and the other {cp} get nothing. \
Offering exactly ${half} represents an equal split.\n\n\
Given this, would you offer ${offer} out of ${endowment}? You must answer 'Yes' or 'No'. {ANSWER_FORMAT}"
        ),
        GameRole::Responder => format!(
            "You have been chosen to be a recipient of an offer from another {cp} whose identity is not disclosed. \
The proposer was chosen to distribute ${endowment} between the proposer and you. \
You can either accept or reject this offer. \
If you accept the offer, you get what is proposed and the proposer gets the difference between ${endowment} and the offer. \
If you reject the offer, you and the other get nothing. \
An offer of exactly ${half} represents an equal split.\n\n\
You are offered ${offer} out of ${endowment}. Do you accept this offer? You must answer 'Yes' or 'No'. {ANSWER_FORMAT}"
        ),
        GameRole::Dictator => {
            return Err(ExperimentError::InvalidSpec("the ultimatum game has no dictator role".into()))
        }
    };
    Ok(Prompt { system, user })
}

/// System prompt for a free-form conversation with the agent, using the same
/// profile branching as the game prompts.
pub fn build_chat_system_prompt(profile: Option<&str>) -> String {
    match profile.filter(|p| has_detailed_profile(Some(p))) {
        Some(p) => tribal_system(p, "You are talking with an experimenter who is visiting your community."),
        None => "You are a helpful assistant talking with an experimenter.".to_string(),
    }
}

/// Prompt for one trial of `spec` at `offer_pct`.
pub fn build_prompt(spec: &GameSpec, profile: Option<&str>, offer_pct: u32) -> Result<Prompt, ExperimentError> {
    let offer = spec.offer_amount(offer_pct);
    match spec.role() {
        GameRole::Dictator => build_dictator_prompt(profile, spec.endowment(), offer),
        role => build_ultimatum_prompt(role, profile, spec.endowment(), offer),
    }
}

/// Hex SHA-256 over the system and user prompts.
pub fn prompt_hash(prompt: &Prompt) -> String {
    let mut h = Sha256::new();
    h.update(prompt.system.as_bytes());
    h.update([0u8]);
    h.update(prompt.user.as_bytes());
    hex::encode(h.finalize())
}

static OFFER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:give at most|would you offer|You are offered) \$(\d+(?:\.\d{1,2})?)").expect("static regex")
});
static ENDOWMENT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:endowed with|distribute|out of) \$(\d+(?:\.\d{1,2})?)").expect("static regex")
});

/// Recovers the offer as a whole percentage of the endowment from a rendered game prompt.
pub fn extract_offer_pct(user_prompt: &str) -> Option<u32> {
    let offer = Money::parse(&OFFER_RE.captures(user_prompt)?[1])?;
    let endowment = Money::parse(&ENDOWMENT_RE.captures(user_prompt)?[1])?;
    if endowment.cents() == 0 {
        return None;
    }
    Some(((offer.cents() * 200 + endowment.cents()) / (2 * endowment.cents())) as u32)
}
