//! Offline models that replay the bundled Aché endowment session.

use std::path::Path;

use sca_core::fixtures::ENDOWMENT_SESSION;
use sca_core::gateway::{MockProvider, MockReply, ModelConfig, Role};
use sca_core::profile::{direct_prompt, CulturalProfile, ProfileError, ProfileStore, RelevantFactors, Strategy};
use sca_core::time::Timestamper;

pub const DEMO_DESCRIPTION: &str = "A photograph of a food item.";
pub const DEMO_TRIBE: &str = "Ache";
pub const DEMO_PROFILE: &str = "The Aché are a hunter-gatherer people of the forests of eastern Paraguay. \
Men hunt game such as peccaries, armadillos and monkeys while women and children gather palm pith, \
palm hearts, fruit, honey and insect larvae. Families move in small bands through the forest. \
Meat and other large catches are pooled and shared across the whole band, and a hunter rarely eats \
much of his own kill. Generosity and sharing are expected, and hoarding is frowned upon.";
pub const DEMO_FALLBACK: &str = "I am not sure what you mean. Could you say that again?";

/// Text-only chat model answering each scripted user line with the reply that
/// followed it in the bundled transcript.
pub fn demo_chat_model() -> MockProvider {
    let mut mock = MockProvider::new();
    for pair in ENDOWMENT_SESSION.windows(2) {
        if let [(Role::User, question), (Role::Assistant, answer)] = pair {
            mock = mock.reply_when(question, *answer);
        }
    }
    mock.fallback(|_, _| MockReply::Text(DEMO_FALLBACK.into()))
}

/// Vision model giving every image the same short description.
pub fn demo_describer() -> MockProvider {
    MockProvider::new().accepting_images(true).reply_to_any_image(DEMO_DESCRIPTION)
}

/// Saves the bundled Aché profile unless one is already stored; returns its id.
pub fn seed_demo_profile(dir: &Path, clock: Timestamper) -> Result<String, ProfileError> {
    let store = ProfileStore::new(dir);
    if let Some(found) = store.list()?.into_iter().find(|p| p.tribe == DEMO_TRIBE) {
        return Ok(found.id);
    }
    let profile = CulturalProfile::new(
        DEMO_TRIBE.to_string(),
        DEMO_PROFILE.to_string(),
        Strategy::Direct,
        Vec::new(),
        ModelConfig::profile("demo"),
        clock.now(),
        Vec::new(),
        direct_prompt(DEMO_TRIBE, &RelevantFactors::default()),
    )?;
    store.save(&profile, None)
}
