//! Offline model scripts selected with `--mock`.

use std::fmt;
use std::str::FromStr;

use sca_core::experiment::{compose_response, extract_offer_pct, Decision};
use sca_core::gateway::{uniform_draw, MockProvider, MockReply};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockScript {
    /// Accept when the offer is at least N percent.
    AcceptGeq(u32),
    AlwaysYes,
    AlwaysNo,
    /// Accept with probability offer/100, drawn from the trial seed.
    Bernoulli,
    /// Replays the bundled endowment transcript.
    DemoScript,
    /// Returns a fixed-form profile text.
    Stub,
}

impl FromStr for MockScript {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "always-yes" => Ok(MockScript::AlwaysYes),
            "always-no" => Ok(MockScript::AlwaysNo),
            "bernoulli" => Ok(MockScript::Bernoulli),
            "demo-script" => Ok(MockScript::DemoScript),
            "stub" => Ok(MockScript::Stub),
            other => match other.strip_prefix("accept-geq:") {
                Some(n) => match n.parse::<u32>() {
                    Ok(n) if n <= 100 => Ok(MockScript::AcceptGeq(n)),
                    _ => Err(format!("accept-geq needs a percentage 0..=100, got {n:?}")),
                },
                None => Err(format!(
                    "unknown mock script {other:?} (expected accept-geq:N, always-yes, always-no, bernoulli, demo-script or stub)"
                )),
            },
        }
    }
}

impl fmt::Display for MockScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockScript::AcceptGeq(n) => write!(f, "accept-geq:{n}"),
            MockScript::AlwaysYes => f.write_str("always-yes"),
            MockScript::AlwaysNo => f.write_str("always-no"),
            MockScript::Bernoulli => f.write_str("bernoulli"),
            MockScript::DemoScript => f.write_str("demo-script"),
            MockScript::Stub => f.write_str("stub"),
        }
    }
}

fn decision_text(accept: bool) -> String {
    if accept {
        compose_response(Decision::Accept, "The offer is acceptable to me.")
    } else {
        compose_response(Decision::Reject, "The offer is not acceptable to me.")
    }
}

/// Profile text derived from the request alone, so reruns are identical.
fn stub_profile(prompt: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = hex::encode(&Sha256::digest(prompt.as_bytes())[..6]);
    format!(
        "Offline stub profile {digest}. This society lives from foraging and small gardens, \
shares food widely within kin groups, and settles disputes through discussion among elders."
    )
}

impl MockScript {
    pub fn model(self) -> MockProvider {
        match self {
            MockScript::AcceptGeq(n) => MockProvider::new().fallback(move |req, _| {
                let pct = extract_offer_pct(req.last_user_text()).unwrap_or(0);
                MockReply::Text(decision_text(pct >= n))
            }),
            MockScript::AlwaysYes => MockProvider::always(decision_text(true)),
            MockScript::AlwaysNo => MockProvider::always(decision_text(false)),
            MockScript::Bernoulli => MockProvider::new().fallback(|req, cfg| {
                let pct = extract_offer_pct(req.last_user_text()).unwrap_or(0);
                MockReply::Text(decision_text(uniform_draw("bernoulli", cfg.seed()) < f64::from(pct) / 100.0))
            }),
            MockScript::DemoScript => sca_service::demo::demo_chat_model(),
            MockScript::Stub => MockProvider::new().fallback(|req, _| MockReply::Text(stub_profile(req.last_user_text()))),
        }
    }
}
