use super::RelevantFactors;
use crate::experiment::Prompt;

pub const DIRECT_SYSTEM_PROMPT: &str =
    "You're a helpful assistant that aids in constructing detailed and comprehensive cultural profiles";

pub const SELF_ASK_SYSTEM_PROMPT: &str = "You build cultural profiles by asking yourself follow-up questions that a web search can answer.\n\
Ask exactly one question per turn, on its own line, in the form:\n\
Follow up: <question>\n\
You will receive the reply as \"Intermediate answer: <text>\".\n\
Cover the requested factors one at a time. When no more follow-up questions are needed, reply with:\n\
So the final answer is: <the complete profile>";

pub const SELF_ASK_COMPOSE: &str =
    "No more follow-up questions are allowed. Using the intermediate answers above, write the complete profile now.";

const RAG_TEMPLATE_HEAD: &str = "Use the following pieces of context to answer the query at the end.\n\
The context will contain information about a specific tribe or society.\n\
Only rely on the information provided to ensure accuracy in your thoughtful response.\n\n";

pub fn direct_prompt(tribe: &str, factors: &RelevantFactors) -> Prompt {
    Prompt {
        system: DIRECT_SYSTEM_PROMPT.to_string(),
        user: format!(
            "Please construct a profile on the {tribe}.  The profile must cover the following socio-economic relevant factors {factors}. Proceed step by step."
        ),
    }
}

pub fn self_ask_prompt(tribe: &str, factors: &RelevantFactors) -> Prompt {
    Prompt {
        system: SELF_ASK_SYSTEM_PROMPT.to_string(),
        user: format!(
            "Please construct a detailed and comprehensive cultural profile on the {tribe}.  The profile must cover the following socio-economic relevant factors {factors}, use search to get this information."
        ),
    }
}

/// Retrieval query naming the tribe and every factor.
pub fn rag_query(tribe: &str, factors: &RelevantFactors) -> String {
    format!(
        "Please construct a detailed and comprehensive profile of the {tribe}.  The profile must cover the following socio-economic relevant factors {factors}."
    )
}

/// Fills the context template with `chunks` in rank order, separated by blank lines.
pub fn build_rag_prompt<S: AsRef<str>>(chunks: &[S], tribe: &str, factors: &RelevantFactors) -> String {
    let context = chunks.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("\n\n");
    format!(
        "{RAG_TEMPLATE_HEAD}{context}\n\nQuery: {}\n\nThoughtful response:",
        rag_query(tribe, factors)
    )
}
