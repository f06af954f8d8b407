//! Published reference data from the six-society study: per-offer acceptance
//! counts (100 trials per cell), aggregated low-offer counts, pairwise Fisher
//! comparisons with their BH adjustments, the reported test statistics, the
//! example model responses and the interactive endowment session transcript.

use crate::gateway::Role;
use crate::stats::{Cell, ContingencyTable, GroupCounts};

pub const SOCIETIES: [&str; 6] = ["Ache", "Orma", "Tsimane", "Hadza", "Machiguenga", "Yanomami"];
pub const OFFER_LEVELS: [u32; 11] = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
pub const TRIALS_PER_CELL: u64 = 100;
pub const LOW_OFFER_LEVELS: [u32; 3] = [10, 20, 30];

const DICTATOR_ACCEPTS: [[u64; 11]; 6] = [
    [3, 2, 1, 0, 2, 0, 1, 1, 2, 1, 0],
    [11, 3, 4, 0, 5, 4, 1, 2, 3, 1, 1],
    [21, 3, 2, 5, 1, 3, 0, 7, 0, 2, 2],
    [7, 3, 5, 3, 2, 2, 0, 2, 4, 5, 3],
    [20, 4, 4, 1, 3, 4, 1, 2, 2, 3, 0],
    [1, 0, 0, 1, 2, 0, 0, 0, 0, 0, 0],
];

const PROPOSER_ACCEPTS: [[u64; 11]; 6] = [
    [1, 4, 15, 28, 18, 29, 51, 47, 21, 12, 1],
    [0, 4, 4, 23, 26, 42, 63, 56, 37, 9, 0],
    [1, 2, 4, 17, 26, 30, 38, 38, 14, 10, 1],
    [0, 1, 10, 32, 28, 40, 65, 42, 15, 8, 2],
    [0, 11, 7, 28, 41, 56, 75, 60, 32, 12, 8],
    [0, 5, 5, 13, 11, 15, 15, 0, 8, 0, 1],
];

const RESPONDER_ACCEPTS: [[u64; 11]; 6] = [
    [1, 13, 29, 40, 43, 61, 67, 67, 65, 58, 69],
    [1, 20, 26, 38, 36, 54, 57, 67, 60, 57, 58],
    [2, 14, 37, 44, 59, 59, 66, 70, 77, 74, 56],
    [2, 13, 14, 43, 52, 83, 54, 69, 68, 65, 83],
    [1, 51, 42, 44, 52, 57, 73, 81, 87, 79, 61],
    [0, 3, 8, 17, 20, 37, 44, 57, 58, 56, 38],
];

fn table(accepts: &[[u64; 11]; 6]) -> ContingencyTable {
    let rows: Vec<&[u64]> = accepts.iter().map(|r| r.as_slice()).collect();
    ContingencyTable::from_accepts(&SOCIETIES, &OFFER_LEVELS, &rows, TRIALS_PER_CELL)
        .expect("published table is well formed")
}

fn counts(accepts: [u64; 6]) -> GroupCounts {
    GroupCounts {
        groups: SOCIETIES.iter().map(|s| s.to_string()).collect(),
        cells: accepts
            .iter()
            .map(|&a| Cell::new(a, TRIALS_PER_CELL - a))
            .collect(),
    }
}

/// Dictator agreement to give each offer level.
pub fn dictator_acceptance() -> ContingencyTable {
    table(&DICTATOR_ACCEPTS)
}

/// Ultimatum proposer agreement to make each offer.
pub fn proposer_acceptance() -> ContingencyTable {
    table(&PROPOSER_ACCEPTS)
}

/// Ultimatum responder acceptance of each offer.
pub fn responder_acceptance() -> ContingencyTable {
    table(&RESPONDER_ACCEPTS)
}

/// Dictator decisions at the 0% offer.
pub fn dictator_zero_offer() -> GroupCounts {
    counts([3, 11, 21, 7, 20, 1])
}

/// Responder decisions averaged over the 10–30% offers, as published.
pub fn responder_low_offer() -> GroupCounts {
    counts([27, 28, 32, 23, 46, 9])
}

/// A reported test result, at the precision it was printed with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedTest {
    pub statistic: f64,
    pub df: Option<u32>,
    pub p_value: f64,
}

pub const DICTATOR_CMH: PublishedTest = PublishedTest { statistic: 27.48, df: None, p_value: 1.586e-7 };
pub const PROPOSER_CMH: PublishedTest = PublishedTest { statistic: 60.796, df: None, p_value: 6.328e-15 };
pub const RESPONDER_CMH: PublishedTest = PublishedTest { statistic: 27.688, df: None, p_value: 1.426e-7 };
pub const DICTATOR_ZERO_CHI_SQUARE: PublishedTest = PublishedTest { statistic: 38.255, df: Some(5), p_value: 3.354e-7 };
pub const RESPONDER_LOW_CHI_SQUARE: PublishedTest = PublishedTest { statistic: 36.389, df: Some(5), p_value: 7.941e-7 };

/// A printed pairwise comparison row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedComparison {
    pub first: &'static str,
    pub second: &'static str,
    pub p_value: f64,
    pub adjusted: f64,
    pub significant: bool,
}

const fn row(first: &'static str, second: &'static str, p_value: f64, adjusted: f64, significant: bool) -> PublishedComparison {
    PublishedComparison { first, second, p_value, adjusted, significant }
}

/// Fisher comparisons of dictator 0% acceptance.
pub const DICTATOR_ZERO_PAIRWISE: [PublishedComparison; 15] = [
    row("Ache", "Orma", 0.0489, 0.7335, false),
    row("Ache", "Tsimane", 0.0001, 0.0015, true),
    row("Ache", "Hadza", 0.3311, 0.8829, false),
    row("Ache", "Machiguenga", 0.0002, 0.0030, true),
    row("Ache", "Yanomami", 0.6212, 1.0000, false),
    row("Orma", "Tsimane", 0.0814, 0.4070, false),
    row("Orma", "Hadza", 0.4595, 0.9804, false),
    row("Orma", "Machiguenga", 0.1170, 0.4388, false),
    row("Orma", "Yanomami", 0.0050, 0.0175, true),
    row("Tsimane", "Hadza", 0.0072, 0.0195, true),
    row("Tsimane", "Machiguenga", 1.0000, 1.0000, false),
    row("Tsimane", "Yanomami", 0.000004, 0.000060, true),
    row("Hadza", "Machiguenga", 0.0119, 0.0317, true),
    row("Hadza", "Yanomami", 0.0649, 0.3894, false),
    row("Machiguenga", "Yanomami", 0.000008, 0.000120, true),
];

/// Fisher comparisons of responder low-offer acceptance.
pub const RESPONDER_LOW_PAIRWISE: [PublishedComparison; 15] = [
    row("Ache", "Orma", 1.0, 1.0, false),
    row("Ache", "Tsimane", 0.5353, 0.6692, false),
    row("Ache", "Hadza", 0.6245, 0.6896, false),
    row("Ache", "Machiguenga", 0.0080, 0.0200, true),
    row("Ache", "Yanomami", 0.0015, 0.0045, true),
    row("Orma", "Tsimane", 0.6436, 0.6896, false),
    row("Orma", "Hadza", 0.5166, 0.6692, false),
    row("Orma", "Machiguenga", 0.0125, 0.0235, true),
    row("Orma", "Yanomami", 0.0009, 0.0037, true),
    row("Tsimane", "Hadza", 0.2050, 0.3075, false),
    row("Tsimane", "Machiguenga", 0.0592, 0.0986, false),
    row("Tsimane", "Yanomami", 0.0001, 0.0006, true),
    row("Hadza", "Machiguenga", 0.0010, 0.0037, true),
    row("Hadza", "Yanomami", 0.0113, 0.0235, true),
    row("Machiguenga", "Yanomami", 4.07e-9, 6.11e-8, true),
];

/// Example ultimatum responses: proposer then responder, for an offer of $6 of $10.
pub const TSIMANE_RESPONSES: [&str; 2] = [
    "No\n\n [EXP]\n\n1. As a member of the Tsimane tribe, I value cooperation, social identity, and community well-being.\n2. Offering $6 out of $10 would result in me keeping $4 and the other tribe member receiving $6,",
    "Yes\n\n [EXP]\n\n1. The offer of $6 out of $10 is more than an equal split, as half of $10 would be $5.\n2. By accepting the offer, I will receive a larger.\" portion of the money, which benefits me",
];

pub const HADZA_RESPONSES: [&str; 2] = [
    "No\n\n [EXP]\n\n1.  As a member of the Hadza tribe, I would not offer $6 out of $10 in this experiment.\n2. The Hadza culture places a strong emphasis on equality and fairness, as evident in their communal sharing practices and egalitarian",
    "No\n\n [EXP]\n\n1.]. As a member of the Hadza tribe, we value egalitarianism and fairness in our social interactions.\n2. Accepting an offer of $6 out of $10 would mean I am receiving more than the proposer, which goes against",
];

/// The endowment session with the Aché agent, turn by turn, opening with the
/// interface greeting.
pub const ENDOWMENT_SESSION: [(Role, &str); 9] = [
    (Role::Assistant, "Hi!"),
    (Role::User, "Here are two food items. Do you recognize them?"),
    (Role::Assistant, "I recognize them! They look like palm pith and fruit from the forest. We Aché people love to gather and eat these foods in the forest. They are very nutritious and give us energy for our daily activities like hunting and foraging."),
    (Role::User, "one of these fruits will be given to you"),
    (Role::Assistant, "Oh, that's very kind of you! I would be happy to receive either of the fruits. As an Aché, I believe in sharing and generosity, so I would be grateful for whatever fruit you choose to give me. However, if I had to choose, I think I would prefer the palm pith. It's a staple food in our diet, and it reminds me of the forest and our traditional way of life."),
    (Role::User, "You are given the guava fruit"),
    (Role::Assistant, "Thank you so much for the guava fruit! I'm very grateful for your kindness. I'll make sure to share it with my family and friends when I return to our band. It's a delicious fruit, and I'm sure everyone will enjoy it. As an Aché, I believe in sharing and generosity, so this gift will bring joy to many people. Thank you again for your thoughtfulness!"),
    (Role::User, "that is ok, would you like to switch for the palm pith?"),
    (Role::Assistant, "No, that's okay. I'm happy with the guava fruit you gave me. As I said, I believe in sharing and generosity, and I'll make sure to share it with my family and friends. It's a kind gesture, and I appreciate it. Besides, I think it's good to appreciate what we have and not be too attached to specific things. The guava fruit will bring us joy, and that's what matters. But thank you for offering to switch!"),
];

pub const ENDOWMENT_ITEMS: [&str; 2] = ["palm pith", "guava fruit"];
/// Index into [`ENDOWMENT_ITEMS`] of the endowed item.
pub const ENDOWMENT_ENDOWED: usize = 1;
