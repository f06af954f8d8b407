use chrono::{DateTime, TimeZone, Utc};

/// Source of wall-clock timestamps written into artifacts.
///
/// `Frozen` makes every persisted timestamp a constant so mock runs are
/// byte-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timestamper {
    Wall,
    Frozen(DateTime<Utc>),
}

impl Timestamper {
    pub fn frozen_epoch() -> Self {
        Timestamper::Frozen(Utc.timestamp_opt(0, 0).unwrap())
    }

    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Timestamper::Wall => Utc::now(),
            Timestamper::Frozen(t) => *t,
        }
    }
}

impl Default for Timestamper {
    fn default() -> Self {
        Timestamper::Wall
    }
}
