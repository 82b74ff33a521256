use std::fmt;

use serde::{Deserialize, Serialize};

/// Table index within a session, starting at 0.
pub type TableId = u32;

/// Milliseconds since an arbitrary epoch chosen by the caller's clock.
pub type Millis = u64;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Identity of a human user, or the reserved `system` actor.
    UserId
);
string_id!(SessionId);
string_id!(NoteId);
string_id!(MessageId);

impl UserId {
    pub const SYSTEM: &'static str = "system";

    /// The actor used for scheduler-driven commands.
    pub fn system() -> Self {
        Self(Self::SYSTEM.to_owned())
    }

    pub fn is_system(&self) -> bool {
        self.0 == Self::SYSTEM
    }
}

impl NoteId {
    pub(crate) fn for_seq(seq: u64) -> Self {
        Self(format!("n{seq}"))
    }
}

impl MessageId {
    pub(crate) fn for_seq(seq: u64) -> Self {
        Self(format!("m{seq}"))
    }
}
