use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::neighbors::Direction;
use crate::sim::{CommError, RankId};

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        concat!("unknown ", stringify!($name), " '{}'"),
                        other
                    )),
                }
            }
        }
    };
}

named_enum!(
    /// Communication mechanism behind a halo swap.
    Backend {
        P2p => "p2p",
        Fence => "fence",
        Pscw => "pscw",
        Passive => "passive",
    }
);

named_enum!(
    /// Where epochs are opened. `Shifted` opens the next epoch at the end
    /// of every completion (and once at init); `Naive` opens it inside
    /// initiate.
    EpochPlacement {
        Shifted => "shifted",
        Naive => "naive",
    }
);

named_enum!(
    /// Whether origins write into neighbors or read from them. Reading is a
    /// test mode only.
    Driving {
        Put => "put",
        Get => "get",
    }
);

named_enum!(
    PassiveVariant {
        Adopted => "adopted",
        Simple => "simple",
    }
);

impl Backend {
    pub fn is_rma(self) -> bool {
        self != Backend::P2p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaloOptions {
    pub backend: Backend,
    pub epoch_placement: EpochPlacement,
    pub driving: Driving,
    pub passive_variant: PassiveVariant,
    /// Skips the win_sync that precedes reads under the separate model.
    pub suppress_win_sync: bool,
    /// Unpacks from a private copy of each region instead of views into the
    /// window buffer.
    pub copy_out_unpack: bool,
    /// Cross-validates the offset exchange at init.
    pub debug_checks: bool,
}

impl HaloOptions {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            epoch_placement: EpochPlacement::Shifted,
            driving: Driving::Put,
            passive_variant: PassiveVariant::Adopted,
            suppress_win_sync: false,
            copy_out_unpack: false,
            debug_checks: cfg!(debug_assertions),
        }
    }

    pub fn with_placement(mut self, p: EpochPlacement) -> Self {
        self.epoch_placement = p;
        self
    }

    pub fn with_driving(mut self, d: Driving) -> Self {
        self.driving = d;
        self
    }

    pub fn with_passive_variant(mut self, v: PassiveVariant) -> Self {
        self.passive_variant = v;
        self
    }
}

impl Default for HaloOptions {
    fn default() -> Self {
        Self::new(Backend::Pscw)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HaloError {
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error("at least one field is required")]
    NoFields,
    #[error("fields on one rank must share local dims")]
    MixedFieldDims,
    #[error("passive backend needs lock support in the transport")]
    LocksUnavailable,
    #[error("get-driven swaps are only available for fence and pscw")]
    UnsupportedDriving,
    #[error("neighbor {neighbor} ({direction}) expects {got} bytes from us, we send {expected}")]
    InconsistentFields {
        neighbor: RankId,
        direction: Direction,
        expected: usize,
        got: usize,
    },
    #[error("offset cross-check failed with neighbor {neighbor} ({direction})")]
    OffsetMismatch { neighbor: RankId, direction: Direction },
    #[error("a swap is already in flight")]
    SwapInFlight,
    #[error("no swap in flight")]
    NoSwapInFlight,
    #[error("context already finalised")]
    Finalised,
    #[error("no neighbor in direction {0}")]
    UnknownNeighbor(Direction),
    #[error("prime must come before the first swap of a get-driven context")]
    PrimeOutOfOrder,
    #[error("pack failed: {0}")]
    Pack(String),
    #[error("unpack failed: {0}")]
    Unpack(String),
}
