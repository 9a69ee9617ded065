//! Quasi-tilings, castles and entropy estimators for cross-sections of
//! discrete amenable group actions.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod entropy;
pub mod error;
pub mod group;
pub mod mixing;
mod index;
pub mod rng;
pub mod section;
pub mod stats;
pub mod systems;
pub mod tiling;

pub use error::{EntropyError, GroupError, MixingError, SectionError, SystemError, TilingError};
pub use group::{ColumnSet, Element, ElementSet, GroupModel};
