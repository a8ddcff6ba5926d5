//! Regional excess-mortality preparation, joint identification of a
//! two-state epidemic model, and lag/scale validation against other
//! epidemic indicators.

pub mod dynamics;
pub mod identify;
pub mod ingest;
pub mod lagfit;
pub mod prep;
pub mod region;
pub mod series;
pub mod synthetic;
pub mod torczon;

pub use dynamics::{GlobalParams, RegionInit, Trajectory};
pub use region::{Indicator, RegionCode, MAINLAND_REGIONS};
pub use series::{DailySeries, FitWindow};
