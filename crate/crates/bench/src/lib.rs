//! Fixtures shared by the chain benchmarks.

use wardchain::gridkit::VoteModel;
use wardchain::{ChainConfig, CompactnessMode, DualGraph, GridSpec, Plan, ValidityConfig};

/// A 100 x 100 grid (10^4 wards) split into ten column bands with seeded votes.
pub fn large_grid() -> (DualGraph, Plan) {
    GridSpec { votes: VoteModel::Seeded(2026), ..GridSpec::new(100, 100, 10) }
        .generate()
        .expect("grid fixture")
}

pub fn bench_validity() -> ValidityConfig {
    ValidityConfig {
        pop_tolerance_wards: 50.0,
        compactness_mode: CompactnessMode::Perimeter,
        compactness_budget: 1.5,
        enforce_counties: false,
        enforce_mm: false,
    }
}

pub fn bench_chain(steps: u64) -> ChainConfig {
    ChainConfig::new(steps, 1)
}
