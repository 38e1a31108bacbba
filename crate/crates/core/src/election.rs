//! Hypothetical two-party elections over a plan and the efficiency gap.
//!
//! Wasted votes are all of the losing party's votes plus the winner's votes
//! beyond half the district total. The efficiency gap is
//! `(wasted_dem - wasted_rep) / total_votes`, so positive values favor
//! Republicans.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::plan::{DistrictStats, Plan};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistrictTally {
    pub rep: f64,
    pub dem: f64,
}

impl DistrictTally {
    pub fn total(&self) -> f64 {
        self.rep + self.dem
    }
}

impl From<&DistrictStats> for DistrictTally {
    fn from(s: &DistrictStats) -> Self {
        DistrictTally { rep: s.rep_votes, dem: s.dem_votes }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElectionResult {
    pub tallies: Vec<DistrictTally>,
    pub rep_seats: usize,
    pub dem_seats: usize,
    /// Districts with an exact tie; they count toward neither party's seats.
    pub tied_districts: Vec<usize>,
    pub efficiency_gap: f64,
}

impl ElectionResult {
    pub fn seats(&self) -> (usize, usize) {
        (self.rep_seats, self.dem_seats)
    }
}

/// Wasted `(rep, dem)` votes in one district. In a tie both parties waste
/// their full tally.
fn wasted(t: &DistrictTally) -> (f64, f64) {
    let half = t.total() / 2.0;
    if t.rep > t.dem {
        (t.rep - half, t.dem)
    } else if t.dem > t.rep {
        (t.rep, t.dem - half)
    } else {
        (t.rep, t.dem)
    }
}

pub fn efficiency_gap(tallies: &[DistrictTally]) -> Result<f64> {
    gap_of(tallies.iter().copied())
}

fn gap_of(tallies: impl Iterator<Item = DistrictTally>) -> Result<f64> {
    let (mut wasted_rep, mut wasted_dem, mut total) = (0.0, 0.0, 0.0);
    for (d, t) in tallies.enumerate() {
        if !(t.total() > 0.0) {
            return Err(Error::ZeroVoteDistrict(d));
        }
        let (r, w) = wasted(&t);
        wasted_rep += r;
        wasted_dem += w;
        total += t.total();
    }
    Ok((wasted_dem - wasted_rep) / total)
}

pub fn election(tallies: Vec<DistrictTally>) -> Result<ElectionResult> {
    let efficiency_gap = efficiency_gap(&tallies)?;
    let mut result = ElectionResult { tallies: Vec::new(), rep_seats: 0, dem_seats: 0, tied_districts: Vec::new(), efficiency_gap };
    for (d, t) in tallies.iter().enumerate() {
        if t.rep > t.dem {
            result.rep_seats += 1;
        } else if t.dem > t.rep {
            result.dem_seats += 1;
        } else {
            result.tied_districts.push(d);
        }
    }
    result.tallies = tallies;
    Ok(result)
}

pub fn tallies(plan: &Plan) -> Vec<DistrictTally> {
    plan.stats().iter().map(DistrictTally::from).collect()
}

pub fn plan_election(plan: &Plan) -> Result<ElectionResult> {
    election(tallies(plan))
}

/// The trajectory label: the efficiency gap of the plan's cached tallies.
/// Larger is worse (more Republican-favoring).
pub fn label(plan: &Plan) -> Result<f64> {
    gap_of(plan.stats().iter().map(DistrictTally::from))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(rep: f64, dem: f64) -> DistrictTally {
        DistrictTally { rep, dem }
    }

    /// Wasted votes straight from the definition: every vote that was not
    /// needed to win (winner) or did not win (loser).
    fn eg_oracle(tallies: &[(f64, f64)]) -> f64 {
        let mut wr = 0.0;
        let mut wd = 0.0;
        let mut total = 0.0;
        for &(r, d) in tallies {
            let needed = (r + d) / 2.0;
            match r.partial_cmp(&d).unwrap() {
                std::cmp::Ordering::Greater => {
                    wr += r - needed;
                    wd += d;
                }
                std::cmp::Ordering::Less => {
                    wd += d - needed;
                    wr += r;
                }
                std::cmp::Ordering::Equal => {
                    wr += r;
                    wd += d;
                }
            }
            total += r + d;
        }
        (wd - wr) / total
    }

    #[test]
    fn mirror_plan_has_zero_gap() {
        assert_eq!(efficiency_gap(&[t(60.0, 40.0), t(40.0, 60.0)]).unwrap(), 0.0);
    }

    #[test]
    fn lopsided_plan_favors_democrats() {
        let eg = efficiency_gap(&[t(75.0, 25.0), t(40.0, 60.0)]).unwrap();
        assert_eq!(eg_oracle(&[(75.0, 25.0), (40.0, 60.0)]), -0.15);
        assert!((eg - -0.15).abs() < 1e-15);
    }

    #[test]
    fn single_district_specialization() {
        let (r, d) = (70.0, 30.0);
        let total: f64 = r + d;
        assert_eq!(efficiency_gap(&[t(r, d)]).unwrap(), (d - (r - total / 2.0)) / total);
    }

    #[test]
    fn zero_votes_is_an_error() {
        assert!(matches!(efficiency_gap(&[t(1.0, 1.0), t(0.0, 0.0)]), Err(Error::ZeroVoteDistrict(1))));
    }

    #[test]
    fn seats_and_ties() {
        let r = election(vec![t(60.0, 40.0), t(40.0, 60.0)]).unwrap();
        assert_eq!(r.seats(), (1, 1));
        let r = election(vec![t(60.0, 40.0), t(51.0, 49.0), t(90.0, 1.0)]).unwrap();
        assert_eq!(r.seats(), (3, 0));
        let r = election(vec![t(60.0, 40.0), t(50.0, 50.0)]).unwrap();
        assert_eq!(r.seats(), (1, 0));
        assert_eq!(r.tied_districts, vec![1]);
    }

    fn tally_vec() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0u32..1000, 1u32..1000).prop_map(|(r, d)| (r as f64, d as f64)), 1..12)
    }

    proptest! {
        #[test]
        fn matches_definition_oracle(v in tally_vec()) {
            let ts: Vec<_> = v.iter().map(|&(r, d)| t(r, d)).collect();
            prop_assert!((efficiency_gap(&ts).unwrap() - eg_oracle(&v)).abs() < 1e-12);
        }

        #[test]
        fn swapping_parties_negates(v in tally_vec()) {
            let ts: Vec<_> = v.iter().map(|&(r, d)| t(r, d)).collect();
            let sw: Vec<_> = v.iter().map(|&(r, d)| t(d, r)).collect();
            prop_assert_eq!(efficiency_gap(&ts).unwrap(), -efficiency_gap(&sw).unwrap());
        }

        #[test]
        fn scale_invariant_and_bounded(v in tally_vec(), c in 0.01f64..1000.0) {
            let ts: Vec<_> = v.iter().map(|&(r, d)| t(r, d)).collect();
            let sc: Vec<_> = v.iter().map(|&(r, d)| t(r * c, d * c)).collect();
            let eg = efficiency_gap(&ts).unwrap();
            prop_assert!((eg - efficiency_gap(&sc).unwrap()).abs() < 1e-12);
            prop_assert!(eg.abs() <= 0.5);
        }
    }
}
