use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SourcingError;
use crate::network::Partner;

/// Intangibles the integrator screens suppliers on.
pub const CASE_ATTRIBUTES: [&str; 5] = ["skills", "staff", "experience", "incentives", "proximity"];

/// Distributions of the synthetic supplier pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateProfile {
    pub attributes: Vec<String>,
    /// Goal labels are drawn from `goal-00 .. goal-{pool-1}`.
    pub goal_pool: usize,
    pub min_goals: usize,
    pub max_goals: usize,
    /// Share of suppliers with a track record at competitors or customers.
    pub competitor_rate: f64,
    /// Share of attribute draws that come from the specialist band.
    pub specialist_rate: f64,
    /// Lower edge of the specialist band; generalists draw below it.
    pub specialist_floor: f64,
}

impl Default for CandidateProfile {
    fn default() -> Self {
        CandidateProfile {
            attributes: CASE_ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
            goal_pool: 24,
            min_goals: 2,
            max_goals: 8,
            competitor_rate: 0.2,
            specialist_rate: 0.3,
            specialist_floor: 0.7,
        }
    }
}

impl CandidateProfile {
    fn validate(&self) -> Result<(), SourcingError> {
        let bad = |m: &str| Err(SourcingError::InvalidProfile(m.into()));
        if !(1 <= self.min_goals && self.min_goals <= self.max_goals && self.max_goals <= self.goal_pool) {
            return bad("need 1 <= min_goals <= max_goals <= goal_pool");
        }
        for r in [self.competitor_rate, self.specialist_rate, self.specialist_floor] {
            if !(0.0..=1.0).contains(&r) {
                return bad("rates and the specialist floor lie in [0, 1]");
            }
        }
        Ok(())
    }
}

pub fn region_label(i: usize) -> String {
    format!("R{:02}", i + 1)
}

/// Seeded supplier pool with ids `1..=count`, spread uniformly over
/// `regions` region labels.
pub fn generate_candidates(count: usize, regions: usize, seed: u64, profile: &CandidateProfile) -> Result<Vec<Partner>, SourcingError> {
    if count == 0 {
        return Err(SourcingError::ZeroCount);
    }
    if regions == 0 {
        return Err(SourcingError::NoRegions);
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = profile.specialist_floor;
    let out = (1..=count as u64)
        .map(|id| {
            let region = region_label(rng.gen_range(0..regions));
            let n = rng.gen_range(profile.min_goals..=profile.max_goals);
            let mut picks = sample(&mut rng, profile.goal_pool, n).into_vec();
            picks.sort_unstable();
            let footprint: Vec<(String, f64)> = profile
                .attributes
                .iter()
                .map(|a| {
                    let level = if rng.gen_bool(profile.specialist_rate) {
                        rng.gen_range(floor..=1.0)
                    } else {
                        rng.gen_range(0.0..=floor)
                    };
                    (a.clone(), level)
                })
                .collect();
            let mut p = Partner::new(id, region)
                .with_goals(picks.into_iter().map(|g| format!("goal-{g:02}")))
                .with_footprint(footprint);
            p.competitor_history = rng.gen_bool(profile.competitor_rate);
            p
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn case_scale_population() {
        let pool = generate_candidates(500, 10, 7, &CandidateProfile::default()).unwrap();
        assert_eq!(pool.len(), 500);
        let regions: BTreeSet<&str> = pool.iter().map(|p| p.region.as_str()).collect();
        assert_eq!(regions.len(), 10);
        assert!(regions.iter().all(|r| r.starts_with('R')));
        assert!(pool.iter().all(|p| (2..=8).contains(&p.goals.len())));
        assert!(pool.iter().all(|p| p.footprint.len() == 5 && p.footprint.values().all(|v| (0.0..=1.0).contains(v))));
        let flagged = pool.iter().filter(|p| p.competitor_history).count();
        assert!(flagged > 50 && flagged < 150);
        assert_eq!(pool.iter().map(|p| p.id).collect::<Vec<_>>(), (1..=500).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_validated() {
        let prof = CandidateProfile::default();
        assert_eq!(generate_candidates(40, 3, 1, &prof), generate_candidates(40, 3, 1, &prof));
        assert_ne!(generate_candidates(40, 3, 1, &prof), generate_candidates(40, 3, 2, &prof));
        assert_eq!(generate_candidates(0, 3, 1, &prof), Err(SourcingError::ZeroCount));
        assert_eq!(generate_candidates(5, 0, 1, &prof), Err(SourcingError::NoRegions));
        let bad = CandidateProfile {
            min_goals: 9,
            ..prof
        };
        assert!(matches!(generate_candidates(5, 1, 1, &bad), Err(SourcingError::InvalidProfile(_))));
    }
}
