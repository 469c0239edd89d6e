//! Per-beam decode probabilities and per-scheme packet durations for a
//! scenario, computed once and shared read-only by solvers and simulator.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phy::{self, BeamGroup, UserSet};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamLink {
    pub beam: BeamGroup,
    /// `[scheme][k]`: decode probability of the k-th member (ascending id).
    pub per_user: Vec<Vec<f64>>,
    /// `[scheme]`: minimum over members.
    pub worst: Vec<f64>,
}

impl BeamLink {
    pub fn members(&self) -> UserSet {
        self.beam.members
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    /// Seconds per MAC packet, per scheme.
    pub durations: Vec<f64>,
    pub scheme_names: Vec<String>,
    beams: BTreeMap<UserSet, BeamLink>,
}

impl LinkTable {
    pub fn build(scenario: &Scenario, groups: impl IntoIterator<Item = UserSet>) -> Result<LinkTable> {
        let mut groups: Vec<UserSet> = groups.into_iter().collect();
        groups.sort();
        groups.dedup();
        let bits = scenario.packet_bits();
        let beams = groups
            .par_iter()
            .map(|&g| {
                let beam = phy::beam_for(g, &scenario.users, &scenario.phy)?;
                let per_user = scenario
                    .modulations
                    .iter()
                    .map(|s| {
                        let probs = phy::decode_prob(s, &beam, &scenario.users, &scenario.phy, bits)?;
                        Ok(probs.into_iter().map(|(_, p)| p).collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()?;
                let worst = per_user.iter().map(|ps| ps.iter().copied().fold(1.0, f64::min)).collect();
                Ok((g, BeamLink { beam, per_user, worst }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LinkTable {
            durations: scenario.modulations.iter().map(|s| phy::packet_duration(s, bits, &scenario.phy)).collect(),
            scheme_names: scenario.modulations.iter().map(|s| s.name.clone()).collect(),
            beams: beams.into_iter().collect(),
        })
    }

    /// Builds a table from explicit probabilities; beams get a nominal
    /// geometry. Used for synthetic channels.
    pub fn from_probabilities(
        durations: Vec<f64>,
        beams: impl IntoIterator<Item = (UserSet, Vec<Vec<f64>>)>,
    ) -> LinkTable {
        let beams = beams
            .into_iter()
            .map(|(g, per_user)| {
                let worst = per_user.iter().map(|ps| ps.iter().copied().fold(1.0, f64::min)).collect();
                let beam = BeamGroup { members: g, beamwidth: phy::TWO_PI, boresight: 0.0 };
                (g, BeamLink { beam, per_user, worst })
            })
            .collect();
        LinkTable { scheme_names: (0..durations.len()).map(|s| format!("scheme{s}")).collect(), durations, beams }
    }

    pub fn n_schemes(&self) -> usize {
        self.durations.len()
    }

    pub fn get(&self, group: UserSet) -> Result<&BeamLink> {
        self.beams.get(&group).ok_or_else(|| Error::Lookup(format!("no link data for beam {group}")))
    }

    pub fn groups(&self) -> impl Iterator<Item = UserSet> + '_ {
        self.beams.keys().copied()
    }

    /// Shortest packet duration over all schemes.
    pub fn min_duration(&self) -> f64 {
        self.durations.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_user_links() {
        let s = Scenario::two_user();
        let links = LinkTable::build(&s, UserSet::all_groups(2)).unwrap();
        assert_eq!(links.groups().count(), 3);
        let u1 = links.get(UserSet::singleton(0)).unwrap();
        let u2 = links.get(UserSet::singleton(1)).unwrap();
        let both = links.get(UserSet::all(2)).unwrap();
        for k in 0..links.n_schemes() {
            // 8 degrees apart fits inside one resolution-wide beam
            assert_eq!(both.per_user[k][0], u1.per_user[k][0]);
            assert_eq!(both.per_user[k][1], u2.per_user[k][0]);
            assert_eq!(both.worst[k], u1.worst[k].min(u2.worst[k]));
            // the nearer user decodes at least as well
            assert!(u2.worst[k] >= u1.worst[k]);
        }
        assert!(links.get(UserSet::from_bits(0b100)).is_err());
    }

    #[test]
    fn wide_group_is_weaker() {
        let s = Scenario::table1();
        let narrow: UserSet = [2, 3].into_iter().collect();
        let wide = UserSet::all(8);
        let links = LinkTable::build(&s, [narrow, wide, UserSet::singleton(2)]).unwrap();
        for k in 0..2 {
            assert!(links.get(wide).unwrap().worst[k] <= links.get(narrow).unwrap().worst[k]);
            assert!(links.get(narrow).unwrap().worst[k] <= links.get(UserSet::singleton(2)).unwrap().worst[k]);
        }
    }
}
