//! Group-pair selection `C(𝕊, S_all)`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::GroupSet;
use crate::error::{Error, Result};
use crate::mask::Mask;

pub const POPULATION_NAME: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Every group against the whole population, both directions.
    VsAny,
    /// All ordered pairs of groups, self-pairs included.
    Pairs,
    /// Every group against its complement: `{S, S_all \ S}²`.
    Compl,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::VsAny => "vsany",
            Strategy::Pairs => "pairs",
            Strategy::Compl => "compl",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vsany" => Ok(Strategy::VsAny),
            "pairs" => Ok(Strategy::Pairs),
            "compl" => Ok(Strategy::Compl),
            _ => Err(Error::Parameter(format!(
                "unknown selector `{s}` (expected vsany, pairs or compl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    VsAny,
    Pairs,
    Compl,
    Individual,
    IntersectDerived,
}

impl From<Strategy> for Provenance {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::VsAny => Provenance::VsAny,
            Strategy::Pairs => Provenance::Pairs,
            Strategy::Compl => Provenance::Compl,
        }
    }
}

/// A group as seen by a pair: a named mask, possibly derived (population,
/// complement, singleton).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRef {
    pub name: Arc<str>,
    pub mask: Arc<Mask>,
}

impl GroupRef {
    pub fn new(name: impl Into<Arc<str>>, mask: Mask) -> Self {
        Self {
            name: name.into(),
            mask: Arc::new(mask),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPair {
    pub left: GroupRef,
    pub right: GroupRef,
    pub provenance: Provenance,
}

impl GroupPair {
    /// Both sides cover the same samples.
    pub fn is_self(&self) -> bool {
        Arc::ptr_eq(&self.left.mask, &self.right.mask) || self.left.mask == self.right.mask
    }
}

#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub pairs: Vec<GroupPair>,
    pub warnings: Vec<String>,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn refs(gs: &GroupSet) -> Vec<GroupRef> {
    gs.groups()
        .iter()
        .map(|g| GroupRef::new(g.name(), g.mask().clone()))
        .collect()
}

fn apply(
    strategy: Strategy,
    groups: &[GroupRef],
    population: &Mask,
    provenance: Provenance,
) -> Selection {
    let mut sel = Selection::default();
    let pair = |left: &GroupRef, right: &GroupRef| GroupPair {
        left: left.clone(),
        right: right.clone(),
        provenance,
    };
    match strategy {
        Strategy::VsAny => {
            let all = GroupRef::new(POPULATION_NAME, population.clone());
            for g in groups {
                sel.pairs.push(pair(g, &all));
                sel.pairs.push(pair(&all, g));
            }
        }
        Strategy::Pairs => {
            for a in groups {
                for b in groups {
                    sel.pairs.push(pair(a, b));
                }
            }
        }
        Strategy::Compl => {
            // Set union across groups: an ordered mask pair appears once.
            let mut seen: HashSet<(Mask, Mask)> = HashSet::new();
            for g in groups {
                let rest = population.and(&g.mask.complement());
                if rest.none() {
                    sel.warnings.push(format!(
                        "group `{}` covers the whole population; its complement is empty and it was skipped",
                        g.name
                    ));
                    continue;
                }
                let not_g = GroupRef::new(format!("¬{}", g.name), rest);
                let side = [g, &not_g];
                for a in side {
                    for b in side {
                        if seen.insert(((*a.mask).clone(), (*b.mask).clone())) {
                            sel.pairs.push(pair(a, b));
                        }
                    }
                }
            }
        }
    }
    sel
}

/// Pairs produced by `strategy` over a nonempty group set.
pub fn select(strategy: Strategy, gs: &GroupSet, population: &Mask) -> Selection {
    apply(strategy, &refs(gs), population, strategy.into())
}

/// Like [`select`], but an empty group set is replaced by one singleton group
/// per sample, which turns the selection into an individual-fairness one.
pub fn select_with_fallback(strategy: Strategy, gs: &GroupSet, population: &Mask) -> Selection {
    if !gs.is_empty() {
        return select(strategy, gs, population);
    }
    let singletons: Vec<GroupRef> = population
        .ones()
        .map(|row| {
            GroupRef::new(
                format!("#{}", row + 1),
                Mask::singleton(population.len(), row),
            )
        })
        .collect();
    apply(strategy, &singletons, population, Provenance::Individual)
}

/// [`select`] over every nonempty intersection of the groups.
pub fn select_intersectional(strategy: Strategy, gs: &GroupSet, population: &Mask) -> Selection {
    let inter = gs.intersectional();
    apply(
        strategy,
        &refs(&inter),
        population,
        Provenance::IntersectDerived,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn genders() -> GroupSet {
        GroupSet::from_masks(
            8,
            [
                ("m", (0..8).map(|r| r < 4).collect()),
                ("f", (0..8).map(|r| r >= 4).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sizes() {
        let pop = Mask::full(8);
        assert_eq!(select(Strategy::VsAny, &genders(), &pop).len(), 4);
        let three = GroupSet::from_masks(
            3,
            [
                ("a", vec![true, false, false]),
                ("b", vec![false, true, false]),
                ("c", vec![false, false, true]),
            ],
        )
        .unwrap();
        let pairs = select(Strategy::Pairs, &three, &Mask::full(3));
        assert_eq!(pairs.len(), 9);
        assert_eq!(pairs.pairs.iter().filter(|p| p.is_self()).count(), 3);
    }

    #[test]
    fn compl_of_single_group() {
        let m = GroupSet::from_masks(8, [("m", (0..8).map(|r| r < 4).collect())]).unwrap();
        let sel = select(Strategy::Compl, &m, &Mask::full(8));
        let names: Vec<(String, String)> = sel
            .pairs
            .iter()
            .map(|p| (p.left.name.to_string(), p.right.name.to_string()))
            .collect();
        assert_eq!(
            names,
            vec![
                ("m".into(), "m".into()),
                ("m".into(), "¬m".into()),
                ("¬m".into(), "m".into()),
                ("¬m".into(), "¬m".into()),
            ]
        );
        let f_mask = genders().groups()[1].mask().clone();
        assert_eq!(*sel.pairs[1].right.mask, f_mask);
    }

    #[test]
    fn compl_unions_by_mask() {
        // {m, f}: f's complement pairs coincide with m's.
        let sel = select(Strategy::Compl, &genders(), &Mask::full(8));
        assert_eq!(sel.len(), 4);
    }

    #[test]
    fn compl_skips_population_group() {
        let gs = GroupSet::from_masks(2, [("everyone", vec![true, true])]).unwrap();
        let sel = select(Strategy::Compl, &gs, &Mask::full(2));
        assert!(sel.is_empty());
        assert_eq!(sel.warnings.len(), 1);
    }

    #[test]
    fn fallback() {
        let pop = Mask::full(3);
        let empty = GroupSet::empty(3);
        let pairs = select_with_fallback(Strategy::Pairs, &empty, &pop);
        assert_eq!(pairs.len(), 9);
        assert!(pairs
            .pairs
            .iter()
            .all(|p| p.provenance == Provenance::Individual));
        assert_eq!(select_with_fallback(Strategy::VsAny, &empty, &pop).len(), 6);
        let gs = genders();
        assert_eq!(
            select_with_fallback(Strategy::Pairs, &gs, &Mask::full(8)).pairs,
            select(Strategy::Pairs, &gs, &Mask::full(8)).pairs
        );
    }

    #[test]
    fn intersectional_wrapping() {
        let gs = GroupSet::from_masks(
            8,
            [
                ("m", (0..8).map(|r| r < 4).collect()),
                ("f", (0..8).map(|r| r >= 4).collect()),
                ("w", (0..8).map(|r| r % 2 == 0).collect()),
                ("b", (0..8).map(|r| r % 2 == 1).collect()),
            ],
        )
        .unwrap();
        let pop = Mask::full(8);
        assert_eq!(select_intersectional(Strategy::Pairs, &gs, &pop).len(), 64);
        assert_eq!(select_intersectional(Strategy::VsAny, &gs, &pop).len(), 16);

        let single = GroupSet::from_masks(8, [("m", (0..8).map(|r| r < 4).collect())]).unwrap();
        let a = select_intersectional(Strategy::Pairs, &single, &pop);
        let b = select(Strategy::Pairs, &single, &pop);
        assert_eq!(a.len(), b.len());
        assert_eq!(a.pairs[0].left.mask, b.pairs[0].left.mask);
    }
}
