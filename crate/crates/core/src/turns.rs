//! Taken turns, their forward closure, legality and periodic directions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::map::{DirectionMap, RoseMap};
use crate::path::{Direction, OrientedEdge, Turn};

pub type TurnSet = BTreeSet<Turn>;

/// Least fixed point of `S ↦ T(g) ∪ Dg(S)`, i.e. the turns taken by some
/// iterate of `g`.
pub fn t_infinity(g: &RoseMap) -> TurnSet {
    let dg = g.direction_map();
    closure(&dg, g.taken_turns())
}

pub(crate) fn closure(dg: &DirectionMap, seed: TurnSet) -> TurnSet {
    let mut out = seed.clone();
    let mut frontier: Vec<Turn> = seed.into_iter().collect();
    while let Some(t) = frontier.pop() {
        let image = dg.apply_turn(t);
        if out.insert(image) {
            frontier.push(image);
        }
    }
    out
}

/// Taken turns of `h_n ∘ ... ∘ h_1` assembled factor by factor:
/// the turns of `h_k` on the petals reached by `h_{k-1} ∘ ... ∘ h_1`,
/// pushed forward by `D(h_n ∘ ... ∘ h_{k+1})`.
///
/// Positive factors never cancel, so this equals
/// `RoseMap::compose_all(factors).taken_turns()`.
pub fn combined_taken_turns(factors: &[RoseMap]) -> Result<TurnSet> {
    let first = factors
        .first()
        .ok_or_else(|| Error::Precondition("empty factor list".into()))?;
    let rank = first.rank();
    for (i, h) in factors.iter().enumerate() {
        if h.rank() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                found: h.rank(),
            });
        }
        if !h.is_positive() {
            return Err(Error::Precondition(format!(
                "factor {} is not positive; its images may cancel",
                i + 1
            )));
        }
    }
    // petals crossed by the image of h_{k-1} ∘ ... ∘ h_1
    let mut reached: Vec<BTreeSet<usize>> = Vec::with_capacity(factors.len());
    let mut current: BTreeSet<usize> = (1..=rank).collect();
    for h in factors {
        reached.push(current.clone());
        current = current
            .iter()
            .flat_map(|&i| h.image(i).letters().iter().map(|l| l.index()))
            .collect();
    }
    let mut out = TurnSet::new();
    let mut suffix = DirectionMap::identity(rank);
    for (k, h) in factors.iter().enumerate().rev() {
        for &i in &reached[k] {
            for t in h.image(i).turns() {
                out.insert(suffix.apply_turn(t));
            }
        }
        suffix = suffix.compose(&h.direction_map());
    }
    Ok(out)
}

/// A turn is illegal when some iterate of `Dg` makes it degenerate.
pub fn is_legal(turn: Turn, g: &RoseMap) -> bool {
    is_legal_under(turn, &g.direction_map())
}

pub(crate) fn is_legal_under(turn: Turn, dg: &DirectionMap) -> bool {
    let mut seen = BTreeSet::new();
    let mut current = turn;
    loop {
        if current.is_degenerate() {
            return false;
        }
        if !seen.insert(current) {
            return true;
        }
        current = dg.apply_turn(current);
    }
}

/// Nondegenerate turns illegal for `g`.
pub fn illegal_turns(g: &RoseMap) -> TurnSet {
    let dg = g.direction_map();
    Turn::all(g.rank())
        .filter(|t| !t.is_degenerate() && !is_legal_under(*t, &dg))
        .collect()
}

/// Nondegenerate turns collapsed by a single application of `Dg`.
pub fn prenull_turns(g: &RoseMap) -> TurnSet {
    prenull_under(&g.direction_map())
}

pub(crate) fn prenull_under(dg: &DirectionMap) -> TurnSet {
    Turn::all(dg.rank())
        .filter(|t| !t.is_degenerate() && dg.apply_turn(*t).is_degenerate())
        .collect()
}

/// Directions on cycles of `Dg`.
pub fn periodic_directions(g: &RoseMap) -> BTreeSet<Direction> {
    periodic_under(&g.direction_map())
}

pub(crate) fn periodic_under(dg: &DirectionMap) -> BTreeSet<Direction> {
    let n = 2 * dg.rank();
    let mut out = BTreeSet::new();
    for d in OrientedEdge::all(dg.rank()) {
        // after n steps every orbit is on its cycle
        let mut x = d;
        for _ in 0..n {
            x = dg.apply(x);
        }
        let start = x;
        loop {
            out.insert(x);
            x = dg.apply(x);
            if x == start {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{
        build_family_map, enumerate_full_words, gen_elementary, gen_g12_1, gen_gw, wrap_word, FullWord,
    };
    use crate::path::OrientedEdge as E;
    use proptest::prelude::*;

    fn t(a: E, b: E) -> Turn {
        Turn::new(a, b)
    }

    fn golden() -> RoseMap {
        RoseMap::from_strs(2, &["b", "ba"]).unwrap()
    }

    fn f_w3() -> RoseMap {
        let w = wrap_word(3, &FullWord::parse(3, "23322").unwrap()).unwrap();
        build_family_map(3, &w).unwrap()
    }

    /// `⋃_{k≤n} T(g^k)` by brute force.
    fn union_of_powers(g: &RoseMap, n: usize) -> TurnSet {
        (1..=n).flat_map(|k| g.power(k).unwrap().taken_turns()).collect()
    }

    #[test]
    fn identity_has_no_turns() {
        let id = RoseMap::identity(3);
        assert!(t_infinity(&id).is_empty());
        assert!(prenull_turns(&id).is_empty());
        assert_eq!(periodic_directions(&id).len(), 6);
    }

    #[test]
    fn golden_closure_matches_powers() {
        let g = golden();
        let closed = t_infinity(&g);
        assert_eq!(closed, union_of_powers(&g, 6));
        assert_eq!(union_of_powers(&g, 6), union_of_powers(&g, 8));
        assert!(closed.contains(&t(E::reverse(1), E::forward(2))));
    }

    #[test]
    fn family_t_infinity_closed_form() {
        let g = f_w3();
        let r = 3;
        let mut expected = TurnSet::new();
        for i in 1..=r {
            for j in 2..=r {
                expected.insert(t(E::forward(i), E::reverse(j)));
            }
        }
        expected.insert(t(E::reverse(1), E::forward(r - 1)));
        assert_eq!(t_infinity(&g), expected);
        assert_eq!(union_of_powers(&g, 3), expected);
    }

    #[test]
    fn legality_examples() {
        let g = f_w3();
        assert!(!is_legal(t(E::forward(1), E::forward(1)), &g));
        assert!(!is_legal(t(E::reverse(1), E::reverse(3)), &g));
        assert!(is_legal(t(E::reverse(1), E::reverse(2)), &g));
        assert_eq!(illegal_turns(&g).into_iter().collect::<Vec<_>>(), vec![t(E::reverse(1), E::reverse(3))]);
    }

    #[test]
    fn prenull_examples() {
        let g1 = gen_elementary(3, 1).unwrap();
        assert_eq!(prenull_turns(&g1).into_iter().collect::<Vec<_>>(), vec![t(E::reverse(1), E::reverse(3))]);
        let g3 = gen_elementary(3, 3).unwrap();
        assert_eq!(prenull_turns(&g3).into_iter().collect::<Vec<_>>(), vec![t(E::reverse(2), E::reverse(3))]);
    }

    #[test]
    fn family_periodic_directions() {
        let g = f_w3();
        let expected: BTreeSet<Direction> = E::all(3).filter(|&d| d != E::reverse(1)).collect();
        assert_eq!(periodic_directions(&g), expected);
        // golden map: a ↦ b ↦ b and A ↔ B
        let p = periodic_directions(&golden());
        assert_eq!(p, [E::forward(2), E::reverse(1), E::reverse(2)].into_iter().collect());
    }

    #[test]
    fn combined_turns_on_family_factors() {
        for r in 3..=4 {
            let mut factors: Vec<RoseMap> = (1..=12).map(|k| gen_elementary(r, k).unwrap()).collect();
            let z = enumerate_full_words(r, (r - 1) * (r - 1) + 1).remove(0);
            factors.push(gen_gw(r, &wrap_word(r, &z).unwrap()).unwrap());
            let full = RoseMap::compose_all(&factors).unwrap();
            assert_eq!(combined_taken_turns(&factors).unwrap(), full.taken_turns());
            assert_eq!(combined_taken_turns(&factors[..1]).unwrap(), factors[0].taken_turns());
        }
        let g1 = gen_elementary(3, 1).unwrap();
        let g2 = gen_elementary(3, 2).unwrap();
        assert_eq!(
            combined_taken_turns(&[g1.clone(), g2.clone()]).unwrap(),
            g2.compose(&g1).unwrap().taken_turns()
        );
        assert_eq!(gen_g12_1(3).unwrap().taken_turns(), combined_taken_turns(&(1..=12).map(|k| gen_elementary(3, k).unwrap()).collect::<Vec<_>>()).unwrap());
    }

    #[test]
    fn nonpositive_factor_rejected() {
        let bad = RoseMap::from_strs(2, &["aB", "b"]).unwrap();
        assert!(combined_taken_turns(&[bad]).is_err());
    }

    fn arb_positive_map(rank: usize) -> impl Strategy<Value = RoseMap> {
        proptest::collection::vec(proptest::collection::vec(1..=rank, 1..4), rank).prop_map(move |imgs| {
            let images: Vec<String> = imgs
                .iter()
                .map(|w| w.iter().map(|&i| E::forward(i).to_char()).collect())
                .collect();
            let refs: Vec<&str> = images.iter().map(|s| s.as_str()).collect();
            RoseMap::from_strs(rank, &refs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn combined_equals_direct(maps in (3usize..=5).prop_flat_map(|r| proptest::collection::vec(arb_positive_map(r), 1..=4))) {
            let direct = RoseMap::compose_all(&maps).unwrap().taken_turns();
            prop_assert_eq!(combined_taken_turns(&maps).unwrap(), direct);
        }

        #[test]
        fn t_infinity_contains_taken_and_is_invariant(g in (2usize..=4).prop_flat_map(arb_positive_map)) {
            let closed = t_infinity(&g);
            prop_assert!(closed.is_superset(&g.taken_turns()));
            let dg = g.direction_map();
            for turn in &closed {
                prop_assert!(!dg.apply_turn(*turn).is_degenerate());
                prop_assert!(closed.contains(&dg.apply_turn(*turn)));
            }
        }

        #[test]
        fn prenull_turns_are_illegal(g in (2usize..=4).prop_flat_map(arb_positive_map)) {
            for turn in prenull_turns(&g) {
                prop_assert!(!is_legal(turn, &g));
            }
        }
    }
}
