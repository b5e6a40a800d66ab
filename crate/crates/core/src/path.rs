//! Oriented edges, edge paths, directions and turns on the r-petaled rose.
//!
//! Petals are numbered `1..=r`. In text, lowercase `a, b, c, ...` are the
//! petals traversed forward and uppercase `A, B, C, ...` their reversals,
//! so `"aCb"` is x1 x̄3 x2.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest rank expressible in the letter encoding.
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Forward,
    Reverse,
}

/// A petal together with a direction of travel.
///
/// Ordering is lexicographic on `(index, orientation)` with forward first;
/// turns rely on it for their canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientedEdge {
    index: u16,
    orientation: Orientation,
}

/// The rose has a single vertex, so a direction is just the oriented edge
/// whose initial germ it is.
pub type Direction = OrientedEdge;

impl OrientedEdge {
    pub fn new(index: usize, orientation: Orientation) -> Self {
        assert!(
            (1..=MAX_RANK).contains(&index),
            "edge index {index} out of range"
        );
        OrientedEdge {
            index: index as u16,
            orientation,
        }
    }

    pub fn forward(index: usize) -> Self {
        Self::new(index, Orientation::Forward)
    }

    pub fn reverse(index: usize) -> Self {
        Self::new(index, Orientation::Reverse)
    }

    /// 1-based petal index.
    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn orientation(self) -> Orientation {
        self.orientation
    }

    pub fn is_forward(self) -> bool {
        self.orientation == Orientation::Forward
    }

    pub fn inverse(self) -> Self {
        let orientation = match self.orientation {
            Orientation::Forward => Orientation::Reverse,
            Orientation::Reverse => Orientation::Forward,
        };
        OrientedEdge { orientation, ..self }
    }

    /// Dense code in `0..2r`: forward petal i is `2(i-1)`, its reverse `2(i-1)+1`.
    pub fn code(self) -> usize {
        2 * (self.index() - 1) + usize::from(!self.is_forward())
    }

    pub fn from_code(code: usize) -> Self {
        let orientation = if code % 2 == 0 {
            Orientation::Forward
        } else {
            Orientation::Reverse
        };
        Self::new(code / 2 + 1, orientation)
    }

    pub fn to_char(self) -> char {
        let base = if self.is_forward() { b'a' } else { b'A' };
        (base + (self.index - 1) as u8) as char
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'a'..='z' => Some(Self::forward(c as usize - 'a' as usize + 1)),
            'A'..='Z' => Some(Self::reverse(c as usize - 'A' as usize + 1)),
            _ => None,
        }
    }

    /// All 2r directions at the vertex of the rank-r rose, in canonical order.
    pub fn all(rank: usize) -> impl Iterator<Item = Direction> {
        (0..2 * rank).map(Self::from_code)
    }
}

impl fmt::Display for OrientedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl Serialize for OrientedEdge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_char(self.to_char())
    }
}

impl<'de> Deserialize<'de> for OrientedEdge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let c = char::deserialize(d)?;
        OrientedEdge::from_char(c)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid edge letter {c:?}")))
    }
}

/// An unordered pair of directions, stored with the smaller one first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Turn(Direction, Direction);

impl Turn {
    pub fn new(a: Direction, b: Direction) -> Self {
        if a <= b {
            Turn(a, b)
        } else {
            Turn(b, a)
        }
    }

    pub fn first(self) -> Direction {
        self.0
    }

    pub fn second(self) -> Direction {
        self.1
    }

    pub fn is_degenerate(self) -> bool {
        self.0 == self.1
    }

    pub fn contains(self, d: Direction) -> bool {
        self.0 == d || self.1 == d
    }

    /// Image of the turn under a map of directions.
    pub fn map(self, f: impl Fn(Direction) -> Direction) -> Turn {
        Turn::new(f(self.0), f(self.1))
    }

    /// Every turn (degenerate ones included) at the vertex of the rank-r rose.
    pub fn all(rank: usize) -> impl Iterator<Item = Turn> {
        let n = 2 * rank;
        (0..n).flat_map(move |i| {
            (i..n).map(move |j| Turn::new(Direction::from_code(i), Direction::from_code(j)))
        })
    }
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.0, self.1)
    }
}

/// A finite word in the oriented petals of the rank-r rose.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgePath {
    rank: usize,
    letters: Vec<OrientedEdge>,
}

impl EdgePath {
    pub fn new(rank: usize, letters: Vec<OrientedEdge>) -> Result<Self> {
        if !(1..=MAX_RANK).contains(&rank) {
            return Err(Error::Precondition(format!(
                "rank {rank} outside 1..={MAX_RANK}"
            )));
        }
        if let Some(bad) = letters.iter().find(|l| l.index() > rank) {
            return Err(Error::Precondition(format!(
                "letter {bad} exceeds rank {rank}"
            )));
        }
        Ok(EdgePath { rank, letters })
    }

    pub(crate) fn from_letters_unchecked(rank: usize, letters: Vec<OrientedEdge>) -> Self {
        debug_assert!(letters.iter().all(|l| l.index() <= rank));
        EdgePath { rank, letters }
    }

    pub fn empty(rank: usize) -> Self {
        EdgePath {
            rank,
            letters: Vec::new(),
        }
    }

    /// Parses a whitespace-free letter string such as `"aCb"`.
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let letters = text
            .chars()
            .map(|c| {
                OrientedEdge::from_char(c).ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("unknown letter {c:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EdgePath::new(rank, letters).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[OrientedEdge] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<OrientedEdge> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<OrientedEdge> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<OrientedEdge> {
        self.letters.last().copied()
    }

    /// Reversal: letters in opposite order, each inverted.
    pub fn reverse(&self) -> EdgePath {
        EdgePath {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Free reduction.
    pub fn tighten(&self) -> EdgePath {
        EdgePath {
            rank: self.rank,
            letters: free_reduce(self.letters.iter().copied()),
        }
    }

    pub fn is_tight(&self) -> bool {
        self.letters.windows(2).all(|w| w[1] != w[0].inverse())
    }

    /// Only forward letters.
    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|l| l.is_forward())
    }

    /// Turns `{ē_i, e_(i+1)}` crossed by the path at its interior vertices.
    pub fn turns(&self) -> BTreeSet<Turn> {
        turns_of(&self.letters)
    }

    /// Number of traversals of petal `index` in either direction.
    pub fn count(&self, index: usize) -> usize {
        self.letters.iter().filter(|l| l.index() == index).count()
    }

    pub fn concat(&self, other: &EdgePath) -> EdgePath {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        EdgePath {
            rank: self.rank.max(other.rank),
            letters,
        }
    }
}

impl Serialize for EdgePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&letters_to_string(&self.letters))
    }
}

impl fmt::Display for EdgePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

/// Freely reduces a letter sequence with a stack.
pub(crate) fn free_reduce(letters: impl IntoIterator<Item = OrientedEdge>) -> Vec<OrientedEdge> {
    let mut out: Vec<OrientedEdge> = Vec::new();
    for l in letters {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub(crate) fn turns_of(letters: &[OrientedEdge]) -> BTreeSet<Turn> {
    letters
        .windows(2)
        .map(|w| Turn::new(w[0].inverse(), w[1]))
        .collect()
}

pub(crate) fn letters_to_string(letters: &[OrientedEdge]) -> String {
    letters.iter().map(|l| l.to_char()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> EdgePath {
        EdgePath::parse(3, s).unwrap()
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(p("").reverse(), p(""));
        assert_eq!(p("ac").reverse(), p("CA"));
        assert_eq!(p("aBa").reverse(), p("AbA"));
    }

    #[test]
    fn tighten_examples() {
        assert!(p("aA").tighten().is_empty());
        assert_eq!(p("abBAc").tighten(), p("c"));
        assert_eq!(p("ac").tighten(), p("ac"));
    }

    /// Deletes cancelling pairs in an arbitrary order until none remain.
    fn any_order_reduce(mut letters: Vec<OrientedEdge>, pick: &mut impl FnMut(usize) -> usize) -> Vec<OrientedEdge> {
        loop {
            let spots: Vec<usize> = (0..letters.len().saturating_sub(1))
                .filter(|&i| letters[i + 1] == letters[i].inverse())
                .collect();
            if spots.is_empty() {
                return letters;
            }
            let i = spots[pick(spots.len())];
            letters.drain(i..i + 2);
        }
    }

    #[test]
    fn tighten_matches_any_order_deletion() {
        let w = p("abBAc").into_letters();
        let mut last = |n: usize| n - 1;
        assert_eq!(any_order_reduce(w.clone(), &mut last), p("c").into_letters());
        let mut first = |_n: usize| 0;
        assert_eq!(any_order_reduce(w, &mut first), p("c").into_letters());
    }

    #[test]
    fn turns_examples() {
        let t = |a: &str, b: &str| {
            Turn::new(
                OrientedEdge::from_char(a.chars().next().unwrap()).unwrap(),
                OrientedEdge::from_char(b.chars().next().unwrap()).unwrap(),
            )
        };
        assert_eq!(p("ab").turns(), [t("A", "b")].into_iter().collect());
        assert_eq!(
            p("abcc").turns(),
            [t("A", "b"), t("B", "c"), t("C", "c")].into_iter().collect()
        );
        assert!(p("a").turns().is_empty());
    }

    #[test]
    fn turn_canonical_order() {
        let a = OrientedEdge::forward(1);
        let bb = OrientedEdge::reverse(2);
        assert_eq!(Turn::new(bb, a), Turn::new(a, bb));
        assert_eq!(Turn::new(bb, a).first(), a);
        assert!(Turn::new(a, a).is_degenerate());
        assert_eq!(Turn::all(2).count(), 10);
    }

    #[test]
    fn direction_count() {
        assert_eq!(Direction::all(5).count(), 10);
    }

    fn arb_path() -> impl Strategy<Value = EdgePath> {
        proptest::collection::vec((1usize..=4, any::<bool>()), 0..24).prop_map(|v| {
            let letters = v
                .into_iter()
                .map(|(i, f)| if f { OrientedEdge::forward(i) } else { OrientedEdge::reverse(i) })
                .collect();
            EdgePath::new(4, letters).unwrap()
        })
    }

    proptest! {
        #[test]
        fn reverse_is_involution(path in arb_path()) {
            prop_assert_eq!(path.reverse().reverse(), path);
        }

        #[test]
        fn tighten_idempotent_and_parity(path in arb_path()) {
            let t = path.tighten();
            prop_assert!(t.is_tight());
            prop_assert_eq!(t.tighten(), t.clone());
            prop_assert!(t.len() <= path.len());
            prop_assert_eq!(t.len() % 2, path.len() % 2);
        }

        #[test]
        fn turns_invariant_under_reversal(path in arb_path()) {
            let path = path.tighten();
            prop_assert_eq!(path.reverse().turns(), path.turns());
        }

        #[test]
        fn text_round_trip(path in arb_path()) {
            prop_assert_eq!(EdgePath::parse(4, &path.to_string()).unwrap(), path);
        }
    }
}
