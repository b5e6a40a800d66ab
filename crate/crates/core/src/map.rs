//! Self-maps of the rose given by the images of the positive petals.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{free_reduce, Direction, EdgePath, OrientedEdge, Turn, MAX_RANK};
use crate::spectral::TransitionMatrix;

/// A graph self-map of the rank-r rose.
///
/// Every image is nonempty and tight. Composition follows function
/// notation: `g.compose(&h)` applies `h` first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoseMap {
    rank: usize,
    images: Vec<EdgePath>,
}

/// The map `Dg` induced on the 2r directions, indexed by [`OrientedEdge::code`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectionMap {
    targets: Vec<Direction>,
}

impl DirectionMap {
    pub fn identity(rank: usize) -> Self {
        DirectionMap {
            targets: Direction::all(rank).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn apply(&self, d: Direction) -> Direction {
        self.targets[d.code()]
    }

    pub fn apply_turn(&self, t: Turn) -> Turn {
        t.map(|d| self.apply(d))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DirectionMap) -> DirectionMap {
        DirectionMap {
            targets: other.targets.iter().map(|&d| self.apply(d)).collect(),
        }
    }

    pub fn image(&self) -> BTreeSet<Direction> {
        self.targets.iter().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Direction, Direction)> + '_ {
        self.targets
            .iter()
            .enumerate()
            .map(|(code, &t)| (Direction::from_code(code), t))
    }
}

/// Evidence that some iterate of a map fails to be locally injective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTrackWitness {
    /// A turn taken by the image of some edge.
    pub taken: Turn,
    /// Smallest k with `Dg^k(taken)` degenerate; `g^(k+1)` folds the turn.
    pub iterate: usize,
    pub degenerate_image: Turn,
}

impl RoseMap {
    pub fn new(rank: usize, images: Vec<EdgePath>) -> Result<Self> {
        if !(2..=MAX_RANK).contains(&rank) {
            return Err(Error::Precondition(format!(
                "rank must lie in 2..={MAX_RANK}, got {rank}"
            )));
        }
        if images.len() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                found: images.len(),
            });
        }
        for (i, img) in images.iter().enumerate() {
            let letter = OrientedEdge::forward(i + 1);
            if img.is_empty() {
                return Err(Error::Precondition(format!("image of {letter} is empty")));
            }
            if !img.is_tight() {
                return Err(Error::Precondition(format!(
                    "image of {letter} is not tight: {img}"
                )));
            }
            if img.letters().iter().any(|l| l.index() > rank) {
                return Err(Error::Precondition(format!(
                    "image of {letter} uses a letter beyond rank {rank}"
                )));
            }
        }
        let images = images
            .into_iter()
            .map(|p| EdgePath::from_letters_unchecked(rank, p.into_letters()))
            .collect();
        Ok(RoseMap { rank, images })
    }

    /// Builds a map from image strings, e.g. `["b", "ba"]`.
    pub fn from_strs(rank: usize, images: &[&str]) -> Result<Self> {
        let images = images
            .iter()
            .map(|s| EdgePath::parse(rank, s))
            .collect::<Result<Vec<_>>>()?;
        RoseMap::new(rank, images)
    }

    pub fn identity(rank: usize) -> Self {
        let images = (1..=rank)
            .map(|i| EdgePath::from_letters_unchecked(rank, vec![OrientedEdge::forward(i)]))
            .collect();
        RoseMap { rank, images }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn images(&self) -> &[EdgePath] {
        &self.images
    }

    /// Image of the positive petal with 1-based `index`.
    pub fn image(&self, index: usize) -> &EdgePath {
        &self.images[index - 1]
    }

    /// Image of an oriented edge (reversed when the edge is).
    pub fn image_of(&self, e: OrientedEdge) -> EdgePath {
        let img = &self.images[e.index() - 1];
        if e.is_forward() {
            img.clone()
        } else {
            img.reverse()
        }
    }

    pub(crate) fn push_image(&self, e: OrientedEdge, out: &mut Vec<OrientedEdge>) {
        let img = self.images[e.index() - 1].letters();
        if e.is_forward() {
            out.extend_from_slice(img);
        } else {
            out.extend(img.iter().rev().map(|l| l.inverse()));
        }
    }

    /// Letterwise image of a path, not tightened.
    pub(crate) fn image_letters(&self, letters: &[OrientedEdge]) -> Vec<OrientedEdge> {
        let mut out = Vec::new();
        for &l in letters {
            self.push_image(l, &mut out);
        }
        out
    }

    /// Image of `p` under the map, tightened.
    pub fn apply_to_path(&self, p: &EdgePath) -> Result<EdgePath> {
        if p.rank() != self.rank {
            return Err(Error::RankMismatch {
                expected: self.rank,
                found: p.rank(),
            });
        }
        let out = self.image_letters(p.letters());
        Ok(EdgePath::from_letters_unchecked(self.rank, free_reduce(out)))
    }

    /// `self ∘ other`: apply `other`, then `self`, then tighten.
    pub fn compose(&self, other: &RoseMap) -> Result<RoseMap> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch {
                expected: self.rank,
                found: other.rank,
            });
        }
        let images = other
            .images
            .iter()
            .map(|img| self.apply_to_path(img))
            .collect::<Result<Vec<_>>>()?;
        RoseMap::new(self.rank, images)
    }

    /// `maps[last] ∘ ... ∘ maps[0]`; the first map is applied first.
    pub fn compose_all<'a>(maps: impl IntoIterator<Item = &'a RoseMap>) -> Result<RoseMap> {
        let mut iter = maps.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Precondition("empty composition".into()))?
            .clone();
        iter.try_fold(first, |acc, h| h.compose(&acc))
    }

    pub fn power(&self, k: usize) -> Result<RoseMap> {
        let mut acc = RoseMap::identity(self.rank);
        for _ in 0..k {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    pub fn direction_map(&self) -> DirectionMap {
        let targets = Direction::all(self.rank)
            .map(|d| {
                let img = self.image(d.index());
                if d.is_forward() {
                    img.first().expect("images are nonempty")
                } else {
                    img.last().expect("images are nonempty").inverse()
                }
            })
            .collect();
        DirectionMap { targets }
    }

    /// `m_ij` = number of times the image of petal i crosses petal j.
    pub fn transition_matrix(&self) -> TransitionMatrix {
        let entries = self
            .images
            .iter()
            .map(|img| (1..=self.rank).map(|j| img.count(j) as u64).collect())
            .collect();
        TransitionMatrix::new(entries).expect("square by construction")
    }

    /// Sum of the image lengths.
    pub fn norm(&self) -> usize {
        self.images.iter().map(|p| p.len()).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.images.iter().all(|p| p.is_positive())
    }

    /// Union of the turns crossed by the images of the petals.
    pub fn taken_turns(&self) -> BTreeSet<Turn> {
        self.images.iter().flat_map(|p| p.turns()).collect()
    }

    /// Train-track check on the finite closure of the taken turns under `Dg`.
    ///
    /// Returns `Ok(())` when no taken turn ever degenerates, otherwise the
    /// first offending turn with its iterate.
    pub fn train_track_check(&self) -> std::result::Result<(), TrainTrackWitness> {
        let dg = self.direction_map();
        let mut safe: BTreeSet<Turn> = BTreeSet::new();
        for taken in self.taken_turns() {
            let mut seen = BTreeSet::new();
            let mut current = taken;
            let mut k = 0;
            loop {
                if current.is_degenerate() {
                    return Err(TrainTrackWitness {
                        taken,
                        iterate: k,
                        degenerate_image: current,
                    });
                }
                if safe.contains(&current) || !seen.insert(current) {
                    break;
                }
                current = dg.apply_turn(current);
                k += 1;
            }
            safe.extend(seen);
        }
        Ok(())
    }

    pub fn is_train_track(&self) -> bool {
        self.train_track_check().is_ok()
    }

    /// True iff no petal stays forever among petals with one-letter images.
    pub fn is_expanding(&self) -> bool {
        // successor on the subgraph of single-letter images; None leaves it
        let next: Vec<Option<usize>> = self
            .images
            .iter()
            .map(|img| (img.len() == 1).then(|| img.letters()[0].index() - 1))
            .collect();
        for start in 0..self.rank {
            let mut current = start;
            for _ in 0..=self.rank {
                match next[current] {
                    Some(n) => current = n,
                    None => break,
                }
            }
            if next[current].is_some() {
                return false;
            }
        }
        true
    }

    /// Strong connectivity of the digraph `i → j` when the image of petal i
    /// crosses petal j.
    pub fn is_irreducible(&self) -> bool {
        self.transition_matrix().is_irreducible()
    }

    /// Text form: `rank: r` followed by one `letter -> image` line per petal.
    pub fn serialize(&self) -> String {
        let mut out = format!("rank: {}\n", self.rank);
        for (i, img) in self.images.iter().enumerate() {
            out.push_str(&format!("{} -> {}\n", OrientedEdge::forward(i + 1), img));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (header_line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `rank:` header".into(),
        })?;
        let rank = header
            .strip_prefix("rank:")
            .and_then(|r| r.trim().parse::<usize>().ok())
            .filter(|r| (2..=MAX_RANK).contains(r))
            .ok_or_else(|| Error::Parse {
                line: header_line,
                message: format!("expected `rank: <r>` with 2 <= r <= {MAX_RANK}, got {header:?}"),
            })?;
        let mut images: Vec<Option<EdgePath>> = vec![None; rank];
        let mut last_line = header_line;
        for (line, text) in lines {
            last_line = line;
            let err = |message: String| Error::Parse { line, message };
            let (lhs, rhs) = text
                .split_once("->")
                .ok_or_else(|| err(format!("expected `<letter> -> <path>`, got {text:?}")))?;
            let mut lhs_chars = lhs.trim().chars();
            let edge = match (lhs_chars.next().and_then(OrientedEdge::from_char), lhs_chars.next()) {
                (Some(e), None) if e.is_forward() => e,
                _ => return Err(err(format!("left side must be one lowercase letter, got {lhs:?}"))),
            };
            if edge.index() > rank {
                return Err(err(format!("edge {edge} exceeds rank {rank}")));
            }
            let rhs = rhs.trim();
            if rhs.is_empty() {
                return Err(err(format!("image of {edge} is empty")));
            }
            let mut letters = Vec::with_capacity(rhs.len());
            for c in rhs.chars() {
                let l = OrientedEdge::from_char(c)
                    .ok_or_else(|| err(format!("unknown letter {c:?}")))?;
                if l.index() > rank {
                    return Err(err(format!("letter {c} exceeds rank {rank}")));
                }
                letters.push(l);
            }
            let path = EdgePath::from_letters_unchecked(rank, letters);
            if !path.is_tight() {
                return Err(err(format!("image of {edge} is not tight: {path}")));
            }
            let slot = &mut images[edge.index() - 1];
            if slot.is_some() {
                return Err(err(format!("edge {edge} defined twice")));
            }
            *slot = Some(path);
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, img)| {
                img.ok_or_else(|| Error::Parse {
                    line: last_line,
                    message: format!(
                        "rank mismatch: no image given for {}",
                        OrientedEdge::forward(i + 1)
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RoseMap::new(rank, images)
    }
}

impl FromStr for RoseMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RoseMap::parse(s)
    }
}

impl fmt::Display for RoseMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, img)| format!("{}->{}", OrientedEdge::forward(i + 1), img))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

impl Serialize for RoseMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let images: Vec<String> = self.images.iter().map(|p| p.to_string()).collect();
        let mut st = s.serialize_struct("RoseMap", 2)?;
        st.serialize_field("rank", &self.rank)?;
        st.serialize_field("images", &images)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RoseMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rank: usize,
            images: Vec<String>,
        }
        let raw = Raw::deserialize(d)?;
        let refs: Vec<&str> = raw.images.iter().map(String::as_str).collect();
        RoseMap::from_strs(raw.rank, &refs).map_err(serde::de::Error::custom)
    }
}
