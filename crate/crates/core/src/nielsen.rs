//! Periodic Nielsen paths: a bounded unfolding search for indivisible
//! Nielsen paths of `g^p`, and a constraint-propagation certifier that rules
//! them out for every period at once when `g` comes with a factorization
//! into positive maps.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{DirectionMap, RoseMap};
use crate::path::{EdgePath, OrientedEdge, Turn};
use crate::spectral::DEFAULT_TOL;
use crate::turns::{illegal_turns, prenull_under, t_infinity, TurnSet};

/// Default largest period examined by the unfolding search.
pub const DEFAULT_R_MAX: usize = 3;

/// Tolerance for eigenmetric endpoint equations.
pub const LENGTH_TOL: f64 = 1e-9;

const DEFAULT_NODE_BUDGET: usize = 200_000;

/// PF right eigenvector of `M(g)`, normalized to sum 1: the eigenmetric
/// petal lengths.
pub fn eigen_lengths(g: &RoseMap) -> Result<Vec<f64>> {
    Ok(g.transition_matrix()
        .pf_eigenvalue(DEFAULT_TOL)?
        .right_eigenvector)
}

// ---------------------------------------------------------------------------
// Lazy images under a chain of maps

/// Images under `maps[m-1] ∘ ... ∘ maps[0]`, expanded on demand.
///
/// An item `(j, x)` stands for the image of `x` under `maps[j..]`; its
/// letter count and weight are tabulated so equal items can be skipped.
struct Chain<'a> {
    maps: Vec<&'a RoseMap>,
    lens: Vec<Vec<u64>>,
    weights: Vec<Vec<f64>>,
}

impl<'a> Chain<'a> {
    fn new(maps: Vec<&'a RoseMap>, rank: usize, leaf_weights: Option<&[f64]>) -> Self {
        let m = maps.len();
        let n = 2 * rank;
        let mut lens = vec![vec![1u64; n]; m + 1];
        let mut weights = vec![vec![1.0f64; n]; m + 1];
        if let Some(w) = leaf_weights {
            for d in OrientedEdge::all(rank) {
                weights[m][d.code()] = w[d.index() - 1];
            }
        }
        for j in (0..m).rev() {
            for d in OrientedEdge::all(rank) {
                let img = maps[j].image(d.index()).letters();
                let (mut len, mut wt) = (0u64, 0.0);
                for l in img {
                    len = len.saturating_add(lens[j + 1][l.code()]);
                    wt += weights[j + 1][l.code()];
                }
                lens[j][d.code()] = len;
                weights[j][d.code()] = wt;
            }
        }
        Chain {
            maps,
            lens,
            weights,
        }
    }

    fn depth(&self) -> usize {
        self.maps.len()
    }

    fn child(&self, level: usize, parent: OrientedEdge, idx: usize) -> Option<OrientedEdge> {
        let img = self.maps[level].image(parent.index()).letters();
        if idx >= img.len() {
            None
        } else if parent.is_forward() {
            Some(img[idx])
        } else {
            Some(img[img.len() - 1 - idx].inverse())
        }
    }

    fn len_of(&self, word: &[OrientedEdge]) -> u64 {
        word.iter()
            .fold(0u64, |acc, l| acc.saturating_add(self.lens[0][l.code()]))
    }
}

struct Frame {
    /// Level of the items in this frame.
    level: usize,
    parent: OrientedEdge,
    idx: usize,
}

/// Left-to-right reader of the (untightened) image of a word.
struct Stream<'c, 'a> {
    chain: &'c Chain<'a>,
    root: &'c [OrientedEdge],
    root_idx: usize,
    stack: Vec<Frame>,
    pos: u64,
    weight: f64,
}

impl<'c, 'a> Stream<'c, 'a> {
    fn new(chain: &'c Chain<'a>, root: &'c [OrientedEdge]) -> Self {
        Stream {
            chain,
            root,
            root_idx: 0,
            stack: Vec::new(),
            pos: 0,
            weight: 0.0,
        }
    }

    fn peek(&mut self) -> Option<(usize, OrientedEdge)> {
        while let Some(f) = self.stack.last() {
            if let Some(x) = self.chain.child(f.level - 1, f.parent, f.idx) {
                return Some((f.level, x));
            }
            self.stack.pop();
        }
        self.root.get(self.root_idx).map(|&x| (0, x))
    }

    fn consume(&mut self) {
        match self.stack.last_mut() {
            Some(f) => f.idx += 1,
            None => self.root_idx += 1,
        }
    }

    fn skip(&mut self) {
        let (level, x) = self.peek().expect("item to skip");
        self.pos = self.pos.saturating_add(self.chain.lens[level][x.code()]);
        self.weight += self.chain.weights[level][x.code()];
        self.consume();
    }

    fn expand(&mut self) {
        let (level, x) = self.peek().expect("item to expand");
        debug_assert!(level < self.chain.depth());
        self.consume();
        self.stack.push(Frame {
            level: level + 1,
            parent: x,
            idx: 0,
        });
    }

    fn next_letter(&mut self) -> Option<OrientedEdge> {
        loop {
            let (level, x) = self.peek()?;
            if level == self.chain.depth() {
                self.skip();
                return Some(x);
            }
            self.expand();
        }
    }

    fn skip_to(&mut self, target: u64) {
        while self.pos < target {
            let Some((level, x)) = self.peek() else {
                return;
            };
            if self.pos.saturating_add(self.chain.lens[level][x.code()]) <= target {
                self.skip();
            } else {
                self.expand();
            }
        }
    }
}

enum Prefix {
    /// The images first differ at letter `t`; `weight` is the eigen length
    /// of the common part.
    Diverged {
        t: u64,
        weight: f64,
        left: OrientedEdge,
        right: OrientedEdge,
    },
    /// One image is an initial segment of the other.
    Nested,
}

fn common_prefix(chain: &Chain<'_>, a: &[OrientedEdge], b: &[OrientedEdge]) -> Prefix {
    let mut sa = Stream::new(chain, a);
    let mut sb = Stream::new(chain, b);
    loop {
        let (Some((ka, xa)), Some((kb, xb))) = (sa.peek(), sb.peek()) else {
            return Prefix::Nested;
        };
        let leaf = chain.depth();
        if ka == kb && xa == xb {
            sa.skip();
            sb.skip();
        } else if ka == leaf && kb == leaf {
            return Prefix::Diverged {
                t: sa.pos,
                weight: sa.weight,
                left: xa,
                right: xb,
            };
        } else if ka <= kb && ka < leaf {
            sa.expand();
        } else {
            sb.expand();
        }
    }
}

/// Letters `t, t+1, ..., t+count-1` of the image of `word` (fewer if the
/// image is shorter).
fn letters_from(chain: &Chain<'_>, word: &[OrientedEdge], t: u64, count: usize) -> Vec<OrientedEdge> {
    let mut s = Stream::new(chain, word);
    s.skip_to(t);
    (0..count).map_while(|_| s.next_letter()).collect()
}

fn extensions(last: OrientedEdge, rank: usize, allowed: &TurnSet) -> Vec<OrientedEdge> {
    OrientedEdge::all(rank)
        .filter(|&l| l != last.inverse() && allowed.contains(&Turn::new(last.inverse(), l)))
        .collect()
}

fn word_string(w: &[OrientedEdge]) -> String {
    w.iter().map(|l| l.to_char()).collect()
}

// ---------------------------------------------------------------------------
// Unfolding search

/// A periodic indivisible Nielsen path `ρ = ρ̄1 ρ2` found by the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InpCandidate {
    pub period: usize,
    pub base_turn: Turn,
    /// Petals met by ρ1 and ρ2; the last one may be crossed only partly.
    pub rho1: EdgePath,
    pub rho2: EdgePath,
    /// Fraction in `(0, 1]` of the last petal of each half.
    pub end_fraction1: f64,
    pub end_fraction2: f64,
    /// Eigen length of each half.
    pub half_length: f64,
    /// Number of letters cancelled between the images of the halves.
    pub tau_letters: u64,
    pub tau_length: f64,
}

impl InpCandidate {
    /// `ρ̄1 ρ2` as a letter path (partial end petals shown whole).
    pub fn path(&self) -> EdgePath {
        self.rho1.reverse().concat(&self.rho2)
    }

    fn key(&self) -> (String, String) {
        (self.rho1.to_string(), self.rho2.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeathReason {
    /// The junction turn at this stage cannot be illegal.
    JunctionNotIllegal,
    /// No letter keeps the half inside the turns of the closure.
    NoLegalExtension,
    /// A half disagrees with the tail of its own image.
    NotFixed,
    /// The exact recheck rejected a combinatorial match.
    RecheckFailed,
}

/// One refutation or forcing step, replayable against the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum TraceStep {
    Seed {
        period: usize,
        turn: Turn,
    },
    Forced {
        stage: usize,
        side: usize,
        position: usize,
        letter: OrientedEdge,
    },
    Death {
        period: usize,
        stage: usize,
        rho1: String,
        rho2: String,
        junction: Option<Turn>,
        reason: DeathReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedOutcome {
    Refuted,
    Confirmed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub turn: Turn,
    pub outcome: SeedOutcome,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum SearchOutcome {
    Found { candidates: Vec<InpCandidate> },
    CertifiedEmpty,
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnfoldingReport {
    pub period: usize,
    pub max_depth: usize,
    pub seeds: Vec<SeedReport>,
    pub outcome: SearchOutcome,
    pub trace: Vec<TraceStep>,
}

/// Options for [`unfolding_inp_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Bound on `|ρ1| + |ρ2|` in letters; `None` means `4·r·max|g(e)|`.
    pub max_depth: Option<usize>,
    pub tol: f64,
    pub node_budget: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_depth: None,
            tol: LENGTH_TOL,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

pub fn default_max_depth(g: &RoseMap) -> usize {
    let longest = g.images().iter().map(|p| p.len()).max().unwrap_or(1);
    4 * g.rank() * longest
}

fn check_search_input(g: &RoseMap) -> Result<()> {
    if !g.is_train_track() {
        return Err(Error::Precondition("map is not a train track map".into()));
    }
    if !g.is_expanding() {
        return Err(Error::Precondition("map is not expanding".into()));
    }
    if !g.is_irreducible() {
        return Err(Error::Precondition("map is not irreducible".into()));
    }
    Ok(())
}

fn direction_power(g: &RoseMap, p: usize) -> DirectionMap {
    let dg = g.direction_map();
    let mut acc = DirectionMap::identity(g.rank());
    for _ in 0..p {
        acc = dg.compose(&acc);
    }
    acc
}

struct Unfolder<'a> {
    rank: usize,
    period: usize,
    chain: Chain<'a>,
    lengths: Vec<f64>,
    lambda_h: f64,
    allowed: TurnSet,
    max_depth: usize,
    tol: f64,
    node_budget: usize,
    nodes: usize,
    g: &'a RoseMap,
    trace: Vec<TraceStep>,
    found: Vec<InpCandidate>,
    inconclusive: bool,
}

impl<'a> Unfolder<'a> {
    fn weight(&self, w: &[OrientedEdge]) -> f64 {
        w.iter().map(|l| self.lengths[l.index() - 1]).sum()
    }

    fn die(&mut self, a: &[OrientedEdge], b: &[OrientedEdge], junction: Option<Turn>, reason: DeathReason) {
        self.trace.push(TraceStep::Death {
            period: self.period,
            stage: 1,
            rho1: word_string(a),
            rho2: word_string(b),
            junction,
            reason,
        });
    }

    fn explore(&mut self, a: Vec<OrientedEdge>, b: Vec<OrientedEdge>) {
        if self.inconclusive {
            return;
        }
        self.nodes += 1;
        if a.len() + b.len() > self.max_depth || self.nodes > self.node_budget {
            self.inconclusive = true;
            return;
        }
        match common_prefix(&self.chain, &a, &b) {
            Prefix::Nested => {
                let extend_a = self.chain.len_of(&a) <= self.chain.len_of(&b);
                self.branch(a, b, extend_a, None);
            }
            Prefix::Diverged {
                t,
                weight,
                left,
                right,
            } => {
                let junction = Turn::new(left, right);
                let s = weight / (self.lambda_h - 1.0);
                for side in 0..2 {
                    let word = if side == 0 { &a } else { &b };
                    let tail = letters_from(&self.chain, word, t, word.len() + 1);
                    if tail.iter().zip(word.iter()).any(|(x, y)| x != y) {
                        self.die(&a, &b, Some(junction), DeathReason::NotFixed);
                        return;
                    }
                    if self.weight(word) < s - self.tol {
                        if tail.len() > word.len() {
                            let forced = tail[word.len()];
                            let last = *word.last().expect("nonempty half");
                            if forced == last.inverse()
                                || !self.allowed.contains(&Turn::new(last.inverse(), forced))
                            {
                                self.die(&a, &b, Some(junction), DeathReason::NoLegalExtension);
                                return;
                            }
                            let (mut a2, mut b2) = (a.clone(), b.clone());
                            if side == 0 {
                                a2.push(forced);
                            } else {
                                b2.push(forced);
                            }
                            self.explore(a2, b2);
                        } else {
                            self.branch(a, b, side == 0, Some(junction));
                        }
                        return;
                    }
                }
                self.confirm(a, b, s, t, weight);
            }
        }
    }

    fn branch(&mut self, a: Vec<OrientedEdge>, b: Vec<OrientedEdge>, extend_a: bool, junction: Option<Turn>) {
        let last = if extend_a { a[a.len() - 1] } else { b[b.len() - 1] };
        let options = extensions(last, self.rank, &self.allowed);
        if options.is_empty() {
            self.die(&a, &b, junction, DeathReason::NoLegalExtension);
        }
        for l in options {
            let (mut a2, mut b2) = (a.clone(), b.clone());
            if extend_a {
                a2.push(l);
            } else {
                b2.push(l);
            }
            self.explore(a2, b2);
        }
    }

    /// Trims each half to the letters covering length `s` and runs the
    /// exact recheck.
    fn confirm(&mut self, a: Vec<OrientedEdge>, b: Vec<OrientedEdge>, s: f64, t: u64, tau: f64) {
        let trim = |w: &[OrientedEdge]| -> (Vec<OrientedEdge>, f64) {
            let mut acc = 0.0;
            for (i, l) in w.iter().enumerate() {
                let len = self.lengths[l.index() - 1];
                if acc + len >= s - self.tol {
                    let frac = ((s - acc) / len).clamp(0.0, 1.0);
                    let frac = if frac > 1.0 - self.tol { 1.0 } else { frac };
                    return (w[..=i].to_vec(), frac);
                }
                acc += len;
            }
            (w.to_vec(), 1.0)
        };
        let (a_m, fa) = trim(&a);
        let (b_m, fb) = trim(&b);
        let candidate = InpCandidate {
            period: self.period,
            base_turn: Turn::new(a[0], b[0]),
            rho1: EdgePath::new(self.rank, a_m).expect("letters in range"),
            rho2: EdgePath::new(self.rank, b_m).expect("letters in range"),
            end_fraction1: fa,
            end_fraction2: fb,
            half_length: s,
            tau_letters: t,
            tau_length: tau,
        };
        if recheck_inp(self.g, &candidate, self.tol) {
            if !self.found.iter().any(|c| c.key() == candidate.key()) {
                self.found.push(candidate);
            }
        } else {
            self.die(&a, &b, None, DeathReason::RecheckFailed);
        }
    }
}

/// Searches for indivisible Nielsen paths of `g^period`.
///
/// Seeds are the prenull turns of `g^period`; each seed is unfolded letter
/// by letter, branching only where the images do not force the next letter.
pub fn unfolding_inp_search(g: &RoseMap, period: usize, options: &SearchOptions) -> Result<UnfoldingReport> {
    check_search_input(g)?;
    if period == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let spectral = g.transition_matrix().pf_eigenvalue(DEFAULT_TOL)?;
    let max_depth = options.max_depth.unwrap_or_else(|| default_max_depth(g));
    let mut unfolder = Unfolder {
        rank: g.rank(),
        period,
        chain: Chain::new(vec![g; period], g.rank(), Some(&spectral.right_eigenvector)),
        lengths: spectral.right_eigenvector.clone(),
        lambda_h: spectral.lambda.powi(period as i32),
        allowed: t_infinity(g),
        max_depth,
        tol: options.tol,
        node_budget: options.node_budget,
        nodes: 0,
        g,
        trace: Vec::new(),
        found: Vec::new(),
        inconclusive: false,
    };
    let seeds = prenull_under(&direction_power(g, period));
    let mut reports = Vec::new();
    let mut any_inconclusive = false;
    for turn in seeds {
        unfolder.trace.push(TraceStep::Seed { period, turn });
        let before = unfolder.found.len();
        unfolder.nodes = 0;
        unfolder.inconclusive = false;
        unfolder.explore(vec![turn.first()], vec![turn.second()]);
        let outcome = if unfolder.found.len() > before {
            SeedOutcome::Confirmed
        } else if unfolder.inconclusive {
            any_inconclusive = true;
            SeedOutcome::Inconclusive
        } else {
            SeedOutcome::Refuted
        };
        reports.push(SeedReport {
            turn,
            outcome,
            nodes: unfolder.nodes,
        });
    }
    let outcome = if !unfolder.found.is_empty() {
        SearchOutcome::Found {
            candidates: unfolder.found.clone(),
        }
    } else if any_inconclusive {
        SearchOutcome::Inconclusive {
            reason: format!("depth bound {max_depth} or node budget {} exhausted", options.node_budget),
        }
    } else {
        SearchOutcome::CertifiedEmpty
    };
    Ok(UnfoldingReport {
        period,
        max_depth,
        seeds: reports,
        outcome,
        trace: unfolder.trace,
    })
}

/// Independent check that `g^period` fixes the candidate: the tightened
/// image of `ρ̄1 ρ2` (computed by repeated application and tightening)
/// cancels exactly the common prefix of the images of the halves, each half
/// reappears at the start of its own image's tail, and the endpoint length
/// equation `λ^p s = L(τ) + s` holds within `tol`.
pub fn recheck_inp(g: &RoseMap, c: &InpCandidate, tol: f64) -> bool {
    let Ok(spectral) = g.transition_matrix().pf_eigenvalue(DEFAULT_TOL) else {
        return false;
    };
    let lengths = &spectral.right_eigenvector;
    let iterate = |p: &EdgePath| -> Option<EdgePath> {
        let mut out = p.clone();
        for _ in 0..c.period {
            out = g.apply_to_path(&out).ok()?;
        }
        Some(out)
    };
    let (Some(h1), Some(h2), Some(hr)) = (iterate(&c.rho1), iterate(&c.rho2), iterate(&c.path())) else {
        return false;
    };
    let (l1, l2) = (h1.letters(), h2.letters());
    let t = l1.iter().zip(l2).take_while(|(x, y)| x == y).count();
    // legal halves: the image of ρ̄1 ρ2 only cancels the common prefix
    if hr.len() + 2 * t != l1.len() + l2.len() {
        return false;
    }
    let (x1, x2) = (&l1[t..], &l2[t..]);
    if !x1.starts_with(c.rho1.letters()) || !x2.starts_with(c.rho2.letters()) {
        return false;
    }
    let tau: f64 = l1[..t].iter().map(|l| lengths[l.index() - 1]).sum();
    let half = |p: &EdgePath, frac: f64| -> f64 {
        let w = p.letters();
        let full: f64 = w[..w.len() - 1].iter().map(|l| lengths[l.index() - 1]).sum();
        full + frac * lengths[w[w.len() - 1].index() - 1]
    };
    let lambda_h = spectral.lambda.powi(c.period as i32);
    [half(&c.rho1, c.end_fraction1), half(&c.rho2, c.end_fraction2)]
        .iter()
        .all(|&s| (lambda_h * s - tau - s).abs() <= tol.max(1e-9) * lambda_h.max(1.0))
}

// ---------------------------------------------------------------------------
// Factorization certifier

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMethod {
    UnfoldingSearch,
    FactorizationPropagation,
}

/// Evidence that a map has no periodic Nielsen paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnpFreeCertificate {
    pub method: CertificateMethod,
    /// Periods covered; empty when the argument covers every period.
    pub periods: Vec<usize>,
    pub all_periods: bool,
    /// Largest stage at which a branch died.
    pub contradiction_stage: usize,
    /// Letters forced along the way, in the order they were forced.
    pub forced: Vec<ForcedLetter>,
    /// For each stage, whether the stage's illegal turns are exactly the
    /// prenull turns of the next factor.
    pub strict_rule: Option<bool>,
    pub trace: Vec<TraceStep>,
}

/// A letter of ρ1 (`side` 1) or ρ2 (`side` 2) fixed by the propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedLetter {
    pub side: usize,
    pub position: usize,
    pub letter: OrientedEdge,
    pub stage: usize,
}

/// Branch that outlived the certifier's stage budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivingCandidate {
    pub rho1: EdgePath,
    pub rho2: EdgePath,
    pub stage: usize,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum FactorizationOutcome {
    Certificate(PnpFreeCertificate),
    Surviving(SurvivingCandidate),
}

/// For each phase `q`, the nondegenerate turns that some iterate of the
/// cyclic sequence `D factors[q], D factors[q+1], ...` collapses.
pub fn cyclic_illegal_turns(factors: &[RoseMap]) -> Vec<TurnSet> {
    let n = factors.len();
    let rank = factors[0].rank();
    let dms: Vec<DirectionMap> = factors.iter().map(|h| h.direction_map()).collect();
    let turns: Vec<Turn> = Turn::all(rank).filter(|t| !t.is_degenerate()).collect();
    let mut il: Vec<TurnSet> = vec![TurnSet::new(); n];
    loop {
        let mut changed = false;
        for q in 0..n {
            for &t in &turns {
                if il[q].contains(&t) {
                    continue;
                }
                let image = dms[q].apply_turn(t);
                if image.is_degenerate() || il[(q + 1) % n].contains(&image) {
                    il[q].insert(t);
                    changed = true;
                }
            }
        }
        if !changed {
            return il;
        }
    }
}

struct Propagator<'a> {
    factors: &'a [RoseMap],
    rank: usize,
    il: Vec<TurnSet>,
    allowed: TurnSet,
    max_stage: usize,
    max_depth: usize,
    chains: Vec<Chain<'a>>,
    trace: Vec<TraceStep>,
    forced: Vec<ForcedLetter>,
    max_death: usize,
    survivor: Option<SurvivingCandidate>,
}

enum StageResult {
    Dead,
    /// Needs a letter on side 0 (ρ1) or 1 (ρ2) at the given stage.
    Extend(usize, usize),
    Survived(usize),
}

impl<'a> Propagator<'a> {
    fn chain(&mut self, stage: usize) -> &Chain<'a> {
        // stage s reads the image under the first s-1 factors, cyclically
        while self.chains.len() < stage {
            let s = self.chains.len() + 1;
            let maps = (0..s - 1).map(|i| &self.factors[i % self.factors.len()]).collect();
            self.chains.push(Chain::new(maps, self.rank, None));
        }
        &self.chains[stage - 1]
    }

    fn die(&mut self, a: &[OrientedEdge], b: &[OrientedEdge], stage: usize, junction: Option<Turn>, reason: DeathReason) {
        self.max_death = self.max_death.max(stage);
        self.trace.push(TraceStep::Death {
            period: 0,
            stage,
            rho1: word_string(a),
            rho2: word_string(b),
            junction,
            reason,
        });
    }

    /// Advances through the stages until a letter is needed, the branch
    /// dies, or the stage budget is spent.
    fn run(&mut self, a: &[OrientedEdge], b: &[OrientedEdge], mut stage: usize) -> StageResult {
        loop {
            if stage > self.max_stage {
                return StageResult::Survived(stage);
            }
            let n = self.factors.len();
            let phase = (stage - 1) % n;
            let prefix = common_prefix(self.chain(stage), a, b);
            match prefix {
                Prefix::Diverged { left, right, .. } => {
                    let junction = Turn::new(left, right);
                    if !self.il[phase].contains(&junction) {
                        self.die(a, b, stage, Some(junction), DeathReason::JunctionNotIllegal);
                        return StageResult::Dead;
                    }
                    stage += 1;
                }
                Prefix::Nested => {
                    let chain = self.chain(stage);
                    let (la, lb) = (chain.len_of(a), chain.len_of(b));
                    let side = usize::from(la > lb || (la == lb && a.len() > b.len()));
                    return StageResult::Extend(side, stage);
                }
            }
        }
    }

    /// Junction check at a single stage; undetermined junctions pass.
    fn passes_stage(&mut self, a: &[OrientedEdge], b: &[OrientedEdge], stage: usize) -> bool {
        let phase = (stage - 1) % self.factors.len();
        if let Prefix::Diverged { left, right, .. } = common_prefix(self.chain(stage), a, b) {
            let junction = Turn::new(left, right);
            if !self.il[phase].contains(&junction) {
                self.die(a, b, stage, Some(junction), DeathReason::JunctionNotIllegal);
                return false;
            }
        }
        true
    }

    fn explore(&mut self, a: Vec<OrientedEdge>, b: Vec<OrientedEdge>, stage: usize) {
        if self.survivor.is_some() {
            return;
        }
        match self.run(&a, &b, stage) {
            StageResult::Dead => {}
            StageResult::Survived(s) => {
                self.survivor = Some(SurvivingCandidate {
                    rho1: EdgePath::new(self.rank, a).expect("letters in range"),
                    rho2: EdgePath::new(self.rank, b).expect("letters in range"),
                    stage: s,
                    trace: Vec::new(),
                });
            }
            StageResult::Extend(side, stage) => {
                if a.len() + b.len() >= self.max_depth {
                    self.survivor = Some(SurvivingCandidate {
                        rho1: EdgePath::new(self.rank, a).expect("letters in range"),
                        rho2: EdgePath::new(self.rank, b).expect("letters in range"),
                        stage,
                        trace: Vec::new(),
                    });
                    return;
                }
                let word = if side == 0 { &a } else { &b };
                let options = extensions(word[word.len() - 1], self.rank, &self.allowed);
                let mut alive = Vec::new();
                for l in options {
                    let (mut a2, mut b2) = (a.clone(), b.clone());
                    if side == 0 {
                        a2.push(l);
                    } else {
                        b2.push(l);
                    }
                    if self.passes_stage(&a2, &b2, stage) {
                        alive.push((l, a2, b2));
                    }
                }
                if alive.is_empty() {
                    self.die(&a, &b, stage, None, DeathReason::NoLegalExtension);
                    return;
                }
                if alive.len() == 1 {
                    let (l, ref a2, ref b2) = alive[0];
                    self.forced.push(ForcedLetter {
                        side: side + 1,
                        position: if side == 0 { a2.len() } else { b2.len() },
                        letter: l,
                        stage,
                    });
                    self.trace.push(TraceStep::Forced {
                        stage,
                        side: side + 1,
                        position: if side == 0 { a2.len() } else { b2.len() },
                        letter: l,
                    });
                }
                for (_, a2, b2) in alive {
                    self.explore(a2, b2, stage);
                }
            }
        }
    }
}

/// Options for [`factorization_pnp_certifier`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifierOptions {
    /// Number of passes through the factor list before a branch counts as
    /// surviving.
    pub r_max: usize,
    /// Bound on `|ρ1| + |ρ2|`; `None` means `4·r·max|g(e)|` for the product.
    pub max_depth: Option<usize>,
}

impl Default for CertifierOptions {
    fn default() -> Self {
        CertifierOptions {
            r_max: DEFAULT_R_MAX,
            max_depth: None,
        }
    }
}

/// Propagates the illegal-turn constraint through a factorization
/// `g = h_n ∘ ... ∘ h_1` into positive maps.
///
/// Any periodic Nielsen path `ρ = ρ̄1 ρ2` of `g` has its junction at an
/// illegal turn, and so does its image under every partial product
/// `h_{s-1} ∘ ... ∘ h_1`, for the correspondingly rotated map. Stage `s`
/// checks that junction against the turns illegal for the rotation starting
/// at `h_s`. Halves are extended one letter at a time through turns of the
/// closure `T∞(g)`. A certificate is returned when every branch dies; a
/// branch that survives the stage budget is returned for inspection.
pub fn factorization_pnp_certifier(factors: &[RoseMap], options: &CertifierOptions) -> Result<FactorizationOutcome> {
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
            return Err(Error::Precondition(format!("factor {} is not positive", i + 1)));
        }
    }
    let g = RoseMap::compose_all(factors)?;
    check_search_input(&g)?;
    let illegal = illegal_turns(&g);
    if illegal.len() != 1 {
        return Err(Error::Precondition(format!(
            "the product must have exactly one illegal turn, found {}",
            illegal.len()
        )));
    }
    let il = cyclic_illegal_turns(factors);
    debug_assert_eq!(il[0], illegal);
    let strict = factors
        .iter()
        .zip(&il)
        .all(|(h, set)| prenull_under(&h.direction_map()) == *set);
    let mut prop = Propagator {
        factors,
        rank,
        il,
        allowed: t_infinity(&g),
        max_stage: options.r_max * factors.len() + 1,
        max_depth: options.max_depth.unwrap_or_else(|| default_max_depth(&g)),
        chains: Vec::new(),
        trace: Vec::new(),
        forced: Vec::new(),
        max_death: 0,
        survivor: None,
    };
    let seed = *illegal.iter().next().expect("one illegal turn");
    prop.trace.push(TraceStep::Seed { period: 0, turn: seed });
    for (side, d) in [(1, seed.first()), (2, seed.second())] {
        prop.forced.push(ForcedLetter {
            side,
            position: 1,
            letter: d,
            stage: 1,
        });
    }
    prop.explore(vec![seed.first()], vec![seed.second()], 1);
    if let Some(mut s) = prop.survivor.take() {
        s.trace = prop.trace;
        return Ok(FactorizationOutcome::Surviving(s));
    }
    Ok(FactorizationOutcome::Certificate(PnpFreeCertificate {
        method: CertificateMethod::FactorizationPropagation,
        periods: Vec::new(),
        all_periods: true,
        contradiction_stage: prop.max_death,
        forced: prop.forced,
        strict_rule: Some(strict),
        trace: prop.trace,
    }))
}

/// Replays every death recorded in a factorization certificate: each
/// junction is recomputed from the recorded halves and must fall outside
/// the stage's illegal turns.
pub fn replay_factorization_trace(factors: &[RoseMap], cert: &PnpFreeCertificate) -> bool {
    if factors.is_empty() {
        return false;
    }
    let rank = factors[0].rank();
    let il = cyclic_illegal_turns(factors);
    let Ok(g) = RoseMap::compose_all(factors) else {
        return false;
    };
    let allowed = t_infinity(&g);
    cert.trace.iter().all(|step| match step {
        TraceStep::Death {
            stage,
            rho1,
            rho2,
            junction,
            reason,
            ..
        } => {
            let (Ok(a), Ok(b)) = (EdgePath::parse(rank, rho1), EdgePath::parse(rank, rho2)) else {
                return false;
            };
            let maps = (0..stage - 1).map(|i| &factors[i % factors.len()]).collect();
            let chain = Chain::new(maps, rank, None);
            match reason {
                DeathReason::JunctionNotIllegal => match common_prefix(&chain, a.letters(), b.letters()) {
                    Prefix::Diverged { left, right, .. } => {
                        let j = Turn::new(left, right);
                        Some(j) == *junction && !il[(stage - 1) % factors.len()].contains(&j)
                    }
                    Prefix::Nested => false,
                },
                DeathReason::NoLegalExtension => {
                    // every extension of the side that needs a letter dies
                    let (la, lb) = (chain.len_of(a.letters()), chain.len_of(b.letters()));
                    let side_a = !(la > lb || (la == lb && a.len() > b.len()));
                    let word = if side_a { a.letters() } else { b.letters() };
                    extensions(word[word.len() - 1], rank, &allowed).iter().all(|&l| {
                        let (mut a2, mut b2) = (a.letters().to_vec(), b.letters().to_vec());
                        if side_a {
                            a2.push(l);
                        } else {
                            b2.push(l);
                        }
                        let (s1, s2) = (word_string(&a2), word_string(&b2));
                        cert.trace.iter().any(|s| {
                            matches!(s, TraceStep::Death { rho1, rho2, .. } if *rho1 == s1 && *rho2 == s2)
                        })
                    })
                }
                _ => false,
            }
        }
        _ => true,
    })
}

// ---------------------------------------------------------------------------
// Combined certification

/// Options for [`certify_pnp_free`].
#[derive(Debug, Clone, Default)]
pub struct CertifyOptions {
    pub r_max: Option<usize>,
    pub search: SearchOptions,
    /// Positive factors of the map, enabling the period-uniform certifier.
    pub factors: Option<Vec<RoseMap>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum PnpVerdict {
    Free { certificate: PnpFreeCertificate },
    NielsenPathFound { inp: InpCandidate },
}

/// Runs the factorization certifier when factors are supplied and the
/// unfolding search for periods `1..=r_max`.
///
/// A found Nielsen path always wins. Otherwise either method certifying
/// suffices; if neither does the result is [`Error::Inconclusive`].
pub fn certify_pnp_free(g: &RoseMap, options: &CertifyOptions) -> Result<PnpVerdict> {
    check_search_input(g)?;
    let r_max = options.r_max.unwrap_or(DEFAULT_R_MAX);
    let mut unfolding_trace = Vec::new();
    let mut unfolding_ok = true;
    for period in 1..=r_max {
        let report = unfolding_inp_search(g, period, &options.search)?;
        match report.outcome {
            SearchOutcome::Found { mut candidates } => {
                return Ok(PnpVerdict::NielsenPathFound {
                    inp: candidates.remove(0),
                });
            }
            SearchOutcome::CertifiedEmpty => unfolding_trace.extend(report.trace),
            SearchOutcome::Inconclusive { .. } => unfolding_ok = false,
        }
    }
    if let Some(factors) = &options.factors {
        let product = RoseMap::compose_all(factors)?;
        if product != *g {
            return Err(Error::Precondition("factors do not compose to the map".into()));
        }
        if let FactorizationOutcome::Certificate(c) = factorization_pnp_certifier(
            factors,
            &CertifierOptions {
                r_max,
                max_depth: options.search.max_depth,
            },
        )? {
            return Ok(PnpVerdict::Free { certificate: c });
        }
    }
    if unfolding_ok {
        return Ok(PnpVerdict::Free {
            certificate: PnpFreeCertificate {
                method: CertificateMethod::UnfoldingSearch,
                periods: (1..=r_max).collect(),
                all_periods: false,
                contradiction_stage: 1,
                forced: Vec::new(),
                strict_rule: None,
                trace: unfolding_trace,
            },
        });
    }
    Err(Error::Inconclusive(format!(
        "no method certified absence of periodic Nielsen paths up to period {r_max}"
    )))
}

/// Distinct seeds (turns) over several periods, for reporting.
pub fn seed_turns(g: &RoseMap, period: usize) -> BTreeSet<Turn> {
    prenull_under(&direction_power(g, period))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_family_map, enumerate_full_words, family_factors, wrap_word};
    use crate::path::OrientedEdge as E;

    fn golden() -> RoseMap {
        RoseMap::from_strs(2, &["b", "ba"]).unwrap()
    }

    fn golden_factors() -> Vec<RoseMap> {
        vec![
            RoseMap::from_strs(2, &["a", "ab"]).unwrap(),
            RoseMap::from_strs(2, &["b", "a"]).unwrap(),
        ]
    }

    #[test]
    fn eigen_lengths_examples() {
        let l = eigen_lengths(&golden()).unwrap();
        assert!((l[1] / l[0] - 1.618_033_988_749_895).abs() < 1e-9);
        let w = wrap_word(3, &enumerate_full_words(3, 5)[0]).unwrap();
        let f = build_family_map(3, &w).unwrap();
        let l = eigen_lengths(&f).unwrap();
        let m = f.transition_matrix();
        let lambda = m.pf_eigenvalue(DEFAULT_TOL).unwrap().lambda;
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| m.get(i, j) as f64 * l[j]).sum();
            assert!((row - lambda * l[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn stream_matches_materialized_images() {
        let g = golden();
        let chain = Chain::new(vec![&g; 4], 2, None);
        let word = [E::forward(2), E::reverse(1), E::forward(2)];
        let p = EdgePath::new(2, word.to_vec()).unwrap();
        let mut full = Vec::new();
        let mut cur = p.letters().to_vec();
        for _ in 0..4 {
            full.clear();
            for &l in &cur {
                g.push_image(l, &mut full);
            }
            cur = full.clone();
        }
        let mut s = Stream::new(&chain, &word);
        let streamed: Vec<_> = std::iter::from_fn(|| s.next_letter()).collect();
        assert_eq!(streamed, cur);
        assert_eq!(chain.len_of(&word), cur.len() as u64);
        assert_eq!(letters_from(&chain, &word, 5, 3), cur[5..8].to_vec());
    }

    #[test]
    fn golden_map_inps() {
        let g = golden();
        let opts = SearchOptions::default();
        let p1 = unfolding_inp_search(&g, 1, &opts).unwrap();
        assert_eq!(p1.outcome, SearchOutcome::CertifiedEmpty);
        let p2 = unfolding_inp_search(&g, 2, &opts).unwrap();
        let SearchOutcome::Found { candidates } = p2.outcome else {
            panic!("expected a Nielsen path at period 2, got {:?}", p2.outcome);
        };
        assert_eq!(candidates.len(), 1);
        let c = &candidates[0];
        assert_eq!(c.path().to_string(), "BAba");
        assert!(recheck_inp(&g, c, LENGTH_TOL));
        let g2 = g.power(2).unwrap();
        assert_eq!(g2.apply_to_path(&c.path()).unwrap(), c.path());
        assert!(!illegal_turns(&g).is_empty() && illegal_turns(&g).contains(&c.base_turn));
    }

    #[test]
    fn no_seeds_means_certified() {
        // a ↦ ab, b ↦ ba: Dg is the identity, so no turn is prenull
        let g = RoseMap::from_strs(2, &["ab", "ba"]).unwrap();
        let r = unfolding_inp_search(&g, 1, &SearchOptions::default()).unwrap();
        assert!(r.seeds.is_empty());
        assert_eq!(r.outcome, SearchOutcome::CertifiedEmpty);
    }

    #[test]
    fn golden_factors_survive() {
        let out = factorization_pnp_certifier(&golden_factors(), &CertifierOptions::default()).unwrap();
        assert!(matches!(out, FactorizationOutcome::Surviving(_)), "{out:?}");
        let verdict = certify_pnp_free(
            &golden(),
            &CertifyOptions {
                factors: Some(golden_factors()),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(verdict, PnpVerdict::NielsenPathFound { .. }));
    }

    #[test]
    fn family_factorization_certificate() {
        let r = 3;
        let z = crate::family::FullWord::parse(3, "23322").unwrap();
        let w = wrap_word(r, &z).unwrap();
        let factors = family_factors(r, &w).unwrap();
        let out = factorization_pnp_certifier(&factors, &CertifierOptions::default()).unwrap();
        let FactorizationOutcome::Certificate(cert) = out else {
            panic!("expected a certificate, got {out:?}");
        };
        let forced: Vec<(usize, String)> = cert.forced.iter().map(|f| (f.side, f.letter.to_string())).collect();
        assert_eq!(
            forced,
            vec![
                (1, "A".into()),
                (2, "C".into()),
                (2, "C".into()),
                (1, "B".into()),
                (1, "B".into()),
                (2, "C".into())
            ],
            "{}",
            serde_json::to_string(&cert.trace).unwrap()
        );
        // the junction after g_{5,1} is {x̄_{r-1}, x̄_r}, which no later factor collapses
        assert_eq!(cert.contradiction_stage, 6);
        assert_eq!(cert.strict_rule, Some(true));
        assert!(replay_factorization_trace(&factors, &cert));
        let f = build_family_map(r, &w).unwrap();
        for p in 1..=DEFAULT_R_MAX {
            let rep = unfolding_inp_search(&f, p, &SearchOptions::default()).unwrap();
            assert_eq!(rep.outcome, SearchOutcome::CertifiedEmpty, "period {p}");
        }
    }
}
