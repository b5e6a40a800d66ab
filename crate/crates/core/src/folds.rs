//! Stallings fold decompositions of rose maps, the roses met along one
//! period of the fold line, and unmarked representatives up to the
//! symmetries of the rose.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Certificate;
use crate::map::RoseMap;
use crate::path::{free_reduce, letters_to_string, EdgePath, OrientedEdge};

/// How much of a shared initial segment a fold identifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldGranularity {
    /// Maximal common initial segment.
    #[default]
    Maximal,
    /// One letter per fold.
    SingleLetter,
}

/// An oriented edge of a [`LabeledGraph`]: edge id plus direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GraphLetter {
    pub edge: usize,
    pub forward: bool,
}

impl GraphLetter {
    fn inverse(self) -> Self {
        GraphLetter {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabeledEdge {
    pub tail: usize,
    pub head: usize,
    #[serde(serialize_with = "label_string")]
    pub label: Vec<OrientedEdge>,
}

fn label_string<S: serde::Serializer>(l: &[OrientedEdge], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&letters_to_string(l))
}

/// A graph whose edges are labeled by tight paths in the rank-r rose.
/// Edge and vertex ids are never reused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabeledGraph {
    pub rank: usize,
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeMap<usize, LabeledEdge>,
    pub basepoint: usize,
    #[serde(skip)]
    next_vertex: usize,
    #[serde(skip)]
    next_edge: usize,
}

/// A germ at a vertex: the start of an edge, or the end of one read backwards.
type Germ = GraphLetter;

impl LabeledGraph {
    /// The rose with petal `i` labeled `g(x_i)`; edge ids are `0..r`.
    pub fn from_map(g: &RoseMap) -> Self {
        let edges = g
            .images()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    i,
                    LabeledEdge {
                        tail: 0,
                        head: 0,
                        label: p.letters().to_vec(),
                    },
                )
            })
            .collect();
        LabeledGraph {
            rank: g.rank(),
            vertices: BTreeSet::from([0]),
            edges,
            basepoint: 0,
            next_vertex: 1,
            next_edge: g.rank(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_rose(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn total_label_length(&self) -> usize {
        self.edges.values().map(|e| e.label.len()).sum()
    }

    /// First Betti number `E - V + 1` of the (connected) graph.
    pub fn betti(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.edges
            .values()
            .map(|e| usize::from(e.tail == v) + usize::from(e.head == v))
            .sum()
    }

    fn label_of(&self, l: GraphLetter) -> Vec<OrientedEdge> {
        let e = &self.edges[&l.edge];
        if l.forward {
            e.label.clone()
        } else {
            e.label.iter().rev().map(|x| x.inverse()).collect()
        }
    }

    fn germs_at(&self, v: usize) -> Vec<Germ> {
        let mut out = Vec::new();
        for (&id, e) in &self.edges {
            if e.tail == v {
                out.push(GraphLetter { edge: id, forward: true });
            }
            if e.head == v {
                out.push(GraphLetter { edge: id, forward: false });
            }
        }
        out
    }

    /// Least vertex with two germs whose labels start alike, and the
    /// first such pair there.
    fn fold_candidate(&self) -> Option<(usize, Germ, Germ)> {
        for &v in &self.vertices {
            let germs = self.germs_at(v);
            for (i, &a) in germs.iter().enumerate() {
                let la = self.label_of(a)[0];
                for &b in &germs[i + 1..] {
                    if self.label_of(b)[0] == la {
                        return Some((v, a, b));
                    }
                }
            }
        }
        None
    }

    fn add_vertex(&mut self) -> usize {
        let v = self.next_vertex;
        self.next_vertex += 1;
        self.vertices.insert(v);
        v
    }

    fn add_edge(&mut self, tail: usize, head: usize, label: Vec<OrientedEdge>) -> usize {
        let id = self.next_edge;
        self.next_edge += 1;
        self.edges.insert(id, LabeledEdge { tail, head, label });
        id
    }

    /// Replaces the edge under `germ` by an edge oriented along the germ.
    /// Returns the new id and the substitution for the old edge.
    fn orient(&mut self, germ: Germ) -> (usize, Substitution) {
        let label = self.label_of(germ);
        let old = self.edges.remove(&germ.edge).unwrap();
        let (tail, head) = if germ.forward { (old.tail, old.head) } else { (old.head, old.tail) };
        let id = self.add_edge(tail, head, label);
        let path = vec![GraphLetter {
            edge: id,
            forward: germ.forward,
        }];
        (id, Substitution { old: germ.edge, path })
    }

    /// Splits edge `id` after `k` letters.
    fn split(&mut self, id: usize, k: usize) -> (usize, usize, Substitution) {
        let old = self.edges.remove(&id).unwrap();
        let mid = self.add_vertex();
        let a = self.add_edge(old.tail, mid, old.label[..k].to_vec());
        let b = self.add_edge(mid, old.head, old.label[k..].to_vec());
        let path = vec![GraphLetter { edge: a, forward: true }, GraphLetter { edge: b, forward: true }];
        (a, b, Substitution { old: id, path })
    }

    fn merge_vertex(&mut self, from: usize, into: usize) {
        if from == into {
            return;
        }
        for e in self.edges.values_mut() {
            if e.tail == from {
                e.tail = into;
            }
            if e.head == from {
                e.head = into;
            }
        }
        self.vertices.remove(&from);
        if self.basepoint == from {
            self.basepoint = into;
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  v{v};");
        }
        for (id, e) in &self.edges {
            let _ = writeln!(
                s,
                "  v{} -> v{} [label=\"e{}: {}\"];",
                e.tail,
                e.head,
                id,
                letters_to_string(&e.label)
            );
        }
        s.push_str("}\n");
        s
    }
}

/// `old ↦ path` on graph letters.
#[derive(Debug, Clone)]
struct Substitution {
    old: usize,
    path: Vec<GraphLetter>,
}

fn substitute(paths: &mut [Vec<GraphLetter>], subs: &[Substitution]) {
    for s in subs {
        for p in paths.iter_mut() {
            let mut out = Vec::with_capacity(p.len());
            for &l in p.iter() {
                if l.edge == s.old {
                    if l.forward {
                        out.extend_from_slice(&s.path);
                    } else {
                        out.extend(s.path.iter().rev().map(|x| x.inverse()));
                    }
                } else {
                    out.push(l);
                }
            }
            *p = out;
        }
    }
}

fn graph_reduce(p: Vec<GraphLetter>) -> Vec<GraphLetter> {
    let mut out: Vec<GraphLetter> = Vec::with_capacity(p.len());
    for l in p {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldKind {
    /// Both germs keep a remainder; a trivalent vertex appears.
    Partial,
    /// The first germ's edge is absorbed into the second.
    Full,
    /// Equal labels; the two edges and their far ends are identified.
    Identify,
    /// A loop whose two germs agree is cut in half first.
    Subdivide,
}

/// One step of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FoldStep {
    pub kind: FoldKind,
    pub vertex: usize,
    pub germ1: GraphLetter,
    pub germ2: GraphLetter,
    /// Letters identified; for `Subdivide`, the split position.
    pub length: usize,
}

/// A signed permutation of petals, `x_i ↦ images[i-1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedPermutation {
    images: Vec<OrientedEdge>,
}

impl SignedPermutation {
    pub fn new(images: Vec<OrientedEdge>) -> Result<Self> {
        let r = images.len();
        let idx: BTreeSet<usize> = images.iter().map(|l| l.index()).collect();
        if idx != (1..=r).collect() {
            return Err(Error::Precondition("not a signed permutation".into()));
        }
        Ok(SignedPermutation { images })
    }

    pub fn identity(r: usize) -> Self {
        SignedPermutation {
            images: (1..=r).map(OrientedEdge::forward).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, l: OrientedEdge) -> OrientedEdge {
        let img = self.images[l.index() - 1];
        if l.is_forward() {
            img
        } else {
            img.inverse()
        }
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![OrientedEdge::forward(1); self.rank()];
        for (i, &img) in self.images.iter().enumerate() {
            let src = OrientedEdge::forward(i + 1);
            images[img.index() - 1] = if img.is_forward() { src } else { src.inverse() };
        }
        SignedPermutation { images }
    }

    pub fn to_map(&self) -> RoseMap {
        let images = self
            .images
            .iter()
            .map(|&l| EdgePath::from_letters_unchecked(self.rank(), vec![l]))
            .collect();
        RoseMap::new(self.rank(), images).expect("signed permutations are valid maps")
    }

    /// All `2^r · r!` signed permutations, in a fixed order.
    pub fn all(r: usize) -> Vec<SignedPermutation> {
        let mut perms = Vec::new();
        let mut current: Vec<usize> = (1..=r).collect();
        permutations(&mut current, 0, &mut perms);
        let mut out = Vec::with_capacity(perms.len() << r);
        for p in perms {
            for signs in 0..(1usize << r) {
                let images = p
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| {
                        if signs >> i & 1 == 1 {
                            OrientedEdge::reverse(j)
                        } else {
                            OrientedEdge::forward(j)
                        }
                    })
                    .collect();
                out.push(SignedPermutation { images });
            }
        }
        out
    }
}

fn permutations(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, out);
        v.swap(k, i);
    }
}

impl Serialize for SignedPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&letters_to_string(&self.images))
    }
}

/// Folds of a rose map followed by a final homeomorphism.
#[derive(Debug, Clone, Serialize)]
pub struct FoldSequence {
    pub granularity: FoldGranularity,
    pub steps: Vec<FoldStep>,
    /// Petal `i` of the final rose, read as a letter of the target rose.
    pub homeomorphism: SignedPermutation,
    /// Indices `i` (number of steps done) at which the graph is a rose.
    pub rose_indices: Vec<usize>,
    #[serde(skip)]
    start: RoseMap,
}

impl FoldSequence {
    pub fn fold_count(&self) -> usize {
        self.steps.iter().filter(|s| s.kind != FoldKind::Subdivide).count()
    }

    pub fn start(&self) -> &RoseMap {
        &self.start
    }
}

/// State of a decomposition in progress: the graph and, for each petal of
/// the source rose, its image path in the graph.
#[derive(Debug, Clone)]
struct Folding {
    graph: LabeledGraph,
    petals: Vec<Vec<GraphLetter>>,
}

impl Folding {
    fn new(g: &RoseMap) -> Self {
        Folding {
            graph: LabeledGraph::from_map(g),
            petals: (0..g.rank()).map(|i| vec![GraphLetter { edge: i, forward: true }]).collect(),
        }
    }

    fn apply(&mut self, step: &FoldStep) -> Result<()> {
        let g = &mut self.graph;
        let mut subs = Vec::new();
        match step.kind {
            FoldKind::Subdivide => {
                let (_, _, s) = g.split(step.germ1.edge, step.length);
                subs.push(s);
            }
            FoldKind::Partial | FoldKind::Full | FoldKind::Identify => {
                let k = step.length;
                let (e1, s1) = g.orient(step.germ1);
                let (e2, s2) = g.orient(step.germ2);
                subs.push(s1);
                subs.push(s2);
                let len1 = g.edges[&e1].label.len();
                let len2 = g.edges[&e2].label.len();
                // the shared segment, as an edge from the fold vertex
                let (shared, end1, end2) = match (k < len1, k < len2) {
                    (true, true) => {
                        let (a1, _, s) = g.split(e1, k);
                        subs.push(s);
                        let (a2, _, s) = g.split(e2, k);
                        subs.push(s);
                        let h1 = g.edges[&a1].head;
                        let h2 = g.edges[&a2].head;
                        (a1, (a2, h1), h2)
                    }
                    (false, true) => {
                        let (a2, _, s) = g.split(e2, k);
                        subs.push(s);
                        let h1 = g.edges[&e1].head;
                        let h2 = g.edges[&a2].head;
                        (e1, (a2, h1), h2)
                    }
                    (true, false) => {
                        let (a1, _, s) = g.split(e1, k);
                        subs.push(s);
                        let h1 = g.edges[&a1].head;
                        let h2 = g.edges[&e2].head;
                        (e2, (a1, h2), h1)
                    }
                    (false, false) => {
                        let h1 = g.edges[&e1].head;
                        let h2 = g.edges[&e2].head;
                        if h1 == h2 {
                            return Err(Error::NotHomotopyEquivalence(
                                "fold identifies two edges with the same ends".into(),
                            ));
                        }
                        (e1, (e2, h1), h2)
                    }
                };
                let (dropped, keep_vertex) = end1;
                let drop_vertex = end2;
                if dropped != shared {
                    g.edges.remove(&dropped);
                    subs.push(Substitution {
                        old: dropped,
                        path: vec![GraphLetter {
                            edge: shared,
                            forward: true,
                        }],
                    });
                }
                g.merge_vertex(drop_vertex, keep_vertex);
            }
        }
        substitute(&mut self.petals, &subs);
        for p in &mut self.petals {
            *p = graph_reduce(std::mem::take(p));
        }
        Ok(())
    }

    fn next_step(&self, granularity: FoldGranularity) -> Option<FoldStep> {
        let (v, a, b) = self.graph.fold_candidate()?;
        if a.edge == b.edge {
            let len = self.graph.edges[&a.edge].label.len();
            return Some(FoldStep {
                kind: FoldKind::Subdivide,
                vertex: v,
                germ1: a,
                germ2: b,
                length: len / 2,
            });
        }
        let la = self.graph.label_of(a);
        let lb = self.graph.label_of(b);
        let common = la.iter().zip(&lb).take_while(|(x, y)| x == y).count();
        let k = match granularity {
            FoldGranularity::Maximal => common,
            FoldGranularity::SingleLetter => 1,
        };
        let kind = match (k < la.len(), k < lb.len()) {
            (true, true) => FoldKind::Partial,
            (false, false) => FoldKind::Identify,
            _ => FoldKind::Full,
        };
        Some(FoldStep {
            kind,
            vertex: v,
            germ1: a,
            germ2: b,
            length: k,
        })
    }

    /// The final immersion as a signed permutation, when it is a rose
    /// isomorphism.
    fn homeomorphism(&self) -> Result<SignedPermutation> {
        let g = &self.graph;
        let r = g.rank;
        if !g.is_rose() || g.edge_count() != r || g.edges.values().any(|e| e.label.len() != 1) {
            return Err(Error::NotHomotopyEquivalence(format!(
                "folding stopped at a graph with {} vertices, {} edges and label length {}",
                g.vertex_count(),
                g.edge_count(),
                g.total_label_length()
            )));
        }
        let letters: Vec<OrientedEdge> = g.edges.values().map(|e| e.label[0]).collect();
        SignedPermutation::new(letters)
            .map_err(|_| Error::NotHomotopyEquivalence("final graph map is not a homeomorphism".into()))
    }

    /// Final-rose numbering: edges in id order become petals `1..=r`.
    fn petal_numbering(&self) -> BTreeMap<usize, usize> {
        self.graph.edges.keys().enumerate().map(|(i, &id)| (id, i + 1)).collect()
    }
}

fn to_rose_letters(path: &[GraphLetter], numbering: &BTreeMap<usize, usize>) -> Vec<OrientedEdge> {
    path.iter()
        .map(|l| {
            let i = numbering[&l.edge];
            if l.forward {
                OrientedEdge::forward(i)
            } else {
                OrientedEdge::reverse(i)
            }
        })
        .collect()
}

/// Folds `g` until the labeling is an immersion.
pub fn stallings_decomposition(g: &RoseMap) -> Result<FoldSequence> {
    stallings_decomposition_with(g, FoldGranularity::Maximal)
}

pub fn stallings_decomposition_with(g: &RoseMap, granularity: FoldGranularity) -> Result<FoldSequence> {
    let mut state = Folding::new(g);
    let mut steps = Vec::new();
    let mut rose_indices = vec![0];
    let bound = 4 * g.norm() + 4;
    while let Some(step) = state.next_step(granularity) {
        let before = state.graph.total_label_length();
        state.apply(&step)?;
        if step.kind != FoldKind::Subdivide {
            debug_assert!(state.graph.total_label_length() < before);
        }
        steps.push(step);
        if state.graph.is_rose() {
            rose_indices.push(steps.len());
        }
        if steps.len() > bound {
            return Err(Error::Budget("fold sequence did not terminate".into()));
        }
    }
    let homeomorphism = state.homeomorphism()?;
    Ok(FoldSequence {
        granularity,
        steps,
        homeomorphism,
        rose_indices,
        start: g.clone(),
    })
}

/// Intermediate graph after the first `upto` steps.
pub fn replay_graph(seq: &FoldSequence, upto: usize) -> Result<LabeledGraph> {
    let mut state = Folding::new(&seq.start);
    for step in &seq.steps[..upto.min(seq.steps.len())] {
        state.apply(step)?;
    }
    Ok(state.graph)
}

/// Rebuilds the map from the fold maps and the final homeomorphism alone:
/// each petal's path in the final rose, pushed through the homeomorphism.
pub fn replay(seq: &FoldSequence) -> Result<RoseMap> {
    let mut state = Folding::new(&seq.start);
    for step in &seq.steps {
        state.apply(step)?;
    }
    let numbering = state.petal_numbering();
    let r = seq.start.rank();
    let images = state
        .petals
        .iter()
        .map(|p| {
            let letters = to_rose_letters(p, &numbering).into_iter().map(|l| seq.homeomorphism.apply(l));
            EdgePath::new(r, free_reduce(letters))
        })
        .collect::<Result<Vec<_>>>()?;
    RoseMap::new(r, images)
}

/// First-return maps of the roses met along one period, in order.
pub fn fold_line_roses(seq: &FoldSequence) -> Result<Vec<RoseMap>> {
    let mut state = Folding::new(&seq.start);
    let mut out = Vec::new();
    let mut done = 0;
    for &i in &seq.rose_indices {
        while done < i {
            state.apply(&seq.steps[done])?;
            done += 1;
        }
        out.push(first_return(&state)?);
    }
    Ok(out)
}

/// At a rose `Γ_i`: edge `e` goes to its label in the target rose, whose
/// petals return to `Γ_i` along the folds done so far.
fn first_return(state: &Folding) -> Result<RoseMap> {
    let numbering = state.petal_numbering();
    let r = state.graph.rank;
    let petal_paths: Vec<Vec<OrientedEdge>> = state.petals.iter().map(|p| to_rose_letters(p, &numbering)).collect();
    let images = state
        .graph
        .edges
        .values()
        .map(|e| {
            let mut out = Vec::new();
            for &l in &e.label {
                let p = &petal_paths[l.index() - 1];
                if l.is_forward() {
                    out.extend_from_slice(p);
                } else {
                    out.extend(p.iter().rev().map(|x| x.inverse()));
                }
            }
            EdgePath::new(r, free_reduce(out))
        })
        .collect::<Result<Vec<_>>>()?;
    RoseMap::new(r, images)
}

/// A rose map in canonical form under the rose symmetries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnmarkedRep {
    key: String,
    map: RoseMap,
}

impl UnmarkedRep {
    pub fn map(&self) -> &RoseMap {
        &self.map
    }

    /// Comma-separated images, e.g. `"b,c,abccbb"`.
    pub fn key(&self) -> &str {
        &self.key
    }
}

impl Serialize for UnmarkedRep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.key)
    }
}

fn map_key(g: &RoseMap) -> String {
    g.images().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

/// `q⁻¹ ∘ g ∘ q`.
pub fn conjugate(g: &RoseMap, q: &SignedPermutation) -> RoseMap {
    let qi = q.inverse();
    let r = g.rank();
    let images = (1..=r)
        .map(|i| {
            let img = g.image_of(q.apply(OrientedEdge::forward(i)));
            EdgePath::from_letters_unchecked(r, img.letters().iter().map(|&l| qi.apply(l)).collect())
        })
        .collect();
    RoseMap::new(r, images).expect("conjugates of valid maps are valid")
}

/// Least conjugate by key over all signed permutations.
pub fn canonical_form(g: &RoseMap) -> UnmarkedRep {
    canonical_form_among(g, &SignedPermutation::all(g.rank()))
}

fn canonical_form_among(g: &RoseMap, symmetries: &[SignedPermutation]) -> UnmarkedRep {
    symmetries
        .iter()
        .map(|q| {
            let map = conjugate(g, q);
            UnmarkedRep { key: map_key(&map), map }
        })
        .min_by(|a, b| a.key.cmp(&b.key))
        .expect("symmetry group is nonempty")
}

pub fn unmarked_equivalent(f: &RoseMap, g: &RoseMap) -> Result<bool> {
    if f.rank() != g.rank() {
        return Err(Error::RankMismatch {
            expected: f.rank(),
            found: g.rank(),
        });
    }
    Ok(canonical_form(f) == canonical_form(g))
}

/// Canonical forms of the first-return maps at the roses of one period.
pub fn unmarked_representatives(g: &RoseMap, certificate: Option<&Certificate>) -> Result<BTreeSet<UnmarkedRep>> {
    let cert = certificate
        .ok_or_else(|| Error::Precondition("unmarked representatives need a lone-axis certificate".into()))?;
    if !cert.lone_axis {
        return Err(Error::Precondition("certificate does not establish a lone axis".into()));
    }
    if cert.map != g.serialize() {
        return Err(Error::Precondition("certificate is for a different map".into()));
    }
    let seq = stallings_decomposition(g)?;
    let symmetries = SignedPermutation::all(g.rank());
    Ok(fold_line_roses(&seq)?
        .iter()
        .map(|m| canonical_form_among(m, &symmetries))
        .collect())
}

/// Fold counts under both conventions next to `‖g‖/2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldCountReport {
    pub norm: usize,
    pub half_norm: usize,
    pub maximal: usize,
    pub single_letter: usize,
    /// Convention whose count equals `‖g‖/2`, if any.
    pub matching: Option<FoldGranularity>,
}

pub fn fold_count_report(g: &RoseMap) -> Result<FoldCountReport> {
    let maximal = stallings_decomposition_with(g, FoldGranularity::Maximal)?.fold_count();
    let single_letter = stallings_decomposition_with(g, FoldGranularity::SingleLetter)?.fold_count();
    let norm = g.norm();
    let matching = if 2 * maximal == norm {
        Some(FoldGranularity::Maximal)
    } else if 2 * single_letter == norm {
        Some(FoldGranularity::SingleLetter)
    } else {
        None
    };
    Ok(FoldCountReport {
        norm,
        half_norm: norm / 2,
        maximal,
        single_letter,
        matching,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_family_map, certify, enumerate_full_words, wrap_word};
    use proptest::prelude::*;

    fn golden() -> RoseMap {
        RoseMap::from_strs(2, &["b", "ba"]).unwrap()
    }

    fn family(r: usize, n: usize, i: usize) -> RoseMap {
        let z = enumerate_full_words(r, n).remove(i);
        build_family_map(r, &wrap_word(r, &z).unwrap()).unwrap()
    }

    #[test]
    fn identity_has_no_folds() {
        let id = RoseMap::identity(3);
        let seq = stallings_decomposition(&id).unwrap();
        assert!(seq.steps.is_empty());
        assert_eq!(seq.homeomorphism, SignedPermutation::identity(3));
        assert_eq!(replay(&seq).unwrap(), id);
    }

    #[test]
    fn golden_replay() {
        let g = golden();
        for gran in [FoldGranularity::Maximal, FoldGranularity::SingleLetter] {
            let seq = stallings_decomposition_with(&g, gran).unwrap();
            assert_eq!(replay(&seq).unwrap(), g);
            assert_eq!(seq.fold_count(), 1);
        }
    }

    #[test]
    fn family_replay_and_label_decrease() {
        for (r, n) in [(3, 5), (3, 6), (4, 10)] {
            let g = family(r, n, 0);
            for gran in [FoldGranularity::Maximal, FoldGranularity::SingleLetter] {
                let seq = stallings_decomposition_with(&g, gran).unwrap();
                assert_eq!(replay(&seq).unwrap(), g);
                let mut total = g.norm();
                for i in 1..=seq.steps.len() {
                    let graph = replay_graph(&seq, i).unwrap();
                    assert_eq!(graph.betti(), r);
                    let now = graph.total_label_length();
                    assert!(now < total);
                    total = now;
                    if seq.steps[i - 1].kind == FoldKind::Partial {
                        assert!(!graph.is_rose());
                        assert!(graph.vertices.iter().any(|&v| graph.valence(v) == 3));
                    }
                }
                assert_eq!(g.norm() - total, g.norm() - r);
                if gran == FoldGranularity::SingleLetter {
                    assert_eq!(seq.fold_count(), g.norm() - r);
                }
            }
        }
    }

    #[test]
    fn non_homotopy_equivalence_is_rejected() {
        let g = RoseMap::from_strs(2, &["ab", "ab"]).unwrap();
        assert!(stallings_decomposition(&g).is_err());
        let g = RoseMap::from_strs(2, &["aa", "b"]).unwrap();
        assert!(stallings_decomposition(&g).is_err());
    }

    #[test]
    fn symmetry_group_size() {
        assert_eq!(SignedPermutation::all(3).len(), 48);
        assert_eq!(SignedPermutation::all(4).len(), 384);
        let set: BTreeSet<_> = SignedPermutation::all(3).into_iter().collect();
        assert_eq!(set.len(), 48);
    }

    #[test]
    fn canonical_form_basics() {
        let id = RoseMap::identity(3);
        assert_eq!(canonical_form(&id).map(), &id);
        let g = family(3, 5, 1);
        assert!(unmarked_equivalent(&g, &g).unwrap());
        assert!(!unmarked_equivalent(&g, &id).unwrap());
        for q in SignedPermutation::all(3).iter().step_by(5) {
            let c = conjugate(&g, q);
            assert_eq!(canonical_form(&c), canonical_form(&g));
            assert_eq!(conjugate(&c, &q.inverse()), g);
        }
    }

    #[test]
    fn conjugate_matches_composition() {
        let g = family(3, 5, 2);
        for q in SignedPermutation::all(3).iter().step_by(7) {
            let direct = q.inverse().to_map().compose(&g.compose(&q.to_map()).unwrap()).unwrap();
            assert_eq!(conjugate(&g, q), direct);
        }
    }

    #[test]
    fn unmarked_representatives_family() {
        let z = enumerate_full_words(3, 5).remove(0);
        let w = wrap_word(3, &z).unwrap();
        let cert = certify(3, &w).unwrap();
        let g = build_family_map(3, &w).unwrap();
        assert!(unmarked_representatives(&g, None).is_err());
        let u = unmarked_representatives(&g, Some(&cert)).unwrap();
        assert!(u.contains(&canonical_form(&g)));
        assert!(u.len() <= g.norm());
        for rep in &u {
            assert!(rep.map().is_train_track());
        }
        // invariant under relabeling the rose
        let q = &SignedPermutation::all(3)[17];
        let c = conjugate(&g, q);
        let mut cert2 = cert.clone();
        cert2.map = c.serialize();
        assert_eq!(unmarked_representatives(&c, Some(&cert2)).unwrap(), u);
    }

    #[test]
    fn first_return_at_start_is_the_map() {
        let g = family(3, 6, 0);
        let seq = stallings_decomposition(&g).unwrap();
        let roses = fold_line_roses(&seq).unwrap();
        assert_eq!(roses[0], g);
        for m in &roses {
            assert_eq!(m.transition_matrix().char_poly(), g.transition_matrix().char_poly());
        }
    }

    #[test]
    fn json_and_dot() {
        let seq = stallings_decomposition(&golden()).unwrap();
        let v = serde_json::to_value(&seq).unwrap();
        assert_eq!(v["granularity"], "maximal");
        assert_eq!(v["steps"].as_array().unwrap().len(), 1);
        let graph = replay_graph(&seq, 0).unwrap();
        assert!(graph.to_dot().contains("e1: ba"));
        assert_eq!(serde_json::to_value(&graph).unwrap()["edges"]["1"]["label"], "ba");
    }

    fn arb_signed(r: usize) -> impl Strategy<Value = SignedPermutation> {
        (0..(1usize << r) * (1..=r).product::<usize>()).prop_map(move |i| SignedPermutation::all(r).swap_remove(i))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn canonical_form_is_conjugation_invariant(i in 0usize..4, q in arb_signed(3)) {
            let g = family(3, 5, i);
            prop_assert_eq!(canonical_form(&conjugate(&g, &q)), canonical_form(&g));
        }

        #[test]
        fn replay_of_products_of_elementary_folds(ks in proptest::collection::vec(1usize..=6, 1..6)) {
            let maps: Vec<RoseMap> = ks.iter().map(|&k| crate::family::gen_elementary(3, k).unwrap()).collect();
            let g = RoseMap::compose_all(&maps).unwrap();
            let seq = stallings_decomposition(&g).unwrap();
            prop_assert_eq!(replay(&seq).unwrap(), g);
        }
    }
}
