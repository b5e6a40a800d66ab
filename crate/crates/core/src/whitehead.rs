//! Local, stable and ideal Whitehead graphs of a rose map and the
//! rotationless index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::Ratio;
use petgraph::algo::articulation_points::articulation_points;
use petgraph::algo::connected_components;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::RoseMap;
use crate::nielsen::PnpFreeCertificate;
use crate::path::{Direction, Turn};
use crate::turns::{periodic_directions, t_infinity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WhiteheadKind {
    Local,
    Stable,
    Ideal,
}

/// A graph on directions whose edges are turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhiteheadGraph {
    kind: WhiteheadKind,
    vertices: BTreeSet<Direction>,
    edges: BTreeSet<Turn>,
}

impl WhiteheadGraph {
    pub fn new(kind: WhiteheadKind, vertices: BTreeSet<Direction>, edges: BTreeSet<Turn>) -> Result<Self> {
        for t in &edges {
            if t.is_degenerate() {
                return Err(Error::Precondition(format!("degenerate edge {t:?}")));
            }
            if !vertices.contains(&t.first()) || !vertices.contains(&t.second()) {
                return Err(Error::Precondition(format!("edge {t:?} leaves the vertex set")));
            }
        }
        Ok(Self { kind, vertices, edges })
    }

    pub fn kind(&self) -> WhiteheadKind {
        self.kind
    }

    pub fn vertices(&self) -> &BTreeSet<Direction> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<Turn> {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Subgraph induced on `keep`.
    pub fn induced(&self, kind: WhiteheadKind, keep: &BTreeSet<Direction>) -> Self {
        let vertices: BTreeSet<Direction> = self.vertices.intersection(keep).copied().collect();
        let edges = self
            .edges
            .iter()
            .filter(|t| vertices.contains(&t.first()) && vertices.contains(&t.second()))
            .copied()
            .collect();
        Self { kind, vertices, edges }
    }

    fn to_petgraph(&self) -> (UnGraph<Direction, ()>, BTreeMap<Direction, NodeIndex>) {
        let mut g = UnGraph::new_undirected();
        let index: BTreeMap<Direction, NodeIndex> =
            self.vertices.iter().map(|&d| (d, g.add_node(d))).collect();
        for t in &self.edges {
            g.add_edge(index[&t.first()], index[&t.second()], ());
        }
        (g, index)
    }

    pub fn component_count(&self) -> usize {
        connected_components(&self.to_petgraph().0)
    }

    /// True for the empty graph and for any graph with one component.
    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    pub fn cut_vertices(&self) -> BTreeSet<Direction> {
        let (g, _) = self.to_petgraph();
        articulation_points(&g).into_iter().map(|n| g[n]).collect()
    }

    /// Vertex sets of the connected components.
    pub fn components(&self) -> Vec<BTreeSet<Direction>> {
        let mut adj: BTreeMap<Direction, Vec<Direction>> = self.vertices.iter().map(|&d| (d, Vec::new())).collect();
        for t in &self.edges {
            adj.get_mut(&t.first()).unwrap().push(t.second());
            adj.get_mut(&t.second()).unwrap().push(t.first());
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &v in &self.vertices {
            if !seen.insert(v) {
                continue;
            }
            let mut comp = BTreeSet::from([v]);
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                for &y in &adj[&x] {
                    if seen.insert(y) {
                        comp.insert(y);
                        stack.push(y);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Adjacency list keyed by direction letter.
    pub fn adjacency(&self) -> BTreeMap<String, Vec<String>> {
        let mut adj: BTreeMap<String, Vec<String>> =
            self.vertices.iter().map(|d| (d.to_string(), Vec::new())).collect();
        for t in &self.edges {
            adj.get_mut(&t.first().to_string()).unwrap().push(t.second().to_string());
            adj.get_mut(&t.second().to_string()).unwrap().push(t.first().to_string());
        }
        for v in adj.values_mut() {
            v.sort();
        }
        adj
    }

    pub fn to_dot(&self) -> String {
        let name = match self.kind {
            WhiteheadKind::Local => "LW",
            WhiteheadKind::Stable => "SW",
            WhiteheadKind::Ideal => "IW",
        };
        let mut s = format!("graph {name} {{\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  \"{v}\";");
        }
        for t in &self.edges {
            let _ = writeln!(s, "  \"{}\" -- \"{}\";", t.first(), t.second());
        }
        s.push_str("}\n");
        s
    }
}

impl Serialize for WhiteheadGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("WhiteheadGraph", 4)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("vertices", &self.vertices.iter().map(|d| d.to_string()).collect::<Vec<_>>())?;
        st.serialize_field("edge_count", &self.edges.len())?;
        st.serialize_field("adjacency", &self.adjacency())?;
        st.end()
    }
}

fn require_expanding_irreducible(g: &RoseMap) -> Result<()> {
    if !g.is_train_track() {
        return Err(Error::Precondition("map is not a train track map".into()));
    }
    if !g.is_irreducible() || !g.is_expanding() {
        return Err(Error::Precondition("map is not expanding and irreducible".into()));
    }
    Ok(())
}

/// All directions, with an edge for each turn of T∞(g).
pub fn local_whitehead_graph(g: &RoseMap) -> Result<WhiteheadGraph> {
    require_expanding_irreducible(g)?;
    let vertices = Direction::all(g.rank()).collect();
    WhiteheadGraph::new(WhiteheadKind::Local, vertices, t_infinity(g))
}

/// The local graph restricted to periodic directions.
pub fn stable_whitehead_graph(g: &RoseMap) -> Result<WhiteheadGraph> {
    let lw = local_whitehead_graph(g)?;
    Ok(lw.induced(WhiteheadKind::Stable, &periodic_directions(g)))
}

/// The stable graph, valid as the ideal graph once periodic Nielsen paths
/// are ruled out.
pub fn ideal_whitehead_graph(g: &RoseMap, certificate: Option<&PnpFreeCertificate>) -> Result<WhiteheadGraph> {
    let cert = certificate
        .ok_or_else(|| Error::Precondition("ideal Whitehead graph needs a PNP-free certificate".into()))?;
    if !cert.all_periods && cert.periods.is_empty() {
        return Err(Error::Precondition("certificate covers no period".into()));
    }
    let mut sw = stable_whitehead_graph(g)?;
    sw.kind = WhiteheadKind::Ideal;
    Ok(sw)
}

/// `1 - k/2` for a graph on `k` vertices.
pub fn rotationless_index(graph: &WhiteheadGraph) -> Ratio<i64> {
    Ratio::new(2 - graph.vertex_count() as i64, 2)
}
