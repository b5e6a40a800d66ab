//! Train-track maps on roses: legality, Perron-Frobenius data, Whitehead
//! graphs, periodic Nielsen paths, Stallings folds and a census of fully
//! irreducible outer automorphisms.

pub mod census;
pub mod error;
pub mod family;
pub mod folds;
pub mod map;
pub mod nielsen;
pub mod path;
pub mod spectral;
pub mod turns;
pub mod whitehead;

pub use error::{Error, Result};
pub use map::{DirectionMap, RoseMap, TrainTrackWitness};
pub use path::{Direction, EdgePath, OrientedEdge, Orientation, Turn, MAX_RANK};
pub use spectral::{CharPoly, SpectralResult, TransitionMatrix};
pub use turns::TurnSet;
pub use family::FullWord;
pub use whitehead::{WhiteheadGraph, WhiteheadKind};
pub use folds::{FoldSequence, LabeledGraph, UnmarkedRep};
pub use family::Certificate;
