//! Level planarity on the torus, the rolling cylinder and the standing
//! cylinder, decided through Simultaneous PQ-Ordering, plus simultaneous
//! level planarity on the plane.
//!
//! ```
//! use levelplan::level_graph::LevelGraph;
//! use levelplan::torus_planarity::{test, Surface};
//!
//! let g = LevelGraph::parse("levels 3\nv a 1\nv b 2\nv c 3\ne a b\ne b c\ne c a").unwrap();
//! assert!(test(&g, Surface::Torus).unwrap().is_planar());
//! assert!(!test(&g, Surface::Radial).unwrap().is_planar());
//! ```

pub mod corpus;
pub mod level_graph;
pub mod oracle;
pub mod pqtree;
pub mod sim_level;
pub mod spqo;
pub mod torus_planarity;

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Pq(#[from] pqtree::PqError),
    #[error(transparent)]
    Graph(#[from] level_graph::GraphError),
    #[error(transparent)]
    Spqo(#[from] spqo::SpqoError),
    #[error(transparent)]
    Torus(#[from] torus_planarity::TorusError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Sim(#[from] sim_level::SimError),
}

impl Error {
    /// True if an oracle refused the input as too large.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Oracle(oracle::OracleError::Budget(_)) | Error::Sim(sim_level::SimError::Oracle(oracle::OracleError::Budget(_))))
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pq-trees.md")]
    mod pq_trees {}
    #[doc = include_str!("../../../book/src/level-graphs.md")]
    mod level_graphs {}
    #[doc = include_str!("../../../book/src/simultaneous-pq-ordering.md")]
    mod simultaneous_pq_ordering {}
    #[doc = include_str!("../../../book/src/torus-level-planarity.md")]
    mod torus_level_planarity {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/simultaneous-level-planarity.md")]
    mod simultaneous_level_planarity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
