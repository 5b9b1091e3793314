//! Learn the coefficients of a utility-maximizing buyer's purchase model by
//! posting prices from a constrained price box and observing the bundles
//! bought.
//!
//! The seller maintains an uncertainty ellipsoid over the unknown coefficient
//! vector. Each round she picks a probe bundle, learns its value through a
//! projected-gradient walk on a Lagrangian dual (driven only by price posts
//! and observed purchases), and shrinks the ellipsoid with a central or
//! shallow cut. [`learner::learn_utility`] is the outer loop;
//! [`harness`] runs seeded end-to-end experiments and owns the CSV/report
//! formats and the brute-force reference oracles used in tests.

pub mod dual;
pub mod geometry;
pub mod harness;
pub mod learner;
pub(crate) mod linalg;
pub mod market;

pub use geometry::{Ellipsoid, Halfspace};
pub use market::{BuyerModel, BuyerOracle, FeasibleSet, RealisticPriceSpace, SellerKnowledge};
