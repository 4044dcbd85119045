pub mod bounds;
pub mod certificate;
pub mod cocycle;
pub mod grid;
pub mod manifold;
pub mod perturbation;
pub mod scenario;
pub mod sequence;
pub mod solver;
pub mod verification;
