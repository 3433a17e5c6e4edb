//! Duality, self-duality and intertwining of conservative interacting
//! particle systems and their diffusion limits, verified in exact rational
//! arithmetic and by Monte Carlo.

pub mod duality;
pub mod intertwine;
pub mod kernel;
pub mod linalg;
pub mod measures;
pub mod rational;
pub mod series;
pub mod systems;
pub mod verify;
