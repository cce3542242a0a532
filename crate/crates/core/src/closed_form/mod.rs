//! Exact evaluators: polygon energies, ball/annulus/box solutions, the ball
//! stability condition and the mode-wise second variation.

mod annulus;
mod ball;
mod boxes;
mod polygon;
mod profile;
mod stability;

pub use annulus::{
    annulus_disk_gap, annulus_h, annulus_solution, annulus_stationarity_gap, annulus_stationarity_values,
    AnnulusDiskGap, AnnulusSolution,
};
pub use ball::{ball_torsion, unit_ball_volume, BallTorsion};
pub use boxes::{box_oscillations, box_solution, BoxOscillations, BoxSolution};
pub use polygon::{regular_polygon_energy, tangential_polygon_energy, tangential_torsion_eval, PolygonEnergy};
pub use profile::RadialProfile;
pub use stability::{kappa1_from_t, mode_norm_squared, mode_second_variation, stability_condition};
