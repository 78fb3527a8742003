//! Admissible radial multiplier families and exact scale steering.

mod bank;
mod family;
mod pseudo;
mod response;
mod spec;
mod steering;

pub use bank::{admissibility_defect, MultiplierBank};
pub use family::{QuadratureFamily, RadialMultipliers};
pub use pseudo::{PseudoScaling, DEFAULT_EPS_PRIME};
pub use response::{ResponsePolynomial, ARGMAX_SAMPLES};
pub use spec::{DesignFile, TrigMultiplierSpec, NORM_TOLERANCE};
pub use steering::{
    steer_coefficients, steer_complex_coefficients, steer_real, steering_matrix, SteeringOperator,
    IMAG_RESIDUE_TOLERANCE,
};
