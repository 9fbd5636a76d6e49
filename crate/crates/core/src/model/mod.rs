//! Parametric model of the SiV⁻ centre: level structure, phonon rates,
//! optical branching and the rate sets consumed by the engines.

mod hamiltonian;
mod levels;
mod params;
mod phonon;
mod rates;

pub use hamiltonian::{excited_hamiltonian, ground_hamiltonian, is_hermitian, Matrix4c};
pub use levels::{cyclicity, level_diagram, Level, LevelDiagram, Spin};
pub use params::{FieldConfig, SivParams};
pub use phonon::{bose_occupation, boltzmann_factor, phonon_rates, ple_peak_ratio, ple_spectrum, PhononRates, PlePoint};
pub use rates::{rate_set, rate_set_from, scatter_rate, RateSet};
