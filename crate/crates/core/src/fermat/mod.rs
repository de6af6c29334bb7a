//! Fermat's principle for the time-arrival functional: admissible curves,
//! shooting, first and second variation, Jacobi fields and Morse index.

pub mod admissible;
pub mod index_form;
pub mod jacobi;
pub mod observer;
pub mod report;
pub mod shooting;
pub mod variation;

pub use admissible::{check_admissible, energy_functional, energy_shell_project, shell_time_component, AdmissibilityReport};
pub use observer::{Observer, ObserverSpec};
pub use shooting::{shoot, ShootStats, ShotGeodesic};
