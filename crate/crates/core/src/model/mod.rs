//! The single-factor mixed-frequency model and its state-space form.

pub mod panel;
pub mod params;
pub mod simulate;
pub mod spec;
pub mod state_space;

pub use panel::{Panel, Standardization};
pub use params::{DfmParams, IndicatorParams};
pub use simulate::{simulate, simulate_with, InitialState, Simulation, SimulationOptions};
pub use spec::{DfmSpec, IndicatorSpec, Kind, MeasurementError, Transform};
pub use state_space::{
    build_on_grid, build_state_space, build_state_space_through, MeasurementRow, StateLayout,
    StateSpaceSystem,
};
