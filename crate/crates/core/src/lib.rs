pub mod analysis;
pub mod flow;
pub mod geometry;
pub mod grid_fields;
pub mod presets;
pub mod verify;
