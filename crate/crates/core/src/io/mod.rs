//! Configuration files, result tables, run manifests and SVG plots.

mod config;
mod plot;
mod results;

pub use config::{emit_config, parse_config, parse_config_str, CONFIG_KEYS};
pub use plot::{emit_plot, render_plot, PlotKind};
pub use results::{
    parse_csv, read_csv, unix_now, write_atomic, write_csv, write_results, CellExclusion, RunManifest, CSV_HEADER,
};

#[cfg(test)]
mod tests;
