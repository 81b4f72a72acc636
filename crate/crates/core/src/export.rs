//! Output formatting shared by the CSV writers.

use std::io::Write;

/// Floats are written with 17 significant digits so they round-trip.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}
