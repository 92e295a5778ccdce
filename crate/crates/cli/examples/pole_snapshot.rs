//! Regenerates `data/twisted_pole.csv`: the su(2) twisted Nahm pole at
//! beta = pi/4 sampled on y in [1, 2], in the `nahm-o` component layout.
//!
//!     cargo run -p gfl-cli --example pole_snapshot -- crates/cli/data/twisted_pole.csv

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use gfl_core::lattice::{write_snapshot, Axis, Field, Grid};
use gfl_core::lie::principal_embedding;
use gfl_core::models::NahmPoleModel;

fn main() -> gfl_core::Result<()> {
    let path: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "twisted_pole.csv".into()).into();
    let grid = Grid::new(vec![Axis::clamped("y", 161, 1.0, 2.0)])?;
    let model = NahmPoleModel::new(principal_embedding(2)?.triple, FRAC_PI_4);
    let samples: Vec<Vec<gfl_core::Mat>> = (0..grid.len()).map(|s| model.nahm_vector(grid.coords(s)[0])).collect::<gfl_core::Result<_>>()?;
    let fields: Vec<(String, Field)> = (0..7)
        .map(|i| (format!("X{}", i + 1), Field { n: 2, data: samples.iter().map(|x| x[i].clone()).collect() }))
        .collect();
    let comps: Vec<(String, &Field)> = fields.iter().map(|(n, f)| (n.clone(), f)).collect();
    write_snapshot(&path, &grid, &comps)?;
    println!("wrote {}", path.display());
    Ok(())
}
