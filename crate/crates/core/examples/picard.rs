//! Picard iteration toward curvature targets manufactured from a small
//! boundary-supported deformation.

use deform::picard::{manufactured_targets, manufactured_tensor, picard_run, PicardParams};
use deform::solver::{LinearizedSystem, SolverParams};
use deform::weights::{build_weights, WeightParams};
use deform::{DomainGrid, MetricSpec};

fn main() -> deform::Result<()> {
    let grid = DomainGrid::unit(2, 33)?;
    let g0 = MetricSpec::default_generic().build(&grid)?;
    let ws = build_weights(&grid, WeightParams::default())?;
    let sys = LinearizedSystem::assemble(&grid, &g0, &ws, SolverParams::default())?;
    let a_star = manufactured_tensor(&grid, &g0, 1e-2, &[0.5], 0.25);
    let (rt, ht) = manufactured_targets(&grid, &g0, &a_star)?;
    let (_, state) = picard_run(&sys, &g0, &rt, &ht, PicardParams::default())?;
    for r in &state.history {
        println!("step {:2}: sup|R - R'| = {:.3e}, sup|H - H'| = {:.3e}", r.step, r.r_sup, r.h_sup);
    }
    println!("termination {:?}", state.termination);
    Ok(())
}
