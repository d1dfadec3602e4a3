//! Regularized distance θ, weight ρ and the Hardy diagnostic.

use deform::weights::{build_weights, corner_family, hardy_ratio, WeightParams};
use deform::DomainGrid;

fn main() -> deform::Result<()> {
    let grid = DomainGrid::unit(2, 65)?;
    let ws = build_weights(&grid, WeightParams::default())?;
    println!("C1 = {:.3}, C2 = {:.3}, c_rho = {:?}, violations = {}", ws.c1, ws.c2, ws.c_rho, ws.violations(&grid).len());
    println!("cross section x = 0.5:");
    for j in (0..grid.n[1]).step_by(8) {
        let p = grid.index([grid.n[0] / 2, j, 0]);
        let y = grid.coord(p)[1];
        println!("  y = {y:.3}  theta = {:.4}  rho = {:.4e}", ws.theta[p], ws.rho[p]);
    }
    for (k, u) in (0..6).map(|k| (k, corner_family(&grid, k))) {
        println!("corner member {k}: Hardy ratio {:.3e}", hardy_ratio(&grid, &ws, &u)?);
    }
    Ok(())
}
