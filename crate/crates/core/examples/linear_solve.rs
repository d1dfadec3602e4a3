//! Weighted Dirichlet problem, boundary Fredholm operator and the full
//! linearized solve on a generic metric.

use deform::solver::{LinearizedSystem, SolverParams};
use deform::verify::seeded_scalar;
use deform::weights::{build_weights, WeightParams};
use deform::{DomainGrid, MetricSpec};

fn main() -> deform::Result<()> {
    let grid = DomainGrid::unit(2, 33)?;
    let g0 = MetricSpec::default_generic().build(&grid)?;
    let ws = build_weights(&grid, WeightParams::default())?;
    let sys = LinearizedSystem::assemble(&grid, &g0, &ws, SolverParams::default())?;

    let f = seeded_scalar(&grid, 3);
    let (_, rep) = sys.solve_dirichlet_zero(&f)?;
    println!("Dirichlet solve: interior residual {:.2e}", rep.residual_interior);

    let spec = sys.boundary_spectrum()?;
    println!("P spectrum: min {:.3e}, max {:.3e} over {} Σ unknowns", spec.iter().cloned().fold(f64::INFINITY, f64::min), spec.iter().cloned().fold(0.0, f64::max), spec.len());
    println!("defect dimension {}", sys.defect_dim()?);

    // smooth data for both equations; the defect space is empty, so no projection is lost
    let (a_sol, rep) = sys.solve_linearized(&seeded_scalar(&grid, 5), &seeded_scalar(&grid, 6))?;
    println!(
        "linearized solve: residuals {:.2e} / {:.2e}, stability {:.3}, sup|a| = {:.3e}",
        rep.residual_interior,
        rep.residual_boundary,
        rep.stability,
        a_sol.data.iter().flat_map(|m| m.iter().flatten()).fold(0.0f64, |s, v| s.max(v.abs()))
    );
    Ok(())
}
