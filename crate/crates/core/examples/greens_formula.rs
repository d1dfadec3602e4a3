//! Linearized operators L, Ḣ and L* on a generic metric, and the Green
//! identity residual under refinement.

use deform::operators::{apply_hdot, apply_l, greens_residual};
use deform::verify::green_pair;
use deform::{curvature, DomainGrid, MetricSpec};

fn main() -> deform::Result<()> {
    for res in [17, 33, 65] {
        let grid = DomainGrid::unit(2, res)?;
        let g0 = MetricSpec::default_generic().build(&grid)?;
        let cd = curvature(&grid, &g0)?;
        let (a, u) = green_pair(&grid);
        let l = apply_l(&grid, &cd, &a);
        let hd = apply_hdot(&grid, &cd, &a);
        let gr = greens_residual(&grid, &cd, &a, &u);
        println!(
            "n = {res:3}: sup|L a| = {:.3e}, sup|Hdot a| = {:.3e}, lhs = {:.6e}, rhs = {:.6e}, residual = {:.3e}",
            deform::fields::max_abs(&l),
            deform::fields::max_abs(&hd),
            gr.lhs,
            gr.rhs,
            gr.residual
        );
    }
    Ok(())
}
