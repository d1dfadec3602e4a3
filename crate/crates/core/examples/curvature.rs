//! Scalar curvature and boundary mean curvature of a conformal bump and of a
//! round-sphere chart, plus a Taylor check of the first variation.

use deform::tensor::taylor_check;
use deform::verify::seeded_tensor;
use deform::{curvature, DomainGrid, MetricField, Role};

fn main() -> deform::Result<()> {
    let grid = DomainGrid::unit(2, 33)?;
    let sphere = MetricField::round_sphere(&grid, &[0.5, 0.5]);
    let cd = curvature(&grid, &sphere)?;
    let r = cd.scalar();
    let interior = grid.nodes_with(Role::Interior);
    let worst = interior.iter().map(|&p| (r[p] - 2.0).abs()).fold(0.0, f64::max);
    println!("round sphere: max |R - 2| over interior nodes = {worst:.3e}");

    let bump = MetricField::conformal_bump(&grid, 0.2, &[0.5, 0.35], 0.15);
    let cd = curvature(&grid, &bump)?;
    let h = cd.mean_curvature();
    let sigma = grid.nodes_with(Role::Sigma);
    let hmax = sigma.iter().map(|&p| h[p].abs()).fold(0.0, f64::max);
    println!("conformal bump: sup |R| = {:.4}, sup_Σ |H| = {hmax:.4}", deform::fields::max_abs(&cd.scalar()));

    let a = seeded_tensor(&grid, 1);
    let t = taylor_check(&grid, &bump, &a, &[1e-3, 5e-4, 2.5e-4])?;
    println!("{t:#?}");
    Ok(())
}
