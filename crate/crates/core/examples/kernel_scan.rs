//! Generic-metric detection: the flat square has a two-dimensional kernel,
//! a conformal bump has none.

use deform::generic::kernel_scan;
use deform::{DomainGrid, MetricField};

fn main() -> deform::Result<()> {
    let res = [17, 25, 33];
    let flat = kernel_scan(&res, |r| {
        let g = DomainGrid::unit(2, r)?;
        let m = MetricField::flat(&g);
        Ok((g, m))
    })?;
    println!("flat: dimension {:?}, verdict {:?}", flat.dimension, flat.verdict);
    println!("  smallest sigmas at n = 33: {:?}", &flat.finest_sigmas()[..4.min(flat.finest_sigmas().len())]);
    let bump = kernel_scan(&res, |r| {
        let g = DomainGrid::unit(2, r)?;
        let m = MetricField::conformal_bump(&g, 0.2, &[0.5, 0.35], 0.15);
        Ok((g, m))
    })?;
    println!("bump: dimension {:?}, verdict {:?}", bump.dimension, bump.verdict);
    Ok(())
}
