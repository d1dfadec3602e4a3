//! Structured grids over the model box, node roles, finite-difference
//! stencils and trapezoidal quadrature.

use crate::error::{DeformError, Result};

/// Classification of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Interior,
    /// Open boundary patch where the deformation may be nonzero.
    Sigma,
    /// Remainder of the boundary, where the deformation vanishes.
    SigmaPrime,
    /// Rim of the Σ patch.
    Gamma,
}

/// Σ is the low face `axis = 0` of the box minus its rim.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SigmaFace {
    pub axis: usize,
}

impl SigmaFace {
    pub fn bottom(dim: usize) -> Self {
        SigmaFace { axis: dim - 1 }
    }

    pub fn left() -> Self {
        SigmaFace { axis: 0 }
    }
}

pub const MAX_STENCIL: usize = 16;

/// Weighted node list of one difference operator at one node.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub len: usize,
    pub idx: [usize; MAX_STENCIL],
    pub w: [f64; MAX_STENCIL],
}

impl Stencil {
    fn empty() -> Self {
        Stencil { len: 0, idx: [0; MAX_STENCIL], w: [0.0; MAX_STENCIL] }
    }

    fn push(&mut self, i: usize, w: f64) {
        self.idx[self.len] = i;
        self.w[self.len] = w;
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.w[k]))
    }

    /// Applies a stencil whose weights sum to zero (any derivative stencil).
    #[inline]
    pub fn apply(&self, f: &[f64]) -> f64 {
        // differences against the first sample make constants map to exactly zero
        let f0 = f[self.idx[0]];
        let mut s = 0.0;
        for k in 1..self.len {
            s += self.w[k] * (f[self.idx[k]] - f0);
        }
        s
    }
}

/// Finite-difference weights for the `m`-th derivative at `x0` from the
/// given sample positions (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// 1D stencil for the `m`-th derivative at position `i` of `n` points:
/// centered (second order) when it fits, otherwise one-sided with `m + 3`
/// points anchored at the nearest end (third order, so boundary rows do not
/// dominate the error constant). Offsets are in node units.
pub fn line_stencil(i: usize, n: usize, m: usize) -> Vec<(isize, f64)> {
    let radius = (m + 1) / 2;
    let offsets: Vec<isize> = if i >= radius && i + radius < n {
        (-(radius as isize)..=radius as isize).collect()
    } else if i < radius {
        (0..(m + 3) as isize).map(|k| k - i as isize).collect()
    } else {
        let last = (n - 1 - i) as isize;
        ((-((m + 2) as isize))..=0).map(|k| k + last).collect()
    };
    let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let w = fd_weights(0.0, &xs, m);
    offsets.into_iter().zip(w).filter(|(_, w)| *w != 0.0).collect()
}

/// Per-axis tables of unscaled line stencils for derivative orders 1..=4.
#[derive(Clone, Debug)]
pub struct StencilSet {
    /// `table[m - 1][i]` for an axis with `n` nodes.
    table: Vec<Vec<Vec<(isize, f64)>>>,
}

impl StencilSet {
    pub fn new(n: usize) -> Self {
        let table = (1..=4)
            .map(|m| (0..n).map(|i| line_stencil(i, n, m)).collect())
            .collect();
        StencilSet { table }
    }

    pub fn line(&self, m: usize, i: usize) -> &[(isize, f64)] {
        &self.table[m - 1][i]
    }
}

/// Structured grid over `[0, L0] x [0, L1] (x [0, L2])`.
#[derive(Clone, Debug)]
pub struct DomainGrid {
    pub dim: usize,
    pub extents: [f64; 3],
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub sigma: SigmaFace,
    roles: Vec<Role>,
    vol_w: Vec<f64>,
    surf_w: Vec<f64>,
    stencils: Vec<StencilSet>,
}

impl DomainGrid {
    /// Builds the grid and checks that a collar of width `r0` spans at
    /// least four cells.
    pub fn build(dim: usize, extents: &[f64], resolution: usize, sigma: SigmaFace, r0: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(DeformError::Config(format!("dim must be 2 or 3, got {dim}")));
        }
        if extents.len() != dim || extents.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(DeformError::Config(format!("extents must be {dim} positive lengths")));
        }
        if resolution < 9 {
            return Err(DeformError::Config(format!("resolution {resolution} < 9")));
        }
        if sigma.axis >= dim {
            return Err(DeformError::Config(format!("sigma axis {} out of range", sigma.axis)));
        }
        let mut ext = [1.0; 3];
        let mut n = [1usize; 3];
        let mut h = [1.0; 3];
        for a in 0..dim {
            ext[a] = extents[a];
            n[a] = resolution;
            h[a] = extents[a] / (resolution - 1) as f64;
        }
        let hmax = h[..dim].iter().cloned().fold(0.0, f64::max);
        if r0 < 4.0 * hmax {
            return Err(DeformError::Config(format!(
                "collar too thin for the grid: r0 = {r0} < 4h = {}",
                4.0 * hmax
            )));
        }
        let total = n[0] * n[1] * n[2];
        let mut roles = Vec::with_capacity(total);
        let mut vol_w = Vec::with_capacity(total);
        let mut surf_w = vec![0.0; total];
        for p in 0..total {
            let ijk = unflatten(p, n);
            let mut on_bdry = false;
            let mut other_bdry = false;
            let mut w = 1.0;
            for a in 0..dim {
                let edge = ijk[a] == 0 || ijk[a] == n[a] - 1;
                w *= if edge { 0.5 * h[a] } else { h[a] };
                if edge {
                    on_bdry = true;
                    if !(a == sigma.axis && ijk[a] == 0) {
                        other_bdry = true;
                    }
                }
            }
            vol_w.push(w);
            let on_face = ijk[sigma.axis] == 0;
            let role = if !on_bdry {
                Role::Interior
            } else if on_face && !other_bdry {
                Role::Sigma
            } else if on_face {
                Role::Gamma
            } else {
                Role::SigmaPrime
            };
            if on_face {
                let mut sw = 1.0;
                for a in (0..dim).filter(|&a| a != sigma.axis) {
                    let edge = ijk[a] == 0 || ijk[a] == n[a] - 1;
                    sw *= if edge { 0.5 * h[a] } else { h[a] };
                }
                surf_w[p] = sw;
            }
            roles.push(role);
        }
        let stencils = (0..dim).map(|a| StencilSet::new(n[a])).collect();
        Ok(DomainGrid { dim, extents: ext, n, h, sigma, roles, vol_w, surf_w, stencils })
    }

    /// Unit square or cube with Σ on the bottom face and the default collar.
    pub fn unit(dim: usize, resolution: usize) -> Result<Self> {
        Self::build(dim, &vec![1.0; dim], resolution, SigmaFace::bottom(dim), 0.3)
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn role(&self, p: usize) -> Role {
        self.roles[p]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn volume_weight(&self, p: usize) -> f64 {
        self.vol_w[p]
    }

    /// Trapezoidal weight on the closed Σ face (Σ and Γ nodes), zero elsewhere.
    pub fn surface_weight(&self, p: usize) -> f64 {
        self.surf_w[p]
    }

    /// Fourth-order end-corrected volume weight.
    pub fn volume_weight_fine(&self, p: usize) -> f64 {
        let ijk = self.ijk(p);
        (0..self.dim).map(|a| gregory(ijk[a], self.n[a]) * self.h[a]).product()
    }

    /// Fourth-order end-corrected weight on the closed Σ face.
    pub fn surface_weight_fine(&self, p: usize) -> f64 {
        let ijk = self.ijk(p);
        if ijk[self.sigma.axis] != 0 {
            return 0.0;
        }
        self.tangential_axes().iter().map(|&a| gregory(ijk[a], self.n[a]) * self.h[a]).product()
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.n[0] * (ijk[1] + self.n[1] * ijk[2])
    }

    pub fn ijk(&self, p: usize) -> [usize; 3] {
        unflatten(p, self.n)
    }

    pub fn coord(&self, p: usize) -> [f64; 3] {
        let ijk = self.ijk(p);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = ijk[a] as f64 * self.h[a];
        }
        x
    }

    /// Axes tangential to Σ.
    pub fn tangential_axes(&self) -> Vec<usize> {
        (0..self.dim).filter(|&a| a != self.sigma.axis).collect()
    }

    /// Nodes of the given role in index order.
    pub fn nodes_with(&self, role: Role) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.roles[p] == role).collect()
    }

    /// Nodes on the closed face carrying Σ.
    pub fn on_sigma_face(&self, p: usize) -> bool {
        self.ijk(p)[self.sigma.axis] == 0
    }

    /// Index distance of node `p` from Σ along the normal axis.
    pub fn layer(&self, p: usize) -> usize {
        self.ijk(p)[self.sigma.axis]
    }

    /// Stencil of `d^m / dx_axis^m` at node `p`.
    pub fn axis_stencil(&self, p: usize, axis: usize, m: usize) -> Stencil {
        let ijk = self.ijk(p);
        let scale = self.h[axis].powi(m as i32);
        let stride = self.stride(axis);
        let mut s = Stencil::empty();
        for &(off, w) in self.stencils[axis].line(m, ijk[axis]) {
            let q = (p as isize + off * stride as isize) as usize;
            s.push(q, w / scale);
        }
        s
    }

    /// Stencil of `d/dx_a` at node `p`.
    pub fn d1(&self, p: usize, a: usize) -> Stencil {
        self.axis_stencil(p, a, 1)
    }

    /// Stencil of `d^2/dx_a dx_b` at node `p`; mixed derivatives are the
    /// tensor product of first-derivative stencils.
    pub fn d2(&self, p: usize, a: usize, b: usize) -> Stencil {
        if a == b {
            return self.axis_stencil(p, a, 2);
        }
        let sa = self.d1(p, a);
        let mut s = Stencil::empty();
        for (qa, wa) in sa.iter() {
            let sb = self.d1(qa, b);
            for (qb, wb) in sb.iter() {
                s.push(qb, wa * wb);
            }
        }
        s
    }

    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.n[0],
            _ => self.n[0] * self.n[1],
        }
    }

    /// Neighbor of `p` shifted by `off` nodes along `axis`, if inside.
    pub fn shift(&self, p: usize, axis: usize, off: isize) -> Option<usize> {
        let i = self.ijk(p)[axis] as isize + off;
        if i < 0 || i >= self.n[axis] as isize {
            None
        } else {
            Some((p as isize + off * self.stride(axis) as isize) as usize)
        }
    }

    /// Field-level first derivative.
    pub fn diff1(&self, f: &[f64], a: usize) -> Vec<f64> {
        (0..self.len()).map(|p| self.d1(p, a).apply(f)).collect()
    }

    /// Field-level second derivative.
    pub fn diff2(&self, f: &[f64], a: usize, b: usize) -> Vec<f64> {
        (0..self.len()).map(|p| self.d2(p, a, b).apply(f)).collect()
    }

    /// Euclidean Laplacian with the grid stencils.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for a in 0..self.dim {
            for (o, v) in out.iter_mut().zip(self.diff2(f, a, a)) {
                *o += v;
            }
        }
        out
    }

    /// Distances from `x` to each planar piece of Σ′ (every face but the Σ face).
    pub fn sigma_prime_face_distances(&self, x: [f64; 3]) -> Vec<f64> {
        let mut d = Vec::with_capacity(2 * self.dim - 1);
        for a in 0..self.dim {
            if a != self.sigma.axis {
                d.push(x[a].max(0.0));
            }
            d.push((self.extents[a] - x[a]).max(0.0));
        }
        d
    }

    /// Exact distance to Σ′ in model coordinates.
    pub fn distance_to_sigma_prime(&self, x: [f64; 3]) -> f64 {
        self.sigma_prime_face_distances(x).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Volume integral by trapezoidal quadrature.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.vol_w).map(|(a, b)| a * b).sum()
    }

    /// Integral over the closed Σ face.
    pub fn integrate_sigma(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.surf_w).map(|(a, b)| a * b).sum()
    }

    /// Sample a function of the coordinates at every node.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|p| f(self.coord(p))).collect()
    }
}

fn unflatten(p: usize, n: [usize; 3]) -> [usize; 3] {
    [p % n[0], (p / n[0]) % n[1], p / (n[0] * n[1])]
}

/// Gregory end-corrected trapezoid weight (exact for cubics) for node `i`
/// of `n`, in units of `h`.
pub fn gregory(i: usize, n: usize) -> f64 {
    const END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    if n < 6 {
        return if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
    }
    let k = i.min(n - 1 - i);
    if k < 3 {
        END[k]
    } else {
        1.0
    }
}

/// Exact distance to Σ′ for every node.
pub fn euclidean_distance_to_sigma_prime(grid: &DomainGrid) -> Vec<f64> {
    (0..grid.len()).map(|p| grid.distance_to_sigma_prime(grid.coord(p))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn role_counts_2d() {
        let g = DomainGrid::unit(2, 33).unwrap();
        assert_eq!(g.len(), 33 * 33);
        assert_eq!(g.nodes_with(Role::Sigma).len(), 31);
        assert_eq!(g.nodes_with(Role::Gamma).len(), 2);
        assert_eq!(g.role(g.index([0, 0, 0])), Role::Gamma);
        assert_eq!(g.role(g.index([32, 0, 0])), Role::Gamma);
        assert_eq!(g.role(g.index([0, 5, 0])), Role::SigmaPrime);
    }

    #[test]
    fn role_counts_3d() {
        let g = DomainGrid::unit(3, 17).unwrap();
        assert_eq!(g.nodes_with(Role::Gamma).len(), 4 * 15 + 4);
        assert_eq!(g.nodes_with(Role::Sigma).len(), 15 * 15);
        let boundary = 17usize.pow(3) - 15usize.pow(3);
        assert_eq!(g.nodes_with(Role::SigmaPrime).len(), boundary - 64 - 225);
    }

    #[test]
    fn volume_and_surface_quadrature() {
        let g = DomainGrid::unit(2, 33).unwrap();
        let one = vec![1.0; g.len()];
        assert!((g.integrate(&one) - 1.0).abs() < 1e-12);
        assert!((g.integrate_sigma(&one) - 1.0).abs() < 1e-12);
        let g3 = DomainGrid::build(3, &[1.0, 2.0, 1.5], 13, SigmaFace::bottom(3), 0.7).unwrap();
        let one = vec![1.0; g3.len()];
        assert!((g3.integrate(&one) - 3.0).abs() < 1e-12);
        assert!((g3.integrate_sigma(&one) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collar_too_thin() {
        let err = DomainGrid::build(2, &[1.0, 1.0], 9, SigmaFace::bottom(2), 0.3).unwrap_err();
        assert!(err.to_string().contains("r0"));
        assert!(DomainGrid::build(2, &[1.0, 1.0], 8, SigmaFace::bottom(2), 0.9).is_err());
    }

    #[test]
    fn left_sigma_face() {
        let g = DomainGrid::build(2, &[1.0, 1.0], 17, SigmaFace::left(), 0.3).unwrap();
        assert_eq!(g.role(g.index([0, 8, 0])), Role::Sigma);
        assert_eq!(g.role(g.index([8, 0, 0])), Role::SigmaPrime);
        assert_eq!(g.role(g.index([0, 16, 0])), Role::Gamma);
    }

    #[test]
    fn distances() {
        let g = DomainGrid::unit(2, 33).unwrap();
        assert_eq!(g.distance_to_sigma_prime([0.5, 0.0, 0.0]), 0.5);
        assert_eq!(g.distance_to_sigma_prime([0.5, 0.5, 0.0]), 0.5);
        assert!((g.distance_to_sigma_prime([0.1, 0.2, 0.0]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fornberg_matches_known_weights() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0, 3.0], 2);
        for (a, b) in w.iter().zip([2.0, -5.0, 4.0, -1.0]) {
            assert!((a - b).abs() < 1e-13);
        }
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        for (a, b) in w.iter().zip([-1.5, 2.0, -0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stencils_exact_on_low_degree_polynomials() {
        let n = 12;
        for m in 1..=4 {
            for i in 0..n {
                let st = line_stencil(i, n, m);
                for deg in 0..=(m + 1) {
                    let val: f64 = st.iter().map(|&(o, w)| w * ((i as isize + o) as f64).powi(deg as i32)).sum();
                    let xi = i as f64;
                    let exact = if deg < m {
                        0.0
                    } else {
                        (0..m).map(|k| (deg - k) as f64).product::<f64>() * xi.powi((deg - m) as i32)
                    };
                    assert!((val - exact).abs() < 1e-8 * (1.0 + exact.abs()), "m={m} i={i} deg={deg}");
                }
            }
        }
    }

    #[test]
    fn laplacian_second_order() {
        let err = |n: usize| {
            let g = DomainGrid::unit(2, n).unwrap();
            let pi = std::f64::consts::PI;
            let u = g.sample(|x| (pi * x[0]).sin() * (pi * x[1]).cos());
            let lap = g.laplacian(&u);
            lap.iter().zip(&u).map(|(l, u)| (l + 2.0 * pi * pi * u).abs()).fold(0.0, f64::max)
        };
        let ratio = err(33) / err(65);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn gradient_of_constant_is_zero(c in -1e3f64..1e3, p in 0usize..17 * 17, a in 0usize..2) {
            let g = DomainGrid::unit(2, 17).unwrap();
            let f = vec![c; g.len()];
            prop_assert_eq!(g.d1(p, a).apply(&f), 0.0);
        }

        #[test]
        fn second_derivatives_exact_on_quadratics(
            c in proptest::array::uniform6(-2.0f64..2.0), p in 0usize..17 * 17, a in 0usize..2, b in 0usize..2
        ) {
            let g = DomainGrid::unit(2, 17).unwrap();
            let f = g.sample(|x| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]);
            let exact = match (a.min(b), a.max(b)) {
                (0, 0) => 2.0 * c[3],
                (0, 1) => c[4],
                _ => 2.0 * c[5],
            };
            prop_assert!((g.d2(p, a, b).apply(&f) - exact).abs() < 1e-9);
        }
    }
}
