//! Periodic trapezoidal rule with Alpert's hybrid Gauss-trapezoidal end
//! corrections for integrands with a logarithmic singularity.
//!
//! A rule of order `p` integrates `f(s) = phi(s) log|s - t| + psi(s)` on a
//! uniform periodic grid of spacing `h` with error `O(h^p)`. Grid points
//! closer than `a` steps to the singular point are dropped and replaced by
//! `n` auxiliary nodes on each side at offsets `chi_m h`, with weights
//! `w_m h`. Density values at the auxiliary nodes are interpolated from the
//! grid with `p`-point Lagrange stencils.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Alpert hybrid rule for a logarithmic singularity at a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlpertRule {
    order: usize,
    nodes: &'static [f64],
    weights: &'static [f64],
    n_skipped: usize,
}

const NODES_4: [f64; 3] = [0.023796472841189737, 0.29353707415019146, 1.0237151242518903];
const WEIGHTS_4: [f64; 3] = [0.087959426755938866, 0.49890171529136991, 0.91313885795269122];

const NODES_8: [f64; 7] = [
    0.0065318157085679183,
    0.090867445846577286,
    0.39679665333758777,
    1.0278566405256457,
    1.9452885929092660,
    2.9801479338896397,
    3.9988613499511230,
];
const WEIGHTS_8: [f64; 7] = [
    0.024621941989952032,
    0.17013158668541781,
    0.46092563586500772,
    0.79472911486218943,
    1.0087104143379326,
    1.0360936497262156,
    1.0047876565332848,
];

const NODES_16: [f64; 15] = [
    0.00083715298320141133,
    0.012393827255426370,
    0.060092907857394678,
    0.18059912496019279,
    0.41428325990280309,
    0.79647477311124298,
    1.3489938824670588,
    2.0734716602643950,
    2.9479049390314938,
    3.9281292522486117,
    4.9572030865631117,
    5.9863601139774942,
    6.9979577047915193,
    7.9998887575246224,
    8.9999987543061196,
];
const WEIGHTS_16: [f64; 15] = [
    0.0031909190866262344,
    0.024236213804263380,
    0.077401355216530879,
    0.17048894202863691,
    0.30291234785113086,
    0.46522208349146167,
    0.64014896370967684,
    0.80512129461810612,
    0.93624119456986465,
    1.0143597753690752,
    1.0351677210536568,
    1.0203086249846104,
    1.0047983974415140,
    1.0003950173523093,
    1.0000071494225369,
];

impl AlpertRule {
    /// Rule of the given order (4, 8 or 16).
    pub fn new(order: usize) -> Result<Self> {
        let (nodes, weights, n_skipped): (&'static [f64], &'static [f64], usize) = match order {
            4 => (&NODES_4, &WEIGHTS_4, 2),
            8 => (&NODES_8, &WEIGHTS_8, 5),
            16 => (&NODES_16, &WEIGHTS_16, 10),
            _ => return Err(Error::Invalid(format!("no Alpert rule of order {order}; use 4, 8 or 16"))),
        };
        Ok(AlpertRule { order, nodes, weights, n_skipped })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Auxiliary node offsets in units of the grid spacing.
    pub fn aux_nodes(&self) -> &'static [f64] {
        self.nodes
    }

    /// Auxiliary weights in units of the grid spacing.
    pub fn aux_weights(&self) -> &'static [f64] {
        self.weights
    }

    /// Grid offsets `0 .. a-1` (on each side) left out of the trapezoid part.
    pub fn n_skipped(&self) -> usize {
        self.n_skipped
    }

    pub fn interp_degree(&self) -> usize {
        self.order - 1
    }

    /// Smallest admissible number of grid points.
    pub fn min_points(&self) -> usize {
        4 * self.order + 1
    }

    /// Largest grid offset touched by an interpolation stencil.
    pub fn stencil_radius(&self) -> usize {
        let chi = self.nodes[self.nodes.len() - 1];
        chi.floor() as usize + self.order / 2
    }
}

impl Default for AlpertRule {
    fn default() -> Self {
        AlpertRule::new(16).expect("order 16 exists")
    }
}

/// Uniform periodic trapezoid weights `2 pi / n`.
pub fn trapezoid_weights(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Invalid(format!("trapezoid rule needs n >= 2, got {n}")));
    }
    Ok(vec![2.0 * PI / n as f64; n])
}

/// One auxiliary node of a corrected row.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxNode {
    /// Parameter offset from the target node (absolute, not in units of `h`).
    pub offset: f64,
    /// Quadrature weight (absolute).
    pub weight: f64,
    /// Interpolation stencil as `(grid offset, coefficient)` pairs; grid
    /// offsets are relative to the target node and wrap periodically.
    pub stencil: Vec<(isize, f64)>,
}

/// Corrected quadrature row for a target node: plain trapezoid weight `h`
/// on grid offsets `a ..= n - a`, plus auxiliary nodes near the target.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionRow {
    pub n: usize,
    pub target: usize,
    pub h: f64,
    pub n_skipped: usize,
    pub aux: Vec<AuxNode>,
}

impl CorrectionRow {
    /// Grid indices that carry the plain trapezoid weight `h`.
    pub fn trapezoid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (self.n_skipped..=self.n - self.n_skipped).map(move |d| (self.target + d) % self.n)
    }

    /// Wraps a relative grid offset to an index.
    pub fn index(&self, offset: isize) -> usize {
        (self.target as isize + offset).rem_euclid(self.n as isize) as usize
    }

    /// Applies the row to `kernel(s)` (a function of the absolute source
    /// parameter) times the grid density `phi`.
    pub fn integrate(&self, kernel: impl Fn(f64) -> f64, phi: &[f64]) -> f64 {
        let t = self.h * self.target as f64;
        let mut acc = 0.0;
        for j in self.trapezoid_indices() {
            acc += self.h * kernel(self.h * j as f64) * phi[j];
        }
        for node in &self.aux {
            let dens: f64 = node.stencil.iter().map(|&(o, c)| c * phi[self.index(o)]).sum();
            acc += node.weight * kernel(t + node.offset) * dens;
        }
        acc
    }
}

/// Lagrange coefficients for interpolating at `x` from the integer points
/// `first, first + 1, ..., first + count - 1`.
pub(crate) fn lagrange_stencil(x: f64, first: isize, count: usize) -> Vec<(isize, f64)> {
    let pts: Vec<isize> = (0..count as isize).map(|q| first + q).collect();
    pts.iter()
        .map(|&xq| {
            let mut c = 1.0;
            for &xr in &pts {
                if xr != xq {
                    c *= (x - xr as f64) / (xq - xr) as f64;
                }
            }
            (xq, c)
        })
        .collect()
}

/// Stencils for the auxiliary nodes `+chi_m` (the `-chi_m` stencils are the
/// mirror images).
pub(crate) fn positive_stencils(rule: &AlpertRule) -> Vec<Vec<(isize, f64)>> {
    let p = rule.order;
    rule.nodes
        .iter()
        .map(|&chi| {
            let first = chi.floor() as isize - (p / 2) as isize + 1;
            lagrange_stencil(chi, first, p)
        })
        .collect()
}

/// Corrected quadrature row for target node `target` on an `n`-point grid.
pub fn alpert_correction_row(rule: &AlpertRule, n: usize, target: usize) -> Result<CorrectionRow> {
    if n < rule.min_points() {
        return Err(Error::Invalid(format!(
            "order-{} Alpert rule needs at least {} grid points, got {n}",
            rule.order,
            rule.min_points()
        )));
    }
    if target >= n {
        return Err(Error::Dimension(format!("target index {target} out of range for {n} points")));
    }
    let h = 2.0 * PI / n as f64;
    let stencils = positive_stencils(rule);
    let mut aux = Vec::with_capacity(2 * rule.nodes.len());
    for ((&chi, &w), st) in rule.nodes.iter().zip(rule.weights).zip(&stencils) {
        aux.push(AuxNode { offset: chi * h, weight: w * h, stencil: st.clone() });
        aux.push(AuxNode { offset: -chi * h, weight: w * h, stencil: st.iter().map(|&(o, c)| (-o, c)).collect() });
    }
    Ok(CorrectionRow { n, target, h, n_skipped: rule.n_skipped, aux })
}
