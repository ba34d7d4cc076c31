//! Graded meshes and grid functions in the singularity-weighted representation.

use crate::error::{Error, Result};
use crate::psi::PsiMap;
use std::sync::Arc;

/// Nodes t_i = a + (b − a)(i/(n − 1))^r clustered towards the left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    a: f64,
    b: f64,
    grading: f64,
    nodes: Vec<f64>,
}

impl GradedMesh {
    pub const MIN_NODES: usize = 3;

    pub fn new(a: f64, b: f64, n: usize, grading: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::domain(format!("mesh needs finite a < b, got [{a}, {b}]")));
        }
        if n < Self::MIN_NODES {
            return Err(Error::Resolution { n, min: Self::MIN_NODES });
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::domain(format!("grading exponent must be >= 1, got {grading}")));
        }
        let last = (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * (i as f64 / last).powf(grading))
            .collect();
        nodes[0] = a;
        nodes[n - 1] = b;
        Ok(GradedMesh { a, b, grading, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index of the node equal to `t` (within a relative tolerance), if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * (self.b - self.a);
        let i = self.nodes.partition_point(|&x| x < t - tol);
        (i < self.nodes.len() && (self.nodes[i] - t).abs() <= tol).then_some(i)
    }
}

/// A mesh paired with Ψ; caches u_i = Ψ(t_i) − Ψ(a).
#[derive(Debug, Clone)]
pub struct PsiGrid {
    psi: PsiMap,
    mesh: GradedMesh,
    u: Vec<f64>,
}

impl PsiGrid {
    pub fn new(psi: PsiMap, mesh: GradedMesh) -> Result<Arc<Self>> {
        psi.validate_on(mesh.nodes())?;
        let pa = psi.eval(mesh.a());
        let mut u: Vec<f64> = mesh.nodes().iter().map(|&t| psi.eval(t) - pa).collect();
        u[0] = 0.0;
        Ok(Arc::new(PsiGrid { psi, mesh, u }))
    }

    /// Convenience constructor for a graded mesh on [a, b].
    pub fn graded(psi: PsiMap, a: f64, b: f64, n: usize, grading: f64) -> Result<Arc<Self>> {
        Self::new(psi, GradedMesh::new(a, b, n, grading)?)
    }

    pub fn psi(&self) -> &PsiMap {
        &self.psi
    }

    pub fn mesh(&self) -> &GradedMesh {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn a(&self) -> f64 {
        self.mesh.a()
    }

    pub fn b(&self) -> f64 {
        self.mesh.b()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.mesh.nodes()[i]
    }

    pub fn nodes(&self) -> &[f64] {
        self.mesh.nodes()
    }

    /// Ψ(t_i) − Ψ(a) at every node.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Ψ(b) − Ψ(a).
    pub fn span(&self) -> f64 {
        self.u[self.u.len() - 1]
    }

    /// Ψ(t) − Ψ(a) at an arbitrary point.
    pub fn u_of(&self, t: f64) -> f64 {
        (self.psi.eval(t) - self.psi.eval(self.a())).max(0.0)
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other)
            || (self.psi.label() == other.psi.label() && self.mesh == other.mesh)
    }

    /// Interval index k with u_k ≤ u ≤ u_{k+1}.
    pub(crate) fn locate_u(&self, u: f64) -> usize {
        let i = self.u.partition_point(|&x| x <= u);
        i.saturating_sub(1).min(self.u.len() - 2)
    }
}

/// Samples z_i of z(t) = (Ψ(t) − Ψ(a))^w · x(t) on a [`PsiGrid`].
///
/// With w = 0 the values are plain samples of x. With w > 0 the value at
/// node 0 is the finite limit of the weighted function.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<PsiGrid>,
    weight: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<PsiGrid>, weight: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if !(0.0..1.0).contains(&weight) {
            return Err(Error::domain(format!("weight exponent must lie in [0, 1), got {weight}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite grid value at node {i}")));
        }
        Ok(GridFunction { grid, weight, values })
    }

    pub fn zeros(grid: Arc<PsiGrid>, weight: f64) -> Self {
        let n = grid.len();
        GridFunction { grid, weight, values: vec![0.0; n] }
    }

    /// Samples x(t) directly (weight 0).
    pub fn from_fn(grid: Arc<PsiGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, 0.0, values)
    }

    /// Samples x as a function of u = Ψ(t) − Ψ(a) (weight 0).
    pub fn from_u_fn(grid: Arc<PsiGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.u().iter().map(|&u| f(u)).collect();
        Self::new(grid, 0.0, values)
    }

    /// Builds the weighted samples z(u) directly.
    pub fn from_weighted_u_fn(grid: Arc<PsiGrid>, weight: f64, z: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.u().iter().map(|&u| z(u)).collect();
        Self::new(grid, weight, values)
    }

    pub fn grid(&self) -> &Arc<PsiGrid> {
        &self.grid
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// The stored (weighted) values z_i.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// x(t_i). At node 0 with w > 0 the raw value is unbounded and reported
    /// as ±∞ (or 0 when the weighted limit vanishes).
    pub fn raw(&self, i: usize) -> f64 {
        let z = self.values[i];
        if self.weight == 0.0 {
            return z;
        }
        let u = self.grid.u()[i];
        if u == 0.0 {
            return if z == 0.0 { 0.0 } else { z.signum() * f64::INFINITY };
        }
        z * u.powf(-self.weight)
    }

    pub fn raw_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.raw(i)).collect()
    }

    /// The weighted value z at an arbitrary u ∈ [0, Ψ(b) − Ψ(a)] by linear
    /// interpolation in u.
    pub fn weighted_at_u(&self, u: f64) -> f64 {
        let us = self.grid.u();
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= us[us.len() - 1] {
            return self.values[us.len() - 1];
        }
        let k = self.grid.locate_u(u);
        let h = us[k + 1] - us[k];
        let s = (u - us[k]) / h;
        self.values[k] * (1.0 - s) + self.values[k + 1] * s
    }

    /// x(t) for an arbitrary t > a, interpolating the weighted function.
    pub fn raw_at_t(&self, t: f64) -> f64 {
        let u = self.grid.u_of(t);
        let z = self.weighted_at_u(u);
        if self.weight == 0.0 {
            z
        } else if u == 0.0 {
            if z == 0.0 { 0.0 } else { z.signum() * f64::INFINITY }
        } else {
            z * u.powf(-self.weight)
        }
    }

    /// Same function expressed with a different weight exponent.
    ///
    /// Raising the weight sends the node-0 limit to zero; lowering it takes
    /// the node-0 value by linear extrapolation from nodes 1 and 2.
    pub fn reweight(&self, weight: f64) -> Result<GridFunction> {
        if (weight - self.weight).abs() < 1e-15 {
            return Ok(self.clone());
        }
        let us = self.grid.u();
        let dw = weight - self.weight;
        let mut values: Vec<f64> = self
            .values
            .iter()
            .zip(us)
            .map(|(&z, &u)| if u > 0.0 { z * u.powf(dw) } else { 0.0 })
            .collect();
        if dw < 0.0 {
            values[0] = extrapolate_to_zero(us[1], values[1], us[2], values[2]);
        }
        GridFunction::new(self.grid.clone(), weight, values)
    }

    fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// Brings two functions onto the larger of their weights.
    pub(crate) fn aligned(&self, other: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        self.check_compatible(other)?;
        let w = self.weight.max(other.weight);
        Ok((self.reweight(w)?, other.reweight(w)?))
    }

    /// αx + βy, nodewise in the weighted representation.
    pub fn lin_comb(&self, alpha: f64, other: &GridFunction, beta: f64) -> Result<GridFunction> {
        let (x, y) = self.aligned(other)?;
        let values = x
            .values
            .iter()
            .zip(&y.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        GridFunction::new(x.grid.clone(), x.weight, values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn scale(&self, alpha: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            weight: self.weight,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Largest |z_i|.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Returns a copy with `values` replaced, keeping grid and weight.
    pub fn with_values(&self, values: Vec<f64>) -> Result<GridFunction> {
        GridFunction::new(self.grid.clone(), self.weight, values)
    }
}

pub(crate) fn extrapolate_to_zero(u1: f64, z1: f64, u2: f64, z2: f64) -> f64 {
    z1 - (z2 - z1) * u1 / (u2 - u1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_mesh_endpoints_and_monotonicity() {
        let m = GradedMesh::new(0.0, 2.0, 17, 2.5).unwrap();
        assert_eq!(m.nodes()[0], 0.0);
        assert_eq!(m.nodes()[16], 2.0);
        assert!(m.nodes().windows(2).all(|w| w[1] > w[0]));
        // cluster near a
        assert!(m.nodes()[1] - m.nodes()[0] < m.nodes()[16] - m.nodes()[15]);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(matches!(GradedMesh::new(0.0, 1.0, 2, 1.0), Err(Error::Resolution { .. })));
        assert!(GradedMesh::new(1.0, 1.0, 8, 1.0).is_err());
        assert!(GradedMesh::new(0.0, 1.0, 8, 0.5).is_err());
    }

    #[test]
    fn node_lookup() {
        let m = GradedMesh::new(0.0, 1.0, 5, 1.0).unwrap();
        assert_eq!(m.node_index(0.25), Some(1));
        assert_eq!(m.node_index(1.0), Some(4));
        assert_eq!(m.node_index(0.3), None);
    }

    #[test]
    fn weighted_representation_round_trip() {
        let grid = PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, 33, 2.0).unwrap();
        // x(t) = 3 t^{-0.4}, stored with weight 0.4 as z ≡ 3
        let x = GridFunction::from_weighted_u_fn(grid.clone(), 0.4, |_| 3.0).unwrap();
        let t = grid.t(7);
        assert!((x.raw(7) - 3.0 * t.powf(-0.4)).abs() < 1e-12);
        assert_eq!(x.raw(0), f64::INFINITY);
        let higher = x.reweight(0.6).unwrap();
        assert_eq!(higher.values()[0], 0.0);
        assert!((higher.raw(7) - x.raw(7)).abs() < 1e-12);
        let back = higher.reweight(0.4).unwrap();
        assert!((back.values()[5] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let g1 = PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, 9, 1.0).unwrap();
        let g2 = PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, 11, 1.0).unwrap();
        let x = GridFunction::zeros(g1, 0.0);
        let y = GridFunction::zeros(g2, 0.0);
        assert_eq!(x.sub(&y).unwrap_err(), Error::MeshMismatch);
    }
}
