//! Structured box grids for the chamber and its elastic wall.
//!
//! Nodes are numbered with axis 0 fastest. The last axis is vertical and the
//! elastic wall Γ is the top face; every other face is rigid (Γ0). In two
//! dimensions the wall is a clamped beam along the top edge.
//!
//! Quadrature is the product trapezoid rule. The gradient is the staggered
//! forward difference. With these choices the discrete operators satisfy
//! summation by parts exactly:
//!
//! * `<-Δ_h u, v>_Ω = <∇_h u, ∇_h v> - <g, γv>_Γ` where `g` is the Neumann data
//!   fed to the ghost row above the wall;
//! * `<Δ²_h w, v>_Γ = <Δ_h w, Δ_h v>_Γ` for clamped `w`, `v`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, powf};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("dimension {0} not supported (2 or 3)")]
    Dimension(usize),
    #[error("grid too coarse for biharmonic stencil: n = {0} < 5")]
    TooCoarse(usize),
    #[error("degenerate extent {0}")]
    Extent(f64),
    #[error("field length {got} does not match {expected}")]
    Shape { expected: usize, got: usize },
    #[error("norm exponent {0} < 1")]
    Exponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dim: usize,
    /// Side lengths; only the first `dim` entries are used.
    pub extents: [f64; 3],
    /// Grid points per axis, boundary nodes included.
    pub n: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            dim: 2,
            extents: [1.0; 3],
            n: 33,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// On Γ0, where `u = 0`.
    Rigid,
    /// On the open wall Γ, where `∂_ν u = w_t`.
    Wall,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub n: usize,
    pub extents: [f64; 3],
    pub h: [f64; 3],
    kinds: Vec<NodeKind>,
    strides: [usize; 3],
    quad_omega: Vec<f64>,
    quad_gamma: Vec<f64>,
    /// Per axis, the weight of the edge `(i, i + e_k)`; zero on the last layer.
    edge_weights: Vec<Vec<f64>>,
    free_omega: Vec<usize>,
    free_gamma: Vec<usize>,
    gamma_free_mask: Vec<bool>,
    wall_offset: usize,
}

fn trap(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        0.5
    } else {
        1.0
    }
}

impl Mesh {
    pub fn build(geometry: &Geometry) -> Result<Self, MeshError> {
        let Geometry { dim, extents, n } = *geometry;
        if dim != 2 && dim != 3 {
            return Err(MeshError::Dimension(dim));
        }
        if n < 5 {
            return Err(MeshError::TooCoarse(n));
        }
        for &e in &extents[..dim] {
            if !(e.is_finite() && e > 0.0) {
                return Err(MeshError::Extent(e));
            }
        }
        let mut h = [0.0; 3];
        for k in 0..dim {
            h[k] = extents[k] / (n - 1) as f64;
        }
        let strides = [1, n, n * n];
        let total = n.pow(dim as u32);
        let n_gamma = n.pow(dim as u32 - 1);
        let vert = dim - 1;

        let mut kinds = Vec::with_capacity(total);
        let mut quad_omega = Vec::with_capacity(total);
        let mut edge_weights = vec![vec![0.0; total]; dim];
        let mut free_omega = Vec::new();
        for idx in 0..total {
            let ix = multi_index(idx, n, dim);
            let rigid = ix[vert] == 0 || (0..vert).any(|k| ix[k] == 0 || ix[k] == n - 1);
            let kind = if rigid {
                NodeKind::Rigid
            } else if ix[vert] == n - 1 {
                NodeKind::Wall
            } else {
                NodeKind::Interior
            };
            kinds.push(kind);
            if kind != NodeKind::Rigid {
                free_omega.push(idx);
            }
            let mut w = 1.0;
            for k in 0..dim {
                w *= h[k] * trap(ix[k], n);
            }
            quad_omega.push(w);
            for k in 0..dim {
                if ix[k] < n - 1 {
                    let mut ew = h[k];
                    for j in 0..dim {
                        if j != k {
                            ew *= h[j] * trap(ix[j], n);
                        }
                    }
                    edge_weights[k][idx] = ew;
                }
            }
        }

        let mut quad_gamma = Vec::with_capacity(n_gamma);
        let mut free_gamma = Vec::new();
        let mut gamma_free_mask = Vec::with_capacity(n_gamma);
        for ig in 0..n_gamma {
            let ix = multi_index(ig, n, dim - 1);
            let mut w = 1.0;
            let mut free = true;
            for k in 0..dim - 1 {
                w *= h[k] * trap(ix[k], n);
                free &= ix[k] > 0 && ix[k] < n - 1;
            }
            quad_gamma.push(w);
            gamma_free_mask.push(free);
            if free {
                free_gamma.push(ig);
            }
        }

        Ok(Self {
            dim,
            n,
            extents,
            h,
            kinds,
            strides,
            quad_omega,
            quad_gamma,
            edge_weights,
            free_omega,
            free_gamma,
            gamma_free_mask,
            wall_offset: (n - 1) * strides[vert],
        })
    }

    pub fn omega_len(&self) -> usize {
        self.kinds.len()
    }

    pub fn gamma_len(&self) -> usize {
        self.quad_gamma.len()
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn quad_omega(&self) -> &[f64] {
        &self.quad_omega
    }

    pub fn quad_gamma(&self) -> &[f64] {
        &self.quad_gamma
    }

    /// Nodes of Ω carrying unknowns (everything off Γ0).
    pub fn free_omega(&self) -> &[usize] {
        &self.free_omega
    }

    /// Nodes of Γ carrying plate unknowns (everything off ∂Γ).
    pub fn free_gamma(&self) -> &[usize] {
        &self.free_gamma
    }

    pub fn is_gamma_free(&self, ig: usize) -> bool {
        self.gamma_free_mask[ig]
    }

    /// Ω index of the wall-row node above Γ index `ig`.
    #[inline]
    pub fn wall_node(&self, ig: usize) -> usize {
        ig + self.wall_offset
    }

    pub fn omega_measure(&self) -> f64 {
        self.extents[..self.dim].iter().product()
    }

    pub fn gamma_measure(&self) -> f64 {
        self.extents[..self.dim - 1].iter().product()
    }

    /// Node coordinates.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let ix = multi_index(idx, self.n, self.dim);
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = ix[k] as f64 * self.h[k];
        }
        x
    }

    /// Coordinates of a Γ node within the wall (first `dim - 1` axes).
    pub fn gamma_coords(&self, ig: usize) -> [f64; 2] {
        let ix = multi_index(ig, self.n, self.dim - 1);
        let mut x = [0.0; 2];
        for k in 0..self.dim - 1 {
            x[k] = ix[k] as f64 * self.h[k];
        }
        x
    }

    pub fn omega_field<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.omega_len()).map(|i| f(self.coords(i))).collect()
    }

    pub fn gamma_field<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.gamma_len()).map(|i| f(self.gamma_coords(i))).collect()
    }

    pub fn check_omega(&self, field: &[f64]) -> Result<(), MeshError> {
        if field.len() != self.omega_len() {
            return Err(MeshError::Shape {
                expected: self.omega_len(),
                got: field.len(),
            });
        }
        Ok(())
    }

    pub fn check_gamma(&self, field: &[f64]) -> Result<(), MeshError> {
        if field.len() != self.gamma_len() {
            return Err(MeshError::Shape {
                expected: self.gamma_len(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// Zeroes a field on Γ0.
    pub fn mask_omega(&self, field: &mut [f64]) {
        for (v, k) in field.iter_mut().zip(&self.kinds) {
            if *k == NodeKind::Rigid {
                *v = 0.0;
            }
        }
    }

    /// Zeroes a wall field on ∂Γ.
    pub fn mask_gamma(&self, field: &mut [f64]) {
        for (v, free) in field.iter_mut().zip(&self.gamma_free_mask) {
            if !free {
                *v = 0.0;
            }
        }
    }

    /// `-Δ_h u` with `u = 0` on Γ0 and ghost values `u_ghost = u_below + 2h g`
    /// above the wall. Zero on Γ0 nodes.
    pub fn neg_laplacian_into(&self, u: &[f64], neumann: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.omega_len());
        debug_assert_eq!(neumann.len(), self.gamma_len());
        out.iter_mut().for_each(|v| *v = 0.0);
        let vert = self.dim - 1;
        for &idx in &self.free_omega {
            let c = u[idx];
            let mut acc = 0.0;
            for k in 0..self.dim {
                let s = self.strides[k];
                let inv = 1.0 / (self.h[k] * self.h[k]);
                let lo = u[idx - s];
                let hi = if k == vert && self.kinds[idx] == NodeKind::Wall {
                    lo + 2.0 * self.h[k] * neumann[idx - self.wall_offset]
                } else {
                    u[idx + s]
                };
                acc += (2.0 * c - lo - hi) * inv;
            }
            out[idx] = acc;
        }
    }

    /// Discrete `-Δu + u` with Neumann data on the wall.
    pub fn wave_operator(&self, u: &[f64], neumann: &[f64]) -> Result<Vec<f64>, MeshError> {
        self.check_omega(u)?;
        self.check_gamma(neumann)?;
        let mut out = vec![0.0; u.len()];
        self.wave_operator_into(u, neumann, &mut out);
        Ok(out)
    }

    pub fn wave_operator_into(&self, u: &[f64], neumann: &[f64], out: &mut [f64]) {
        self.neg_laplacian_into(u, neumann, out);
        for &idx in &self.free_omega {
            out[idx] += u[idx];
        }
    }

    /// 5-point (or 3-point in 1D) Laplacian on Γ with clamped mirror ghosts,
    /// evaluated at every wall node including ∂Γ.
    pub fn laplacian_gamma_into(&self, w: &[f64], out: &mut [f64]) {
        let gd = self.dim - 1;
        let n = self.n;
        for ig in 0..self.gamma_len() {
            let ix = multi_index(ig, n, gd);
            let c = w[ig];
            let mut acc = 0.0;
            for k in 0..gd {
                let s = self.strides[k];
                let inv = 1.0 / (self.h[k] * self.h[k]);
                let lo = if ix[k] > 0 { w[ig - s] } else { w[ig + s] };
                let hi = if ix[k] < n - 1 { w[ig + s] } else { w[ig - s] };
                acc += (lo + hi - 2.0 * c) * inv;
            }
            out[ig] = acc;
        }
    }

    pub fn laplacian_gamma(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        self.laplacian_gamma_into(w, &mut out);
        out
    }

    /// Clamped `Δ²_h w`: the Γ Laplacian applied twice, which reproduces the
    /// 5-point (beam) or 13-point (plate) stencil with mirror ghosts.
    /// `scratch` receives `Δ_h w`. Zero on ∂Γ.
    pub fn plate_operator_into(&self, w: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.laplacian_gamma_into(w, scratch);
        let gd = self.dim - 1;
        out.iter_mut().for_each(|v| *v = 0.0);
        for &ig in &self.free_gamma {
            let c = scratch[ig];
            let mut acc = 0.0;
            for k in 0..gd {
                let s = self.strides[k];
                let inv = 1.0 / (self.h[k] * self.h[k]);
                acc += (scratch[ig - s] + scratch[ig + s] - 2.0 * c) * inv;
            }
            out[ig] = acc;
        }
    }

    pub fn plate_operator(&self, w: &[f64]) -> Result<Vec<f64>, MeshError> {
        self.check_gamma(w)?;
        let mut scratch = vec![0.0; w.len()];
        let mut out = vec![0.0; w.len()];
        self.plate_operator_into(w, &mut scratch, &mut out);
        Ok(out)
    }

    /// Restriction of an Ω field to the wall row.
    pub fn trace(&self, u: &[f64]) -> Vec<f64> {
        (0..self.gamma_len())
            .map(|ig| u[self.wall_node(ig)])
            .collect()
    }

    pub fn inner_omega(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quad_omega
            .iter()
            .zip(a.iter().zip(b))
            .map(|(q, (x, y))| q * x * y)
            .sum()
    }

    pub fn inner_gamma(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quad_gamma
            .iter()
            .zip(a.iter().zip(b))
            .map(|(q, (x, y))| q * x * y)
            .sum()
    }

    /// `<γu, w>_Γ` without materialising the trace.
    pub fn trace_inner(&self, u: &[f64], w: &[f64]) -> f64 {
        self.quad_gamma
            .iter()
            .enumerate()
            .map(|(ig, q)| q * u[self.wall_node(ig)] * w[ig])
            .sum()
    }

    /// `‖u‖₂²` on Ω.
    pub fn l2_sq_omega(&self, u: &[f64]) -> f64 {
        self.inner_omega(u, u)
    }

    /// `|w|₂²` on Γ.
    pub fn l2_sq_gamma(&self, w: &[f64]) -> f64 {
        self.inner_gamma(w, w)
    }

    /// Staggered-gradient bilinear form `<∇_h u, ∇_h v>`.
    pub fn grad_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.dim {
            let s = self.strides[k];
            let inv = 1.0 / self.h[k];
            for (idx, &ew) in self.edge_weights[k].iter().enumerate() {
                if ew != 0.0 {
                    acc += ew * (u[idx + s] - u[idx]) * (v[idx + s] - v[idx]) * inv * inv;
                }
            }
        }
        acc
    }

    /// `‖∇_h u‖₂²`.
    pub fn grad_sq(&self, u: &[f64]) -> f64 {
        self.grad_inner(u, u)
    }

    /// `|Δ_h w|₂²` with the clamped Laplacian.
    pub fn lap_sq_gamma(&self, w: &[f64]) -> f64 {
        let lap = self.laplacian_gamma(w);
        self.l2_sq_gamma(&lap)
    }

    /// `∫_Ω |field|^s`.
    pub fn integrate_omega(&self, field: &[f64], s: f64) -> Result<f64, MeshError> {
        self.check_omega(field)?;
        if !(s >= 1.0) {
            return Err(MeshError::Exponent(s));
        }
        Ok(integrate_pow(&self.quad_omega, field, s))
    }

    /// `∫_Γ |field|^s`.
    pub fn integrate_gamma(&self, field: &[f64], s: f64) -> Result<f64, MeshError> {
        self.check_gamma(field)?;
        if !(s >= 1.0) {
            return Err(MeshError::Exponent(s));
        }
        Ok(integrate_pow(&self.quad_gamma, field, s))
    }

    /// `‖field‖_s` on Ω.
    pub fn norm_omega(&self, field: &[f64], s: f64) -> Result<f64, MeshError> {
        Ok(powf(self.integrate_omega(field, s)?, 1.0 / s))
    }

    /// `|field|_s` on Γ.
    pub fn norm_gamma(&self, field: &[f64], s: f64) -> Result<f64, MeshError> {
        Ok(powf(self.integrate_gamma(field, s)?, 1.0 / s))
    }
}

fn integrate_pow(weights: &[f64], field: &[f64], s: f64) -> f64 {
    weights
        .iter()
        .zip(field)
        .map(|(q, v)| {
            let a = abs(*v);
            if s == 2.0 {
                q * a * a
            } else {
                q * powf(a, s)
            }
        })
        .sum()
}

pub(crate) fn multi_index(mut idx: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut ix = [0; 3];
    for slot in ix.iter_mut().take(dim) {
        *slot = idx % n;
        idx /= n;
    }
    ix
}

/// Discrete fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub w: Vec<f64>,
    pub wt: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            u: vec![0.0; mesh.omega_len()],
            ut: vec![0.0; mesh.omega_len()],
            w: vec![0.0; mesh.gamma_len()],
            wt: vec![0.0; mesh.gamma_len()],
            time: 0.0,
        }
    }

    pub fn conforms(&self, mesh: &Mesh) -> Result<(), MeshError> {
        mesh.check_omega(&self.u)?;
        mesh.check_omega(&self.ut)?;
        mesh.check_gamma(&self.w)?;
        mesh.check_gamma(&self.wt)
    }

    /// Zeroes every field on Γ0 and ∂Γ.
    pub fn enforce_masks(&mut self, mesh: &Mesh) {
        mesh.mask_omega(&mut self.u);
        mesh.mask_omega(&mut self.ut);
        mesh.mask_gamma(&mut self.w);
        mesh.mask_gamma(&mut self.wt);
    }

    pub fn satisfies_masks(&self, mesh: &Mesh) -> bool {
        let om = mesh
            .kinds()
            .iter()
            .enumerate()
            .all(|(i, k)| *k != NodeKind::Rigid || (self.u[i] == 0.0 && self.ut[i] == 0.0));
        let ga = (0..mesh.gamma_len())
            .all(|ig| mesh.is_gamma_free(ig) || (self.w[ig] == 0.0 && self.wt[ig] == 0.0));
        om && ga
    }

    /// Scales displacements and velocities together.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect();
        Self {
            u: s(&self.u),
            ut: s(&self.ut),
            w: s(&self.w),
            wt: s(&self.wt),
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.ut, &self.w, &self.wt]
            .iter()
            .all(|f| f.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn mesh(dim: usize, n: usize) -> Mesh {
        Mesh::build(&Geometry {
            dim,
            extents: [1.0; 3],
            n,
        })
        .unwrap()
    }

    #[test]
    fn square_wall_is_top_edge() {
        let m = mesh(2, 33);
        let wall = m.kinds().iter().filter(|k| **k == NodeKind::Wall).count();
        assert_eq!(wall, 31);
        assert_eq!(m.free_gamma().len(), 31);
        for idx in 0..m.omega_len() {
            let [x, y, _] = m.coords(idx);
            let on_rigid = x == 0.0 || (x - 1.0).abs() < 1e-12 || y == 0.0;
            assert_eq!(m.kind(idx) == NodeKind::Rigid, on_rigid, "node {idx}");
        }
    }

    #[test]
    fn cube_wall_area() {
        let m = mesh(3, 17);
        let area: f64 = m.quad_gamma().iter().sum();
        assert!((area - 1.0).abs() < 1e-12);
        let vol: f64 = m.quad_omega().iter().sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let err = Mesh::build(&Geometry {
            dim: 2,
            extents: [1.0; 3],
            n: 4,
        })
        .unwrap_err();
        assert!(err.to_string().contains("grid too coarse for biharmonic stencil"));
        assert!(matches!(
            Mesh::build(&Geometry {
                dim: 4,
                ..Geometry::default()
            }),
            Err(MeshError::Dimension(4))
        ));
        assert!(matches!(
            Mesh::build(&Geometry {
                extents: [1.0, 0.0, 1.0],
                ..Geometry::default()
            }),
            Err(MeshError::Extent(_))
        ));
    }

    #[test]
    fn shape_mismatch_reported() {
        let m = mesh(2, 9);
        assert!(matches!(
            m.wave_operator(&[0.0; 3], &vec![0.0; m.gamma_len()]),
            Err(MeshError::Shape { .. })
        ));
        assert!(m.plate_operator(&[0.0; 2]).is_err());
        assert!(matches!(
            m.integrate_omega(&vec![0.0; m.omega_len()], 0.5),
            Err(MeshError::Exponent(_))
        ));
    }

    #[test]
    fn wave_operator_zero_and_unit_flux() {
        let m = mesh(2, 17);
        let zero_g = vec![0.0; m.gamma_len()];
        let out = m.wave_operator(&vec![0.0; m.omega_len()], &zero_g).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));

        let ones = vec![1.0; m.gamma_len()];
        let out = m.wave_operator(&vec![0.0; m.omega_len()], &ones).unwrap();
        let h = m.h[1];
        for (idx, v) in out.iter().enumerate() {
            match m.kind(idx) {
                NodeKind::Wall => assert!((v + 2.0 / h).abs() < 1e-9),
                _ => assert_eq!(*v, 0.0),
            }
        }
    }

    fn manufactured_error(n: usize) -> f64 {
        let m = mesh(2, n);
        let u = m.omega_field(|[x, y, _]| (PI * x).sin() * y);
        let g = m.gamma_field(|[x, _]| (PI * x).sin());
        let out = m.wave_operator(&u, &g).unwrap();
        m.free_omega()
            .iter()
            .map(|&i| (out[i] - (PI * PI + 1.0) * u[i]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn wave_operator_second_order() {
        let e1 = manufactured_error(17);
        let e2 = manufactured_error(33);
        let e3 = manufactured_error(65);
        let r1 = (e1 / e2).log2();
        let r2 = (e2 / e3).log2();
        assert!(r1 > 1.9 && r2 > 1.9, "rates {r1} {r2}");
    }

    #[test]
    fn beam_quartic_interior_exact() {
        let m = mesh(2, 33);
        let w = m.gamma_field(|[x, _]| x * x * (1.0 - x) * (1.0 - x));
        let out = m.plate_operator(&w).unwrap();
        for i in 2..m.n - 2 {
            assert!((out[i] - 24.0).abs() < 1e-6, "node {i}: {}", out[i]);
        }
        assert_eq!(out[0], 0.0);
        assert_eq!(out[m.n - 1], 0.0);
    }

    fn beam_weak_error(n: usize) -> f64 {
        // <Δ²_h w, v> against ∫ 24 v for clamped v = sin²(πx)
        let m = mesh(2, n);
        let w = m.gamma_field(|[x, _]| x * x * (1.0 - x) * (1.0 - x));
        let v = m.gamma_field(|[x, _]| (PI * x).sin().powi(2));
        let out = m.plate_operator(&w).unwrap();
        (m.inner_gamma(&out, &v) - 12.0).abs()
    }

    #[test]
    fn beam_weak_second_order() {
        let e1 = beam_weak_error(17);
        let e2 = beam_weak_error(33);
        let e3 = beam_weak_error(65);
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
        assert!((e2 / e3).log2() > 1.8, "{e2} {e3}");
    }

    #[test]
    fn plate_operator_symmetric_input() {
        let m = mesh(3, 11);
        let w = m.gamma_field(|[x, y]| (x * (1.0 - x) * y * (1.0 - y)).powi(2));
        let out = m.plate_operator(&w).unwrap();
        let n = m.n;
        for i in 0..n {
            for j in 0..n {
                let a = out[i + n * j];
                let b = out[(n - 1 - i) + n * j];
                let c = out[j + n * i];
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
                assert!((a - c).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn quadrature_and_trace_on_cube() {
        let m = mesh(3, 17);
        let ones = vec![1.0; m.omega_len()];
        assert!((m.l2_sq_omega(&ones) - 1.0).abs() < 1e-12);

        let z = m.omega_field(|[_, _, z]| z);
        let tr = m.trace(&z);
        assert!(tr.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((m.l2_sq_gamma(&tr) - 1.0).abs() < 1e-12);
        let h = m.h[2];
        // trapezoid on z² overshoots 1/3 by h²/6
        assert!((m.l2_sq_omega(&z) - (1.0 / 3.0 + h * h / 6.0)).abs() < 1e-12);
        assert!((m.grad_sq(&z) - 1.0).abs() < 1e-12);
        assert!(m.l2_sq_gamma(&tr) <= m.l2_sq_omega(&z) + m.grad_sq(&z));
    }

    #[test]
    fn norms_take_roots() {
        let m = mesh(2, 9);
        let two = vec![2.0; m.omega_len()];
        assert!((m.norm_omega(&two, 4.0).unwrap() - 2.0).abs() < 1e-12);
        let g = vec![3.0; m.gamma_len()];
        assert!((m.norm_gamma(&g, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn masks_enforced() {
        let m = mesh(2, 9);
        let mut s = State::zeros(&m);
        s.u.iter_mut().for_each(|v| *v = 1.0);
        s.w.iter_mut().for_each(|v| *v = 1.0);
        assert!(!s.satisfies_masks(&m));
        s.enforce_masks(&m);
        assert!(s.satisfies_masks(&m));
        assert_eq!(s.w[0], 0.0);
        assert_eq!(s.w[4], 1.0);
    }
}
