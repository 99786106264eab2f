//! Radial and phase-space grids with their quadrature rules.
//!
//! Radial grids are finite-volume grids: every node owns a spherical shell
//! `[f_i, f_{i+1}]` and its quadrature weight is the exact shell volume
//! `|S^{d-1}| (f_{i+1}^d - f_i^d) / d`. Nodes sit at the shell centroid in
//! the `r^{d-1} dr` measure, so the rule is exact for constants and for
//! linear functions of `r`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Area of the unit sphere `S^{d-1}` in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(d - 2) / (d as f64 - 2.0),
    }
}

/// Volume of the ball of radius `r` in `R^d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    unit_sphere_area(d) * r.powi(d as i32) / d as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    d: usize,
    faces: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    face_areas: Vec<f64>,
}

impl RadialGrid {
    /// Builds a grid from strictly increasing cell faces starting at `0`.
    pub fn from_faces(d: usize, faces: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if faces.len() < 3 || faces[0] != 0.0 {
            return Err(Error::Domain("radial grid needs >= 2 cells and a first face at r = 0".into()));
        }
        if faces.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Domain("radial faces must be finite and strictly increasing".into()));
        }
        let s = unit_sphere_area(d);
        let df = d as f64;
        let mut nodes = Vec::with_capacity(faces.len() - 1);
        let mut weights = Vec::with_capacity(faces.len() - 1);
        for w in faces.windows(2) {
            let (a, b) = (w[0], w[1]);
            // Ratios keep the centroid accurate on thin shells far from the origin.
            let t = a / b;
            let num = 1.0 - t.powi(d as i32 + 1);
            let den = 1.0 - t.powi(d as i32);
            let centroid = if den > 1e-8 { df / (df + 1.0) * b * num / den } else { 0.5 * (a + b) };
            nodes.push(centroid);
            weights.push(s * b.powi(d as i32) * den / df);
        }
        let face_areas = faces.iter().map(|&f| s * f.powi(d as i32 - 1)).collect();
        Ok(Self { d, faces, nodes, weights, face_areas })
    }

    /// `n` equal cells on `[0, r_max]`.
    pub fn uniform(d: usize, r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || n < 2 {
            return Err(Error::Domain(format!("uniform grid needs r_max > 0 and n >= 2, got {r_max}, {n}")));
        }
        Self::from_faces(d, (0..=n).map(|i| r_max * i as f64 / n as f64).collect())
    }

    /// Geometric cells between `r_floor` and `min(1, r_max)`, blended into cells of
    /// width about `h` up to `r_max`. The geometric ratio `1 / (1 - h)` makes the
    /// last geometric cell match the uniform spacing.
    pub fn log_uniform(d: usize, r_max: f64, h: f64, r_floor: f64) -> Result<Self> {
        if !(r_max > 0.0 && h > 0.0 && h < 0.5 && r_floor > 0.0) {
            return Err(Error::Domain(format!("log_uniform needs r_max > 0, 0 < h < 0.5, r_floor > 0 (got {r_max}, {h}, {r_floor})")));
        }
        let knee = r_max.min(1.0);
        let q = 1.0 / (1.0 - h);
        let mut geo = vec![knee];
        let mut f = knee / q;
        while f > r_floor {
            geo.push(f);
            f /= q;
        }
        geo.push(0.0);
        geo.reverse();
        if r_max > knee {
            let n_u = ((r_max - knee) / h).ceil().max(1.0) as usize;
            let step = (r_max - knee) / n_u as f64;
            for i in 1..=n_u {
                geo.push(if i == n_u { r_max } else { knee + step * i as f64 });
            }
        }
        Self::from_faces(d, geo)
    }

    /// Purely geometric cells `r_min q^j` up to `r_max` plus an origin cell
    /// `[0, r_min]`. Dilation by `q^m` maps the grid onto itself.
    pub fn geometric(d: usize, r_min: f64, r_max: f64, ratio: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && ratio > 1.0) {
            return Err(Error::Domain("geometric grid needs 0 < r_min < r_max and ratio > 1".into()));
        }
        let n = ((r_max / r_min).ln() / ratio.ln()).ceil() as usize;
        let mut faces = Vec::with_capacity(n + 2);
        faces.push(0.0);
        for j in 0..=n {
            faces.push(r_min * ratio.powi(j as i32));
        }
        Self::from_faces(d, faces)
    }

    pub fn d(&self) -> usize {
        self.d
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
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }
    /// `|S^{d-1}| f^{d-1}` at every face.
    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }
    pub fn r_max(&self) -> f64 {
        *self.faces.last().unwrap()
    }

    /// Quadrature of `phi` over the ball of radius `r_max`.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * phi(r)).sum()
    }
}

/// Values on a [`RadialGrid`], one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("field has {} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    fn weight_at(&self, i: usize, weight: &impl Fn(f64) -> f64) -> Result<Option<f64>> {
        let r = self.grid.nodes()[i];
        let w = weight(r);
        if w.is_finite() {
            Ok(Some(w))
        } else if r == 0.0 {
            // the origin node carries no mass for weights singular at 0
            Ok(None)
        } else {
            Err(Error::Domain(format!("weight is not finite at node {i} (r = {r})")))
        }
    }

    /// `Σ_i w_i · weight(r_i) · u_i²`.
    pub fn weighted_norm_sq(&self, weight: impl Fn(f64) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (i, (&u, &w)) in self.values.iter().zip(self.grid.weights()).enumerate() {
            if let Some(c) = self.weight_at(i, &weight)? {
                sum += w * c * u * u;
            }
        }
        Ok(sum)
    }

    /// `Σ_i w_i · weight(r_i) · u_i`.
    pub fn weighted_integral(&self, weight: impl Fn(f64) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (i, (&u, &w)) in self.values.iter().zip(self.grid.weights()).enumerate() {
            if let Some(c) = self.weight_at(i, &weight)? {
                sum += w * c * u;
            }
        }
        Ok(sum)
    }

    /// `∫ |u| dx`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(u, w)| w * u.abs()).sum()
    }

    /// `∫ u dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(u, w)| w * u).sum()
    }

    /// Finite-volume Dirichlet energy `∫ weight |∂_r u|²`, with the weight
    /// evaluated at interior faces.
    pub fn dirichlet_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        let (r, f, a) = (g.nodes(), g.faces(), g.face_areas());
        (0..g.len() - 1)
            .map(|i| {
                let du = self.values[i + 1] - self.values[i];
                a[i + 1] * weight(f[i + 1]) * du * du / (r[i + 1] - r[i])
            })
            .sum()
    }

    /// Piecewise-linear interpolation between nodes, constant beyond the end nodes.
    pub fn interpolate(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        if r <= nodes[0] {
            return self.values[0];
        }
        if r >= nodes[n - 1] {
            return self.values[n - 1];
        }
        let j = nodes.partition_point(|&x| x <= r);
        let (r0, r1) = (nodes[j - 1], nodes[j]);
        let s = (r - r0) / (r1 - r0);
        (1.0 - s) * self.values[j - 1] + s * self.values[j]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Uniform cell-centred grid on `[-x_max, x_max] × [-v_max, v_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub nx: usize,
    pub nv: usize,
    pub x_max: f64,
    pub v_max: f64,
    pub dx: f64,
    pub dv: f64,
    x: Vec<f64>,
    v: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(nx: usize, nv: usize, x_max: f64, v_max: f64) -> Result<Self> {
        if nx < 8 || nv < 8 {
            return Err(Error::Domain(format!("phase grid needs at least 8 nodes per axis, got {nx} x {nv}")));
        }
        if !(x_max > 0.0) || !(v_max >= 6.0) {
            return Err(Error::Domain(format!("phase grid needs x_max > 0 and v_max >= 6, got {x_max}, {v_max}")));
        }
        let dx = 2.0 * x_max / nx as f64;
        let dv = 2.0 * v_max / nv as f64;
        let x = (0..nx).map(|i| -x_max + (i as f64 + 0.5) * dx).collect();
        let v = (0..nv).map(|j| -v_max + (j as f64 + 0.5) * dv).collect();
        Ok(Self { nx, nv, x_max, v_max, dx, dv, x, v })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn v(&self) -> &[f64] {
        &self.v
    }
    pub fn len(&self) -> usize {
        self.nx * self.nv
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }
}

/// Values `f(x_i, v_j)` stored row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub grid: Arc<PhaseGrid>,
    pub values: Vec<f64>,
}

impl PhaseField {
    pub fn new(grid: Arc<PhaseGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("phase field has {} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("phase value at (i, j) = ({}, {}) is not finite", k / grid.nv, k % grid.nv)));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<PhaseGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<PhaseGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for &x in grid.x() {
            for &v in grid.v() {
                values.push(f(x, v));
            }
        }
        Self::new(grid, values)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nv + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nv = self.grid.nv;
        &self.values[i * nv..(i + 1) * nv]
    }

    /// Cell-centred double quadrature `Σ_ij weight(x_i, v_j) f_ij dx dv`.
    pub fn phase_integral(&self, weight: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let g = &self.grid;
        let mut sum = 0.0;
        for (i, &x) in g.x().iter().enumerate() {
            for (j, &v) in g.v().iter().enumerate() {
                let w = weight(x, v);
                if !w.is_finite() {
                    return Err(Error::Domain(format!("weight not finite at (x, v) = ({x}, {v})")));
                }
                sum += w * self.values[g.idx(i, j)];
            }
        }
        Ok(sum * g.dx * g.dv)
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx * self.grid.dv
    }
}
