//! Uniform Cartesian grid substrate: scalar fields, binary phase masks,
//! set algebra and analytic shape synthesis.
//!
//! All sets are cell-centered: a mask identifies a set with the union of
//! closed cells whose centers lie inside. Everything downstream (distance
//! transforms, perimeters, the variational step) works on this fixed
//! representative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported dimension; 2D grids use a trailing axis of extent 1.
pub const MAX_DIM: usize = 3;

/// Geometry of a uniform cell-centered lattice.
///
/// The cell with index `(i0, .., i_{d-1})` has its center at
/// `origin[a] + i_a * spacing` along each axis `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    shape: [usize; MAX_DIM],
    spacing: f64,
    origin: [f64; MAX_DIM],
}

impl GridSpec {
    pub fn new(dim: usize, shape: &[usize], spacing: f64, origin: &[f64]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if shape.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "shape/origin length must equal dim {dim}"
            )));
        }
        if shape.iter().any(|&n| n < 4) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 4 cells, got {shape:?}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be finite positive, got {spacing}")));
        }
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let mut sh = [1usize; MAX_DIM];
        let mut or = [0f64; MAX_DIM];
        sh[..dim].copy_from_slice(shape);
        or[..dim].copy_from_slice(origin);
        Ok(GridSpec { dim, shape: sh, spacing, origin: or })
    }

    /// Square/cubic grid of `cells` per axis covering a box of side `box_side`
    /// centered at the coordinate origin.
    pub fn centered(dim: usize, cells: usize, box_side: f64) -> Result<Self> {
        if !(box_side.is_finite() && box_side > 0.0) {
            return Err(Error::InvalidGrid(format!("box side must be positive, got {box_side}")));
        }
        let spacing = box_side / cells as f64;
        let o = -box_side / 2.0 + spacing / 2.0;
        let shape = [cells; MAX_DIM];
        let origin = [o; MAX_DIM];
        GridSpec::new(dim, &shape[..dim], spacing, &origin[..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extents of the used axes.
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    /// Extents padded to `MAX_DIM` with 1s; convenient for dimension-generic loops.
    pub fn shape3(&self) -> [usize; MAX_DIM] {
        self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn ncells(&self) -> usize {
        self.shape.iter().product()
    }

    /// Row-major strides (last axis contiguous).
    pub fn strides(&self) -> [usize; MAX_DIM] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn face_area(&self) -> f64 {
        self.spacing.powi(self.dim as i32 - 1)
    }

    pub fn linear(&self, idx: [usize; MAX_DIM]) -> usize {
        let s = self.strides();
        idx[0] * s[0] + idx[1] * s[1] + idx[2] * s[2]
    }

    pub fn unlinear(&self, mut lin: usize) -> [usize; MAX_DIM] {
        let s = self.strides();
        let i0 = lin / s[0];
        lin %= s[0];
        let i1 = lin / s[1];
        let i2 = lin % s[1];
        [i0, i1, i2]
    }

    /// Physical coordinates of the center of cell `idx` (unused axes give 0).
    pub fn center(&self, idx: [usize; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut x = [0f64; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.origin[a] + idx[a] as f64 * self.spacing;
        }
        x
    }

    pub fn center_of_linear(&self, lin: usize) -> [f64; MAX_DIM] {
        self.center(self.unlinear(lin))
    }
}

/// One f64 value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.ncells() {
            return Err(Error::InvalidField(format!(
                "value count {} != cell count {}",
                values.len(),
                grid.ncells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite value".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let n = grid.ncells();
        ScalarField { grid, values: vec![value; n] }
    }

    /// Evaluate `f` at each cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = grid.dim();
        let values: Vec<f64> = (0..grid.ncells())
            .map(|lin| {
                let x = grid.center_of_linear(lin);
                f(&x[..dim])
            })
            .collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scale(&self, factor: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Binary per-cell phase indicator for a set of finite perimeter.
#[derive(Clone, Debug, PartialEq)]
pub struct SetMask {
    grid: GridSpec,
    inside: Vec<bool>,
}

impl SetMask {
    pub fn new(grid: GridSpec, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.ncells() {
            return Err(Error::InvalidField(format!(
                "mask length {} != cell count {}",
                inside.len(),
                grid.ncells()
            )));
        }
        Ok(SetMask { grid, inside })
    }

    pub fn empty(grid: GridSpec) -> Self {
        let n = grid.ncells();
        SetMask { grid, inside: vec![false; n] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn inside_mut(&mut self) -> &mut [bool] {
        &mut self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.inside.iter().all(|&b| b)
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    /// Minimum cell distance from an inside cell to the box boundary;
    /// `None` for the empty mask.
    pub fn padding(&self) -> Option<usize> {
        let dim = self.grid.dim();
        let shape = self.grid.shape3();
        let mut pad: Option<usize> = None;
        for lin in 0..self.inside.len() {
            if !self.inside[lin] {
                continue;
            }
            let idx = self.grid.unlinear(lin);
            let mut p = usize::MAX;
            for a in 0..dim {
                p = p.min(idx[a]).min(shape[a] - 1 - idx[a]);
            }
            pad = Some(pad.map_or(p, |q| q.min(p)));
        }
        pad
    }

    pub fn complement(&self) -> SetMask {
        SetMask {
            grid: self.grid.clone(),
            inside: self.inside.iter().map(|b| !b).collect(),
        }
    }

    pub fn indicator(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Linear indices of inside cells with at least one outside face-neighbor.
    pub fn boundary_cells(&self) -> Vec<usize> {
        let dim = self.grid.dim();
        let shape = self.grid.shape3();
        let strides = self.grid.strides();
        let mut out = Vec::new();
        for lin in 0..self.inside.len() {
            if !self.inside[lin] {
                continue;
            }
            let idx = self.grid.unlinear(lin);
            let mut boundary = false;
            for a in 0..dim {
                if idx[a] == 0
                    || idx[a] + 1 == shape[a]
                    || !self.inside[lin - strides[a]]
                    || !self.inside[lin + strides[a]]
                {
                    boundary = true;
                    break;
                }
            }
            if boundary {
                out.push(lin);
            }
        }
        out
    }
}

/// Cell inside iff its field value is strictly above `level`.
///
/// The strict rule picks the minimal superlevel set, a deterministic
/// representative among minimizers that agree up to null sets.
pub fn threshold_field(f: &ScalarField, level: f64) -> SetMask {
    SetMask {
        grid: f.grid().clone(),
        inside: f.values().iter().map(|&v| v > level).collect(),
    }
}

/// Cellwise boolean algebra of two masks on the same grid.
pub struct MaskAlgebra {
    pub intersection: SetMask,
    pub union: SetMask,
    pub difference: SetMask,
    pub symmetric_difference: SetMask,
    /// Number of cells in `a \ b`; zero iff `a` is a subset of `b`.
    pub subset_violation_count: usize,
}

pub fn mask_algebra(a: &SetMask, b: &SetMask) -> Result<MaskAlgebra> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let n = a.inside.len();
    let mut inter = vec![false; n];
    let mut uni = vec![false; n];
    let mut diff = vec![false; n];
    let mut sym = vec![false; n];
    let mut violations = 0usize;
    for i in 0..n {
        let (x, y) = (a.inside[i], b.inside[i]);
        inter[i] = x && y;
        uni[i] = x || y;
        diff[i] = x && !y;
        sym[i] = x != y;
        if x && !y {
            violations += 1;
        }
    }
    let g = a.grid.clone();
    Ok(MaskAlgebra {
        intersection: SetMask { grid: g.clone(), inside: inter },
        union: SetMask { grid: g.clone(), inside: uni },
        difference: SetMask { grid: g.clone(), inside: diff },
        symmetric_difference: SetMask { grid: g, inside: sym },
        subset_violation_count: violations,
    })
}

/// Number of cells in `a \ b` without materializing the algebra.
pub fn subset_violations(a: &SetMask, b: &SetMask) -> Result<usize> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.inside
        .iter()
        .zip(&b.inside)
        .filter(|&(&x, &y)| x && !y)
        .count())
}

/// Analytic test bodies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Disk (2D) or ball (3D).
    Ball { center: Vec<f64>, radius: f64 },
    /// Region between two concentric spheres/circles.
    Annulus { center: Vec<f64>, inner_radius: f64, outer_radius: f64 },
    /// Solid torus around the z-axis through `center` (3D only).
    Torus { center: Vec<f64>, major_radius: f64, tube_radius: f64 },
    /// Union of balls.
    BallUnion { balls: Vec<BallSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Shape {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => dist2(x, center) < radius * radius,
            Shape::Annulus { center, inner_radius, outer_radius } => {
                let d2 = dist2(x, center);
                d2 < outer_radius * outer_radius && d2 >= inner_radius * inner_radius
            }
            Shape::Torus { center, major_radius, tube_radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let dz = x[2] - center[2];
                let rho = (dx * dx + dy * dy).sqrt();
                let q = rho - major_radius;
                q * q + dz * dz < tube_radius * tube_radius
            }
            Shape::BallUnion { balls } => balls
                .iter()
                .any(|b| dist2(x, &b.center) < b.radius * b.radius),
        }
    }

    /// Sum-of-principal-curvatures minimum over the boundary, when known in
    /// closed form. `None` means unknown (not that the shape is mean convex).
    pub fn min_mean_curvature(&self, dim: usize) -> Option<f64> {
        match self {
            Shape::Ball { radius, .. } => Some((dim as f64 - 1.0) / radius),
            Shape::Annulus { inner_radius, .. } => Some(-(dim as f64 - 1.0) / inner_radius),
            Shape::Torus { major_radius, tube_radius, .. } => {
                Some(1.0 / tube_radius - 1.0 / (major_radius - tube_radius))
            }
            Shape::BallUnion { balls } => {
                // Known only for pairwise disjoint balls.
                for (i, a) in balls.iter().enumerate() {
                    for b in &balls[i + 1..] {
                        if dist2(&a.center, &b.center).sqrt() <= a.radius + b.radius {
                            return None;
                        }
                    }
                }
                balls
                    .iter()
                    .map(|b| (dim as f64 - 1.0) / b.radius)
                    .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |m| m.min(h))))
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check_center = |c: &[f64]| -> Result<()> {
            if c.len() != dim {
                return Err(Error::InvalidGrid(format!(
                    "shape center has {} coordinates, grid dim is {dim}",
                    c.len()
                )));
            }
            Ok(())
        };
        match self {
            Shape::Ball { center, radius } => {
                check_center(center)?;
                if *radius <= 0.0 {
                    return Err(Error::Precondition("ball radius must be positive".into()));
                }
            }
            Shape::Annulus { center, inner_radius, outer_radius } => {
                check_center(center)?;
                if !(*inner_radius > 0.0 && outer_radius > inner_radius) {
                    return Err(Error::Precondition(
                        "annulus needs 0 < inner_radius < outer_radius".into(),
                    ));
                }
            }
            Shape::Torus { center, major_radius, tube_radius } => {
                if dim != 3 {
                    return Err(Error::Precondition("torus requires a 3D grid".into()));
                }
                check_center(center)?;
                if !(*tube_radius > 0.0 && major_radius > tube_radius) {
                    return Err(Error::Precondition(
                        "torus needs 0 < tube_radius < major_radius".into(),
                    ));
                }
            }
            Shape::BallUnion { balls } => {
                if balls.is_empty() {
                    return Err(Error::Precondition("empty ball union".into()));
                }
                for b in balls {
                    check_center(&b.center)?;
                    if b.radius <= 0.0 {
                        return Err(Error::Precondition("ball radius must be positive".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reject shapes whose boundary mean curvature is not strictly positive,
    /// or for which no closed form is available.
    pub fn require_strictly_mean_convex(&self, dim: usize) -> Result<()> {
        match self.min_mean_curvature(dim) {
            Some(h) if h > 0.0 => Ok(()),
            Some(h) => Err(Error::NotMeanConvex(format!("min H = {h} <= 0"))),
            None => Err(Error::NotMeanConvex(
                "no closed-form curvature bound for this shape".into(),
            )),
        }
    }
}

/// Minimum cell padding a synthesized set must keep to the box boundary.
pub const MIN_PADDING: usize = 2;

/// Rasterize an analytic shape: cell inside iff its center lies in the shape.
pub fn synth_shape(grid: &GridSpec, shape: &Shape) -> Result<SetMask> {
    shape.validate(grid.dim())?;
    let dim = grid.dim();
    let inside: Vec<bool> = (0..grid.ncells())
        .map(|lin| {
            let x = grid.center_of_linear(lin);
            shape.contains(&x[..dim])
        })
        .collect();
    let mask = SetMask { grid: grid.clone(), inside };
    if mask.is_empty() {
        return Err(Error::Padding("shape contains no cell centers".into()));
    }
    let pad = mask.padding().unwrap();
    if pad < MIN_PADDING {
        return Err(Error::Padding(format!(
            "shape reaches within {pad} cells of the box boundary (need >= {MIN_PADDING})"
        )));
    }
    Ok(mask)
}

/// `synth_shape` plus the strict mean convexity requirement used by
/// mean-convex runs.
pub fn synth_shape_mean_convex(grid: &GridSpec, shape: &Shape) -> Result<SetMask> {
    shape.require_strictly_mean_convex(grid.dim())?;
    synth_shape(grid, shape)
}
