//! Discrete total variation, the box-constrained TV-plus-linear relaxation
//! solved by a first-order primal-dual iteration, and an exhaustive oracle
//! for tiny instances.
//!
//! The relaxed problem is
//!
//! ```text
//!   min   TV_mode(u) + sum_i g_i u_i dx^n      over u in [0,1] per cell,
//! ```
//!
//! with zero-flux handling at the box boundary (differences only between
//! in-box pairs), so the perimeter is measured strictly inside the box.
//!
//! Both modes are weighted cut functionals `sum_pairs w |u_i - u_j|`:
//!
//! * anisotropic: axis-neighbor pairs with unit weight, the l1 norm of the
//!   forward differences. Submodular and exact under thresholding, used
//!   wherever identities must hold to rounding.
//! * isotropic: a multi-direction Cauchy-Crofton approximation of the
//!   Euclidean perimeter (16-neighborhood in 2D, 26-neighborhood in 3D).
//!   Its angular bias stays within 1.4% (2D) / 4.9% (3D) of the Euclidean
//!   value uniformly over interface orientations, where any 1-sided
//!   2-direction l2 stencil is off by up to 16% on indicator functions.
//!   Being a cut functional with positive weights it keeps the coarea
//!   identity and threshold exactness as well.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, SetMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMode {
    /// Axis differences with unit weight; submodular cut function, exact
    /// coarea/thresholding, Wulff shape a square.
    Anisotropic,
    /// Multi-direction Crofton weights; Euclidean-consistent perimeter.
    Isotropic,
}

/// One cut direction: cell offset (in cells) and dimensionless weight.
#[derive(Clone, Copy, Debug)]
pub struct StencilDir {
    pub off: [i64; 3],
    pub weight: f64,
}

// 16-neighborhood Crofton weights, 2D: w = dtheta / (2 |v|), normalized so
// the angular response is centered on 1 (max deviation 1.38%).
const ISO_2D_AXIS: f64 = 0.231994221242;
const ISO_2D_DIAG: f64 = 0.113839622970;
const ISO_2D_KNIGHT: f64 = 0.087874734564;

// 26-neighborhood Crofton weights, 3D: w = dOmega / (pi |v|) with Voronoi
// solid angles, normalized the same way (max deviation 4.86%).
const ISO_3D_AXIS: f64 = 0.187738626040;
const ISO_3D_FACE: f64 = 0.107239210873;
const ISO_3D_BODY: f64 = 0.083329213911;

const ANISO_2D: &[StencilDir] = &[
    StencilDir { off: [1, 0, 0], weight: 1.0 },
    StencilDir { off: [0, 1, 0], weight: 1.0 },
];
const ANISO_3D: &[StencilDir] = &[
    StencilDir { off: [1, 0, 0], weight: 1.0 },
    StencilDir { off: [0, 1, 0], weight: 1.0 },
    StencilDir { off: [0, 0, 1], weight: 1.0 },
];
const ISO_2D: &[StencilDir] = &[
    StencilDir { off: [1, 0, 0], weight: ISO_2D_AXIS },
    StencilDir { off: [0, 1, 0], weight: ISO_2D_AXIS },
    StencilDir { off: [1, 1, 0], weight: ISO_2D_DIAG },
    StencilDir { off: [1, -1, 0], weight: ISO_2D_DIAG },
    StencilDir { off: [2, 1, 0], weight: ISO_2D_KNIGHT },
    StencilDir { off: [2, -1, 0], weight: ISO_2D_KNIGHT },
    StencilDir { off: [1, 2, 0], weight: ISO_2D_KNIGHT },
    StencilDir { off: [1, -2, 0], weight: ISO_2D_KNIGHT },
];
const ISO_3D: &[StencilDir] = &[
    StencilDir { off: [1, 0, 0], weight: ISO_3D_AXIS },
    StencilDir { off: [0, 1, 0], weight: ISO_3D_AXIS },
    StencilDir { off: [0, 0, 1], weight: ISO_3D_AXIS },
    StencilDir { off: [1, 1, 0], weight: ISO_3D_FACE },
    StencilDir { off: [1, -1, 0], weight: ISO_3D_FACE },
    StencilDir { off: [1, 0, 1], weight: ISO_3D_FACE },
    StencilDir { off: [1, 0, -1], weight: ISO_3D_FACE },
    StencilDir { off: [0, 1, 1], weight: ISO_3D_FACE },
    StencilDir { off: [0, 1, -1], weight: ISO_3D_FACE },
    StencilDir { off: [1, 1, 1], weight: ISO_3D_BODY },
    StencilDir { off: [1, 1, -1], weight: ISO_3D_BODY },
    StencilDir { off: [1, -1, 1], weight: ISO_3D_BODY },
    StencilDir { off: [1, -1, -1], weight: ISO_3D_BODY },
];

pub fn stencil(mode: TvMode, dim: usize) -> &'static [StencilDir] {
    match (mode, dim) {
        (TvMode::Anisotropic, 2) => ANISO_2D,
        (TvMode::Anisotropic, 3) => ANISO_3D,
        (TvMode::Isotropic, 2) => ISO_2D,
        (TvMode::Isotropic, 3) => ISO_3D,
        _ => panic!("unsupported dimension"),
    }
}

fn weight_sq_sum(mode: TvMode, dim: usize) -> f64 {
    stencil(mode, dim).iter().map(|d| d.weight * d.weight).sum()
}

/// First-order primal-dual solver configuration.
///
/// `tau`/`sigma` default to a dual-heavy split of the step-size condition
/// `tau * sigma * L^2 <= 1`, where `L^2 = 4 sum_k w_k^2 / dx^2` bounds the
/// squared norm of the weighted difference operator (`4 dim / dx^2` in
/// anisotropic mode).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverParams {
    pub tv_mode: TvMode,
    pub primal_step: Option<f64>,
    pub dual_step: Option<f64>,
    /// Primal-dual gap target, relative to the unsigned energy scale.
    pub tolerance: f64,
    pub max_iter: usize,
    pub check_every: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tv_mode: TvMode::Isotropic,
            primal_step: None,
            dual_step: None,
            tolerance: 1e-6,
            max_iter: 20_000,
            check_every: 50,
        }
    }
}

impl SolverParams {
    pub fn anisotropic() -> Self {
        SolverParams { tv_mode: TvMode::Anisotropic, ..Default::default() }
    }

    fn steps(&self, grid: &GridSpec) -> Result<(f64, f64)> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.check_every == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter and check_every must be >= 1".into()));
        }
        let dx = grid.spacing();
        let l2 = 4.0 * weight_sq_sum(self.tv_mode, grid.dim()) / (dx * dx);
        let base = 1.0 / l2.sqrt();
        // dual-heavy split: the dual has to build the transport field against
        // the linear term and profits from larger steps
        let tau = self.primal_step.unwrap_or(base * 0.25);
        let sigma = self.dual_step.unwrap_or(base * 4.0);
        if !(tau > 0.0 && sigma > 0.0) {
            return Err(Error::InvalidParams("steps must be positive".into()));
        }
        if tau * sigma * l2 > 1.0 + 1e-9 {
            return Err(Error::InvalidParams(format!(
                "tau*sigma*L^2 = {} > 1",
                tau * sigma * l2
            )));
        }
        Ok((tau, sigma))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub primal_energy: f64,
    pub dual_energy: f64,
    /// Best certified relative primal-dual gap.
    pub gap: f64,
    pub converged: bool,
}

/// Primal and dual iterates, reusable as a warm start for a nearby problem.
#[derive(Clone, Debug)]
pub struct SolveState {
    pub u: Vec<f64>,
    /// Dual variable, interleaved: component k of cell i at `i * ndirs + k`.
    pub p: Vec<f64>,
}

pub struct SolveOutcome {
    /// Iterate with the best certified gap (what callers threshold).
    pub u: ScalarField,
    /// Final iterate, for warm-starting the next problem.
    pub state: SolveState,
    pub stats: SolveStats,
    /// Best-so-far relative gap recorded at each check; non-increasing.
    pub gap_history: Vec<f64>,
}

/// Row decomposition shared by the parallel passes: rows are the contiguous
/// lines along the last used axis.
struct Layout {
    dim: usize,
    n: usize,
    row_len: usize,
    shape: [usize; 3],
    inv_dx: f64,
    dirs: &'static [StencilDir],
    /// Signed linear offset per direction.
    lin_off: Vec<i64>,
}

impl Layout {
    fn new(grid: &GridSpec, mode: TvMode) -> Self {
        let dim = grid.dim();
        let shape = grid.shape3();
        let strides = grid.strides();
        let dirs = stencil(mode, dim);
        let lin_off = dirs
            .iter()
            .map(|d| {
                d.off[0] * strides[0] as i64
                    + d.off[1] * strides[1] as i64
                    + d.off[2] * strides[2] as i64
            })
            .collect();
        Layout {
            dim,
            n: grid.ncells(),
            row_len: shape[dim - 1],
            shape,
            inv_dx: 1.0 / grid.spacing(),
            dirs,
            lin_off,
        }
    }

    #[inline]
    fn row_coord(&self, r: usize, a: usize) -> usize {
        if self.dim == 2 {
            r
        } else if a == 0 {
            r / self.shape[1]
        } else {
            r % self.shape[1]
        }
    }

    /// For direction `k` on row `r`: the valid contiguous j-range, or None
    /// when the row has no valid cells for this direction.
    #[inline]
    fn dir_range(&self, r: usize, k: usize) -> Option<(usize, usize)> {
        let d = &self.dirs[k];
        for a in 0..self.dim - 1 {
            let c = self.row_coord(r, a) as i64 + d.off[a];
            if c < 0 || c >= self.shape[a] as i64 {
                return None;
            }
        }
        let v = d.off[self.dim - 1];
        let lo = (-v).max(0) as usize;
        let hi = self.row_len - v.max(0) as usize;
        if lo >= hi {
            None
        } else {
            Some((lo, hi))
        }
    }
}

/// Discrete total variation of a field in the given mode.
pub fn discrete_tv(f: &ScalarField, mode: TvMode) -> f64 {
    let grid = f.grid();
    let lay = Layout::new(grid, mode);
    let v = f.values();
    let nrows = lay.n / lay.row_len;
    let acc: f64 = (0..nrows)
        .into_par_iter()
        .map(|r| {
            let base = r * lay.row_len;
            let mut s = 0.0;
            for k in 0..lay.dirs.len() {
                let Some((lo, hi)) = lay.dir_range(r, k) else { continue };
                let off = lay.lin_off[k];
                let w = lay.dirs[k].weight;
                let mut ds = 0.0;
                for j in lo..hi {
                    let i = base + j;
                    let nb = (i as i64 + off) as usize;
                    ds += (v[nb] - v[i]).abs();
                }
                s += w * ds;
            }
            s
        })
        .sum();
    acc * grid.spacing().powi(grid.dim() as i32 - 1)
}

/// `discrete_tv` of a mask indicator via exact jump counting.
pub fn mask_tv(mask: &SetMask, mode: TvMode) -> f64 {
    let grid = mask.grid();
    let lay = Layout::new(grid, mode);
    let ins = mask.inside();
    let nrows = lay.n / lay.row_len;
    let acc: f64 = (0..nrows)
        .into_par_iter()
        .map(|r| {
            let base = r * lay.row_len;
            let mut s = 0.0;
            for k in 0..lay.dirs.len() {
                let Some((lo, hi)) = lay.dir_range(r, k) else { continue };
                let off = lay.lin_off[k];
                let mut jumps = 0u32;
                for j in lo..hi {
                    let i = base + j;
                    let nb = (i as i64 + off) as usize;
                    if ins[nb] != ins[i] {
                        jumps += 1;
                    }
                }
                s += lay.dirs[k].weight * jumps as f64;
            }
            s
        })
        .sum();
    acc * grid.spacing().powi(grid.dim() as i32 - 1)
}

/// Linear term of the binary objective: sum of `g` over inside cells times
/// the cell volume, in a fixed cell order.
pub fn linear_term(mask: &SetMask, g: &ScalarField) -> f64 {
    let vol = mask.grid().cell_volume();
    let mut acc = 0.0;
    for (ins, gv) in mask.inside().iter().zip(g.values()) {
        if *ins {
            acc += gv;
        }
    }
    acc * vol
}

/// Binary step objective: anisotropic perimeter plus the linear term.
pub fn binary_energy(mask: &SetMask, g: &ScalarField) -> f64 {
    mask_tv(mask, TvMode::Anisotropic) + linear_term(mask, g)
}

/// Binary objective in an arbitrary TV mode.
pub fn binary_energy_mode(mask: &SetMask, g: &ScalarField, mode: TvMode) -> f64 {
    mask_tv(mask, mode) + linear_term(mask, g)
}

/// Minimize `discrete_tv(u, mode) + <g, u> dx^n` over `u in [0,1]` per cell.
///
/// Plain Chambolle-Pock with over-relaxation 1: dual ascent with
/// per-component clamping onto `[-1, 1]`, primal descent with box
/// projection. The returned iterate is the one with the best certified
/// relative gap, so the reported gap sequence is non-increasing by
/// construction.
pub fn solve_relaxed(
    g: &ScalarField,
    params: &SolverParams,
    warm: Option<SolveState>,
) -> Result<SolveOutcome> {
    let grid = g.grid().clone();
    let (tau, sigma) = params.steps(&grid)?;
    let lay = Layout::new(&grid, params.tv_mode);
    let n = lay.n;
    let ndirs = lay.dirs.len();

    let mut state = match warm {
        Some(s) => {
            if s.u.len() != n || s.p.len() != ndirs * n {
                return Err(Error::InvalidParams("warm start size mismatch".into()));
            }
            s
        }
        None => SolveState { u: vec![0.0; n], p: vec![0.0; ndirs * n] },
    };
    let mut ubar = state.u.clone();
    let gv = g.values();

    let mut best_u = state.u.clone();
    let mut best_gap = f64::INFINITY;
    let mut best_stats = (0usize, f64::NAN, f64::NAN);
    let mut gap_history = Vec::new();
    let mut iter = 0usize;
    let mut converged = false;

    loop {
        let (primal, dual, scale) = energies(&lay, &state, gv);
        if !primal.is_finite() || !dual.is_finite() {
            return Err(Error::SolverNan(iter));
        }
        let gap = (primal - dual).max(0.0);
        let denom = scale.max(dual.abs());
        let rel = if denom > 0.0 {
            gap / denom
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if rel < best_gap {
            best_gap = rel;
            best_u.copy_from_slice(&state.u);
            best_stats = (iter, primal, dual);
        }
        gap_history.push(best_gap);
        if best_gap <= params.tolerance {
            converged = true;
            break;
        }
        if iter >= params.max_iter {
            break;
        }

        let burst = params.check_every.min(params.max_iter - iter);
        for _ in 0..burst {
            dual_ascent(&lay, &mut state.p, &ubar, sigma);
            primal_descent(&lay, &mut state.u, &mut ubar, &state.p, gv, tau);
        }
        iter += burst;
    }

    let vol = grid.cell_volume();
    let stats = SolveStats {
        iterations: iter,
        primal_energy: best_stats.1 * vol,
        dual_energy: best_stats.2 * vol,
        gap: best_gap,
        converged,
    };
    let u = ScalarField::new(grid, best_u)?;
    Ok(SolveOutcome { u, state, stats, gap_history })
}

/// p <- clamp(p + sigma * K ubar), rows in parallel; p interleaved per cell.
fn dual_ascent(lay: &Layout, p: &mut [f64], ubar: &[f64], sigma: f64) {
    let len = lay.row_len;
    let ndirs = lay.dirs.len();
    p.par_chunks_mut(len * ndirs).enumerate().for_each(|(r, prow)| {
        let base = r * len;
        for k in 0..ndirs {
            let Some((lo, hi)) = lay.dir_range(r, k) else { continue };
            let off = lay.lin_off[k];
            let scale = sigma * lay.dirs[k].weight * lay.inv_dx;
            for j in lo..hi {
                let i = base + j;
                let nb = (i as i64 + off) as usize;
                let v = prow[j * ndirs + k] + scale * (ubar[nb] - ubar[i]);
                prow[j * ndirs + k] = v.clamp(-1.0, 1.0);
            }
        }
    });
}

/// u <- clamp(u - tau * (K^T p + g)); ubar <- 2 u_new - u_old.
fn primal_descent(
    lay: &Layout,
    u: &mut [f64],
    ubar: &mut [f64],
    p: &[f64],
    g: &[f64],
    tau: f64,
) {
    let len = lay.row_len;
    let ndirs = lay.dirs.len();
    u.par_chunks_mut(len)
        .zip(ubar.par_chunks_mut(len))
        .enumerate()
        .for_each(|(r, (cu, cub))| {
            let base = r * len;
            for j in 0..len {
                let i = base + j;
                let mut kt = 0.0;
                for k in 0..ndirs {
                    let d = &lay.dirs[k];
                    let w = d.weight;
                    // outgoing edge (i, i+v): contributes -p_k(i)
                    if edge_valid(lay, r, j, k, false) {
                        kt -= w * p[i * ndirs + k];
                    }
                    // incoming edge (i-v, i): contributes +p_k(i-v)
                    if edge_valid(lay, r, j, k, true) {
                        let src = (i as i64 - lay.lin_off[k]) as usize;
                        kt += w * p[src * ndirs + k];
                    }
                }
                kt *= lay.inv_dx;
                let old = cu[j];
                let new = (old - tau * (kt + g[i])).clamp(0.0, 1.0);
                cu[j] = new;
                cub[j] = 2.0 * new - old;
            }
        });
}

/// Validity of the edge through cell (r, j) in direction k; `incoming`
/// checks the edge from `i - v` instead of the edge to `i + v`.
#[inline]
fn edge_valid(lay: &Layout, r: usize, j: usize, k: usize, incoming: bool) -> bool {
    let d = &lay.dirs[k];
    let sign = if incoming { -1i64 } else { 1i64 };
    for a in 0..lay.dim - 1 {
        let c = lay.row_coord(r, a) as i64 + sign * d.off[a];
        if c < 0 || c >= lay.shape[a] as i64 {
            return false;
        }
    }
    let c = j as i64 + sign * d.off[lay.dim - 1];
    c >= 0 && c < lay.row_len as i64
}

/// Scaled primal energy, dual energy, and the unsigned energy scale
/// `TV(u) + sum |g_i u_i|` used as the gap denominator.
fn energies(lay: &Layout, state: &SolveState, g: &[f64]) -> (f64, f64, f64) {
    let len = lay.row_len;
    let ndirs = lay.dirs.len();
    let nrows = lay.n / len;
    let u = &state.u;
    let p = &state.p;
    let (tv, lin, lin_abs, dual) = (0..nrows)
        .into_par_iter()
        .map(|r| {
            let base = r * len;
            let mut tv = 0.0;
            let mut lin = 0.0;
            let mut lin_abs = 0.0;
            let mut du = 0.0;
            for k in 0..ndirs {
                let Some((lo, hi)) = lay.dir_range(r, k) else { continue };
                let off = lay.lin_off[k];
                let w = lay.dirs[k].weight;
                let mut ds = 0.0;
                for j in lo..hi {
                    let i = base + j;
                    let nb = (i as i64 + off) as usize;
                    ds += (u[nb] - u[i]).abs();
                }
                tv += w * ds;
            }
            for j in 0..len {
                let i = base + j;
                lin += g[i] * u[i];
                lin_abs += (g[i] * u[i]).abs();
                let mut kt = 0.0;
                for k in 0..ndirs {
                    let w = lay.dirs[k].weight;
                    if edge_valid(lay, r, j, k, false) {
                        kt -= w * p[i * ndirs + k];
                    }
                    if edge_valid(lay, r, j, k, true) {
                        let src = (i as i64 - lay.lin_off[k]) as usize;
                        kt += w * p[src * ndirs + k];
                    }
                }
                kt *= lay.inv_dx;
                du -= (-kt - g[i]).max(0.0);
            }
            (tv * lay.inv_dx, lin, lin_abs, du)
        })
        .reduce(
            || (0.0, 0.0, 0.0, 0.0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3),
        );
    // tv is in scaled units: multiply |du| differences by 1/dx once
    (tv + lin, dual, tv + lin_abs)
}

/// Hard cap on exhaustive enumeration.
pub const MAX_FREE_CELLS: usize = 22;

/// Global minimizer of the binary anisotropic objective over all assignments
/// of the free cells, everything else fixed to `base`'s phase.
///
/// Ties break toward fewer inside cells, then toward the smaller assignment
/// word (free cells ordered by linear index, bit j = j-th free cell inside).
pub fn brute_force_min(
    g: &ScalarField,
    base: &SetMask,
    free: &SetMask,
) -> Result<(SetMask, f64)> {
    if g.grid() != base.grid() || g.grid() != free.grid() {
        return Err(Error::GridMismatch);
    }
    let free_cells: Vec<usize> = free
        .inside()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i) } else { None })
        .collect();
    let k = free_cells.len();
    if k > MAX_FREE_CELLS {
        return Err(Error::RegionTooLarge { got: k, max: MAX_FREE_CELLS });
    }

    let grid = g.grid();
    let dim = grid.dim();
    let shape = grid.shape3();
    let strides = grid.strides();
    let face = grid.face_area();
    let vol = grid.cell_volume();
    let gv = g.values();

    // start: all free cells outside
    let mut cur = base.clone();
    for &c in &free_cells {
        cur.inside_mut()[c] = false;
    }

    let jump_count = |ins: &[bool]| -> i64 {
        let mut cnt = 0i64;
        for i in 0..ins.len() {
            let idx = grid.unlinear(i);
            for a in 0..dim {
                if idx[a] + 1 < shape[a] && ins[i] != ins[i + strides[a]] {
                    cnt += 1;
                }
            }
        }
        cnt
    };

    let mut jumps = jump_count(cur.inside());
    let mut lin_sum: f64 = cur
        .inside()
        .iter()
        .zip(gv)
        .filter_map(|(&b, &v)| if b { Some(v) } else { None })
        .sum();
    let mut popcount = cur.count();

    let energy_of = |jumps: i64, lin_sum: f64| jumps as f64 * face + lin_sum * vol;

    let mut best_bits: u64 = 0;
    let mut best = (energy_of(jumps, lin_sum), popcount, 0u64);

    // Local jump delta when flipping cell `c`.
    let flip = |ins: &mut [bool], c: usize| -> i64 {
        let idx = grid.unlinear(c);
        let mut delta = 0i64;
        for a in 0..dim {
            if idx[a] + 1 < shape[a] {
                let j = (ins[c] != ins[c + strides[a]]) as i64;
                delta += 1 - 2 * j;
            }
            if idx[a] > 0 {
                let j = (ins[c] != ins[c - strides[a]]) as i64;
                delta += 1 - 2 * j;
            }
        }
        ins[c] = !ins[c];
        delta
    };

    let mut bits: u64 = 0;
    for m in 1u64..(1u64 << k) {
        // reflected Gray code: flip the bit at trailing_zeros(m)
        let b = m.trailing_zeros() as usize;
        let c = free_cells[b];
        let was_in = cur.inside()[c];
        jumps += flip(cur.inside_mut(), c);
        if was_in {
            lin_sum -= gv[c];
            popcount -= 1;
            bits &= !(1u64 << b);
        } else {
            lin_sum += gv[c];
            popcount += 1;
            bits |= 1u64 << b;
        }
        let e = energy_of(jumps, lin_sum);
        let cand = (e, popcount, bits);
        if cand.0 < best.0
            || (cand.0 == best.0 && (cand.1 < best.1 || (cand.1 == best.1 && cand.2 < best.2)))
        {
            best = cand;
            best_bits = bits;
        }
    }

    // rebuild the winner and recompute its energy from scratch
    let mut winner = base.clone();
    for (b, &c) in free_cells.iter().enumerate() {
        winner.inside_mut()[c] = best_bits & (1u64 << b) != 0;
    }
    let energy = binary_energy(&winner, g);
    Ok((winner, energy))
}
