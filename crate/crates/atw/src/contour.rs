//! Sub-cell interface extraction on the cell-center lattice: marching
//! squares in 2D, a tetrahedral decomposition in 3D, plus the small
//! separable smoothing kernel shared by the perimeter estimator and the
//! step's near-band distance.

use crate::grid::{GridSpec, ScalarField};

/// Separable [1,2,1]/4 smoothing, `passes` times per axis, replicated ends.
pub fn smooth_121(f: &ScalarField, passes: usize) -> ScalarField {
    let g = f.grid().clone();
    let shape = g.shape3();
    let strides = g.strides();
    let mut vals = f.values().to_vec();
    let mut scratch = vals.clone();
    for _ in 0..passes {
        for axis in 0..g.dim() {
            let n = shape[axis];
            let s = strides[axis];
            let (a1, a2) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            for i1 in 0..shape[a1] {
                for i2 in 0..shape[a2] {
                    let base = i1 * strides[a1] + i2 * strides[a2];
                    for i in 0..n {
                        let c = vals[base + i * s];
                        let lo = if i > 0 { vals[base + (i - 1) * s] } else { c };
                        let hi = if i + 1 < n { vals[base + (i + 1) * s] } else { c };
                        scratch[base + i * s] = 0.25 * lo + 0.5 * c + 0.25 * hi;
                    }
                }
            }
            std::mem::swap(&mut vals, &mut scratch);
        }
    }
    ScalarField::new(g, vals).expect("smoothing preserves finiteness")
}

/// A contour segment in physical coordinates.
pub type Segment = ([f64; 2], [f64; 2]);

#[inline]
fn lerp_point(g: &GridSpec, i0: [usize; 2], i1: [usize; 2], t: f64) -> [f64; 2] {
    let dx = g.spacing();
    let o = g.origin();
    [
        o[0] + (i0[0] as f64 + t * (i1[0] as f64 - i0[0] as f64)) * dx,
        o[1] + (i0[1] as f64 + t * (i1[1] as f64 - i0[1] as f64)) * dx,
    ]
}

/// Marching squares over the dual grid of cell centers, strict `> level`
/// convention matching `threshold_field`; the two ambiguous saddle cases
/// connect according to the square's mean value.
pub fn marching_squares(f: &ScalarField, level: f64) -> Vec<Segment> {
    let g = f.grid();
    assert_eq!(g.dim(), 2, "marching squares needs a 2D field");
    let shape = g.shape3();
    let (n0, n1) = (shape[0], shape[1]);
    let v = f.values();
    let idx = |i: usize, j: usize| i * n1 + j;
    let mut segs = Vec::new();

    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let va = v[idx(i, j)];
            let vb = v[idx(i + 1, j)];
            let vc = v[idx(i + 1, j + 1)];
            let vd = v[idx(i, j + 1)];
            let a = va > level;
            let b = vb > level;
            let c = vc > level;
            let d = vd > level;
            let case = a as u8 | (b as u8) << 1 | (c as u8) << 2 | (d as u8) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            // edge crossings: 0 = AB, 1 = BC, 2 = DC, 3 = AD
            let t = |p: f64, q: f64| (level - p) / (q - p);
            let e = |k: usize| -> [f64; 2] {
                match k {
                    0 => lerp_point(g, [i, j], [i + 1, j], t(va, vb)),
                    1 => lerp_point(g, [i + 1, j], [i + 1, j + 1], t(vb, vc)),
                    2 => lerp_point(g, [i, j + 1], [i + 1, j + 1], t(vd, vc)),
                    _ => lerp_point(g, [i, j], [i, j + 1], t(va, vd)),
                }
            };
            let mut emit = |k0: usize, k1: usize| segs.push((e(k0), e(k1)));
            match case {
                1 => emit(3, 0),
                2 => emit(0, 1),
                3 => emit(3, 1),
                4 => emit(1, 2),
                6 => emit(0, 2),
                7 => emit(3, 2),
                8 => emit(2, 3),
                9 => emit(0, 2),
                11 => emit(1, 2),
                12 => emit(3, 1),
                13 => emit(0, 1),
                14 => emit(3, 0),
                5 => {
                    // A and C inside
                    if 0.25 * (va + vb + vc + vd) > level {
                        emit(3, 2);
                        emit(0, 1);
                    } else {
                        emit(3, 0);
                        emit(1, 2);
                    }
                }
                10 => {
                    // B and D inside
                    if 0.25 * (va + vb + vc + vd) > level {
                        emit(3, 0);
                        emit(1, 2);
                    } else {
                        emit(3, 2);
                        emit(0, 1);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segs
}

pub fn polyline_length(segs: &[Segment]) -> f64 {
    segs.iter()
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .sum()
}

/// Kuhn split of the dual cube at node (i,j,k): 6 tetrahedra along the
/// permutation paths from (0,0,0) to (1,1,1).
const TET_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Total area of the `level` isosurface via marching tetrahedra.
pub fn marching_tets_area(f: &ScalarField, level: f64) -> f64 {
    let mut area = 0.0;
    for_each_tet_triangle(f, level, |tri| {
        let u = [tri[1][0] - tri[0][0], tri[1][1] - tri[0][1], tri[1][2] - tri[0][2]];
        let w = [tri[2][0] - tri[0][0], tri[2][1] - tri[0][1], tri[2][2] - tri[0][2]];
        let cx = u[1] * w[2] - u[2] * w[1];
        let cy = u[2] * w[0] - u[0] * w[2];
        let cz = u[0] * w[1] - u[1] * w[0];
        area += 0.5 * (cx * cx + cy * cy + cz * cz).sqrt();
    });
    area
}

/// Isosurface sample points (all tetrahedral edge crossings).
pub fn isosurface_points(f: &ScalarField, level: f64) -> Vec<[f64; 3]> {
    let mut pts = Vec::new();
    for_each_tet_triangle(f, level, |tri| {
        pts.extend_from_slice(&tri);
    });
    pts
}

fn for_each_tet_triangle(f: &ScalarField, level: f64, mut emit: impl FnMut([[f64; 3]; 3])) {
    let g = f.grid();
    assert_eq!(g.dim(), 3, "marching tetrahedra needs a 3D field");
    let shape = g.shape3();
    let strides = g.strides();
    let v = f.values();
    let dx = g.spacing();
    let o = g.origin();

    let mut corners = [[0usize; 3]; 4];
    for i in 0..shape[0] - 1 {
        for j in 0..shape[1] - 1 {
            for k in 0..shape[2] - 1 {
                let base = [i, j, k];
                for perm in &TET_PERMS {
                    corners[0] = base;
                    let mut p = base;
                    for (step, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        corners[step + 1] = p;
                    }
                    let vals = [
                        v[corners[0][0] * strides[0] + corners[0][1] * strides[1] + corners[0][2]],
                        v[corners[1][0] * strides[0] + corners[1][1] * strides[1] + corners[1][2]],
                        v[corners[2][0] * strides[0] + corners[2][1] * strides[1] + corners[2][2]],
                        v[corners[3][0] * strides[0] + corners[3][1] * strides[1] + corners[3][2]],
                    ];
                    let inside: Vec<usize> = (0..4).filter(|&m| vals[m] > level).collect();
                    if inside.is_empty() || inside.len() == 4 {
                        continue;
                    }
                    let cross = |m: usize, n: usize| -> [f64; 3] {
                        let t = (level - vals[m]) / (vals[n] - vals[m]);
                        [
                            o[0] + (corners[m][0] as f64
                                + t * (corners[n][0] as f64 - corners[m][0] as f64))
                                * dx,
                            o[1] + (corners[m][1] as f64
                                + t * (corners[n][1] as f64 - corners[m][1] as f64))
                                * dx,
                            o[2] + (corners[m][2] as f64
                                + t * (corners[n][2] as f64 - corners[m][2] as f64))
                                * dx,
                        ]
                    };
                    match inside.len() {
                        1 => {
                            let m = inside[0];
                            let others: Vec<usize> = (0..4).filter(|&n| n != m).collect();
                            emit([
                                cross(m, others[0]),
                                cross(m, others[1]),
                                cross(m, others[2]),
                            ]);
                        }
                        3 => {
                            let m = (0..4).find(|n| !inside.contains(n)).unwrap();
                            let others: Vec<usize> = (0..4).filter(|&n| n != m).collect();
                            emit([
                                cross(others[0], m),
                                cross(others[1], m),
                                cross(others[2], m),
                            ]);
                        }
                        2 => {
                            let (m0, m1) = (inside[0], inside[1]);
                            let out: Vec<usize> = (0..4).filter(|n| !inside.contains(n)).collect();
                            let q = [
                                cross(m0, out[0]),
                                cross(m0, out[1]),
                                cross(m1, out[1]),
                                cross(m1, out[0]),
                            ];
                            emit([q[0], q[1], q[2]]);
                            emit([q[0], q[2], q[3]]);
                        }
                        _ => unreachable!(),
                    }
                }
            }
        }
    }
}

/// Exact distance from a point to a segment.
pub fn point_segment_distance(x: [f64; 2], s: &Segment) -> f64 {
    let (a, b) = s;
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 { ((ax[0] * ab[0] + ax[1] * ab[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let px = a[0] + t * ab[0] - x[0];
    let py = a[1] + t * ab[1] - x[1];
    (px * px + py * py).sqrt()
}
