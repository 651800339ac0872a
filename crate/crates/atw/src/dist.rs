//! Exact Euclidean distance and signed distance to the phase boundary of a
//! mask.
//!
//! The squared distance transform is dimension-separable: one lower-envelope
//! pass per axis, O(N) per pass. Distances are measured between cell centers
//! and then corrected by half a cell, which places the interface midway
//! between opposite-phase centers and makes axis-aligned distances exact.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, SetMask};

/// Unsigned and signed distance to the interface of one mask.
pub struct DistanceField {
    pub d: ScalarField,
    pub sd: ScalarField,
}

/// Lower-envelope squared distance transform of one line.
///
/// `f` holds squared source offsets (0 at seeds, +inf elsewhere); `out`
/// receives the squared distance to the nearest seed, in cell units.
fn sq_dist_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    v.resize(n, 0);
    z.resize(n + 1, 0.0);

    let mut k = 0usize;
    let mut started = false;
    for q in 0..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s > z[k] {
                break;
            }
            // q's parabola dominates the current rightmost one everywhere
            // past z[k]; pop it.
            k -= 1;
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }

    if !started {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        out[q] = d * d + f[v[k]];
    }
}

/// In-place separable squared EDT over a `shape3` box; `field` starts with 0
/// at seeds and +inf elsewhere, ends with squared cell distances to the
/// nearest seed.
fn sq_edt_in_place(field: &mut [f64], shape: [usize; 3]) {
    let strides = [shape[1] * shape[2], shape[2], 1usize];
    for axis in 0..3 {
        let n = shape[axis];
        if n <= 1 {
            continue;
        }
        // Enumerate lines along `axis` by iterating the other two axes.
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let lines: Vec<usize> = (0..shape[a1] * shape[a2])
            .map(|t| {
                let i1 = t / shape[a2];
                let i2 = t % shape[a2];
                i1 * strides[a1] + i2 * strides[a2]
            })
            .collect();
        let stride = strides[axis];
        let cells: Vec<(usize, f64)> = lines
            .par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n], Vec::new(), Vec::new()),
                |(buf, out, v, z), &base| {
                    for i in 0..n {
                        buf[i] = field[base + i * stride];
                    }
                    sq_dist_1d(buf, out, v, z);
                    out.iter()
                        .enumerate()
                        .map(|(i, &val)| (base + i * stride, val))
                        .collect::<Vec<_>>()
                },
            )
            .flatten()
            .collect();
        for (idx, val) in cells {
            field[idx] = val;
        }
    }
}

/// Squared Euclidean cell-distance from every cell to the nearest seed cell.
fn sq_dist_to_seeds(mask: &SetMask, seed_value: bool) -> Vec<f64> {
    let mut field: Vec<f64> = mask
        .inside()
        .iter()
        .map(|&b| if b == seed_value { 0.0 } else { f64::INFINITY })
        .collect();
    sq_edt_in_place(&mut field, mask.grid().shape3());
    field
}

/// Distance from each cell center to the interface: exact distance to the
/// nearest opposite-phase center, minus half a cell, clamped at zero.
pub fn unsigned_edt(mask: &SetMask) -> Result<ScalarField> {
    if mask.is_empty() || mask.is_full() {
        return Err(Error::NoInterface);
    }
    let dx = mask.grid().spacing();
    let to_out = sq_dist_to_seeds(mask, false);
    let to_in = sq_dist_to_seeds(mask, true);
    let values: Vec<f64> = mask
        .inside()
        .iter()
        .zip(to_out.iter().zip(&to_in))
        .map(|(&ins, (&so, &si))| {
            let sq = if ins { so } else { si };
            (sq.sqrt() * dx - 0.5 * dx).max(0.0)
        })
        .collect();
    ScalarField::new(mask.grid().clone(), values)
}

/// Signed distance: negative inside, positive outside.
pub fn signed_distance(mask: &SetMask) -> Result<ScalarField> {
    let d = unsigned_edt(mask)?;
    let values: Vec<f64> = mask
        .inside()
        .iter()
        .zip(d.values())
        .map(|(&ins, &v)| if ins { -v } else { v })
        .collect();
    ScalarField::new(mask.grid().clone(), values)
}

pub fn distance_field(mask: &SetMask) -> Result<DistanceField> {
    let d = unsigned_edt(mask)?;
    let values: Vec<f64> = mask
        .inside()
        .iter()
        .zip(d.values())
        .map(|(&ins, &v)| if ins { -v } else { v })
        .collect();
    let sd = ScalarField::new(mask.grid().clone(), values)?;
    Ok(DistanceField { d, sd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synth_shape, GridSpec, SetMask, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_unsigned(mask: &SetMask) -> Vec<f64> {
        let g = mask.grid();
        let dx = g.spacing();
        let n = g.ncells();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let xi = g.center_of_linear(i);
            let mut best = f64::INFINITY;
            for j in 0..n {
                if mask.inside()[j] != mask.inside()[i] {
                    let xj = g.center_of_linear(j);
                    let d2: f64 = (0..3).map(|a| (xi[a] - xj[a]) * (xi[a] - xj[a])).sum();
                    best = best.min(d2.sqrt());
                }
            }
            out[i] = (best - 0.5 * dx).max(0.0);
        }
        out
    }

    #[test]
    fn half_space_distances_exact() {
        let g = GridSpec::new(2, &[16, 16], 0.25, &[0.0, 0.0]).unwrap();
        let inside: Vec<bool> = (0..g.ncells()).map(|lin| g.unlinear(lin)[0] < 8).collect();
        let mask = SetMask::new(g.clone(), inside).unwrap();
        let d = unsigned_edt(&mask).unwrap();
        // interface midway between columns 7 and 8: center of column i sits
        // |i - 7.5| cells from it
        for lin in 0..g.ncells() {
            let i = g.unlinear(lin)[0];
            let expect = (i as f64 - 7.5).abs() * 0.25;
            assert!(
                (d.values()[lin] - expect).abs() < 1e-12,
                "i={i} got {} want {expect}",
                d.values()[lin]
            );
        }
    }

    #[test]
    fn single_cell_pythagorean() {
        let g = GridSpec::new(2, &[16, 16], 1.0, &[0.0, 0.0]).unwrap();
        let mut inside = vec![false; g.ncells()];
        inside[g.linear([2, 3, 0])] = true;
        let mask = SetMask::new(g.clone(), inside).unwrap();
        let d = unsigned_edt(&mask).unwrap();
        // offset (3,4) cells from the single inside cell
        let lin = g.linear([5, 7, 0]);
        assert!((d.values()[lin] - (5.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn disk_center_distance() {
        let g = GridSpec::centered(2, 128, 2.0).unwrap();
        let mask = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 0.5 }).unwrap();
        let sd = signed_distance(&mask).unwrap();
        // center cell
        let lin = g.linear([64, 64, 0]);
        let x = g.center_of_linear(lin);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let expect = -(0.5 - r);
        assert!(
            (sd.values()[lin] - expect).abs() <= g.spacing(),
            "sd={} expect about {expect}",
            sd.values()[lin]
        );
    }

    #[test]
    fn complement_antisymmetry_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = GridSpec::new(2, &[12, 9], 0.5, &[0.0, 0.0]).unwrap();
        for _ in 0..20 {
            let inside: Vec<bool> = (0..g.ncells()).map(|_| rng.gen_bool(0.4)).collect();
            let mask = match SetMask::new(g.clone(), inside) {
                Ok(m) if !m.is_empty() && !m.is_full() => m,
                _ => continue,
            };
            let a = signed_distance(&mask).unwrap();
            let b = signed_distance(&mask.complement()).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(*x, -*y);
            }
        }
    }

    #[test]
    fn matches_brute_force_2d_and_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..40 {
            let g = GridSpec::new(2, &[14, 11], 0.3, &[0.0, 0.0]).unwrap();
            let inside: Vec<bool> = (0..g.ncells()).map(|_| rng.gen_bool(0.3)).collect();
            let mask = match SetMask::new(g.clone(), inside) {
                Ok(m) if !m.is_empty() && !m.is_full() => m,
                _ => continue,
            };
            let fast = unsigned_edt(&mask).unwrap();
            let slow = brute_force_unsigned(&mask);
            for (i, (a, b)) in fast.values().iter().zip(&slow).enumerate() {
                assert!((a - b).abs() < 1e-9, "trial {trial} cell {i}: {a} vs {b}");
            }
        }
        for trial in 0..10 {
            let g = GridSpec::new(3, &[7, 6, 5], 0.5, &[0.0, 0.0, 0.0]).unwrap();
            let inside: Vec<bool> = (0..g.ncells()).map(|_| rng.gen_bool(0.3)).collect();
            let mask = match SetMask::new(g.clone(), inside) {
                Ok(m) if !m.is_empty() && !m.is_full() => m,
                _ => continue,
            };
            let fast = unsigned_edt(&mask).unwrap();
            let slow = brute_force_unsigned(&mask);
            for (i, (a, b)) in fast.values().iter().zip(&slow).enumerate() {
                assert!((a - b).abs() < 1e-9, "3d trial {trial} cell {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dilation_monotonicity() {
        let g = GridSpec::centered(2, 64, 2.0).unwrap();
        let a = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 0.3 }).unwrap();
        let b = synth_shape(&g, &Shape::Ball { center: vec![0.1, 0.0], radius: 0.55 }).unwrap();
        // a inside b here; sd_a >= sd_b cellwise
        assert_eq!(crate::grid::subset_violations(&a, &b).unwrap(), 0);
        let sa = signed_distance(&a).unwrap();
        let sb = signed_distance(&b).unwrap();
        for (x, y) in sa.values().iter().zip(sb.values()) {
            assert!(x >= y);
        }
    }

    #[test]
    fn no_interface_errors() {
        let g = GridSpec::new(2, &[8, 8], 1.0, &[0.0, 0.0]).unwrap();
        let empty = SetMask::empty(g.clone());
        assert!(matches!(unsigned_edt(&empty), Err(Error::NoInterface)));
        assert!(matches!(unsigned_edt(&empty.complement()), Err(Error::NoInterface)));
    }

    #[test]
    fn lipschitz_up_to_one_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GridSpec::new(2, &[16, 16], 0.5, &[0.0, 0.0]).unwrap();
        let inside: Vec<bool> = (0..g.ncells()).map(|_| rng.gen_bool(0.5)).collect();
        let mask = SetMask::new(g.clone(), inside).unwrap();
        if mask.is_empty() || mask.is_full() {
            return;
        }
        let d = unsigned_edt(&mask).unwrap();
        let dx = g.spacing();
        for i in 0..g.ncells() {
            for j in 0..g.ncells() {
                let xi = g.center_of_linear(i);
                let xj = g.center_of_linear(j);
                let dist: f64 =
                    (0..3).map(|a| (xi[a] - xj[a]) * (xi[a] - xj[a])).sum::<f64>().sqrt();
                assert!(d.values()[i] - d.values()[j] <= dist + dx + 1e-12);
            }
        }
    }
}
