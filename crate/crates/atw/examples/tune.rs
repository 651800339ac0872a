//! Scratch harness for solver tuning runs.

use atw::dist::signed_distance;
use atw::grid::{synth_shape, GridSpec, Shape};
use atw::oracles::{BallExtinction, BallOracle};
use atw::scheme::{atw_step, equivalent_radius};
use atw::tv::{SolverParams, TvMode};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("ball");
    match mode {
        "ball" => ball_run(args.get(2).map(|s| s.parse().unwrap()).unwrap_or(128)),
        "gap" => gap_run(),
        "micro" => micro_iso(),
        "onestep" => one_step(args.get(2).map(|s| s.parse().unwrap()).unwrap_or(256)),
        "analytic" => analytic_sd_step(args.get(2).map(|s| s.parse().unwrap()).unwrap_or(256)),
        "depthbias" => depth_bias(),
        "perradius" => per_radius(),
        "driftwarm" => drift(true),
        "driftcold" => drift(false),
        _ => eprintln!("unknown mode {mode}"),
    }
}

fn analytic_sd_step(cells: usize) {
    use atw::grid::{threshold_field, ScalarField};
    // one step driven by the exact signed distance of the circle r=1,
    // removing the EDT/digitization from the loop
    let g = GridSpec::centered(2, cells, 2.5).unwrap();
    let h = 0.01;
    let sd_exact =
        ScalarField::from_fn(g.clone(), |x| (x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).unwrap();
    let gfield = sd_exact.scale(1.0 / h);
    for (label, params) in [
        ("iso  ", SolverParams { tolerance: 1e-8, max_iter: 200_000, ..Default::default() }),
        ("aniso", SolverParams {
            tolerance: 1e-8,
            max_iter: 200_000,
            ..SolverParams::anisotropic()
        }),
    ] {
        let out = atw::tv::solve_relaxed(&gfield, &params, None).unwrap();
        let mask = threshold_field(&out.u, 0.5);
        let r1 = equivalent_radius(&mask);
        // also the fractional volume of the relaxed u
        let vol_frac: f64 = out.u.values().iter().sum::<f64>() * g.cell_volume();
        let r_frac = (vol_frac / std::f64::consts::PI).sqrt();
        println!(
            "{label}: r1={r1:.6} r_frac={r_frac:.6} formula=0.989898 err={:.4} dx units={:.2}",
            (r1 - 0.9898979f64).abs(),
            (r1 - 0.9898979f64).abs() / g.spacing()
        );
    }
    // digitized EDT smoothed by separable [1,2,1]/4 passes
    let e0 = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
    let sd_raw = signed_distance(&e0).unwrap();
    for passes in [1usize, 2, 3] {
        let mut sd_s = sd_raw.clone();
        for _ in 0..passes {
            sd_s = smooth_121_local(&sd_s);
        }
        let gfield = sd_s.scale(1.0 / h);
        let params = SolverParams { tolerance: 1e-8, max_iter: 200_000, ..Default::default() };
        let out = atw::tv::solve_relaxed(&gfield, &params, None).unwrap();
        let mask = threshold_field(&out.u, 0.5);
        let r1 = equivalent_radius(&mask);
        println!(
            "edt smoothed x{passes}: r1={r1:.6} err={:.5} ({:.2} dx)",
            (r1 - 0.9898979f64).abs(),
            (r1 - 0.9898979f64).abs() / g.spacing()
        );
    }
    let sd_edt = sd_raw;
    let diffs: Vec<f64> = sd_edt
        .values()
        .iter()
        .zip(sd_exact.values())
        .map(|(a, b)| a - b)
        .collect();
    let band: Vec<f64> = sd_exact
        .values()
        .iter()
        .zip(&diffs)
        .filter_map(|(&s, &d)| if s.abs() < 0.1 { Some(d) } else { None })
        .collect();
    let mean = band.iter().sum::<f64>() / band.len() as f64;
    let rms = (band.iter().map(|d| d * d).sum::<f64>() / band.len() as f64).sqrt();
    println!(
        "edt-vs-exact sd near interface: mean={:.5} ({:.2} dx) rms={:.5} ({:.2} dx)",
        mean,
        mean / g.spacing(),
        rms,
        rms / g.spacing()
    );
}

fn micro_iso() {
    use atw::grid::{threshold_field, SetMask};
    use atw::tv::{binary_energy_mode, solve_relaxed};
    use rand::{Rng, SeedableRng};
    let g = GridSpec::new(2, &[4, 5], 0.5, &[0.0, 0.0]).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for trial in 0..5 {
        let vals: Vec<f64> = (0..g.ncells()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let gf = atw::grid::ScalarField::new(g.clone(), vals).unwrap();
        // exhaustive minimum of the ISO binary objective
        let n = g.ncells();
        let mut best = f64::INFINITY;
        for m in 0u64..(1u64 << n) {
            let inside: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
            let cand = SetMask::new(g.clone(), inside).unwrap();
            let e = binary_energy_mode(&cand, &gf, TvMode::Isotropic);
            if e < best {
                best = e;
            }
        }
        let params = SolverParams {
            tv_mode: TvMode::Isotropic,
            tolerance: 1e-12,
            max_iter: 300_000,
            ..Default::default()
        };
        let out = solve_relaxed(&gf, &params, None).unwrap();
        let mask = threshold_field(&out.u, 0.5);
        let e_pd = binary_energy_mode(&mask, &gf, TvMode::Isotropic);
        println!(
            "trial {trial}: brute={best:.9} pd={e_pd:.9} diff={:.2e} relaxed_primal={:.9} conv={}",
            e_pd - best,
            out.stats.primal_energy,
            out.stats.converged
        );
    }
}

fn one_step(cells: usize) {
    let g = GridSpec::centered(2, cells, 2.5).unwrap();
    let h = 0.01;
    let e0 = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
    for (label, params) in [
        ("iso tol=1e-6", SolverParams::default()),
        (
            "iso tol=1e-8",
            SolverParams { tolerance: 1e-8, max_iter: 200_000, ..Default::default() },
        ),
        ("aniso tol=1e-8", SolverParams {
            tolerance: 1e-8,
            max_iter: 200_000,
            ..SolverParams::anisotropic()
        }),
    ] {
        let (e1, _, st) = atw_step(&e0, h, &params, None).unwrap();
        let r1 = equivalent_radius(&e1);
        println!(
            "{label}: r1={r1:.6} formula={:.6} err={:.6} ({:.2} dx) iters={} conv={}",
            0.9898979,
            (r1 - 0.9898979f64).abs(),
            (r1 - 0.9898979f64).abs() / g.spacing(),
            st.iterations,
            st.converged
        );
    }
}

fn ball_run(cells: usize) {
    let g = GridSpec::centered(2, cells, 2.5).unwrap();
    let dx = g.spacing();
    let h = 0.01;
    let e0 = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
    let params = SolverParams::default();
    let oracle = BallOracle::new(1.0, 2, h).unwrap();
    let formula = oracle.radius_seq(200, BallExtinction::Argmin);

    let mut prev = e0;
    let mut warm = None;
    let mut worst: f64 = 0.0;
    let t0 = std::time::Instant::now();
    for k in 1..formula.len() + 3 {
        let (next, state, st) = atw_step(&prev, h, &params, warm).unwrap();
        let r = equivalent_radius(&next);
        let rf = formula.get(k).copied().unwrap_or(0.0);
        let err = (r - rf).abs();
        worst = worst.max(err);
        println!(
            "k={k:3} r={r:.5} formula={rf:.5} err={err:.5} ({:.2} dx) iters={} gap={:.2e} conv={}",
            err / dx,
            st.iterations,
            st.gap,
            st.converged
        );
        if next.is_empty() {
            break;
        }
        prev = next;
        warm = Some(state);
    }
    println!(
        "cells={cells} dx={dx:.5} worst={worst:.5} ({:.2} dx)  elapsed={:?}",
        worst / dx,
        t0.elapsed()
    );
}

fn gap_run() {
    // watch the gap trajectory of a mid-run step
    let g = GridSpec::centered(2, 128, 2.5).unwrap();
    let h = 0.02;
    let e0 = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 0.85 }).unwrap();
    let sd = signed_distance(&e0).unwrap();
    let gfield = sd.scale(1.0 / h);
    for (tau_scale, label) in [(0.5, "tau/2"), (0.25, "tau/4"), (0.125, "tau/8"), (0.0625, "tau/16"), (0.03125, "tau/32")] {
        let dim = 2f64;
        let l = 2.0 * dim.sqrt() / g.spacing();
        let base = 1.0 / l;
        let params = SolverParams {
            tv_mode: TvMode::Isotropic,
            primal_step: Some(base * tau_scale),
            dual_step: Some(base / tau_scale),
            tolerance: 1e-6,
            max_iter: 60_000,
            check_every: 50,
            ..Default::default()
        };
        let out = atw::tv::solve_relaxed(&gfield, &params, None).unwrap();
        let hist = &out.gap_history;
        let pick: Vec<String> = [1usize, 4, 10, 20, 40, 80, 160, 320, 640, hist.len() - 1]
            .iter()
            .filter(|&&i| i < hist.len())
            .map(|&i| format!("{}:{:.1e}", i * 50, hist[i]))
            .collect();
        println!(
            "{label}: iters={} conv={} gap={:.2e}  history {}",
            out.stats.iterations,
            out.stats.converged,
            out.stats.gap,
            pick.join(" ")
        );
    }
}

fn smooth_121_local(f: &atw::grid::ScalarField) -> atw::grid::ScalarField {
    let g = f.grid().clone();
    let shape = g.shape3();
    let strides = g.strides();
    let mut vals = f.values().to_vec();
    let mut scratch = vals.clone();
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
                    let lo = if i > 0 { vals[base + (i - 1) * s] } else { vals[base] };
                    let hi = if i + 1 < n { vals[base + (i + 1) * s] } else { vals[base + i * s] };
                    scratch[base + i * s] = 0.25 * lo + 0.5 * vals[base + i * s] + 0.25 * hi;
                }
            }
        }
        std::mem::swap(&mut vals, &mut scratch);
    }
    atw::grid::ScalarField::new(g, vals).unwrap()
}

pub fn depth_bias() {
    use atw::scheme::step_distance;
    let g = GridSpec::centered(2, 256, 2.5).unwrap();
    let dx = g.spacing();
    for r0 in [1.0f64, 0.55] {
        let e0 = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: r0 }).unwrap();
        let sd_step = step_distance(&e0, 0.01).unwrap();
        let sd_true =
            atw::grid::ScalarField::from_fn(g.clone(), |x| (x[0] * x[0] + x[1] * x[1]).sqrt() - r0)
                .unwrap();
        // bin by true depth
        let mut bins: std::collections::BTreeMap<i64, (f64, usize)> = Default::default();
        for (st, tr) in sd_step.values().iter().zip(sd_true.values()) {
            let depth = tr / dx;
            if depth.abs() < 8.0 {
                let b = (depth * 2.0).floor() as i64;
                let e = bins.entry(b).or_default();
                e.0 += st - tr;
                e.1 += 1;
            }
        }
        println!("r0={r0}:");
        for (b, (sum, n)) in bins {
            println!(
                "  depth [{:+.1},{:+.1}) dx: mean bias {:+.4} dx (n={n})",
                b as f64 / 2.0,
                b as f64 / 2.0 + 0.5,
                sum / n as f64 / dx
            );
        }
    }
}

pub fn per_radius() {
    let g = GridSpec::centered(2, 256, 2.5).unwrap();
    let dx = g.spacing();
    let h = 0.01;
    let params = SolverParams { tolerance: 1e-8, max_iter: 100_000, ..Default::default() };
    for r0 in [1.0f64, 0.8, 0.65, 0.5, 0.35, 0.25] {
        let e0 = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: r0 }).unwrap();
        let (e1, _, st) = atw_step(&e0, h, &params, None).unwrap();
        let r1 = equivalent_radius(&e1);
        let rf = atw::oracles::ball_radius_next_argmin(r0, h, 2);
        println!(
            "r0={r0:.2}: r1={r1:.5} formula={rf:.5} err={:+.3} dx  iters={} conv={}",
            (r1 - rf) / dx,
            st.iterations,
            st.converged
        );
    }
}

pub fn drift(warm_start: bool) {
    let g = GridSpec::centered(2, 256, 2.5).unwrap();
    let dx = g.spacing();
    let h = 0.01;
    let params = SolverParams { tolerance: 1e-7, max_iter: 100_000, ..Default::default() };
    let oracle = atw::oracles::BallOracle::new(1.0, 2, h).unwrap();
    let formula = oracle.radius_seq(60, atw::oracles::BallExtinction::Argmin);
    let mut prev = synth_shape(&g, &Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
    let mut warm = None;
    for k in 1..=15 {
        let sd = atw::scheme::step_distance(&prev, h).unwrap();
        let gf = sd.scale(1.0 / h);
        let out = atw::tv::solve_relaxed(&gf, &params, if warm_start { warm.take() } else { None })
            .unwrap();
        let frac = out.u.values().iter().filter(|&&v| v > 0.01 && v < 0.99).count();
        let mask = atw::grid::threshold_field(&out.u, 0.5);
        let r = equivalent_radius(&mask);
        println!(
            "k={k:2} r={r:.5} err={:+.3} dx  frac_cells={frac} iters={}",
            (r - formula[k]) / dx,
            out.stats.iterations
        );
        warm = Some(out.state);
        prev = mask;
    }
}
