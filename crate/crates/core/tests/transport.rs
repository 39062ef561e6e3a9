use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixlab::blocks::{Block, StreamSwirl};
use mixlab::budgets::{palenstrophy_schedule, transport_cost, window_velocity};
use mixlab::composer::{advect_semi_lagrangian, CellularFlow, Schedule};
use mixlab::diagnostics::{sobolev_norm, VelocitySamples};
use mixlab::grid::{mixed_level, GridSpec, Pattern, TracerField};

fn l2_diff(a: &TracerField, b: &TracerField) -> f64 {
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    TracerField::continuous(a.grid(), d).unwrap().l2_norm()
}

#[test]
fn swirl_stage_reversed_in_time_recovers_the_field() {
    let grid = GridSpec::new(9).unwrap();
    let init = TracerField::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).cos()).unwrap();
    let mut flow = CellularFlow::new(
        init.clone(),
        1,
        vec![Block::swirl(None, 2).unwrap()],
        Some(Schedule::uniform(1)),
        None,
    )
    .unwrap();
    flow.advect_stage(0, 64).unwrap();
    let forward = flow.state().clone();
    assert!(l2_diff(&forward, &init) > 1e-2);
    let back = advect_semi_lagrangian(
        &forward,
        |t, x, y| {
            flow.global_velocity(t.clamp(0.0, 1.0 - 1e-12), x, y)
                .unwrap_or([0.0, 0.0])
        },
        1.0,
        0.0,
        64,
    )
    .unwrap();
    let err = l2_diff(&back, &init);
    assert!(err < 1e-3, "round-trip L2 error {err}");
}

#[test]
fn advection_keeps_mean_and_barely_loses_l2() {
    let grid = GridSpec::new(7).unwrap();
    let init = TracerField::from_fn(grid, |x, y| (PI * x).sin() * (2.0 * PI * y).cos()).unwrap();
    let stages = 3;
    let mut flow = CellularFlow::new(
        init,
        1,
        vec![Block::swirl(None, 4).unwrap(); stages],
        Some(Schedule::uniform(stages)),
        None,
    )
    .unwrap();
    for n in 0..stages {
        let before = flow.state().clone();
        let after = flow.advect_stage(n, 16).unwrap();
        assert!((after.mean() - before.mean()).abs() < 1e-12);
        let ratio = after.l2_norm() / before.l2_norm();
        assert!(ratio <= 1.0 + 1e-12 && ratio >= 0.99, "stage {n}: L2 ratio {ratio}");
    }
}

#[test]
fn lifted_halves_are_spread_by_a_swirl_stage() {
    let grid = GridSpec::new(7).unwrap();
    let init = TracerField::pattern(grid, Pattern::LeftRightHalves).unwrap().lift();
    let mut flow = CellularFlow::new(
        init.clone(),
        1,
        vec![Block::swirl(None, 4).unwrap()],
        Some(Schedule::uniform(1)),
        None,
    )
    .unwrap();
    let after = flow.advect_stage(0, 32).unwrap();
    assert!(after.mean().abs() < 1e-12);
    assert!(after.max_abs() <= 1.0 + 1e-12);
    assert!(l2_diff(after, &init) > 0.1);
}

#[test]
fn swirl_divergence_vanishes_at_random_points() {
    let sw = StreamSwirl::new(Some(1.0), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let (x, y) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        assert_eq!(sw.divergence(x, y), 0.0);
    }
}

/// Midpoint quadrature of the Frobenius norm of the `s`-th derivative
/// tensor from the analytic derivatives.
fn quadrature_norm(sw: &StreamSwirl, s: u32, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let binom = |k: u32| (1..=k).fold(1.0, |acc, i| acc * (s - i + 1) as f64 / i as f64);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h);
            for c in 0..2 {
                for a in 0..=s {
                    let d = sw.velocity_derivative(c, a, s - a, x, y);
                    acc += binom(a) * d * d;
                }
            }
        }
    }
    (acc * h * h).sqrt()
}

#[test]
fn second_order_norm_dominates_by_the_poincare_constant() {
    for power in [2, 4] {
        let sw = StreamSwirl::new(Some(1.0), power).unwrap();
        let s1 = quadrature_norm(&sw, 1, 512);
        let s2 = quadrature_norm(&sw, 2, 512);
        // Each entry of grad u has zero mean on the cell, so the Neumann
        // Poincare inequality gives ||grad^2 u|| >= pi ||grad u||.
        assert!(s2 >= PI * s1, "power {power}: {s2} < pi * {s1}");
        assert!((s1 / sw.norm(1.0, 2.0).unwrap() - 1.0).abs() < 1e-6);
        assert!((s2 / sw.norm(2.0, 2.0).unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn window_cost_by_quadrature_is_additive() {
    let grid = GridSpec::new(6).unwrap();
    let init = TracerField::pattern(grid, Pattern::LeftRightHalves).unwrap();
    let flow = CellularFlow::new(
        init,
        1,
        vec![Block::interleave(); 3],
        Some(Schedule::new(vec![0.0, 1.0, 2.5, 3.0]).unwrap()),
        None,
    )
    .unwrap();
    let steps = 8;
    let cost = |k: usize| -> f64 {
        (0..steps * k)
            .map(|q| {
                let t = (q as f64 + 0.5) / (steps * k) as f64;
                let samples = VelocitySamples::from_fn(256, |x, y| {
                    window_velocity(&flow, 1, k, 1, t, x, y).unwrap()
                });
                sobolev_norm(&samples, 1.0, 2.0).unwrap()
            })
            .sum::<f64>()
            / (steps * k) as f64
    };
    let (c1, c2) = (cost(1), cost(2));
    let block = transport_cost(&flow, 1, 1, 2.0).unwrap();
    assert!((c1 / block - 1.0).abs() < 1e-3, "{c1} vs {block}");
    assert!((c2 / (2.0 * c1) - 1.0).abs() < 1e-3, "{c2} vs 2 x {c1}");
}

#[test]
fn palenstrophy_schedule_saturates_the_budget() {
    let grid = GridSpec::new(6).unwrap();
    let init = TracerField::pattern(grid, Pattern::Checkerboard(1)).unwrap();
    let mut flow = CellularFlow::new(init, 1, vec![Block::interleave(); 4], None, None).unwrap();
    let budget = 3.0;
    let sched = palenstrophy_schedule(&flow, budget, 2.0, 2.0).unwrap();
    flow.set_schedule(sched.clone()).unwrap();
    for n in 0..4 {
        let t = sched.time(n) + 0.5 * sched.tau(n);
        let measured = sobolev_norm(&flow.velocity_samples(t, 512).unwrap(), 2.0, 2.0).unwrap();
        assert!((measured / budget - 1.0).abs() < 0.02, "stage {n}: {measured}");
    }
}

#[test]
fn baker_twice_gives_stripes_of_width_an_eighth() {
    let grid = GridSpec::new(5).unwrap();
    let init = TracerField::pattern(grid, Pattern::TopBottomHalves).unwrap();
    let baker = Block::baker();
    let twice = baker.apply(&baker.apply(&init).unwrap()).unwrap();
    assert_eq!(twice, TracerField::pattern(grid, Pattern::HorizontalStripes(3)).unwrap());
}

#[test]
fn deep_three_mixes_three_levels_and_keeps_counts() {
    let grid = GridSpec::new(4).unwrap();
    let init = TracerField::pattern(grid, Pattern::LeftRightHalves).unwrap();
    let out = Block::deep(3).unwrap().apply(&init).unwrap();
    assert_eq!(out.sorted_values(), init.sorted_values());
    assert_eq!(mixed_level(&out), Some(3));
}
