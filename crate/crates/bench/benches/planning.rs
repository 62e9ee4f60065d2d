use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{UnitQuaternion, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use manip_core::assignment::solve_rectangular;
use manip_core::config::PipelineConfig;
use manip_core::geometry::{farthest_point_sample, ransac_plane, Pose, RansacParams, Vec3};
use manip_core::grasp::GraspCandidate;
use manip_core::nav::BodyCandidate;
use manip_core::optimizer::{select_best, OptimizerWeights};
use manip_core::sim::{generate_scene, render_depth, run_search_episode, NoiseModel, SceneSpec, SimConfig};

fn joint_problem(grasps: usize, bodies: usize) -> (Vec<GraspCandidate>, Vec<BodyCandidate>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = (0..grasps)
        .map(|_| {
            let axis = Vec3::new(rng.random(), rng.random(), rng.random()).normalize();
            let q = UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..PI));
            GraspCandidate {
                pose: Pose::new(*q.to_rotation_matrix().matrix(), Vec3::zeros()).unwrap(),
                width: 0.08,
                score: rng.random(),
                source_rotation: 0,
            }
        })
        .collect();
    let b = (0..bodies)
        .map(|i| {
            let theta = i as f64 * 0.1;
            BodyCandidate {
                position: Vector2::new(theta.cos(), theta.sin()),
                yaw: theta + PI,
                camera_z: 0.8,
                ring_radius: 1.0,
                s_body: rng.random(),
                d_obstacles: 1.0,
                d_item: 1.0,
                valid: true,
                rejection: None,
            }
        })
        .collect();
    (g, b)
}

fn bench_select_best(c: &mut Criterion) {
    let mut group = c.benchmark_group("select_best");
    for (g, b) in [(10, 36), (50, 200), (200, 500)] {
        let (grasps, bodies) = joint_problem(g, b);
        let w = OptimizerWeights::default();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{g}x{b}")), &(), |bench, _| {
            bench.iter(|| select_best(black_box(&grasps), black_box(&bodies), &Vec3::new(0.0, 0.0, 0.5), &w))
        });
    }
    group.finish();
}

fn bench_assignment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("solve_rectangular");
    for (n, m) in [(6, 6), (20, 30), (100, 100)] {
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| -rng.random::<f64>() * 11.0).collect()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &cost, |bench, cost| {
            bench.iter(|| solve_rectangular(black_box(cost), m))
        });
    }
    group.finish();
}

fn bench_ransac(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<Vec3> = (0..2000)
        .map(|i| {
            if i % 10 < 7 {
                Vec3::new(rng.random_range(-0.25..0.25), rng.random_range(-0.12..0.12), rng.random_range(-0.002..0.002))
            } else {
                Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
            }
        })
        .collect();
    let params = RansacParams::default();
    c.bench_function("ransac_plane/2000", |b| b.iter(|| ransac_plane(black_box(&points), &params, 7)));
}

fn bench_fps(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let points: Vec<Vec3> = (0..10_000)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    c.bench_function("farthest_point_sample/10000->64", |b| {
        b.iter(|| farthest_point_sample(black_box(&points), 64, 0))
    });
}

fn bench_sim(c: &mut Criterion) {
    let scene = generate_scene(&SceneSpec::cabinet(), 5).unwrap();
    let k = SimConfig::default().intrinsics;
    let drawer = &scene.cabinets[0].drawers[0];
    let pose = Pose::look_at(drawer.handle_center + drawer.axis * 1.2, drawer.handle_center).unwrap();
    let noise = NoiseModel::reference();
    c.bench_function("render_depth/160x120", |b| {
        b.iter(|| render_depth(black_box(&scene), &k, &pose, &noise, 1))
    });
    c.bench_function("generate_scene/cabinet", |b| {
        b.iter(|| generate_scene(black_box(&SceneSpec::cabinet()), 5))
    });
    let cfg = PipelineConfig::default();
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    group.bench_function("search", |b| b.iter(|| run_search_episode(black_box(&scene), &cfg, 5)));
    group.finish();
}

criterion_group!(benches, bench_select_best, bench_assignment, bench_ransac, bench_fps, bench_sim);
criterion_main!(benches);
