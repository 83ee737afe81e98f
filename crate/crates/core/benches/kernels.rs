//! Hot kernels on a one-thread pool versus the default pool.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lineament_core::analyze::density;
use lineament_core::detect::{canny, CannyParams};
use lineament_core::dimred::to_data_matrix;
use lineament_core::enhance::{convolve, directional_kernel};
use lineament_core::pipeline::{make_synthetic, SceneSpec};
use lineament_core::vectorize::{extract, ExtractionParams};

#[cfg(feature = "parallel")]
fn pools() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("sequential", Some(one)), ("parallel", None)]
}

#[cfg(not(feature = "parallel"))]
fn pools() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "parallel")]
fn on_pool<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn on_pool<T: Send>(_: &Option<()>, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn kernels(c: &mut Criterion) {
    let scene = make_synthetic(&SceneSpec::benchmark(), 1).unwrap();
    let img = scene.raster.band_image(0).rescaled_to_byte_range();
    let kernel = directional_kernel(45).unwrap();
    let params = CannyParams::default();
    let lineaments = extract(&img, &ExtractionParams::default(), "bench").unwrap();
    let (w, h) = (img.width(), img.height());

    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("convolve", name), &img, |b, img| {
            b.iter(|| on_pool(&pool, || black_box(convolve(img, &kernel))))
        });
        group.bench_with_input(BenchmarkId::new("canny", name), &img, |b, img| {
            b.iter(|| on_pool(&pool, || black_box(canny(img, &params))))
        });
        group.bench_with_input(BenchmarkId::new("covariance", name), &scene.raster, |b, r| {
            b.iter(|| on_pool(&pool, || black_box(to_data_matrix(r).unwrap().covariance())))
        });
        group.bench_with_input(BenchmarkId::new("density", name), &lineaments, |b, set| {
            b.iter(|| on_pool(&pool, || black_box(density(set, 10, 50, w, h).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
