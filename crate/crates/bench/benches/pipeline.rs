use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use nucleoforge_core::loss::{loss_gradient, optimize_patch, LossParams};
use nucleoforge_core::quality::{fsim, gmsd, ssim};
use nucleoforge_core::raster::{extract_contours, BinaryMask, ContourSet, GrayImage, LabelMap};
use nucleoforge_core::seg;
use nucleoforge_core::seg::watershed::watershed_split;
use nucleoforge_core::synth::{gen_nuclei_masks, SynthConfig};
use nucleoforge_core::topo::skeleton_map;

fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn noise_image(w: usize, h: usize, seed: u64) -> GrayImage {
    GrayImage::from_fn(w, h, |r, c| {
        let x = mix(seed ^ ((r * w + c) as u64).wrapping_mul(0x2545f4914f6cdd1d));
        ((x >> 11) as f64) / ((1u64 << 53) as f64)
    })
}

fn sample_labels(seed: u64) -> LabelMap {
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    gen_nuclei_masks(&cfg).expect("default config synthesizes")
}

fn sample_contours(labels: &LabelMap) -> ContourSet {
    extract_contours(labels)
}

fn bench_synthesis(c: &mut Criterion) {
    let cfg = SynthConfig::default();
    c.bench_function("gen_nuclei_masks 256x256", |b| {
        b.iter(|| gen_nuclei_masks(&cfg).unwrap())
    });
}

fn bench_skeleton(c: &mut Criterion) {
    let labels = sample_labels(7);
    c.bench_function("skeleton_map 256x256", |b| b.iter(|| skeleton_map(&labels)));
}

fn bench_loss(c: &mut Criterion) {
    let labels = sample_labels(11);
    let contours = sample_contours(&labels);
    let g = noise_image(256, 256, 3);
    let params = LossParams::new(0.1, 1.0).unwrap();
    c.bench_function("loss_gradient 256x256", |b| {
        b.iter(|| loss_gradient(&g, &contours, &params).unwrap())
    });

    let small_labels = LabelMap::from_fn(32, 32, |r, c| {
        let dr = r as f64 - 16.0;
        let dc = c as f64 - 16.0;
        u32::from(dr * dr + dc * dc <= 81.0)
    });
    let small_contours = extract_contours(&small_labels);
    let g32 = noise_image(32, 32, 5);
    c.bench_function("optimize_patch 32x32 x50", |b| {
        b.iter_batched(
            || g32.clone(),
            |img| optimize_patch(&img, &small_contours, &params, 0.05, 50).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_quality(c: &mut Criterion) {
    let a = noise_image(256, 256, 21);
    let b_img = noise_image(256, 256, 22);
    let mut group = c.benchmark_group("quality 256x256");
    group.sample_size(20);
    group.bench_function("ssim", |b| b.iter(|| ssim(&a, &b_img).unwrap()));
    group.bench_function("gmsd", |b| b.iter(|| gmsd(&a, &b_img).unwrap()));
    group.bench_function("fsim", |b| b.iter(|| fsim(&a, &b_img).unwrap()));
    group.finish();
}

fn bench_seg(c: &mut Criterion) {
    let gt = sample_labels(31);
    let pred = sample_labels(32);
    c.bench_function("seg evaluate 256x256", |b| {
        b.iter(|| seg::evaluate(&pred, &gt).unwrap())
    });

    let mask = BinaryMask::from_fn(128, 96, |r, c| {
        let d1 = (r as f64 - 48.0).powi(2) + (c as f64 - 40.0).powi(2);
        let d2 = (r as f64 - 48.0).powi(2) + (c as f64 - 78.0).powi(2);
        d1 <= 900.0 || d2 <= 900.0
    });
    c.bench_function("watershed_split 128x96", |b| {
        b.iter(|| watershed_split(&mask))
    });
}

criterion_group!(
    benches,
    bench_synthesis,
    bench_skeleton,
    bench_loss,
    bench_quality,
    bench_seg
);
criterion_main!(benches);
