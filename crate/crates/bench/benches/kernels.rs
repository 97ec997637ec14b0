use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use tasmaj::special_math::{bessel_j0, poly_power_coefficients, regularized_lower_gamma, PolyCoeffs};
use tasmaj::{run_outage_mc, selection, AnalyticModel, ImpairmentState, McSettings, Scheme, SystemConfig, ZetaSet};
use tasmaj_bench::{gain_matrices, snr_grid};

fn special_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("special_math");
    g.bench_function("bessel_j0/series", |b| b.iter(|| bessel_j0(black_box(0.0628))));
    g.bench_function("bessel_j0/asymptotic", |b| b.iter(|| bessel_j0(black_box(12.5))));
    for shape in [1u32, 4, 12] {
        g.bench_with_input(BenchmarkId::new("lower_gamma", shape), &shape, |b, &a| {
            b.iter(|| regularized_lower_gamma(a, black_box(0.8 * f64::from(a))))
        });
    }
    let base = PolyCoeffs::new(vec![1.0, 1.0, 0.5, 1.0 / 6.0]);
    g.bench_function("poly_power/6", |b| b.iter(|| poly_power_coefficients(black_box(&base), 6)));
    g.finish();
}

fn selection_schemes(c: &mut Criterion) {
    let mut g = c.benchmark_group("selection");
    for (name, cfg) in [("3users", SystemConfig::three_user(1.0, 2)), ("5users", SystemConfig::five_user(1.0, 2))] {
        let mats = gain_matrices(&cfg, 1024);
        g.throughput(Throughput::Elements(mats.len() as u64));
        for scheme in Scheme::ALL {
            g.bench_function(BenchmarkId::new(scheme.name(), name), |b| {
                let mut scratch = selection::SelectionScratch::new();
                b.iter(|| mats.iter().map(|m| selection::select_into(scheme, m, &mut scratch)).sum::<usize>())
            });
        }
    }
    g.finish();
}

fn analytic_outage(c: &mut Criterion) {
    let cfg = SystemConfig::three_user(1.0, 2);
    let model = AnalyticModel::new(&cfg, &ImpairmentState::ideal(&cfg), ZetaSet::Published).unwrap();
    let grid = snr_grid();
    c.bench_function("analytic/outage_exact_grid", |b| {
        b.iter(|| grid.iter().map(|&g| (0..3).map(|u| model.outage_exact(u, g).unwrap()).sum::<f64>()).sum::<f64>())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let cfg = SystemConfig::three_user(1.0, 1);
    let imp = ImpairmentState::ideal(&cfg);
    let grid = [1e3];
    let trials = 100_000;
    let mut g = c.benchmark_group("mc");
    g.sample_size(10);
    g.throughput(Throughput::Elements(trials));
    for scheme in Scheme::ALL {
        g.bench_function(BenchmarkId::new("run_outage_mc", scheme.name()), |b| {
            b.iter(|| run_outage_mc(&cfg, &imp, scheme, &grid, McSettings::new(trials, 1)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, special_functions, selection_schemes, analytic_outage, monte_carlo);
criterion_main!(benches);
