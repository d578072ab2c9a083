use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use orbitlets_core::bapu::QuadSpec;
use orbitlets_core::decomp::grid::FrequencyGrid;
use orbitlets_core::decomp::signal::{BandlimitedSignal, SignalFamily};
use orbitlets_core::group::{ChartKind, GroupChart};
use orbitlets_core::linalg::Vec2;
use orbitlets_core::par;
use orbitlets_core::transform::{coorbit_norm, GroupGrid, SliceSpec};
use orbitlets_core::weights::WeightSpec;
use orbitlets_core::window::default_window;

fn signal(chart: &GroupChart) -> BandlimitedSignal {
    let fam = SignalFamily { dim: 2, anchors: vec![Vec2::new(1.5, 0.5)], jitter: 0.3, radius: (0.4, 0.6), max_shift: 1.0 };
    fam.generate(1, 7, chart).remove(0)
}

fn modes(c: &mut Criterion) {
    let chart = GroupChart::new(ChartKind::Similitude2d);
    let w = default_window(&chart);
    let f = signal(&chart);
    let grid = FrequencyGrid::centered(2, 512, 3.0, Vec2::new(1.5, 0.5)).unwrap();
    let group = GroupGrid::support_driven(&f, &w, &chart, QuadSpec::with_nodes(16), false).unwrap();

    let mut fft = c.benchmark_group("sample_and_fft_512");
    for parallel in [false, true] {
        fft.bench_with_input(BenchmarkId::from_parameter(if parallel { "parallel" } else { "sequential" }), &parallel, |b, &p| {
            par::set_parallel(p);
            b.iter(|| f.sample(&grid).to_spatial());
        });
    }
    fft.finish();

    let mut co = c.benchmark_group("coorbit_norm_similitude");
    co.sample_size(10);
    for parallel in [false, true] {
        co.bench_with_input(BenchmarkId::from_parameter(if parallel { "parallel" } else { "sequential" }), &parallel, |b, &p| {
            par::set_parallel(p);
            b.iter(|| coorbit_norm(&f, &w, &group, &WeightSpec::one(), 1.0, 2.0, &SliceSpec::default()).unwrap());
        });
    }
    co.finish();
    par::set_parallel(true);
}

criterion_group!(benches, modes);
criterion_main!(benches);
