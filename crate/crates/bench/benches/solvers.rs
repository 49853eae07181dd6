use criterion::{criterion_group, criterion_main};

criterion_group!(
    benches,
    hjsing_bench::fundamental,
    hjsing_bench::convolution,
    hjsing_bench::long_running
);
criterion_main!(benches);
