use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use qperp_core::qcalc::{q_gamma, qpochhammer_inf};
use qperp_core::{MellinForm, PerpetuityLaw, QParams, SeriesTolerance};

fn qcalc(c: &mut Criterion) {
    let tol = SeriesTolerance::default();
    for q in [0.5, 0.95] {
        c.bench_function(&format!("qpochhammer_inf q={q}"), |b| {
            b.iter(|| qpochhammer_inf(black_box(Complex64::new(0.3, 0.2)), q, &tol))
        });
        c.bench_function(&format!("q_gamma q={q}"), |b| b.iter(|| q_gamma(black_box(2.5), q, &tol)));
    }
}

fn perpetuity(c: &mut Criterion) {
    let law = PerpetuityLaw::new(QParams::new(0.8, 1.5).unwrap(), SeriesTolerance::default()).unwrap();
    let s = Complex64::new(0.7, 1.0);
    c.bench_function("mellin pochhammer form", |b| b.iter(|| law.mellin(black_box(s), MellinForm::Pochhammer)));
    c.bench_function("mellin q-gamma form", |b| b.iter(|| law.mellin(black_box(s), MellinForm::QGamma)));
    c.bench_function("density", |b| b.iter(|| law.density(black_box(2.0))));
    c.bench_function("cdf", |b| b.iter(|| law.cdf(black_box(2.0))));
}

criterion_group!(benches, qcalc, perpetuity);
criterion_main!(benches);
