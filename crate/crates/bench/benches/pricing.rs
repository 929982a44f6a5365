use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cryptoyield::amm::{ratio, Pool};
use cryptoyield::kelly_weights;
use cryptoyield::lending::{margrabe_exchange_value, one_touch_value, LoanTerms, OneTouch};
use cryptoyield::oracle::{first_passage_value, price_payoff, GbmSpec, Monitoring};

fn terms() -> LoanTerms {
    LoanTerms {
        collateral: 150.0,
        repayment: 100.0,
        sigma_alpha: 0.8,
        sigma_beta: 0.05,
        rho: 0.1,
        r_alpha: 0.01,
        r_beta: 0.03,
        maturity: 1.0,
    }
}

fn closed_forms(c: &mut Criterion) {
    let t = terms();
    c.bench_function("margrabe", |b| b.iter(|| margrabe_exchange_value(black_box(&t))));
    let touch = OneTouch { spot: 1.5, barrier: 1.2, payout: 1.0, sigma: 0.8, drift: 0.02, rate: 0.03, maturity: 1.0 };
    c.bench_function("one_touch", |b| b.iter(|| one_touch_value(black_box(&touch))));
    let cov = vec![vec![0.64, 0.2, 0.1], vec![0.2, 0.36, 0.05], vec![0.1, 0.05, 0.09]];
    c.bench_function("kelly_3", |b| b.iter(|| kelly_weights(black_box(&[0.3, 0.2, 0.1]), 0.04, &cov)));
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    let spec = GbmSpec {
        s0_a: 150.0,
        s0_b: 100.0,
        sigma_a: 0.8,
        sigma_b: 0.05,
        rho: 0.1,
        drift_a: -0.01,
        drift_b: -0.03,
        maturity: 1.0,
        steps: 1,
        paths: 100_000,
        seed: 1,
        antithetic: true,
    };
    g.bench_function("exchange_1e5", |b| b.iter(|| price_payoff(&spec, |a, b| (a - b).max(0.0), 0.0)));
    let single = GbmSpec::single(1.5, 0.8, 0.02, 1.0, 250, 10_000, 1);
    g.bench_function("first_passage_bridge_1e4x250", |b| {
        b.iter(|| first_passage_value(&single, 1.2, 1.0, 0.03, Monitoring::BrownianBridge))
    });
    g.finish();
}

fn swaps(c: &mut Criterion) {
    c.bench_function("swap_f64", |b| {
        let mut pool = Pool::create(1e6, 1e6, 0.003).unwrap();
        b.iter(|| {
            let r = pool.swap_x_for_y(black_box(10.0)).unwrap();
            pool.swap_y_for_x(r.amount_out).unwrap();
        })
    });
    c.bench_function("swap_exact_10", |b| {
        b.iter(|| {
            let mut pool = Pool::create(ratio(1000, 1), ratio(1000, 1), ratio(3, 1000)).unwrap();
            for i in 1..=10 {
                pool.swap_x_for_y(ratio(i, 7)).unwrap();
            }
            pool
        })
    });
}

criterion_group!(benches, closed_forms, monte_carlo, swaps);
criterion_main!(benches);
