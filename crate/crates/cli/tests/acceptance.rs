//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 9`.

use std::collections::BTreeMap;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::NaiveDate;
use cryptoyield::amm::{ratio, Pool, SwapDirection};
use cryptoyield::lending::{loan_values, margrabe_exchange_value, one_touch_value, LoanTerms, OneTouch};
use cryptoyield::optrates::{chain_rates, daily_series, OptionQuote};
use cryptoyield::oracle::{first_passage_value, price_payoff, GbmSpec, Monitoring};
use cryptoyield::perps::{bitmex_funding, deribit_funding};
use cryptoyield::series::{Compounding, RateConvention};
use cryptoyield::staking::{
    daily_return, percentile_bands, slash_cost, BalanceSnapshot, StateInterval, ValidatorRecord, ValidatorState,
};
use cryptoyield::xccy::{
    exact_decimal, max_leverage, Account, LegRate, LegSpec, Party, Period, Swap, SwapAgreement, SwapState,
    ThresholdBase, Token, Wallets,
};
use cryptoyield::{impermanent_loss_relative, kelly_weights, lp_longrun_yield, sharpe_ratio, ReturnStats};
use num::rational::BigRational;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 20_240_601;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

// Loan grid: ratio A/B, combined vol, correlation. Legs share a vol chosen
// so that the ratio's vol is the grid value.
fn loan_grid() -> Vec<LoanTerms> {
    let mut out = Vec::new();
    for ratio in [0.5, 1.0, 2.0] {
        for sigma in [0.2, 0.8, 1.5] {
            for rho in [-0.5f64, 0.0, 0.5] {
                let leg = sigma / (2.0 * (1.0 - rho)).sqrt();
                out.push(LoanTerms {
                    collateral: 100.0 * ratio,
                    repayment: 100.0,
                    sigma_alpha: leg,
                    sigma_beta: leg,
                    rho,
                    r_alpha: 0.01,
                    r_beta: 0.03,
                    maturity: 1.0,
                });
            }
        }
    }
    out
}

fn c1_margrabe_vs_mc() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut bad = Vec::new();
    for t in loan_grid() {
        let closed = margrabe_exchange_value(&t).map_err(|e| e.to_string())?;
        let spec = GbmSpec {
            s0_a: t.collateral,
            s0_b: t.repayment,
            sigma_a: t.sigma_alpha,
            sigma_b: t.sigma_beta,
            rho: t.rho,
            drift_a: -t.r_alpha,
            drift_b: -t.r_beta,
            maturity: t.maturity,
            steps: 1,
            paths: 1_000_000,
            seed: SEED,
            antithetic: true,
        };
        let est = price_payoff(&spec, |a, b| (a - b).max(0.0), 0.0).map_err(|e| e.to_string())?;
        let z = est.z_score(closed);
        let label = format!("A/B={} sigma={:.1} rho={}", t.collateral_ratio(), t.combined_vol(), t.rho);
        if z.abs() >= 3.0 {
            bad.push(format!("{label}: closed {closed:.6} mc {:.6} z {z:.2}", est.mean));
        }
        if z.abs() > worst.0.abs() {
            worst = (z, label);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(bad.is_empty(), || bad.join("; "))?;
    ensure(secs < 120.0, || format!("took {secs:.1}s"))?;
    Ok(format!("27 sets at 1e6 paths, worst z {:.2} ({}), {secs:.1}s", worst.0, worst.1))
}

fn c2_parity() -> Outcome {
    let mut worst = 0.0f64;
    for t in loan_grid() {
        let v = loan_values(&t).map_err(|e| e.to_string())?;
        let gap = (v.borrower_value + v.lender_value - t.discounted_collateral() - t.discounted_repayment()).abs();
        worst = worst.max(gap);
    }
    ensure(worst <= 1e-12, || format!("max gap {worst:e}"))?;
    Ok(format!("27 sets, max |borrower + lender - (fa + fb)| = {worst:e}"))
}

fn touch_spec(t: &OneTouch, steps: u32, paths: u64, seed: u64) -> GbmSpec {
    GbmSpec::single(t.spot, t.sigma, t.drift, t.maturity, steps, paths, seed)
}

fn c3_one_touch() -> Outcome {
    let sets = [
        OneTouch { spot: 1.5, barrier: 1.2, payout: 1.0, sigma: 0.8, drift: 0.02, rate: 0.03, maturity: 1.0 },
        OneTouch { spot: 100.0, barrier: 90.0, payout: 10.0, sigma: 0.3, drift: 0.05, rate: 0.05, maturity: 0.5 },
        OneTouch { spot: 1.0, barrier: 0.5, payout: 1.0, sigma: 1.2, drift: -0.02, rate: 0.01, maturity: 2.0 },
        OneTouch { spot: 2.0, barrier: 1.9, payout: 1.0, sigma: 0.2, drift: 0.0, rate: 0.0, maturity: 0.25 },
        OneTouch { spot: 1.3, barrier: 1.0, payout: 0.15, sigma: 0.6, drift: 0.1, rate: 0.08, maturity: 3.0 },
    ];
    let mut zs = Vec::new();
    for (i, t) in sets.iter().enumerate() {
        let closed = one_touch_value(t).map_err(|e| e.to_string())?;
        let est = first_passage_value(
            &touch_spec(t, 1000, 100_000, SEED + i as u64),
            t.barrier,
            t.payout,
            t.rate,
            Monitoring::BrownianBridge,
        )
        .map_err(|e| e.to_string())?;
        let z = est.z_score(closed);
        ensure(z.abs() < 3.0, || format!("set {}: closed {closed:.6} mc {:.6} z {z:.2}", i + 1, est.mean))?;
        zs.push(format!("{z:.2}"));
    }

    // Discrete monitoring misses crossings between grid points, so it
    // undervalues the claim; the gap should shrink as the grid refines.
    let t = &sets[0];
    let closed = one_touch_value(t).map_err(|e| e.to_string())?;
    let mut biases = Vec::new();
    for steps in [10u32, 20, 40, 80, 160, 320] {
        let est = first_passage_value(
            &touch_spec(t, steps, 400_000, SEED),
            t.barrier,
            t.payout,
            t.rate,
            Monitoring::Discrete,
        )
        .map_err(|e| e.to_string())?;
        biases.push((steps, est.mean - closed, est.std_error));
    }
    let monotone = biases.windows(2).all(|w| w[1].1.abs() < w[0].1.abs());
    let study = biases.iter().map(|(n, b, _)| format!("{n}:{b:+.4}")).collect::<Vec<_>>().join(" ");
    ensure(monotone, || format!("discrete bias not monotone: {study}"))?;
    Ok(format!("bridge z [{}]; discrete bias {study}", zs.join(", ")))
}

fn r(v: i64) -> BigRational {
    ratio(v, 1)
}

fn c4_cpmm() -> Outcome {
    let mut rng = rng(4);
    let mut swaps = 0u64;
    for seq in 0..100_000u32 {
        // Perfect-square product so the genesis shares are exact too.
        let a = rng.random_range(1..60i64);
        let b = rng.random_range(1..60i64);
        let mut pool = Pool::create(r(a * a * 10), r(b * b * 10), ratio(rng.random_range(0..10), 1000))
            .map_err(|e| e.to_string())?;
        let mut positions: Vec<BigRational> = vec![pool.total_shares().clone()];
        let fail = |what: &str| format!("sequence {seq}: {what}");
        for _ in 0..rng.random_range(3..8) {
            let k = pool.product();
            let per_share = &k / (pool.total_shares() * pool.total_shares());
            match rng.random_range(0..4) {
                0 | 1 => {
                    let dir = if rng.random_bool(0.5) { SwapDirection::XForY } else { SwapDirection::YForX };
                    let amt = ratio(rng.random_range(1..2000), rng.random_range(1..20));
                    let rec = pool.swap(dir, amt).map_err(|e| fail(&e.to_string()))?;
                    swaps += 1;
                    ensure(pool.product() >= k, || fail("product fell on a swap"))?;
                    ensure(rec.amount_out > BigRational::zero(), || fail("empty output"))?;
                }
                2 => {
                    let dx = ratio(rng.random_range(1..500), rng.random_range(1..10));
                    let dy = &dx * pool.reserve_y() / pool.reserve_x();
                    let minted = pool.add_liquidity(dx, dy).map_err(|e| fail(&e.to_string()))?;
                    positions.push(minted);
                }
                _ => {
                    let i = rng.random_range(0..positions.len());
                    let burn = &positions[i] * ratio(rng.random_range(1..4), 4);
                    if burn < pool.total_shares().clone() {
                        pool.remove_liquidity(burn.clone()).map_err(|e| fail(&e.to_string()))?;
                        positions[i] -= burn;
                    }
                }
            }
            let after = pool.product() / (pool.total_shares() * pool.total_shares());
            ensure(after >= per_share, || fail("product per share squared fell"))?;
            let held = positions.iter().fold(BigRational::zero(), |acc, s| acc + s);
            ensure(&held == pool.total_shares(), || fail("shares not conserved"))?;
        }
        // Add then remove at once returns the deposit and the prior state.
        let before = pool.clone();
        let dx = ratio(rng.random_range(1..500), rng.random_range(1..10));
        let dy = &dx * pool.reserve_y() / pool.reserve_x();
        let minted = pool.add_liquidity(dx.clone(), dy.clone()).map_err(|e| fail(&e.to_string()))?;
        let (ox, oy) = pool.remove_liquidity(minted).map_err(|e| fail(&e.to_string()))?;
        ensure(ox == dx && oy == dy, || fail("round trip lost value"))?;
        ensure(
            pool.reserve_x() == before.reserve_x()
                && pool.reserve_y() == before.reserve_y()
                && pool.total_shares() == before.total_shares(),
            || fail("round trip changed the pool"),
        )?;
    }

    let mut pool = Pool::create(1000.0, 1000.0, 0.003).map_err(|e| e.to_string())?;
    let out = pool.swap_x_for_y(100.0).map_err(|e| e.to_string())?.amount_out;
    let expected = 1000.0 * 99.7 / 1099.7;
    ensure((out - expected).abs() < 1e-9, || format!("worked swap gave {out}"))?;
    ensure((out - 90.6611).abs() < 1e-4, || format!("worked swap gave {out}"))?;
    Ok(format!("1e5 exact sequences ({swaps} swaps), 0 violations; worked swap {out:.10}"))
}

fn c5_impermanent_loss() -> Outcome {
    let il2 = impermanent_loss_relative(2.0).map_err(|e| e.to_string())?;
    let exact = 2.0 * 2f64.sqrt() / 3.0 - 1.0;
    ensure((il2 - exact).abs() <= 1e-12, || format!("IL(2) = {il2}"))?;
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ratio = 10f64.powf(rng.random_range(-2.0..2.0));
        let mut pool = Pool::create(1000.0, 1000.0, 0.0).map_err(|e| e.to_string())?;
        pool.arbitrage_to_price(ratio).map_err(|e| e.to_string())?;
        let lp = pool.reserve_x() * ratio + pool.reserve_y();
        let hold = 1000.0 * ratio + 1000.0;
        let direct = lp / hold - 1.0;
        let formula = impermanent_loss_relative(ratio).map_err(|e| e.to_string())?;
        worst = worst.max((direct - formula).abs());
    }
    ensure(worst <= 1e-12, || format!("max gap {worst:e}"))?;
    Ok(format!("IL(2) = {il2:.15}; 100 re-priced pools, max gap {worst:e}"))
}

fn c6_funding() -> Outcome {
    let mut rng = rng(6);
    for _ in 0..10_000 {
        let p = rng.random_range(-0.0005..=0.0005);
        let f = deribit_funding(p);
        ensure(f == 0.0, || format!("deribit({p}) = {f}"))?;
    }
    for p in [0.0005, -0.0005, 0.0, -0.0] {
        ensure(deribit_funding(p) == 0.0, || format!("deribit({p}) nonzero"))?;
    }
    let band = 0.0005;
    let mut inside = 0;
    let mut worst_excess = 0.0f64;
    for _ in 0..10_000 {
        let p = rng.random_range(-0.01..0.01);
        let i = rng.random_range(-0.001..0.001);
        let f = bitmex_funding(p, i, band);
        if (i - p).abs() <= band {
            inside += 1;
            ensure(f == i, || format!("bitmex({p}, {i}) = {f}, not I"))?;
        }
        // P + band is rounded once, so allow a couple of ulps of the operands.
        let slack = 4.0 * f64::EPSILON * p.abs().max(band);
        let excess = (f - p).abs() - band;
        worst_excess = worst_excess.max(excess);
        ensure(excess <= slack, || format!("|F - P| = {} above band", (f - p).abs()))?;
    }
    Ok(format!("1e4 deadband samples all 0; bitmex 1e4 samples ({inside} inside band), max excess {worst_excess:e}"))
}

fn c7_implied_rates() -> Outcome {
    let conv = RateConvention::new(365.0, Compounding::Continuous).map_err(|e| e.to_string())?;
    let t0 = 1_704_067_200i64; // 2024-01-01
    let mut worst = 0.0f64;
    let mut count = 0;
    for r_star in [-0.02, 0.0, 0.05, 0.25] {
        let mut quotes = Vec::new();
        for day in 0..5i64 {
            let q = t0 + day * 86_400 + 8 * 3_600;
            let s = 40_000.0 * (1.0 + 0.01 * day as f64);
            for days in [1i64, 7, 30, 90, 365] {
                let tau = days as f64 / 365.0;
                let b = (-r_star * tau).exp();
                for k in [0.5, 0.8, 1.0, 1.25, 2.0] {
                    let k = (k * s / 100.0).round() * 100.0;
                    let call = (s - k * b).max(0.0) + 0.05 * s * tau.sqrt();
                    quotes.push(OptionQuote {
                        quote_time: q,
                        expiry: q + days * 86_400,
                        strike: k,
                        call,
                        put: call - s + k * b,
                        underlying: s,
                    });
                }
            }
        }
        let chain = chain_rates(&quotes, &conv);
        ensure(chain.rejected.is_empty(), || format!("r*={r_star}: {} quotes rejected", chain.rejected.len()))?;
        for p in &chain.points {
            worst = worst.max((p.rate - r_star).abs());
            count += 1;
        }
        for d in daily_series(&chain) {
            ensure((d.mean_rate - r_star).abs() <= 1e-9, || format!("r*={r_star}: {} mean {}", d.day, d.mean_rate))?;
        }
    }
    ensure(worst <= 1e-9, || format!("max error {worst:e}"))?;
    Ok(format!("{count} quotes over 4 rates, max error {worst:e}, daily means exact to 1e-9"))
}

const HOUR: i64 = 3_600;
const DAY: i64 = 86_400;

struct Synthetic {
    record: ValidatorRecord,
    balances: Vec<BalanceSnapshot>,
    states: Vec<StateInterval>,
}

fn synthetic_validator(rng: &mut ChaCha8Rng, id: usize, t0: i64) -> Synthetic {
    let mut balances = Vec::new();
    let mut level = rng.random_range(31.5..34.0);
    for h in 0..=48 {
        let ts = t0 + h * HOUR;
        let at_midnight = h % 24 == 0;
        // Midnight snapshots are usually present; intraday ones are sparse.
        let keep = if at_midnight { rng.random_bool(0.95) } else { rng.random_bool(0.05) };
        level += rng.random_range(-0.002..0.003);
        if rng.random_bool(0.01) {
            level -= 1.0;
        }
        if keep {
            balances.push(BalanceSnapshot { timestamp: ts, balance: level });
        }
    }
    // Timeline cut at random hours; each piece is Active, Other or missing.
    let mut cuts: Vec<i64> = (0..rng.random_range(0..4)).map(|_| rng.random_range(1..48)).collect();
    cuts.push(0);
    cuts.push(48);
    cuts.sort_unstable();
    cuts.dedup();
    let mut states = Vec::new();
    for w in cuts.windows(2) {
        let roll = rng.random_range(0..10);
        let state = match roll {
            0 => ValidatorState::Other,
            1 => continue,
            _ => ValidatorState::Active,
        };
        states.push(StateInterval { from: t0 + w[0] * HOUR, to: t0 + w[1] * HOUR, state });
    }
    let record = ValidatorRecord::new(format!("v{id}"), balances.clone(), states.clone()).expect("valid record");
    Synthetic { record, balances, states }
}

// Independent check on a half-hour grid: every grid point of the closed day
// lies in an Active interval, no Other interval contains an interior point,
// and every snapshot in the day holds the minimum balance.
fn brute_force_return(v: &Synthetic, t: i64) -> Option<f64> {
    let at = |ts: i64| v.balances.iter().find(|b| b.timestamp == ts).map(|b| b.balance);
    let (prev, cur) = (at(t - DAY)?, at(t)?);
    for k in 0..=48 {
        let p = t - DAY + k * HOUR / 2;
        let active = v.states.iter().any(|s| s.state == ValidatorState::Active && s.from <= p && p <= s.to);
        if !active {
            return None;
        }
        let interior = p > t - DAY && p < t;
        if interior && v.states.iter().any(|s| s.state == ValidatorState::Other && s.from < p && p < s.to) {
            return None;
        }
    }
    if v.balances.iter().any(|b| b.timestamp >= t - DAY && b.timestamp <= t && b.balance < 32.0) {
        return None;
    }
    Some(365.0 * (cur / prev - 1.0))
}

fn c8_staking() -> Outcome {
    let s = slash_cost(100.0 / 3.0).map_err(|e| e.to_string())?;
    ensure(s == 100.0, || format!("slash_cost(33.3..) = {s}"))?;
    let t0 = 1_704_067_200i64;
    let mut rng = rng(8);
    let validators: Vec<Synthetic> = (0..1000).map(|i| synthetic_validator(&mut rng, i, t0)).collect();
    let mut eligible = 0;
    for v in &validators {
        for t in [t0 + DAY, t0 + 2 * DAY] {
            let day = chrono::DateTime::from_timestamp(t, 0).unwrap().date_naive();
            let got = daily_return(&v.record, day).ok().map(|r| r.annualized_return);
            let want = brute_force_return(v, t);
            ensure(got == want, || format!("{} on {day}: got {got:?}, oracle {want:?}", v.record.id()))?;
            eligible += usize::from(got.is_some());
        }
    }
    let records: Vec<ValidatorRecord> = validators.into_iter().map(|v| v.record).collect();
    let levels = [1.0, 5.0, 25.0, 50.0, 75.0, 95.0, 99.0];
    for day in [NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(), NaiveDate::from_ymd_opt(2024, 1, 3).unwrap()] {
        let bands = percentile_bands(&records, day, &levels).map_err(|e| e.to_string())?;
        ensure(bands.bands.windows(2).all(|w| w[0].1 <= w[1].1), || format!("bands not monotone on {day}"))?;
    }
    Ok(format!("slash_cost(100/3) = 100; 2000 validator-days match the oracle ({eligible} eligible); bands monotone"))
}

fn party_value(swap: &Swap, p: Party, rate: &BigRational) -> BigRational {
    let l = swap.ledger();
    l.balance(Account::Wallet(p), Token::Alpha) * rate + l.balance(Account::Wallet(p), Token::Beta)
}

fn random_agreement(rng: &mut ChaCha8Rng) -> SwapAgreement {
    let notional_a = rng.random_range(10..1000i64);
    let cents = rng.random_range(50..200i64);
    let margin = |n: f64, rng: &mut ChaCha8Rng| (n * rng.random_range(0.02..0.3) * 100.0).round().max(1.0) / 100.0;
    let notional_b = (notional_a * cents) as f64 / 100.0;
    SwapAgreement {
        notional_a: notional_a as f64,
        notional_b,
        initial_rate: cents as f64 / 100.0,
        final_rate: None,
        margin_a: margin(notional_a as f64, rng),
        margin_b: margin(notional_b, rng),
        threshold: [0.25, 0.5, 0.75][rng.random_range(0..3)],
        threshold_base: ThresholdBase::InitialMargin,
        termination_fee: rng.random_range(0..100) as f64 / 100.0,
        min_margin_fraction: 0.0,
        start: 0,
        maturity: 100 * DAY,
        leg_a: LegSpec { rate: LegRate::Fixed { fixed: rng.random_range(0..80) as f64 / 1000.0 }, spread: 0.0 },
        leg_b: LegSpec { rate: LegRate::Floating { index: "ref".into() }, spread: 0.001 },
    }
}

#[derive(Default)]
struct Flows {
    // Per party, valued later at the settlement rate: token amounts received
    // net of paid, for interest legs and fees.
    alpha: [BigRational; 2],
    beta: [BigRational; 2],
    posted: [BigRational; 2],
}

fn idx(p: Party) -> usize {
    match p {
        Party::A => 0,
        Party::B => 1,
    }
}

fn credit(flows: &mut Flows, p: Party, token: Token, amount: &BigRational) {
    let slot = match token {
        Token::Alpha => &mut flows.alpha,
        Token::Beta => &mut flows.beta,
    };
    slot[idx(p)] += amount;
    slot[idx(p.other())] -= amount;
}

fn fuzz_one(rng: &mut ChaCha8Rng, run: u32, stats: &mut BTreeMap<&'static str, usize>) -> Result<(), String> {
    let fail = |m: String| format!("run {run}: {m}");
    let terms = random_agreement(rng);
    let big = 100.0 * (terms.notional_a + terms.notional_b) + 1000.0;
    let wallets = Wallets { a_alpha: big, a_beta: big, b_alpha: big, b_beta: big };
    let total = exact_decimal(big).unwrap() * ratio(2, 1);
    let mut swap = Swap::new(terms.clone(), &wallets).map_err(|e| fail(e.to_string()))?;
    let initial =
        [(Party::A, Token::Alpha), (Party::A, Token::Beta), (Party::B, Token::Alpha), (Party::B, Token::Beta)]
            .map(|(p, t)| swap.ledger().balance(Account::Wallet(p), t));
    swap.initiate(0).map_err(|e| fail(e.to_string()))?;
    let mut flows = Flows {
        posted: [exact_decimal(terms.margin_a).unwrap(), exact_decimal(terms.margin_b).unwrap()],
        ..Flows::default()
    };
    let mut time = 0i64;
    let mut x = terms.initial_rate;
    let check = |swap: &Swap| -> Result<(), String> {
        for t in [Token::Alpha, Token::Beta] {
            ensure(swap.ledger().total(t) == total, || fail(format!("{t:?} not conserved")))?;
        }
        ensure(swap.ledger().balances().all(|(_, _, v)| *v >= BigRational::zero()), || fail("negative balance".into()))
    };
    for _ in 0..rng.random_range(1..40) {
        time += rng.random_range(1..3 * HOUR);
        let roll = rng.random_range(0..100);
        if roll < 70 {
            let shock = if rng.random_bool(0.03) { rng.random_range(-0.4..0.4) } else { rng.random_range(-0.03..0.03) };
            x = ((x * f64::exp(shock)) * 10_000.0).round().max(1.0) / 10_000.0;
            let mut tops = Vec::new();
            if rng.random_bool(0.1) {
                let p = if rng.random_bool(0.5) { Party::A } else { Party::B };
                let amt = rng.random_range(1..500) as f64 / 100.0;
                flows.posted[idx(p)] += exact_decimal(amt).unwrap();
                tops.push((p, amt));
            }
            swap.on_tick(time, x, &tops).map_err(|e| fail(e.to_string()))?;
        } else if roll < 78 {
            let p = if rng.random_bool(0.5) { Party::A } else { Party::B };
            let amt = rng.random_range(1..500) as f64 / 100.0;
            swap.replenish(time, p, amt).map_err(|e| fail(e.to_string()))?;
            flows.posted[idx(p)] += exact_decimal(amt).unwrap();
        } else if roll < 95 {
            let period = Period {
                days: rng.random_range(1..60),
                fixings: [("ref".to_string(), rng.random_range(-20..90) as f64 / 1000.0)].into(),
            };
            for f in swap.accrue_legs(time, &period).map_err(|e| fail(e.to_string()))? {
                credit(&mut flows, f.payer.other(), f.token, &f.amount);
            }
        } else {
            let p = if rng.random_bool(0.5) { Party::A } else { Party::B };
            let s = swap.voluntary_terminate(time, p).map_err(|e| fail(e.to_string()))?;
            credit(&mut flows, p.other(), p.home_token(), &s.fee);
        }
        check(&swap)?;
        if swap.state().is_terminal() {
            break;
        }
    }
    if !swap.state().is_terminal() {
        swap.mature(terms.maturity.max(time)).map_err(|e| fail(e.to_string()))?;
        check(&swap)?;
    }

    let s = swap.settlement().cloned().ok_or_else(|| fail("no settlement".into()))?;
    let rate = s.rate.clone();
    for t in [Token::Alpha, Token::Beta] {
        ensure(swap.ledger().balance(Account::Contract, t).is_zero(), || fail("margin left in contract".into()))?;
    }
    ensure(&s.transferred + &s.shortfall == s.exposure, || fail("transferred + shortfall != exposure".into()))?;
    ensure(s.shortfall >= BigRational::zero(), || fail("negative shortfall".into()))?;
    if let Some(payer) = s.payer {
        ensure(s.transferred <= flows.posted[idx(payer)], || fail("payer lost more than its margin".into()))?;
    }

    // Each party's value change at the settlement rate, net of interest legs
    // and fees, is the uncollateralized part: the payer keeps it, the
    // counterparty misses it. Zero shortfall means made whole.
    let shortfall_value = match s.payer {
        Some(Party::A) => &s.shortfall * &rate,
        _ => s.shortfall.clone(),
    };
    for p in [Party::A, Party::B] {
        let start = &initial[2 * idx(p)] * &rate + &initial[2 * idx(p) + 1];
        let delta = party_value(&swap, p, &rate) - start;
        let external = &flows.alpha[idx(p)] * &rate + &flows.beta[idx(p)];
        let expected = match s.payer {
            Some(q) if q == p => shortfall_value.clone(),
            Some(_) => -shortfall_value.clone(),
            None => BigRational::zero(),
        };
        ensure(delta - external == expected, || {
            fail(format!("party {p:?} value identity off in state {}", swap.state()))
        })?;
    }

    let key = match swap.state() {
        SwapState::TerminatedBreach(_) if s.shortfall.is_zero() => "breach_made_whole",
        SwapState::TerminatedBreach(_) => "breach_with_shortfall",
        SwapState::TerminatedVoluntary(_) => "voluntary",
        SwapState::Matured => "matured",
        _ => return Err(fail("swap did not end".into())),
    };
    *stats.entry(key).or_default() += 1;

    // An ended swap accepts nothing further and stays untouched.
    let frozen = swap.clone();
    ensure(swap.on_tick(time + 1, x, &[]).is_err(), || fail("tick after end accepted".into()))?;
    ensure(swap.replenish(time + 1, Party::A, 1.0).is_err(), || fail("replenish after end accepted".into()))?;
    ensure(swap.voluntary_terminate(time + 1, Party::B).is_err(), || fail("terminate after end accepted".into()))?;
    ensure(swap.mature(terms.maturity + time).is_err(), || fail("mature after end accepted".into()))?;
    ensure(swap == frozen, || fail("rejected operation changed the swap".into()))
}

fn c9_xccy() -> Outcome {
    let mut rng = rng(9);
    let mut stats = BTreeMap::new();
    for run in 0..10_000 {
        fuzz_one(&mut rng, run, &mut stats)?;
    }
    ensure(stats.get("breach_made_whole").copied().unwrap_or(0) > 0, || "no covered breach exercised".into())?;
    let b = max_leverage(0.05, 50).map_err(|e| e.to_string())?;
    ensure(b.supremum == 20.0, || format!("supremum {}", b.supremum))?;
    for n in [1, 2, 10, 50, 1000, 100_000] {
        let a = max_leverage(0.05, n).map_err(|e| e.to_string())?.achievable;
        ensure(a < 20.0, || format!("chain {n} reached {a}"))?;
    }
    let mix = stats.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    Ok(format!("1e4 lifecycles conserve exactly ({mix}); leverage sup 20, chain-50 {:.6}", b.achievable))
}

fn c10_longrun() -> Outcome {
    let (alpha, sigma, eps) = (0.1, 0.8f64, 1e-3);
    // |value - alpha| = sigma / sqrt(T) < eps once T > (sigma / eps)^2.
    let t_min = (sigma / eps).powi(2);
    let v = lp_longrun_yield(alpha, sigma, 1e6).map_err(|e| e.to_string())?;
    ensure((v - alpha).abs() < eps, || format!("T=1e6 gives {v}"))?;
    let w = lp_longrun_yield(alpha, sigma, 2.0 * t_min).map_err(|e| e.to_string())?;
    ensure((w - alpha).abs() < eps, || format!("T={} gives {w}", 2.0 * t_min))?;
    Ok(format!("T=1e6 deviation {:.1e}; analytic horizon {t_min:.0}", (v - alpha).abs()))
}

fn c11_kelly() -> Outcome {
    let w = kelly_weights(&[0.1], 0.0, &[vec![0.04]]).map_err(|e| e.to_string())?;
    ensure(w[0] == 0.1 / 0.04, || format!("single-asset weight {}", w[0]))?;
    let sr =
        sharpe_ratio(&ReturnStats::new(0.10, 0.20, 1.0).map_err(|e| e.to_string())?, 0.0).map_err(|e| e.to_string())?;
    ensure((sr - 0.5).abs() < 1e-15, || format!("sharpe {sr}"))?;

    let mut rng = rng(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..6);
        let f: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-0.3..0.3)).collect()).collect();
        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| f[i][k] * f[j][k]).sum::<f64>() + if i == j { 0.02 } else { 0.0 })
                    .collect()
            })
            .collect();
        let rf = rng.random_range(0.0..0.05);
        let m1: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.5)).collect();
        let m2: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.5)).collect();
        let c = rng.random_range(-3.0..3.0);
        // Excess returns enter linearly: w(a e1 + e2) = a w(e1) + w(e2).
        let combo: Vec<f64> = (0..n).map(|i| c * (m1[i] - rf) + (m2[i] - rf) + rf).collect();
        let w1 = kelly_weights(&m1, rf, &cov).map_err(|e| e.to_string())?;
        let w2 = kelly_weights(&m2, rf, &cov).map_err(|e| e.to_string())?;
        let wc = kelly_weights(&combo, rf, &cov).map_err(|e| e.to_string())?;
        let scale = w1.iter().chain(&w2).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            worst = worst.max((wc[i] - c * w1[i] - w2[i]).abs() / scale);
        }
    }
    ensure(worst <= 1e-12, || format!("linearity gap {worst:e}"))?;
    Ok(format!("w = mu/sigma^2 exactly; sharpe {sr}; linearity gap {worst:e} over 1000 systems"))
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn c12_replay() -> Outcome {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo");
    let mut configs: Vec<PathBuf> = std::fs::read_dir(&demo)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["first", "second"] {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_cryptoyield"))
            .arg("run")
            .arg("--out")
            .arg(&out)
            .args(&configs)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        trees.push(out);
    }
    let (a, b) = (files(&trees[0]), files(&trees[1]));
    let rel =
        |root: &Path, v: &[PathBuf]| v.iter().map(|p| p.strip_prefix(root).unwrap().to_path_buf()).collect::<Vec<_>>();
    ensure(rel(&trees[0], &a) == rel(&trees[1], &b), || "different file sets".into())?;
    let mut series = 0;
    for (x, y) in a.iter().zip(&b) {
        let same = std::fs::read(x).map_err(|e| e.to_string())? == std::fs::read(y).map_err(|e| e.to_string())?;
        ensure(same, || format!("{} differs", x.strip_prefix(&trees[0]).unwrap().display()))?;
        series += usize::from(x.extension().is_some_and(|e| e == "csv"));
    }
    Ok(format!("{} configs, {} files ({series} series) byte-identical", configs.len(), a.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("exchange option vs Monte Carlo", c1_margrabe_vs_mc),
        ("borrower/lender parity", c2_parity),
        ("one-touch vs first passage", c3_one_touch),
        ("constant-product invariants", c4_cpmm),
        ("impermanent loss", c5_impermanent_loss),
        ("funding rules", c6_funding),
        ("implied-rate round trip", c7_implied_rates),
        ("staking returns and slashing", c8_staking),
        ("cross-currency swap lifecycle", c9_xccy),
        ("long-run LP yield", c10_longrun),
        ("Kelly and Sharpe", c11_kelly),
        ("replay determinism", c12_replay),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
