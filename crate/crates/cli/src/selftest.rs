//! Randomized comparison of the engine against brute-force oracles.

use std::io::Write;
use std::sync::Arc;

use dcp_core::oracles::{brute_force_conformal_set, conformal_set_runs, linspace, OracleDgp};
use dcp_core::scores::{knn_distance, knn_normalizer};
use dcp_core::{
    analytic_interval, conformal_interval, threshold, DrawVector, RootFindConfig, ScoreFamily, ScoreFn, ScoreSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn(&mut ChaCha8Rng, usize) -> Result<(), String>;

/// Runs every check, writes one line per check and returns whether all
/// passed.
pub fn run_selftest(seed: u64, cases: usize, out: &mut dyn Write) -> bool {
    let checks: [(&str, Check); 4] = [
        ("threshold matches sorted order statistic", check_threshold),
        ("knn distance and normalizer match exhaustive search", check_knn),
        ("closed-form and numerical inverses agree", check_analytic),
        ("numerical inverse matches dense grid scan", check_grid_scan),
    ];
    let mut all = true;
    for (i, (name, check)) in checks.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let outcome = check(&mut rng, cases);
        let _ = match &outcome {
            Ok(()) => writeln!(out, "ok   {name} ({cases} cases)"),
            Err(detail) => writeln!(out, "FAIL {name}: {detail}"),
        };
        all &= outcome.is_ok();
    }
    all
}

fn gaussian_draws(rng: &mut ChaCha8Rng, m: usize) -> DrawVector {
    let mu = rng.random_range(-3.0..3.0);
    let sigma = rng.random_range(0.05..1.5);
    let oracle = OracleDgp::gaussian(Arc::new(move |_: &[f64]| mu), Arc::new(move |_: &[f64]| sigma), m);
    oracle.draw(&[], rng).expect("valid oracle")
}

fn check_threshold(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for case in 0..cases {
        let n = rng.random_range(1..300);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..40)) * 0.25).collect();
        let permille: u32 = rng.random_range(1..1000);
        let alpha = f64::from(permille) / 1000.0;
        // rank = ceil((n + 1)(1000 - permille) / 1000) in integers
        let numerator = (n as u64 + 1) * u64::from(1000 - permille);
        let rank = numerator.div_ceil(1000) as usize;
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        match (threshold(&scores, alpha), rank <= n) {
            (Ok(q), true) if q == sorted[rank.max(1) - 1] => {}
            (Err(_), false) => {}
            (got, _) => return Err(format!("case {case}: n {n} alpha {alpha}: got {got:?}, rank {rank}")),
        }
    }
    Ok(())
}

fn check_knn(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
    };
    for case in 0..cases {
        let m = rng.random_range(1..40);
        let draws: Vec<f64> = (0..m).map(|_| f64::from(rng.random_range(-20..20)) * 0.5).collect();
        let dv = DrawVector::new(draws.clone()).map_err(|e| e.to_string())?;
        let k = rng.random_range(1..=m);
        let y: f64 = rng.random_range(-12.0..12.0);
        let mut dist: Vec<f64> = draws.iter().map(|d| (y - d).abs()).collect();
        dist.sort_by(f64::total_cmp);
        let expected = median(dist[..k].to_vec());
        let got = knn_distance(y, &dv, k).map_err(|e| e.to_string())?;
        let pairs: Vec<f64> = draws.iter().flat_map(|a| draws.iter().map(move |b| (a - b).abs())).collect();
        let expected_norm = median(pairs);
        let norm = knn_normalizer(&dv);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        if !close(got, expected) || !close(norm, expected_norm) {
            return Err(format!("case {case}: distance {got} vs {expected}, normalizer {norm} vs {expected_norm}"));
        }
    }
    Ok(())
}

fn random_spec(rng: &mut ChaCha8Rng, family: ScoreFamily) -> ScoreSpec {
    ScoreSpec {
        k: rng.random_range(1..=20),
        ..ScoreSpec::new(family).with_scaled(rng.random_bool(0.5))
    }
}

fn check_analytic(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let cfg = RootFindConfig::default();
    for family in ScoreFamily::ALL.into_iter().filter(|f| f.has_analytic_inverse()) {
        for case in 0..cases {
            let dv = gaussian_draws(rng, 100);
            let spec = random_spec(rng, family);
            let score = ScoreFn::new(&spec, &dv).map_err(|e| e.to_string())?;
            // a target inside reach of the anchor keeps the set bracketed
            let y = dv.median() + rng.random_range(-2.0..2.0);
            let qhat = score.eval(y).max(score.eval(score.anchor()));
            let numeric = conformal_interval(&score, qhat, &cfg);
            let exact = analytic_interval(&score, qhat).map_err(|e| e.to_string())?;
            let dev = (numeric.low - exact.low).abs().max((numeric.up - exact.up).abs());
            if dev > 1e-8 {
                return Err(format!("{family} case {case}: {numeric:?} vs {exact:?}"));
            }
        }
    }
    Ok(())
}

fn check_grid_scan(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let cfg = RootFindConfig::default();
    let cases = cases.div_ceil(10);
    for family in ScoreFamily::ALL {
        for case in 0..cases {
            let dv = gaussian_draws(rng, 100);
            let spec = random_spec(rng, family);
            let score = ScoreFn::new(&spec, &dv).map_err(|e| e.to_string())?;
            let y = dv.median() + rng.random_range(-2.0..2.0);
            // The KNN score has exactly flat stretches; a threshold equal to a
            // plateau level would make membership there depend on rounding.
            let qhat = score.eval(y).max(score.eval(score.anchor())) + 1e-6;
            let numeric = conformal_interval(&score, qhat, &cfg);
            let step = 1e-4;
            let center = score.anchor();
            let grid = linspace(center - 6.0, center + 6.0, 120_001);
            let (lo, hi) = brute_force_conformal_set(&score, qhat, &grid).map_err(|e| e.to_string())?;
            if lo < center - cfg.reach() || hi > center + cfg.reach() {
                // beyond the grid's reach the set cannot be bracketed
                continue;
            }
            let runs = conformal_set_runs(&score, qhat, &grid);
            let near = |a: f64, b: f64| (a - b).abs() <= step + 1e-9;
            // Disjoint sets can hide islands narrower than the geometric grid
            // spacing; the returned bounds must still be set boundaries.
            let ok = if runs.len() == 1 {
                near(numeric.low, lo) && near(numeric.up, hi)
            } else {
                runs.iter().any(|r| near(numeric.low, r.0)) && runs.iter().any(|r| near(numeric.up, r.1))
            };
            if !ok {
                return Err(format!("{family} k {} case {case}: {numeric:?} vs grid runs {runs:?}", spec.k));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let mut out = Vec::new();
        let passed = run_selftest(3, 40, &mut out);
        let text = String::from_utf8(out).unwrap();
        assert!(passed, "{text}");
        assert_eq!(text.lines().count(), 4);
    }
}
