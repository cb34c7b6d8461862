//! Seeded random variate generation for the model samplers.
//!
//! Everything is derived from a ChaCha12 uniform stream so that a (model, n,
//! seed) triple always reproduces the same dataset, independent of platform
//! and of distribution helpers in external crates.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub(crate) fn rng_for_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// SplitMix64 scrambler, used to derive replicate substream seeds from a
/// master seed without correlating the streams.
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval (0, 1).
pub(crate) fn uniform_open(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard exponential draw.
pub(crate) fn exp1(rng: &mut ChaCha12Rng) -> f64 {
    -uniform_open(rng).ln()
}

/// Standard normal draws via Box-Muller, filling `out`.
pub(crate) fn fill_std_normal(rng: &mut ChaCha12Rng, out: &mut [f64]) {
    let mut i = 0;
    while i < out.len() {
        let u1 = uniform_open(rng);
        let u2 = uniform_open(rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        out[i] = r * theta.cos();
        i += 1;
        if i < out.len() {
            out[i] = r * theta.sin();
            i += 1;
        }
    }
}

/// Positive alpha-stable draw with Laplace transform exp(-t^alpha), for
/// 0 < alpha < 1, by the Chambers-Mallows-Stuck representation:
/// S = sin(a U) / (sin U)^(1/a) * (sin((1-a) U) / E)^((1-a)/a)
/// with U uniform on (0, pi) and E standard exponential.
pub(crate) fn positive_stable(alpha: f64, rng: &mut ChaCha12Rng) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let u = PI * uniform_open(rng);
    let e = exp1(rng);
    let factor = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    factor * (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha)
}

/// One row of the symmetric logistic model with unit Frechet margins:
/// X_i = (S / E_i)^alpha with a shared positive stable frailty S. At
/// alpha = 1 the components are independent unit Frechet.
pub(crate) fn fill_logistic_row(alpha: f64, rng: &mut ChaCha12Rng, out: &mut [f64]) {
    if alpha == 1.0 {
        for x in out.iter_mut() {
            *x = 1.0 / exp1(rng);
        }
        return;
    }
    let s = positive_stable(alpha, rng);
    for x in out.iter_mut() {
        *x = (s / exp1(rng)).powf(alpha);
    }
}

/// Unit Pareto draw: survival P(Y > y) = 1/y for y >= 1.
pub(crate) fn unit_pareto(rng: &mut ChaCha12Rng) -> f64 {
    1.0 / uniform_open(rng)
}

/// Pareto(alpha) draw: survival P(Y > y) = y^(-alpha) for y >= 1.
pub(crate) fn pareto(alpha: f64, rng: &mut ChaCha12Rng) -> f64 {
    uniform_open(rng).powf(-1.0 / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_scrambles_consecutive_indices() {
        let seeds: Vec<u64> = (0..8).map(|i| derive_seed(42, i)).collect();
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
    }

    #[test]
    fn positive_stable_matches_its_laplace_transform() {
        for &alpha in &[0.3, 0.5, 0.8] {
            let mut rng = rng_for_seed(7);
            let n = 40_000;
            for &t in &[0.5_f64, 1.0, 2.0] {
                let mut mean = 0.0;
                for _ in 0..n {
                    mean += (-t * positive_stable(alpha, &mut rng)).exp();
                }
                mean /= n as f64;
                let expected = (-t.powf(alpha)).exp();
                assert!(
                    (mean - expected).abs() < 0.02,
                    "alpha={alpha} t={t}: empirical LT {mean} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn logistic_row_has_unit_frechet_margins_and_joint_cdf() {
        let alpha = 0.5;
        let mut rng = rng_for_seed(11);
        let n = 40_000;
        let x = 2.0_f64.powf(alpha) / -(0.7_f64.ln());
        let x_single = 1.0 / -(0.6_f64.ln());
        let mut joint = 0.0;
        let mut single = 0.0;
        let mut row = [0.0; 2];
        for _ in 0..n {
            fill_logistic_row(alpha, &mut rng, &mut row);
            if row[0] <= x && row[1] <= x {
                joint += 1.0;
            }
            if row[0] <= x_single {
                single += 1.0;
            }
        }
        joint /= n as f64;
        single /= n as f64;
        assert!((joint - 0.7).abs() < 0.02, "joint cdf {joint} vs 0.7");
        assert!((single - 0.6).abs() < 0.02, "margin cdf {single} vs 0.6");
    }

    #[test]
    fn box_muller_moments() {
        let mut rng = rng_for_seed(3);
        let mut out = vec![0.0; 50_001];
        fill_std_normal(&mut rng, &mut out);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        let var = out.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / out.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn pareto_tail_probability() {
        let mut rng = rng_for_seed(5);
        let n = 50_000;
        let mut count = 0;
        for _ in 0..n {
            if pareto(2.0, &mut rng) > 4.0 {
                count += 1;
            }
        }
        let p = count as f64 / n as f64;
        assert!((p - 1.0 / 16.0).abs() < 0.01, "tail prob {p}");
    }
}
