//! Adaptive Gauss–Kronrod integration and expectations over the Gamma
//! distribution (the power gain of Nakagami-m fading).

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (non-negative half) and weights; the odd
// entries are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Relative accuracy below which an integral is rejected as non-convergent.
pub const MAX_RELATIVE_ERROR: f64 = 1e-6;

const TARGET_RELATIVE: f64 = 1e-10;
const TARGET_ABSOLUTE: f64 = 1e-15;
const MAX_INTERVALS: usize = 4000;
const INITIAL_PANELS: usize = 24;

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel { lo, hi, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over `[lo, hi]` by globally adaptive G7/K15 bisection.
///
/// Returns the estimate together with its error bound. Fails with a
/// numerical error when the bound cannot be brought under
/// [`MAX_RELATIVE_ERROR`] of the result.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Numerical(format!("bad integration interval [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok((0.0, 0.0));
    }
    let width = (hi - lo) / INITIAL_PANELS as f64;
    let mut panels: Vec<Panel> = (0..INITIAL_PANELS)
        .map(|i| {
            let a = lo + width * i as f64;
            let b = if i + 1 == INITIAL_PANELS { hi } else { a + width };
            kronrod15(&f, a, b)
        })
        .collect();

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("integrand is not finite".into()));
        }
        let target = (TARGET_RELATIVE * total.abs()).max(TARGET_ABSOLUTE);
        if error <= target {
            return Ok((total, error));
        }
        if panels.len() >= MAX_INTERVALS {
            if error <= (MAX_RELATIVE_ERROR * total.abs()).max(TARGET_ABSOLUTE) {
                return Ok((total, error));
            }
            return Err(Error::Numerical(format!(
                "quadrature did not converge: estimate {total:e}, error bound {error:e}"
            )));
        }
        let (worst, _) =
            panels
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            // interval exhausted at machine precision; keep what we have
            panels.push(Panel { error: 0.0, ..p });
            continue;
        }
        panels.push(kronrod15(&f, p.lo, mid));
        panels.push(kronrod15(&f, mid, p.hi));
    }
}

/// Mass left outside the truncated integration range on each side.
const TAIL_MASS: f64 = 1e-16;

/// Expectation of `f(G)` for `G ~ Gamma(shape, mean / shape)`.
///
/// The integral runs over `v = ln(shape * G / mean)`, where the density is
/// smooth and unimodal, so steep integrands (packet success curves) are
/// resolved by the adaptive bisection instead of a fixed rule.
pub fn gamma_expectation<F: Fn(f64) -> f64>(f: F, shape: f64, mean: f64) -> Result<f64> {
    if !(shape > 0.0) || !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Numerical(format!("gamma expectation needs positive shape and mean, got {shape}, {mean}")));
    }
    let log_norm = ln_gamma(shape);
    // lower tail ~ u^k / Gamma(k+1), upper tail ~ u^(k-1) e^-u / Gamma(k)
    let v_lo = (TAIL_MASS.ln() + ln_gamma(shape + 1.0)) / shape;
    let v_hi = (shape + 12.0 * shape.sqrt() + 40.0).ln();
    let scale = mean / shape;
    let integrand = |v: f64| {
        let u = v.exp();
        let density = (shape * v - u - log_norm).exp();
        if density == 0.0 {
            0.0
        } else {
            density * f(u * scale)
        }
    };
    let (value, _) = integrate(integrand, v_lo, v_hi)?;
    Ok(value)
}
