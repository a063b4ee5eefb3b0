//! Boys function F_m(x) = ∫₀¹ t^{2m} exp(-x t²) dt.
//!
//! Reference values come from the power series (x < 35) or the asymptotic
//! form (x ≥ 35), with downward recursion to lower orders. Integral code
//! calls [`boys_into`], which Taylor-expands around the nearest node of a
//! grid tabulated with that same series.

use std::sync::OnceLock;

/// Highest order needed: (pp|pp) quartets use m ≤ 4.
pub const MAX_ORDER: usize = 4;

const SWITCH: f64 = 35.0;
const GRID_STEP: f64 = 0.01;
const TAYLOR_TERMS: usize = 8;
const GRID_ORDERS: usize = MAX_ORDER + TAYLOR_TERMS + 1;

/// F_m(x) for m = 0..=out.len()-1, series/asymptotic route.
pub fn boys_reference(x: f64, out: &mut [f64]) {
    let mmax = out.len() - 1;
    if x >= SWITCH {
        // F_0 = ½√(π/x); upward recursion is stable here and e^{-x} < 1e-15.
        let ex = (-x).exp();
        out[0] = 0.5 * (std::f64::consts::PI / x).sqrt();
        for m in 0..mmax {
            out[m + 1] = ((2 * m + 1) as f64 * out[m] - ex) / (2.0 * x);
        }
        return;
    }
    let ex = (-x).exp();
    // F_M(x) = e^{-x} Σ_k (2x)^k / ((2M+1)(2M+3)...(2M+2k+1))
    let mut term = 1.0 / (2 * mmax + 1) as f64;
    let mut sum = term;
    let mut k = 1;
    loop {
        term *= 2.0 * x / (2 * mmax + 2 * k + 1) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1;
    }
    out[mmax] = ex * sum;
    for m in (0..mmax).rev() {
        out[m] = (2.0 * x * out[m + 1] + ex) / (2 * m + 1) as f64;
    }
}

struct Grid {
    // values[node * GRID_ORDERS + m]
    values: Vec<f64>,
}

fn grid() -> &'static Grid {
    static GRID: OnceLock<Grid> = OnceLock::new();
    GRID.get_or_init(|| {
        let nodes = (SWITCH / GRID_STEP).round() as usize + 1;
        let mut values = vec![0.0; nodes * GRID_ORDERS];
        for k in 0..nodes {
            let x = k as f64 * GRID_STEP;
            boys_reference(x, &mut values[k * GRID_ORDERS..(k + 1) * GRID_ORDERS]);
        }
        Grid { values }
    })
}

/// F_m(x) for m = 0..=mmax written into `out[..=mmax]`.
#[inline]
pub fn boys_into(mmax: usize, x: f64, out: &mut [f64]) {
    debug_assert!(mmax <= MAX_ORDER);
    if x >= SWITCH - 0.5 * GRID_STEP {
        boys_reference(x, &mut out[..=mmax]);
        return;
    }
    let g = grid();
    let node = (x / GRID_STEP + 0.5) as usize;
    let dx = node as f64 * GRID_STEP - x;
    // d/dx F_m = -F_{m+1}  ⇒  F_m(x) = Σ_k F_{m+k}(x0) (x0 - x)^k / k!
    let row = &g.values[node * GRID_ORDERS..(node + 1) * GRID_ORDERS];
    for m in 0..=mmax {
        let mut acc = 0.0;
        let mut fac = 1.0;
        for k in 0..TAYLOR_TERMS {
            acc += row[m + k] * fac;
            fac *= dx / (k + 1) as f64;
        }
        out[m] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: composite Gauss-Legendre quadrature of the
    /// defining integral.
    fn quadrature(m: usize, x: f64) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = 400;
        let h = 1.0 / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (n, w) in NODES.iter().zip(WEIGHTS) {
                let t = mid + 0.5 * h * n;
                s += 0.5 * h * w * t.powi(2 * m as i32) * (-x * t * t).exp();
            }
        }
        s
    }

    #[test]
    fn reference_matches_quadrature() {
        let mut out = [0.0; MAX_ORDER + 1];
        for &x in &[0.0, 1e-8, 0.3, 1.0, 4.7, 12.0, 25.0, 34.99, 35.0, 50.0, 120.0] {
            boys_reference(x, &mut out);
            for m in 0..=MAX_ORDER {
                let q = quadrature(m, x);
                assert!((out[m] - q).abs() < 1e-13, "m={m} x={x}: {} vs {q}", out[m]);
            }
        }
    }

    #[test]
    fn zero_argument_closed_form() {
        let mut out = [0.0; MAX_ORDER + 1];
        boys_reference(0.0, &mut out);
        for m in 0..=MAX_ORDER {
            assert!((out[m] - 1.0 / (2 * m + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn tabulated_matches_reference() {
        let mut a = [0.0; MAX_ORDER + 1];
        let mut b = [0.0; MAX_ORDER + 1];
        let mut x = 0.0;
        while x < 60.0 {
            boys_into(MAX_ORDER, x, &mut a);
            boys_reference(x, &mut b);
            for m in 0..=MAX_ORDER {
                assert!((a[m] - b[m]).abs() < 1e-14, "m={m} x={x}");
            }
            x += 0.003_7;
        }
    }
}
