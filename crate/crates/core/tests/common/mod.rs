//! Oracles shared by the integration tests.

#![allow(dead_code)]

/// Composite Simpson rule on [-1, 1].
pub fn simpson<F: Fn(f64) -> f64>(f: F, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = 2.0 / intervals as f64;
    let mut sum = f(-1.0) + f(1.0);
    for k in 1..intervals {
        let x = -1.0 + k as f64 * h;
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

pub fn likelihood(r: u64, n: u64, u: f64) -> f64 {
    (0.5 * (1.0 + u)).powi(r as i32) * (0.5 * (1.0 - u)).powi((n - r) as i32)
}

pub fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(f64::MIN_POSITIVE)
}

/// Coefficients of `Π_k (1 + c_k u)/2`, lowest power first.
fn product_poly(factors: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for &c in factors {
        let mut next = vec![0.0; p.len() + 1];
        for (k, &v) in p.iter().enumerate() {
            next[k] += 0.5 * v;
            next[k + 1] += 0.5 * c * v;
        }
        p = next;
    }
    p
}

/// `∫_{-1}^{1} u^shift · p(u) du`, exactly.
fn integrate(p: &[f64], shift: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(k, &c)| {
            let d = k + shift;
            if d.is_multiple_of(2) {
                2.0 * c / (d as f64 + 1.0)
            } else {
                0.0
            }
        })
        .sum()
}

/// Error of the posterior mean of one expectation value, summed over every
/// string of `n` own results and `n` partner results, where each partner
/// result is `±` with probability `(1 ± c·u)/2` given the value `u`.
pub fn enumerate_axis_error(n: usize, c: f64) -> f64 {
    let mut total = 0.0;
    for bits in 0u32..(1 << (2 * n)) {
        let factors: Vec<f64> = (0..2 * n)
            .map(|k| {
                let sign = if bits >> k & 1 == 1 { 1.0 } else { -1.0 };
                if k < n {
                    sign
                } else {
                    sign * c
                }
            })
            .collect();
        let l = product_poly(&factors);
        let (i0, i1, i2) = (integrate(&l, 0), integrate(&l, 1), integrate(&l, 2));
        let est = i1 / i0;
        // (1/2)∫ L(u)(u − est)² du
        total += 0.5 * (i2 - 2.0 * est * i1 + est * est * i0);
    }
    total
}
