//! Composite Gauss–Legendre quadrature and trapezoid helpers.

// 10-point Gauss–Legendre nodes and weights on [-1, 1] (positive half).
const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// `∫_a^b f` with 10-point Gauss–Legendre on panels no wider than `max_panel`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_panel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in GL10_NODES.iter().zip(GL10_WEIGHTS) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        acc += s * half;
    }
    acc
}

/// Like [`integrate`] but splits `[a, b]` at the given breakpoints first so
/// kinks fall on panel edges.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], max_panel: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = a;
    for &x in breaks.iter().filter(|&&x| x > a && x < b) {
        acc += integrate(&f, lo, x, max_panel);
        lo = x;
    }
    acc + integrate(&f, lo, b, max_panel)
}

/// Composite trapezoid weights for the nodes `t[0..=k]`.
pub fn trapezoid_weight(t: &[f64], k: usize, i: usize) -> f64 {
    debug_assert!(i <= k && k < t.len());
    if k == 0 {
        return 0.0;
    }
    if i == 0 {
        0.5 * (t[1] - t[0])
    } else if i == k {
        0.5 * (t[k] - t[k - 1])
    } else {
        0.5 * (t[i + 1] - t[i - 1])
    }
}

/// Composite trapezoid rule on a nonuniform grid.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), y.len());
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let f = |x: f64| 3.0 * x.powi(19) - x.powi(4) + 2.0;
        let exact = 3.0 / 20.0 * 2f64.powi(20) - 32.0 / 5.0 + 4.0;
        assert_relative_eq!(integrate(f, 0.0, 2.0, 10.0), exact, max_relative = 1e-13);
    }

    #[test]
    fn split_handles_kinks() {
        let f = |x: f64| (x - 1.0).abs();
        assert_relative_eq!(integrate_split(f, 0.0, 3.0, &[1.0], 5.0), 2.5, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let t = [0.0, 0.1, 0.35, 0.4, 1.0];
        let s: f64 = (0..=3).map(|i| trapezoid_weight(&t, 3, i)).sum();
        assert_relative_eq!(s, 0.4, epsilon = 1e-15);
        assert_eq!(trapezoid_weight(&t, 0, 0), 0.0);
    }
}
