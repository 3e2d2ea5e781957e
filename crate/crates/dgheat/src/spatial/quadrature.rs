//! Gauss-Legendre rules on intervals and a degree-5 rule on triangles.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`.
/// Cached after the first computation; the norms evaluate these rules in
/// inner loops.
pub fn gauss_legendre_01(n: usize) -> &'static [(f64, f64)] {
    use std::sync::OnceLock;
    const MAX_CACHED: usize = 64;
    static CACHE: OnceLock<Vec<OnceLock<Vec<(f64, f64)>>>> = OnceLock::new();
    assert!(
        n >= 1 && n <= MAX_CACHED,
        "Gauss rule order {n} outside 1..={MAX_CACHED}"
    );
    let slots = CACHE.get_or_init(|| (0..=MAX_CACHED).map(|_| OnceLock::new()).collect());
    slots[n].get_or_init(|| compute_gauss_legendre_01(n))
}

/// Newton iteration on the Legendre polynomial; exact for degree `2n - 1`.
fn compute_gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]; reverse so nodes come out ascending
        rule.push(((1.0 - x) / 2.0, w / 2.0));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    gauss_legendre_01(n)
        .iter()
        .map(|&(s, w)| (a + (b - a) * s, (b - a) * w))
        .collect()
}

/// Seven-point symmetric triangle rule, exact for total degree 5.
/// Points are barycentric, weights sum to 1 (multiply by the cell area).
pub fn triangle_degree5() -> Vec<([f64; 3], f64)> {
    let a = 0.470_142_064_105_115;
    let wa = 0.132_394_152_788_506;
    let b = 0.101_286_507_323_456;
    let wb = 0.125_939_180_544_827;
    vec![
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_monomials_exactly() {
        for n in 1..=12 {
            let rule = gauss_legendre_01(n);
            for deg in 0..=(2 * n - 1) {
                let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!(
                    (approx - exact).abs() < 2e-14,
                    "n={n} deg={deg}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gauss_on_interval() {
        let rule = gauss_legendre(4, 2.0, 5.0);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 3.0).abs() < 1e-13);
        let integral: f64 = rule.iter().map(|(x, w)| w * x * x).sum();
        assert!((integral - (125.0 - 8.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_rule_degree5() {
        // integrate monomials x^p y^q over the reference triangle and compare
        // with p! q! / (p + q + 2)!
        let rule = triangle_degree5();
        let fact = |m: usize| (1..=m).product::<usize>() as f64;
        for p in 0..=5usize {
            for q in 0..=(5 - p) {
                let approx: f64 = rule
                    .iter()
                    .map(|(bary, w)| {
                        let x = bary[1];
                        let y = bary[2];
                        0.5 * w * x.powi(p as i32) * y.powi(q as i32)
                    })
                    .sum();
                let exact = fact(p) * fact(q) / fact(p + q + 2);
                assert!(
                    (approx - exact).abs() < 1e-15 + 1e-13 * exact,
                    "p={p} q={q}: {approx} vs {exact}"
                );
            }
        }
    }
}
