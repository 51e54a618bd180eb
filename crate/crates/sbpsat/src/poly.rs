//! Legendre polynomials and Gauss–Legendre quadrature.

/// Values `P_0(t) .. P_{m-1}(t)`.
pub fn legendre_values(t: f64, m: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(m);
    if m > 0 {
        p.push(1.0);
    }
    if m > 1 {
        p.push(t);
    }
    for k in 2..m {
        let kf = k as f64;
        let v = ((2.0 * kf - 1.0) * t * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        p.push(v);
    }
    p
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact for degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let p = legendre_values(t, n + 1);
            let (pn, pn1) = (p[n], p[n - 1]);
            dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Legendre coefficients (degree `< m`) of `f` on the interval `[a, b]`.
pub fn legendre_coefficients(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    m: usize,
    rule: &(Vec<f64>, Vec<f64>),
) -> Vec<f64> {
    let mut c = vec![0.0; m];
    for (&t, &w) in rule.0.iter().zip(&rule.1) {
        let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
        let fx = f(x);
        for (k, pk) in legendre_values(t, m).into_iter().enumerate() {
            c[k] += w * fx * pk;
        }
    }
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= (2 * k + 1) as f64 / 2.0;
    }
    c
}
