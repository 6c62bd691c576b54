//! Gauss–Legendre rules on `[-1, 1]` and tensor/composite variants on boxes.

/// Legendre polynomial `P_m(x)` and its derivative, by the three-term recurrence.
pub fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let mf = m as f64;
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        // P_m'(±1) = ±^(m+1) m(m+1)/2
        let s = if x > 0.0 || m % 2 == 1 { 1.0 } else { -1.0 };
        s * mf * (mf + 1.0) / 2.0
    } else {
        mf * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    /// Composite rule: `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + width * k as f64;
                self.integrate(lo, lo + width, &mut f)
            })
            .sum()
    }

    /// One-dimensional nodes and weights of the composite rule on `[a, b]`.
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(xs.capacity());
        for k in 0..panels {
            let mid = a + width * (k as f64 + 0.5);
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + half * t);
                ws.push(w * half);
            }
        }
        (xs, ws)
    }
}

/// Tensor-product quadrature of `f` over `[a, b]^dim` using the given 1-D
/// nodes and weights in every coordinate.
pub fn tensor_integrate(
    xs: &[f64],
    ws: &[f64],
    dim: usize,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let m = xs.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![xs[0]; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (j, &k) in idx.iter().enumerate() {
            point[j] = xs[k];
            w *= ws[k];
        }
        total += w * f(&point);
        // odometer increment
        let mut j = 0;
        loop {
            if j == dim {
                return total;
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Points and weights of the tensor-product rule, first coordinate fastest.
pub fn tensor_points(xs: &[f64], ws: &[f64], dim: usize) -> Vec<(Vec<f64>, f64)> {
    let m = xs.len();
    let total = m.pow(dim as u32);
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut point = Vec::with_capacity(dim);
            let mut w = 1.0;
            for _ in 0..dim {
                point.push(xs[rem % m]);
                w *= ws[rem % m];
                rem /= m;
            }
            (point, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..30 {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_degree_two_n_minus_one() {
        for n in 1..12 {
            let gl = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                let want = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn tensor_rule_integrates_product() {
        let gl = GaussLegendre::new(4);
        let v = tensor_integrate(&gl.nodes, &gl.weights, 3, |x| x[0] * x[0] * x[1] * x[1] + 1.0);
        // ∫ x²y² over [-1,1]^3 = (2/3)(2/3)(2) ; ∫1 = 8
        assert!((v - (8.0 / 9.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn composite_handles_kinks() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate_composite(-1.0, 1.0, 2, |x| x.abs());
        assert!((v - 1.0).abs() < 1e-14);
    }
}
