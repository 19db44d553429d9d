//! Gauss–Legendre quadrature rules on [-1, 1].
//!
//! Nodes are the roots of the Legendre polynomial P_n, found by Newton
//! iteration from the Chebyshev-like initial guess
//! `x_i ≈ cos(π (i + 3/4) / (n + 1/2))`; weights follow from
//! `w_i = 2 / ((1 - x_i²) P_n'(x_i)²)`.
//!
//! The transmittance kernel uses fixed tensor rules (64×128 nodes, with
//! 128×256 for the order-doubling error estimate), so those tables are
//! computed once and cached.

use std::sync::OnceLock;

/// One quadrature rule: paired nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build the n-point rule. Exact for polynomials of degree ≤ 2n−1.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be >= 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots come in ± pairs; solve the positive half and mirror.
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() <= 1e-15 * x.abs().max(1.0) {
                    let (_, d2) = legendre_with_derivative(n, x);
                    dp = d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            // odd rules have the exact mid node x = 0
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_with_derivative(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over [lo, hi] with the affine-mapped rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let c = 0.5 * (hi - lo);
        let m = 0.5 * (hi + lo);
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(c * x + m);
        }
        c * sum
    }
}

/// Evaluate (P_n(x), P_n'(x)) by the three-term recurrence; the derivative
/// uses P_n'(x) = n (x P_n − P_{n−1}) / (x² − 1).
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = if (x * x - 1.0).abs() < 1e-300 {
        // endpoints are never Newton iterates, but avoid 0/0 anyway
        0.5 * (n * (n + 1)) as f64 * x.signum()
    } else {
        (n as f64) * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, d)
}

// ---------------------------------------------------------------------
// cached rules for the transmittance kernel
// ---------------------------------------------------------------------

macro_rules! cached_rule {
    ($fn_name:ident, $order:expr) => {
        pub fn $fn_name() -> &'static GaussLegendre {
            static RULE: OnceLock<GaussLegendre> = OnceLock::new();
            RULE.get_or_init(|| GaussLegendre::new($order))
        }
    };
}

cached_rule!(rule_64, 64);
cached_rule!(rule_128, 128);
cached_rule!(rule_256, 256);
cached_rule!(rule_512, 512);
