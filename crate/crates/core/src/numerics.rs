//! Quadrature and extrapolation used by the generator and Duhamel checks.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::tensorspace::CMatrix;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_order
            let mut x = (PI * (i as f64 + 0.75) / (m + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule over `panels` equal subintervals of `[a, b]`.
    pub fn integrate_matrix(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> CMatrix) -> CMatrix {
        let width = (b - a) / panels as f64;
        let mut total: Option<CMatrix> = None;
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let value = f(mid + 0.5 * width * x) * Complex64::new(0.5 * width * w, 0.0);
                total = Some(match total {
                    Some(acc) => acc + value,
                    None => value,
                });
            }
        }
        total.expect("at least one node")
    }

    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += 0.5 * width * w * f(mid + 0.5 * width * x);
            }
        }
        total
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Richardson extrapolation to step zero of samples whose error expands in
/// integer powers `h, h², …` of the step. Returns the most extrapolated value.
pub fn richardson(steps: &[f64], values: &[CMatrix]) -> CMatrix {
    assert_eq!(steps.len(), values.len(), "one value per step");
    assert!(!steps.is_empty(), "need at least one sample");
    let mut table: Vec<CMatrix> = values.to_vec();
    for level in 1..steps.len() {
        let mut next = Vec::with_capacity(table.len() - 1);
        for i in level..steps.len() {
            let ratio = steps[i - level] / steps[i];
            let (coarse, fine) = (&table[i - level], &table[i - level + 1]);
            next.push(fine + (fine - coarse) / Complex64::new(ratio - 1.0, 0.0));
        }
        table = next;
    }
    table.pop().expect("nonempty tableau")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights_are_consistent() {
        for order in [1, 2, 5, 16, 64] {
            let rule = GaussLegendre::new(order);
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "order {order}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        }
        let rule = GaussLegendre::new(2);
        assert!((rule.nodes()[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn integrates_polynomials_and_smooth_functions() {
        let rule = GaussLegendre::new(8);
        // exact up to degree 15
        let value = rule.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert!((value - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let value = GaussLegendre::new(16).integrate(0.0, PI, 4, f64::sin);
        assert!((value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn richardson_removes_leading_orders() {
        // q(h) = 3 + 2h - 5h² + h³: two levels remove h and h²
        let steps = [1e-1, 1e-2, 1e-3];
        let values: Vec<CMatrix> = steps
            .iter()
            .map(|&h| CMatrix::from_element(1, 1, Complex64::new(3.0 + 2.0 * h - 5.0 * h * h + h * h * h, 0.0)))
            .collect();
        let limit = richardson(&steps, &values);
        assert!((limit[(0, 0)].re - 3.0).abs() < 1e-5);
    }
}
