//! One-dimensional quadrature rules shared by the geometry and theory code.

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local Richardson error estimates (always ≥ 0).
    pub error: f64,
    pub evaluations: usize,
    /// False when the evaluation cap stopped refinement early.
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

const MAX_DEPTH: u32 = 60;
const INITIAL_PANELS: usize = 16;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// The tolerance is relative to the magnitude of the integral; `max_evals`
/// bounds the number of integrand evaluations.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, max_evals: usize) -> Quadrature
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    // A coarse composite pass fixes the absolute scale; a second pass runs
    // if the refined value moved the scale substantially.
    let mut scale = composite_simpson(&f, a, b, 4 * INITIAL_PANELS).abs();
    let mut total_evals = 4 * INITIAL_PANELS + 1;
    let mut out = simpson_pass(&f, a, b, rel_tol * scale, max_evals);
    total_evals += out.evaluations;
    for _ in 0..2 {
        if out.value.abs() >= 0.5 * scale || out.value == 0.0 {
            break;
        }
        scale = out.value.abs();
        out = simpson_pass(&f, a, b, rel_tol * scale, max_evals);
        total_evals += out.evaluations;
    }
    out.evaluations = total_evals;
    out
}

fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let x = a + h * i as f64;
        sum += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    sum * h / 3.0
}

fn simpson_pass<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_evals: usize,
) -> Quadrature {
    let abs_tol = if abs_tol > 0.0 {
        abs_tol
    } else {
        f64::MIN_POSITIVE
    };
    let mut stack: Vec<Panel> = Vec::with_capacity(128);
    let h = (b - a) / INITIAL_PANELS as f64;
    let mut evals = 0usize;
    let mut left = a;
    let mut f_left = f(a);
    evals += 1;
    for i in 0..INITIAL_PANELS {
        let right = if i + 1 == INITIAL_PANELS {
            b
        } else {
            a + h * (i + 1) as f64
        };
        let mid = 0.5 * (left + right);
        let fm = f(mid);
        let fr = f(right);
        evals += 2;
        stack.push(Panel {
            a: left,
            b: right,
            fa: f_left,
            fm,
            fb: fr,
            whole: (right - left) / 6.0 * (f_left + 4.0 * fm + fr),
            tol: abs_tol / INITIAL_PANELS as f64,
            depth: 0,
        });
        left = right;
        f_left = fr;
    }

    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        evals += 2;
        let left_s = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right_s = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left_s + right_s - p.whole;
        let done = delta.abs() <= 15.0 * p.tol || p.depth >= MAX_DEPTH || m <= p.a || m >= p.b;
        if done || evals >= max_evals {
            if !done {
                converged = false;
            }
            value += left_s + right_s + delta / 15.0;
            error += delta.abs() / 15.0;
            continue;
        }
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left_s,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right_s,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
    }
    Quadrature {
        value,
        error,
        evaluations: evals,
        converged,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
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
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule over consecutive panels delimited by
/// `breaks` (sorted). Returns `(abscissa, weight)` pairs.
pub fn composite_rule(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::with_capacity(breaks.len().saturating_sub(1) * order);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + half * xi, half * wi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_is_exact() {
        let q = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 1 << 20);
        assert!((q.value - 2.0).abs() < 1e-12, "{q:?}");
        assert!(q.converged);
    }

    #[test]
    fn simpson_handles_sharp_peak() {
        // ∫_0^1 e^{-200 x} dx = (1 - e^{-200}) / 200
        let q = adaptive_simpson(|x| (-200.0 * x).exp(), 0.0, 1.0, 1e-10, 1 << 20);
        let exact = (1.0 - (-200.0f64).exp()) / 200.0;
        assert!(((q.value - exact) / exact).abs() < 1e-9, "{q:?}");
    }

    #[test]
    fn simpson_respects_eval_cap() {
        let q = adaptive_simpson(|x: f64| x.sqrt().sin() * 1e3, 0.0, 1.0, 1e-15, 200);
        assert!(!q.converged);
        assert!(q.evaluations < 400);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for order in [1, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(order);
            let deg = 2 * order - 1;
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            // ∫ x^{deg-1} over [-1,1]; deg-1 is even
            let exact = 2.0 / deg as f64;
            assert!((s - exact).abs() < 1e-13, "order {order}: {s} vs {exact}");
            let wsum: f64 = w.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn composite_rule_spans_panels() {
        let rule = composite_rule(&[0.0, 0.25, 1.0, 3.0], 6);
        let s: f64 = rule.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (3f64.exp() - 1.0)).abs() < 1e-10);
    }
}
