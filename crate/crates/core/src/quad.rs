//! One-dimensional quadrature: adaptive Simpson and a fixed Gauss-Legendre
//! rule for per-cell averages.

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the final result; the recursion uses the
/// usual 15x Richardson acceptance test and refines to `max_depth` levels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, m, b, fa, fm, fb, whole, tol, max_depth)
}

/// Adaptive Simpson driven by a relative tolerance: a first pass estimates the
/// magnitude, a second pass integrates to `rel_tol * scale` absolute. When
/// cancellation makes the integral much smaller than its L1 mass, the scale
/// is floored at a fraction of that mass, keeping the target reachable.
pub fn adaptive_simpson_rel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rough = adaptive_simpson(f, a, b, 1e-8, 20);
    let rough_abs = adaptive_simpson(&|x| f(x).abs(), a, b, 1e-6 * rough.abs().max(1.0), 16);
    let scale = rough.abs().max(1e-3 * rough_abs.abs()).max(1e-300);
    adaptive_simpson(f, a, b, rel_tol * scale, 48)
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        recurse(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

// 5-point Gauss-Legendre on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Fixed 5-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        acc += w * f(c + h * x);
    }
    acc * h
}
