#![allow(dead_code)]

/// Adaptive Simpson on `[lo, hi]`, used only as an oracle here.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
    }
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = (a + b) / 2.0;
        let (left, right) = (simpson(f, a, m), simpson(f, m, b));
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, left, tol / 2.0, depth - 1) + recurse(f, m, b, right, tol / 2.0, depth - 1)
    }
    recurse(f, lo, hi, simpson(f, lo, hi), tol, 50)
}
