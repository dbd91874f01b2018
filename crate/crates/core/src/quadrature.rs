//! Adaptive Simpson quadrature with Richardson correction.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    pub relative_tolerance: f64,
    /// Below this magnitude an interval counts as converged.
    pub absolute_floor: f64,
    pub max_evaluations: usize,
    pub max_depth: u32,
    /// Equal panels evaluated before adaptation starts.
    pub initial_panels: usize,
    /// Relative noise of the integrand values; panels whose Richardson
    /// difference is below it are accepted. At least `64 eps`.
    pub noise: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-11,
            absolute_floor: 1e-300,
            max_evaluations: 2_000_000,
            max_depth: 60,
            initial_panels: 16,
            noise: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: &QuadratureOptions) -> Result<Quadrature> {
    if !(b > a) {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let counter = std::cell::Cell::new(0usize);
    let eval = |x: f64| {
        counter.set(counter.get() + 1);
        f(x)
    };
    let m = opts.initial_panels.max(1);
    let h = (b - a) / m as f64;
    let mut panels = Vec::with_capacity(m);
    let mut left = eval(a);
    for i in 0..m {
        let pa = a + h * i as f64;
        let pb = if i + 1 == m { b } else { a + h * (i + 1) as f64 };
        let fm = eval(0.5 * (pa + pb));
        let fb = eval(pb);
        panels.push(Panel {
            a: pa,
            b: pb,
            fa: left,
            fm,
            fb,
            whole: simpson(pa, pb, left, fm, fb),
        });
        left = fb;
    }
    let coarse: f64 = panels.iter().map(|p| p.whole).sum();
    let target = (opts.relative_tolerance * coarse.abs()).max(opts.absolute_floor);

    let mut value = 0.0;
    let mut error = 0.0;
    // Depth-first with an explicit stack, left to right, so the summation
    // order is fixed by the integrand alone.
    let mut stack: Vec<(Panel, f64, u32)> = panels.into_iter().rev().map(|p| (p, target / m as f64, 0)).collect();
    while let Some((p, tol, depth)) = stack.pop() {
        let mid = 0.5 * (p.a + p.b);
        let flm = eval(0.5 * (p.a + mid));
        let frm = eval(0.5 * (mid + p.b));
        let lhalf = simpson(p.a, mid, p.fa, flm, p.fm);
        let rhalf = simpson(mid, p.b, p.fm, frm, p.fb);
        let delta = lhalf + rhalf - p.whole;
        // Below the noise of the panel values further halving only chases roundoff.
        let roundoff = opts.noise.max(64.0 * f64::EPSILON) * (lhalf.abs() + rhalf.abs());
        if delta.abs() <= (15.0 * tol).max(roundoff)
            || depth >= opts.max_depth
            || (lhalf + rhalf).abs() < opts.absolute_floor
        {
            if depth >= opts.max_depth && delta.abs() > 15.0 * tol {
                error += delta.abs();
            } else {
                error += delta.abs() / 15.0;
            }
            value += lhalf + rhalf + delta / 15.0;
        } else {
            stack.push((
                Panel {
                    a: mid,
                    b: p.b,
                    fa: p.fm,
                    fm: frm,
                    fb: p.fb,
                    whole: rhalf,
                },
                0.5 * tol,
                depth + 1,
            ));
            stack.push((
                Panel {
                    a: p.a,
                    b: mid,
                    fa: p.fa,
                    fm: flm,
                    fb: p.fm,
                    whole: lhalf,
                },
                0.5 * tol,
                depth + 1,
            ));
        }
        if counter.get() > opts.max_evaluations {
            return Err(Error::Quadrature {
                estimate: error,
                evaluations: counter.get(),
            });
        }
    }
    let evaluations = counter.get();
    if !value.is_finite() || error > 10.0 * target.max(opts.relative_tolerance * value.abs()) {
        return Err(Error::Quadrature {
            estimate: error,
            evaluations,
        });
    }
    Ok(Quadrature {
        value,
        error_estimate: error,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadratureOptions::default()).unwrap();
        assert!((q.value - 0.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrals() {
        let opts = QuadratureOptions::default();
        let q = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, &opts).unwrap();
        assert!((q.value - 2.0).abs() < 1e-11);
        let q = adaptive_simpson(|x| (-50.0 * x).exp(), 0.0, 1.0, &opts).unwrap();
        let exact = (1.0 - (-50f64).exp()) / 50.0;
        assert!((q.value - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn empty_and_underflowing_intervals() {
        let opts = QuadratureOptions::default();
        assert_eq!(adaptive_simpson(|_| 1.0, 1.0, 1.0, &opts).unwrap().value, 0.0);
        let q = adaptive_simpson(|x| (-1e6 * x).exp(), 1.0, 2.0, &opts).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let opts = QuadratureOptions {
            max_evaluations: 50,
            ..Default::default()
        };
        let r = adaptive_simpson(|x| (1.0 / (x + 1e-3)).sin(), 0.0, 1.0, &opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
