//! One-dimensional searches along a fixed direction.

use nalgebra::DVector;

use super::{SolverError, SolverOptions};

/// Sufficient-decrease constant of the Armijo test.
const ARMIJO_C1: f64 = 1e-4;
/// Growth cap for one search. Along a ray with no minimum (a linear cost on
/// a tangent line) the step would otherwise grow until the budget runs out.
const MAX_EXPANSIONS: usize = 8;

/// Cap on one secant extrapolation, relative to the current bracket span.
const MAX_EXTRAPOLATION: f64 = 1e3;

struct Ray<'f, F: ?Sized> {
    f: &'f F,
    x: &'f DVector<f64>,
    d: &'f DVector<f64>,
    buf: Vec<f64>,
    evals: usize,
}

impl<'f, F: Fn(&[f64]) -> f64 + ?Sized> Ray<'f, F> {
    fn new(f: &'f F, x: &'f DVector<f64>, d: &'f DVector<f64>) -> Self {
        Self {
            f,
            x,
            d,
            buf: vec![0.0; x.len()],
            evals: 0,
        }
    }

    fn at(&mut self, alpha: f64) -> f64 {
        for ((b, x), d) in self.buf.iter_mut().zip(self.x.iter()).zip(self.d.iter()) {
            *b = x + alpha * d;
        }
        self.evals += 1;
        (self.f)(&self.buf)
    }

    fn point(&self, alpha: f64) -> DVector<f64> {
        self.x + self.d * alpha
    }

    fn stall(&self) -> SolverError {
        SolverError::LineSearchStall {
            evaluations: self.evals,
        }
    }
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0) == (b > 0.0)
}

/// Finds `x + α d` where `f` crosses zero.
///
/// `f0` is `f(x)`; `slope` is the directional derivative `∇f·d` if known
/// (pass NaN otherwise) and seeds a Newton first step. A sign change is
/// bracketed by secant extrapolation along `±d`, then refined with the
/// Illinois variant of regula falsi.
pub fn line_search_zero<F>(
    f: &F,
    x: &DVector<f64>,
    d: &DVector<f64>,
    f0: f64,
    slope: f64,
    opts: &SolverOptions,
) -> Result<DVector<f64>, SolverError>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let tol = opts.constraint_tol;
    if f0.abs() <= tol {
        return Ok(x.clone());
    }
    let budget = opts.max_line_search_evals;
    let mut ray = Ray::new(f, x, d);

    let (mut a, mut fa) = (0.0, f0);
    let mut b = if slope.is_finite() && slope != 0.0 {
        -f0 / slope
    } else {
        1.0
    };
    let mut fb = ray.at(b);
    while same_sign(fa, fb) || !fb.is_finite() {
        if fb.is_finite() && fb.abs() <= tol {
            return Ok(ray.point(b));
        }
        if ray.evals >= budget {
            return Err(ray.stall());
        }
        if !fb.is_finite() {
            // Overshot into an undefined region: pull back towards `a`.
            b = a + 0.5 * (b - a);
            fb = ray.at(b);
            continue;
        }
        let span = (b - a).abs();
        let limit = MAX_EXTRAPOLATION * span;
        let secant = b - fb * (b - a) / (fb - fa);
        let (anchor, keep_b) = if fb.abs() <= fa.abs() { (b, true) } else { (a, false) };
        let next = if secant.is_finite() {
            anchor + (secant - anchor).clamp(-limit, limit)
        } else {
            b + opts.expansion * (b - a)
        };
        if keep_b {
            a = b;
            fa = fb;
        }
        b = next;
        fb = ray.at(b);
    }
    if fb.abs() <= tol {
        return Ok(ray.point(b));
    }

    loop {
        if ray.evals >= budget || (b - a).abs() <= 4.0 * f64::EPSILON * b.abs().max(a.abs()) {
            return Err(ray.stall());
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = ray.at(c);
        if !fc.is_finite() {
            return Err(SolverError::NonFinite {
                what: "function".into(),
                coordinate: None,
            });
        }
        if fc.abs() <= tol {
            return Ok(ray.point(c));
        }
        if same_sign(fc, fb) {
            fa *= 0.5;
        } else {
            a = b;
            fa = fb;
        }
        b = c;
        fb = fc;
    }
}

/// Accepted step of [`line_search_min`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinStep {
    pub alpha: f64,
    pub x: DVector<f64>,
    pub value: f64,
}

/// Armijo search along a descent direction `d`, starting from step
/// `alpha0`. An acceptable first step is expanded while the value keeps
/// improving; otherwise the step is shrunk until it is acceptable. The
/// accepted step is then refined once by quadratic interpolation.
pub fn line_search_min<F>(
    f: &F,
    x: &DVector<f64>,
    d: &DVector<f64>,
    f0: f64,
    slope: f64,
    alpha0: f64,
    opts: &SolverOptions,
) -> Result<MinStep, SolverError>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut ray = Ray::new(f, x, d);
    if slope.is_nan() || slope >= 0.0 || alpha0.is_nan() || alpha0 <= 0.0 {
        return Err(ray.stall());
    }
    let budget = opts.max_line_search_evals;
    let armijo = |a: f64, fa: f64| fa.is_finite() && fa <= f0 + ARMIJO_C1 * a * slope && fa < f0;

    let mut alpha = alpha0;
    let mut value = ray.at(alpha);
    if armijo(alpha, value) {
        let mut expansions = 0;
        while ray.evals < budget && expansions < MAX_EXPANSIONS {
            expansions += 1;
            let wider = alpha * opts.expansion;
            let v = ray.at(wider);
            if armijo(wider, v) && v < value {
                alpha = wider;
                value = v;
            } else {
                break;
            }
        }
    } else {
        loop {
            if ray.evals >= budget {
                return Err(ray.stall());
            }
            alpha /= opts.expansion;
            value = ray.at(alpha);
            if armijo(alpha, value) {
                break;
            }
        }
    }
    // One interpolation step: the parabola through f0 with slope `slope`
    // and (alpha, value). Exact on quadratics; kept only if it does better.
    let curvature = (value - f0 - slope * alpha) / (alpha * alpha);
    if curvature > 0.0 && ray.evals < budget {
        let vertex = -slope / (2.0 * curvature);
        if vertex.is_finite() && vertex > 0.0 && (vertex - alpha).abs() > 1e-3 * alpha {
            let v = ray.at(vertex);
            if armijo(vertex, v) && v < value {
                alpha = vertex;
                value = v;
            }
        }
    }
    Ok(MinStep {
        alpha,
        x: ray.point(alpha),
        value,
    })
}
