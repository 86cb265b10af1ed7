//! Safeguarded Newton iteration for strictly monotone scalar functions.

use crate::error::{Result, SimError};

/// Root of a strictly decreasing `f` known to satisfy f(hi) <= 0, with the
/// root at or below `hi`. The bracket expands backwards from `hi` in doubling
/// steps of `initial_step`, then Newton iterates with bisection fallback.
///
/// `f` returns (value, derivative); `tol` maps the current iterate to the
/// acceptable |f|.
pub(crate) fn solve_decreasing_backward(
    mut f: impl FnMut(f64) -> (f64, f64),
    hi: f64,
    initial_step: f64,
    tol: impl Fn(f64) -> f64,
    max_iter: u32,
) -> Result<f64> {
    let (f_hi, _) = f(hi);
    if f_hi.abs() <= tol(hi) {
        return Ok(hi);
    }
    debug_assert!(f_hi < 0.0, "caller guarantees f(hi) <= 0");

    // Expand the bracket until f turns positive.
    let mut step = initial_step.max(f64::MIN_POSITIVE);
    let mut lo = hi - step;
    let mut expansions = 0u32;
    loop {
        let (f_lo, _) = f(lo);
        if f_lo >= 0.0 {
            break;
        }
        expansions += 1;
        if expansions > max_iter {
            return Err(SimError::NonConvergence {
                iterations: expansions,
                residual: f_lo.abs(),
            });
        }
        step *= 2.0;
        lo = hi - step;
    }

    newton_bisect(f, lo, hi, tol, max_iter)
}

/// Root of a strictly monotone `f` with no prior bracket: expands around
/// `guess` in doubling steps of `scale` until the sign changes.
pub(crate) fn solve_monotone(
    mut f: impl FnMut(f64) -> (f64, f64),
    guess: f64,
    scale: f64,
    tol: impl Fn(f64) -> f64,
    max_iter: u32,
) -> Result<f64> {
    let (fg, dfg) = f(guess);
    if fg.abs() <= tol(guess) {
        return Ok(guess);
    }
    // Walk downhill: for monotone f the root lies where f and df disagree in sign.
    let dir = if (fg > 0.0) == (dfg > 0.0) { -1.0 } else { 1.0 };
    let mut step = scale.max(f64::MIN_POSITIVE);
    let mut a = guess;
    let mut b = guess + dir * step;
    let mut expansions = 0u32;
    loop {
        let (fb, _) = f(b);
        if fb == 0.0 {
            return Ok(b);
        }
        if (fb > 0.0) != (fg > 0.0) {
            break;
        }
        expansions += 1;
        if expansions > max_iter {
            return Err(SimError::NonConvergence {
                iterations: expansions,
                residual: fb.abs(),
            });
        }
        a = b;
        step *= 2.0;
        b = guess + dir * step;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    // Normalize to a decreasing function on [lo, hi] for the finisher.
    let (f_lo, _) = f(lo);
    if f_lo >= 0.0 {
        newton_bisect(f, lo, hi, tol, max_iter)
    } else {
        newton_bisect(
            |t| {
                let (v, d) = f(t);
                (-v, -d)
            },
            lo,
            hi,
            tol,
            max_iter,
        )
    }
}

/// Newton with bisection safeguard on [lo, hi] where f(lo) >= 0 >= f(hi).
fn newton_bisect(
    mut f: impl FnMut(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    tol: impl Fn(f64) -> f64,
    max_iter: u32,
) -> Result<f64> {
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for it in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() <= tol(x) {
            return Ok(x);
        }
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > lo.min(hi) && newton < lo.max(hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // The bracket can close to a point before |f| passes a very tight
        // tolerance; accept the midpoint then.
        if (hi - lo).abs() <= f64::EPSILON * (x.abs() + 1.0) {
            let (fx, _) = f(x);
            if fx.abs() <= 1e3 * tol(x) {
                return Ok(x);
            }
            return Err(SimError::NonConvergence {
                iterations: it,
                residual: fx.abs(),
            });
        }
    }
    let (fb, _) = f(best.0);
    if fb.abs() <= tol(best.0) {
        return Ok(best.0);
    }
    Err(SimError::NonConvergence {
        iterations: max_iter,
        residual: best.1,
    })
}
