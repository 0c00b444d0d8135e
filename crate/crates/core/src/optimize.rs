//! Derivative-free maximisation on a closed interval: uniform grid scan
//! followed by golden-section refinement of the best bracket.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`,
/// stopping when the bracket is narrower than `width`. Returns `(x, f(x))`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if !(a < c && c < d && d < b) {
            break;
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximum of `f` on `[lo, hi]` from an `n`-point grid (both endpoints
/// included) refined by golden-section search around the best grid point.
///
/// Ties are resolved toward the smaller abscissa, both on the grid and
/// between the grid and the refined point. Returns `(x, f(x))`.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize, width: f64) -> (f64, f64) {
    assert!(n >= 3, "grid needs at least three points");
    let step = (hi - lo) / (n - 1) as f64;
    let at = |j: usize| if j == n - 1 { hi } else { lo + j as f64 * step };
    let mut best_j = 0;
    let mut best = f(lo);
    for j in 1..n {
        let v = f(at(j));
        if v > best {
            best = v;
            best_j = j;
        }
    }
    let a = at(best_j.saturating_sub(1));
    let b = at((best_j + 1).min(n - 1));
    let (x, v) = golden_max(&mut f, a, b, width);
    if v > best {
        (x, v)
    } else {
        (at(best_j), best)
    }
}
