//! Derivative-free one-dimensional maximisation.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximises a unimodal `f` on `[lo, hi]` by golden-section search.
///
/// Stops once the bracket is narrower than `rel_tol` times its magnitude
/// (with a floor of `rel_tol * 1e-12` for brackets around zero). Returns the
/// best abscissa seen together with its value; the endpoints are always
/// evaluated so boundary maxima are found exactly.
///
/// The objective may return any ordered type. Returning an exact rational
/// keeps comparisons meaningful near a flat optimum, where `f64` values stop
/// resolving the difference long before the abscissa reaches `rel_tol`.
pub fn golden_section_max<V: PartialOrd>(
    mut f: impl FnMut(f64) -> V,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> (f64, V) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    if a == b {
        return best;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        let width = b - a;
        if width <= rel_tol * (a.abs() + b.abs()).max(1e-12) {
            break;
        }
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
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let (x, fx) = golden_section_max(|x| -(x - 3.25).powi(2) + 7.0, 0.0, 10.0, 1e-12);
        assert!((x - 3.25).abs() < 1e-6);
        assert!((fx - 7.0).abs() < 1e-12);
    }

    #[test]
    fn finds_boundary_maximum() {
        let (x, fx) = golden_section_max(|x| -x, 0.0, 5.0, 1e-12);
        assert_eq!(x, 0.0);
        assert_eq!(fx, 0.0);
    }

    #[test]
    fn concave_profit_curve() {
        // composite constant-product round trip with effective reserves (X, Y)
        let (ex, ey) = (189_473.684_210_526_3_f64, 233_918.128_654_970_8_f64);
        let (a, p) = golden_section_max(|a| ey * a / (ex + a) - a, 0.0, 4e6, 1e-12);
        let expect_a = (ex * ey).sqrt() - ex;
        let expect_p = (ey.sqrt() - ex.sqrt()).powi(2);
        assert!((a - expect_a).abs() / expect_a < 1e-6);
        assert!((p - expect_p).abs() < 1e-6);
    }
}
