//! One-dimensional minimization of piecewise-smooth functions: a dense scan
//! locates the basin, golden-section search refines inside the bracket.

/// Result of [`scan_minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimize `f` on `[lo, hi]`.
///
/// `candidates` are extra points (kinks, endpoints) evaluated exactly; a
/// candidate wins whenever it beats the refined scan minimum. Refinement
/// stops once the bracket is below `rel_tol` relative to its scale.
pub fn scan_minimize<F>(f: F, lo: f64, hi: f64, scan_points: usize, candidates: &[f64], rel_tol: f64) -> Minimum
where
    F: Fn(f64) -> f64,
{
    assert!(lo <= hi, "empty search interval");
    let n = scan_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let at = |i: usize| if i + 1 == n { hi } else { lo + step * i as f64 };

    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..n {
        let v = f(at(i));
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut best = Minimum {
        x: at(best_i),
        value: best_v,
    };

    if step > 0.0 {
        let mut a = at(best_i.saturating_sub(1));
        let mut b = at((best_i + 1).min(n - 1));
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = f(c);
        let mut fd = f(d);
        let scale = a.abs().max(b.abs()).max(1e-300);
        for _ in 0..200 {
            if (b - a) <= rel_tol * scale {
                break;
            }
            if fc < fd {
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
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.value {
                best = Minimum { x, value: v };
            }
        }
    }

    for &x in candidates {
        if x >= lo && x <= hi {
            let v = f(x);
            if v < best.value {
                best = Minimum { x, value: v };
            }
        }
    }
    best
}
