//! Scalar-generic statistics kernels used across the feature extractors,
//! tree learner and scoring code.

use std::cmp::Ordering;

use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::of_usize(xs.len()))
}

/// Population standard deviation (divides by `n`), computed in two passes.
/// Constant input gives exactly zero rather than rounding residue.
pub fn population_sd<T: Scalar>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    if xs.iter().all(|&x| x == xs[0]) {
        return Some(T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::of_usize(xs.len())).sqrt())
}

pub fn min<T: Scalar>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::min)
}

pub fn max<T: Scalar>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::max)
}

/// Least-squares line through a set of `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    /// Slope, in y units per x unit.
    pub gradient: T,
    /// Value of the fitted line at the first point's x.
    pub start_value: T,
    pub n_points: usize,
    /// Distance in x between the first and last fitted points.
    pub span: T,
}

/// Ordinary least squares. Needs at least two points with distinct x;
/// points are expected in ascending x.
pub fn least_squares<T: Scalar>(points: &[(T, T)]) -> Option<LineFit<T>> {
    if points.len() < 2 {
        return None;
    }
    let x0 = points[0].0;
    let n = T::of_usize(points.len());
    // Centre x on the first point so the fit does not depend on absolute time.
    let mx = points.iter().map(|&(x, _)| x - x0).sum::<T>() / n;
    let my = points.iter().map(|&(_, y)| y).sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(x, y) in points {
        let dx = x - x0 - mx;
        sxx += dx * dx;
        sxy += dx * (y - my);
    }
    if sxx <= T::zero() {
        return None;
    }
    let gradient = sxy / sxx;
    let last = points[points.len() - 1].0;
    Some(LineFit {
        gradient,
        start_value: my - gradient * mx,
        n_points: points.len(),
        span: last - x0,
    })
}

fn median_pass<T: Scalar>(xs: &[T], half: usize, out: &mut [T]) {
    let n = xs.len();
    let mut window = Vec::with_capacity(2 * half + 1);
    for i in 0..n {
        window.clear();
        for k in 0..=2 * half {
            // replicate the end values outside the signal
            let j = (i + k).saturating_sub(half).min(n - 1);
            window.push(xs[j]);
        }
        window.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        out[i] = window[half];
    }
}

/// Running-median smoothing repeated until the signal stops changing, so the
/// result is a root of the filter and smoothing it again is a no-op.
/// `window` must be odd.
pub fn median_smooth<T: Scalar>(xs: &[T], window: usize) -> Vec<T> {
    assert!(window % 2 == 1, "median window must be odd");
    let half = window / 2;
    let mut cur = xs.to_vec();
    if xs.len() < 2 || half == 0 {
        return cur;
    }
    let mut next = cur.clone();
    // Convergence with constant end extension takes at most ~n/2 passes.
    for _ in 0..xs.len() {
        median_pass(&cur, half, &mut next);
        if next == cur {
            break;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// `ln Σ exp(x_i)`. Terms are summed largest-first so the result does not
/// depend on input order. Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let mut sorted: Vec<T> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if sorted.is_empty() {
        return T::neg_infinity();
    }
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let top = sorted[0];
    if top == T::neg_infinity() {
        return top;
    }
    let s: T = sorted.iter().map(|&x| (x - top).exp()).sum();
    top + s.ln()
}

/// Shannon entropy in bits of a (possibly unnormalised) non-negative mass vector.
pub fn entropy_bits<T: Scalar>(mass: &[T]) -> T {
    let total: T = mass.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    mass.iter()
        .filter(|&&m| m > T::zero())
        .map(|&m| {
            let p = m / total;
            -p * p.log2()
        })
        .sum()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(xs: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some(b) if !(x > xs[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sd_is_population() {
        assert_relative_eq!(population_sd(&[3.0f64, 5.0]).unwrap(), 1.0);
        assert_relative_eq!(population_sd(&[3.0f32, 5.0]).unwrap(), 1.0);
        assert!(population_sd::<f64>(&[]).is_none());
    }

    #[test]
    fn exact_line() {
        let pts = [(0.0, 100.0), (0.01, 110.0), (0.02, 120.0)];
        let fit = least_squares(&pts).unwrap();
        assert_relative_eq!(fit.gradient, 1000.0, max_relative = 1e-12);
        assert_relative_eq!(fit.start_value, 100.0, max_relative = 1e-12);
        assert_eq!(fit.n_points, 3);
        assert_relative_eq!(fit.span, 0.02);
        assert!(least_squares(&pts[..1]).is_none());
        assert!(least_squares(&[(1.0f64, 2.0), (1.0, 3.0)]).is_none());
    }

    #[test]
    fn line_fit_f32() {
        let pts: Vec<(f32, f32)> = (0..10).map(|i| (i as f32 * 0.01, 50.0 - 3.0 * i as f32)).collect();
        let fit = least_squares(&pts).unwrap();
        assert_relative_eq!(fit.gradient, -300.0, max_relative = 1e-4);
    }

    #[test]
    fn median_removes_spike_keeps_ramp() {
        let x = [100.0, 101.0, 250.0, 103.0, 104.0, 105.0];
        let s = median_smooth(&x, 5);
        assert!(s.iter().all(|&v| v < 200.0));
        let ramp: Vec<f64> = (0..8).map(|i| 100.0 + i as f64).collect();
        assert_eq!(median_smooth(&ramp, 5), ramp);
    }

    #[test]
    fn median_oscillation_converges() {
        let x = [0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let s = median_smooth(&x, 5);
        assert_eq!(median_smooth(&s, 5), s);
    }

    #[test]
    fn lse() {
        let v = [0.0f64, 0.0];
        assert_relative_eq!(log_sum_exp(&v), 2f64.ln());
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert_relative_eq!(log_sum_exp(&[-1000.0, -1000.0 + 2f64.ln()]), -1000.0 + 3f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn entropy_and_argmax() {
        assert_relative_eq!(entropy_bits(&[1.0f64, 1.0]), 1.0);
        assert_relative_eq!(entropy_bits(&[5.0f64, 0.0]), 0.0);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax::<f64>(&[]), None);
    }
}
