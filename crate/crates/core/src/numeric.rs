//! Cancellation-free evaluations of the small-argument expressions that show
//! up in Lévy–Khintchine integrands and closed-form Fourier transforms.

use num_complex::Complex64;

/// `e^{iθ} - 1`.
pub fn cis_m1(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, theta.sin())
}

/// `e^{iθ} - 1 - iθ`.
pub fn cis_m1_mi(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    let im = if theta.abs() < 0.1 {
        let t2 = theta * theta;
        -theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)))
    } else {
        theta.sin() - theta
    };
    Complex64::new(-2.0 * s * s, im)
}

/// `(e^w - 1) / w`, equal to `∫_0^1 e^{ws} ds`.
pub fn phi1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-2 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..8 {
            term = term * w / k as f64;
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// `∫_0^1 s e^{ws} ds = (e^w (w - 1) + 1) / w^2`.
pub fn phi2(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        // sum_k w^k / (k! (k + 2))
        let mut pow = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.5, 0.0);
        for k in 1..14 {
            pow = pow * w / k as f64;
            sum += pow / (k + 2) as f64;
        }
        sum
    } else {
        (w.exp() * (w - 1.0) + 1.0) / (w * w)
    }
}

/// Trapezoid rule on a (not necessarily uniform) grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
