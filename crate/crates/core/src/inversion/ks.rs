use super::DensityTable;
use crate::oracle::EmpiricalSpectrum;

/// Kolmogorov–Smirnov distance between the table's CDF and the empirical CDF.
///
/// Both CDFs jump, so the supremum is taken over left and right limits at
/// every sample value and every table atom. The table CDF is clamped to
/// `[0, 1]` but not renormalized.
pub fn ks_between(table: &DensityTable, emp: &EmpiricalSpectrum) -> f64 {
    let v = &emp.values;
    if v.is_empty() {
        return 1.0;
    }
    let n = v.len() as f64;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    // empirical CDF limits at x: (count < x, count <= x), with tolerance
    let emp_limits = |x: f64| {
        let below = v.partition_point(|&s| s < x && !close(s, x));
        let upto = v.partition_point(|&s| s <= x || close(s, x));
        (below as f64 / n, upto as f64 / n)
    };
    let table_limits = |x: f64| {
        let cont = table.integral_to(x);
        let mut left = cont;
        let mut right = cont;
        for &(c, m) in &table.atoms {
            if close(c, x) {
                right += m;
            } else if c < x {
                left += m;
                right += m;
            }
        }
        (left.clamp(0.0, 1.0), right.clamp(0.0, 1.0))
    };
    let mut d: f64 = 0.0;
    let mut check = |x: f64| {
        let (el, er) = emp_limits(x);
        let (tl, tr) = table_limits(x);
        d = d.max((el - tl).abs()).max((er - tr).abs());
    };
    let mut last = f64::NAN;
    for &x in v {
        if x != last {
            check(x);
            last = x;
        }
    }
    for &(c, _) in &table.atoms {
        check(c);
    }
    d
}
