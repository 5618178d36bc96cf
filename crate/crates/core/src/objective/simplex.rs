//! Euclidean projection onto the probability simplex.

/// Sum tolerance for dual vectors.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// `argmin_{l in simplex} ||l - v||^2` by the sort-and-threshold method.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    assert!(
        v.iter().all(|x| x.is_finite()),
        "cannot project non-finite input"
    );
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - threshold).max(0.0)).collect();
    // absorb rounding so the sum is 1 to machine precision
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        out.iter_mut().for_each(|x| *x /= s);
    }
    out
}

pub fn is_in_simplex(v: &[f64], tol: f64) -> bool {
    !v.is_empty()
        && v.iter().all(|&x| x.is_finite() && x >= -tol)
        && (v.iter().sum::<f64>() - 1.0).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let p = project_simplex(&[0.2, 0.3, 0.5]);
        for (a, b) in p.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[0.6, 0.6]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[-3.0]), vec![1.0]);
    }

    #[test]
    fn grid_oracle_two_dims() {
        // dense grid over the segment l = (s, 1 - s), resolution 1e-4
        for v in [[2.0, 0.0], [0.6, 0.6], [-0.3, 0.9], [0.1, -5.0]] {
            let p = project_simplex(&v);
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..=10_000 {
                let s = k as f64 * 1e-4;
                let d = (s - v[0]).powi(2) + (1.0 - s - v[1]).powi(2);
                if d < best.0 {
                    best = (d, s);
                }
            }
            assert!((p[0] - best.1).abs() <= 1e-4, "{v:?}: {p:?} vs {}", best.1);
        }
    }

    proptest! {
        #[test]
        fn feasible_and_idempotent(v in prop::collection::vec(-10f64..10.0, 1..12)) {
            let p = project_simplex(&v);
            prop_assert!(is_in_simplex(&p, 1e-12));
            let pp = project_simplex(&p);
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
