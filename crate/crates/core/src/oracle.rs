//! Slow reference implementations that share no code with the production
//! paths. Tests and the `check` command compare against them.

/// All eigenvalues of a symmetric matrix (row-major), by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut a = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// `1 - |lambda_2|` from the Jacobi spectrum, `lambda_2` being the largest
/// eigenvalue modulus once one eigenvalue equal to 1 is removed.
pub fn spectral_gap(n: usize, w: &[f64]) -> f64 {
    let mut ev = jacobi_eigenvalues(n, w);
    let k = ev
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).abs().partial_cmp(&(b.1 - 1.0).abs()).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    ev.remove(k);
    1.0 - ev.iter().fold(0.0f64, |a, e| a.max(e.abs()))
}

/// Euclidean projection onto the simplex by enumerating supports: for every
/// nonempty support `S`, the candidate `x_S = v_S - (sum v_S - 1)/|S|`; keep
/// feasible candidates and return the nearest. Exponential in `m`.
pub fn simplex_projection_bruteforce(v: &[f64]) -> Vec<f64> {
    let m = v.len();
    assert!(m <= 16);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let shift = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; m];
        let mut ok = true;
        for &i in &support {
            x[i] = v[i] - shift;
            if x[i] < 0.0 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.expect("the single-vertex supports are always feasible")
        .1
}

/// Central finite-difference gradient with step `h`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = x[k];
            x[k] = orig + h;
            let up = f(&x);
            x[k] = orig - h;
            let down = f(&x);
            x[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Consensus error from its pairwise form `(1/2m) sum_{i,j} ||v_i - v_j||^2`.
pub fn consensus_error_pairwise(vectors: &[Vec<f64>]) -> f64 {
    let m = vectors.len();
    let mut total = 0.0;
    for a in vectors {
        for b in vectors {
            total += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        }
    }
    total / (2.0 * m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_known_spectra() {
        let ev = jacobi_eigenvalues(2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        let third = 1.0 / 3.0;
        let ring4 = [
            third, third, 0.0, third, //
            third, third, third, 0.0, //
            0.0, third, third, third, //
            third, 0.0, third, third,
        ];
        let ev = jacobi_eigenvalues(4, &ring4);
        let want = [1.0, third, third, -third];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
        assert!((spectral_gap(4, &ring4) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_projection_examples() {
        assert_eq!(
            simplex_projection_bruteforce(&[0.2, 0.3, 0.5]),
            vec![0.2, 0.3, 0.5]
        );
        let p = simplex_projection_bruteforce(&[2.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);
        let p = simplex_projection_bruteforce(&[0.0, 0.0, 0.0]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn finite_difference_of_polynomial() {
        let g = finite_difference(|x| x[0].powi(3) + 2.0 * x[0] * x[1], &[1.0, 2.0], 1e-5);
        assert!((g[0] - 7.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
    }
}
