//! Small dense-vector helpers on `&[f64]`.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Maximum pairwise Euclidean distance.
pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(dist_sq(p, q));
        }
    }
    best.sqrt()
}

/// `y = M x` for a row-major square matrix given as rows.
pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with Rayleigh quotients. Diagonal input short-circuits to the
/// largest diagonal entry.
pub fn lambda_max_psd(m: &[Vec<f64>], tol: f64, max_iter: usize) -> f64 {
    let d = m.len();
    if d == 0 {
        return 0.0;
    }
    let is_diagonal = m
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v == 0.0));
    if is_diagonal {
        return m.iter().enumerate().map(|(i, row)| row[i]).fold(0.0, f64::max);
    }

    // Fixed, non-symmetric start so it is never orthogonal to the top
    // eigenvector by construction.
    let mut rng = crate::rng::Stream::new(0x5eed_1a4b_da00_0001);
    let mut v: Vec<f64> = (0..d).map(|_| 1.0 + rng.uniform()).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);

    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = mat_vec(m, &v);
        let next = dot(&v, &w);
        let wn = norm(&w);
        if wn == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        let converged = (next - lambda).abs() <= tol * next.abs().max(1e-300);
        lambda = next;
        if converged {
            break;
        }
    }
    lambda.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_method_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        assert!((lambda_max_psd(&m, 1e-14, 10_000) - 3.0).abs() < 1e-10);
        // Top eigenvector (1,-1)/sqrt2 is orthogonal to the all-ones vector.
        let m = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        assert!((lambda_max_psd(&m, 1e-14, 10_000) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn power_method_diagonal_is_exact() {
        let m = vec![vec![4.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(lambda_max_psd(&m, 1e-10, 1000), 4.0);
        let z = vec![vec![0.0; 3]; 3];
        assert_eq!(lambda_max_psd(&z, 1e-10, 1000), 0.0);
    }

    #[test]
    fn diameter_of_square() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![2.0, 0.0], vec![2.0, 2.0]];
        assert!((diameter(&pts) - 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(diameter(&pts[..1]), 0.0);
    }
}
