//! Routh–Hurwitz test for the error-dynamics polynomial.

/// True iff `θ^{ℓ+1} + α_ℓ θ^ℓ + … + α_0` has every root in the open left
/// half-plane. `alphas` is ordered `α_0, …, α_ℓ`.
pub fn hurwitz_check(alphas: &[f64]) -> bool {
    if alphas.len() < 2 {
        return false;
    }
    let mut descending = Vec::with_capacity(alphas.len() + 1);
    descending.push(1.0);
    descending.extend(alphas.iter().rev());
    routh_hurwitz(&descending)
}

/// Routh table on a polynomial given by descending coefficients
/// `a_n θ^n + … + a_0`. All first-column entries must be strictly positive.
pub fn routh_hurwitz(descending: &[f64]) -> bool {
    if descending.is_empty() || descending.iter().any(|c| !c.is_finite()) {
        return false;
    }
    if descending[0] <= 0.0 {
        return false;
    }
    let degree = descending.len() - 1;
    if degree == 0 {
        return true;
    }
    let width = degree / 2 + 1;
    let row = |start: usize| -> Vec<f64> {
        (0..width).map(|j| descending.get(start + 2 * j).copied().unwrap_or(0.0)).collect()
    };
    let mut upper = row(0);
    let mut lower = row(1);
    for _ in 0..degree {
        let pivot = lower[0];
        if pivot <= 0.0 {
            return false;
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = upper.get(j + 1).copied().unwrap_or(0.0);
                let b = lower.get(j + 1).copied().unwrap_or(0.0);
                (pivot * a - upper[0] * b) / pivot
            })
            .collect();
        upper = lower;
        lower = next;
    }
    true
}

/// Product of two polynomials in descending-coefficient form.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_preset() {
        assert!(hurwitz_check(&[100.0, 20.0]));
    }

    #[test]
    fn sign_flip_fails() {
        assert!(!hurwitz_check(&[1.0, -1.0]));
        assert!(!hurwitz_check(&[-100.0, 20.0]));
    }

    #[test]
    fn binomial_presets() {
        let a = 100f64.powf(1.0 / 3.0);
        assert!(hurwitz_check(&[100.0, 3.0 * 100f64.powf(2.0 / 3.0), 3.0 * a]));
        let b = 100f64.powf(0.25);
        assert!(hurwitz_check(&[b.powi(4), 4.0 * b.powi(3), 6.0 * b * b, 4.0 * b]));
    }

    #[test]
    fn positive_but_unstable_cubic() {
        // θ³ + θ² + θ + 2: Routh entry (1·1 − 2)/1 < 0.
        assert!(!hurwitz_check(&[2.0, 1.0, 1.0]));
        // θ³ + θ² + θ + 1 has roots on the imaginary axis.
        assert!(!hurwitz_check(&[1.0, 1.0, 1.0]));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(!hurwitz_check(&[]));
        assert!(!hurwitz_check(&[1.0]));
        assert!(!hurwitz_check(&[f64::NAN, 1.0]));
    }

    #[test]
    fn product_of_stable_factors() {
        let p = poly_mul(&[1.0, 2.0], &[1.0, 4.0, 4.0]);
        assert_eq!(p, vec![1.0, 6.0, 12.0, 8.0]);
        assert!(routh_hurwitz(&p));
    }
}
