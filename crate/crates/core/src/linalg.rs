//! Small dense helpers: Perron eigenpairs and stationary distributions.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Perron root and right eigenvector of a non-negative square matrix.
///
/// Power iteration on `A + I`, which shares the Perron vector of `A` but is
/// aperiodic whenever `A` is irreducible. The vector is normalised to unit
/// maximum. Stops once `max |A v - lambda v| <= tol * lambda`.
pub fn perron_pair(matrix: &[Vec<f64>], tol: f64, max_iters: usize) -> Result<(f64, Vec<f64>)> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("perron_pair needs a non-empty square matrix".into()));
    }
    if matrix.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix entries must be finite and non-negative".into()));
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        matrix
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };
    let mut v = vec![1.0; n];
    for _ in 0..max_iters {
        let av = apply(&v);
        let mut shifted: Vec<f64> = av.iter().zip(&v).map(|(a, b)| a + b).collect();
        let scale = shifted.iter().cloned().fold(0.0, f64::max);
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::NonConvergence("power iteration collapsed to zero".into()));
        }
        shifted.iter_mut().for_each(|x| *x /= scale);
        v = shifted;

        let av = apply(&v);
        let lambda = av.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|b| b * b).sum::<f64>();
        let resid = av
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        if lambda > 0.0 && resid <= tol * lambda {
            return Ok((lambda, v));
        }
    }
    Err(Error::NonConvergence(format!(
        "power iteration did not reach tolerance {tol} in {max_iters} iterations"
    )))
}

/// Stationary distribution of a finite Markov chain given as a row-stochastic
/// matrix. Transient states receive zero mass; more than one closed
/// communicating class is an error.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = transition.len();
    let closed = closed_classes(transition);
    if closed.len() != 1 {
        return Err(Error::Reducible(closed.len()));
    }
    let class = &closed[0];
    let k = class.len();
    // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (col, &j) in class.iter().enumerate() {
        for (row, &i) in class.iter().enumerate() {
            a[(col, row)] = transition[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for row in 0..k {
        a[(k - 1, row)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NonConvergence("singular stationary system".into()))?;
    let mut pi = vec![0.0; n];
    for (idx, &state) in class.iter().enumerate() {
        pi[state] = sol[idx].max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// Closed communicating classes (recurrent classes) of the support graph.
pub fn closed_classes(transition: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = transition.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for (j, &p) in transition[i].iter().enumerate() {
                    if p > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        })
        .collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        class.iter().for_each(|&j| assigned[j] = true);
        let is_closed = class
            .iter()
            .all(|&j| (0..n).all(|t| !reach[j][t] || class.contains(&t)));
        if is_closed {
            classes.push(class);
        }
    }
    classes
}
