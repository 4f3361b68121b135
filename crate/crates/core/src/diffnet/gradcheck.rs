//! Central finite-difference comparison for analytic gradients.

/// Outcome of [`check_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub checked: usize,
    /// Indices whose analytic and numeric values disagree.
    pub mismatches: Vec<usize>,
    /// Largest relative error among entries above the absolute floor.
    pub max_relative_error: f64,
}

impl GradientCheck {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares `analytic[i]` with `(f(p + h·eᵢ) − f(p − h·eᵢ)) / 2h` for every
/// coordinate. An entry agrees if the absolute difference is at most
/// `abs_tol` or the relative difference at most `rel_tol`.
pub fn check_gradient(
    params: &[f64],
    analytic: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> GradientCheck {
    assert_eq!(
        params.len(),
        analytic.len(),
        "one analytic entry per parameter"
    );
    let mut p = params.to_vec();
    let mut mismatches = Vec::new();
    let mut max_rel = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = f(&p);
        p[i] = orig - h;
        let down = f(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let diff = (numeric - analytic[i]).abs();
        if diff <= abs_tol {
            continue;
        }
        let rel = diff / numeric.abs().max(analytic[i].abs());
        max_rel = max_rel.max(rel);
        if rel > rel_tol {
            mismatches.push(i);
        }
    }
    GradientCheck {
        checked: p.len(),
        mismatches,
        max_relative_error: max_rel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::{mse, mse_grad, Activation, Dense, Matrix, Mlp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn flat(mlp: &Mlp) -> Vec<f64> {
        mlp.layers()
            .iter()
            .flat_map(|l| l.weights().as_slice().iter().chain(l.biases()).copied())
            .collect()
    }

    fn rebuild(template: &Mlp, values: &[f64]) -> Mlp {
        let mut m = template.clone();
        let mut off = 0;
        for l in m.layers_mut() {
            for t in l.tensors_mut() {
                t.copy_from_slice(&values[off..off + t.len()]);
                off += t.len();
            }
        }
        m
    }

    #[test]
    fn two_layer_mlp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mlp = Mlp::new(vec![
            Dense::glorot(3, 5, Activation::Sigmoid, &mut rng),
            Dense::glorot(5, 2, Activation::Identity, &mut rng),
        ])
        .unwrap();
        let mut sample = |r, c| {
            let v = (0..r * c)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            Matrix::from_vec(r, c, v).unwrap()
        };
        let x = sample(4, 3);
        let y = sample(4, 2);

        let trace = mlp.forward_trace(&x).unwrap();
        let g = mse_grad(trace.output(), &y).unwrap();
        let (grads, _) = mlp.backward(&trace, &g).unwrap();
        let analytic: Vec<f64> = grads
            .iter()
            .flat_map(|g| g.weights.as_slice().iter().chain(&g.biases).copied())
            .collect();
        let check = check_gradient(
            &flat(&mlp),
            &analytic,
            |p| mse(&rebuild(&mlp, p).forward(&x).unwrap(), &y).unwrap(),
            1e-4,
            1e-4,
            1e-6,
        );
        assert!(check.passed(), "{check:?}");
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let check = check_gradient(&[1.0, -2.0], &[0.0, 0.0], |_| 3.0, 1e-4, 1e-4, 1e-6);
        assert!(check.passed());
        let wrong = check_gradient(&[1.0], &[1.0], |p| p[0] * p[0], 1e-4, 1e-4, 1e-6);
        assert!(!wrong.passed());
    }
}
