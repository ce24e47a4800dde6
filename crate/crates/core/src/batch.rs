//! Batched evaluation with a strict loop-equivalence contract.
//!
//! Every helper here is semantically a `for` loop over the leading batch axis.
//! Execution may fan out across threads, but elements are pure functions of
//! their inputs and results are collected in batch order, so the output is
//! bit-identical to the sequential loop for any worker count. Per-element
//! randomness must be passed in as explicit statuses or substreams.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::diff::{value_and_grad, GradientResult, Observable, ParamCircuit};
use crate::pauli::{parameterized_measurement, PauliStructure};
use crate::{Error, Result};

/// Which argument positions are batched, which are differentiated, and
/// whether the function returns an auxiliary (undifferentiated) output.
/// When `vectorized_argnums` and `argnums` overlap, gradients are reported
/// per batch row instead of summed.
#[derive(Debug, Clone, Default)]
pub struct BatchSpec {
    pub vectorized_argnums: Vec<usize>,
    pub argnums: Vec<usize>,
    pub has_aux: bool,
}

impl BatchSpec {
    pub fn overlapped(&self) -> bool {
        self.vectorized_argnums
            .iter()
            .any(|v| self.argnums.contains(v))
    }
}

/// Map `f` over the batch in parallel; equals the sequential loop element by
/// element.
pub fn vmap_apply<T: Sync, O: Send>(f: impl Fn(&T) -> O + Sync + Send, batch: &[T]) -> Vec<O> {
    batch.par_iter().map(f).collect()
}

/// Fallible variant of [`vmap_apply`].
pub fn try_vmap_apply<T: Sync, O: Send>(
    f: impl Fn(&T) -> Result<O> + Sync + Send,
    batch: &[T],
) -> Result<Vec<O>> {
    batch.par_iter().map(f).collect()
}

/// Batched value-and-grad over auxiliary inputs: values per element, gradient
/// of the shared differentiated argument summed over the batch.
pub fn vectorized_value_and_grad<T: Sync>(
    vg: impl Fn(&T, &[f64]) -> Result<GradientResult> + Sync + Send,
    batch: &[T],
    y: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let per: Vec<GradientResult> = batch.par_iter().map(|x| vg(x, y)).collect::<Result<_>>()?;
    let values = per.iter().map(|r| r.value).collect();
    let mut grad = vec![0.0f64; y.len()];
    // fixed summation order for reproducibility
    for r in &per {
        if r.grad.len() != y.len() {
            return Err(Error::shape("per-element gradient length mismatch"));
        }
        for (g, d) in grad.iter_mut().zip(&r.grad) {
            *g += d;
        }
    }
    Ok((values, grad))
}

/// Batched value-and-grad where the batched argument is itself the
/// differentiated one: per-row values and per-row gradients.
pub fn vectorized_value_and_grad_overlapped(
    vg: impl Fn(&[f64]) -> Result<GradientResult> + Sync + Send,
    rows: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let per: Vec<GradientResult> = rows
        .par_iter()
        .map(|row| vg(row))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().map(|r| (r.value, r.grad)).unzip())
}

/// Aux-carrying variant: values per element, summed gradient, stacked aux.
pub fn vectorized_value_and_grad_aux<T: Sync, A: Send>(
    vg: impl Fn(&T, &[f64]) -> Result<(GradientResult, A)> + Sync + Send,
    batch: &[T],
    y: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<A>)> {
    let per: Vec<(GradientResult, A)> =
        batch.par_iter().map(|x| vg(x, y)).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(per.len());
    let mut aux = Vec::with_capacity(per.len());
    let mut grad = vec![0.0f64; y.len()];
    for (r, a) in per {
        values.push(r.value);
        for (g, d) in grad.iter_mut().zip(&r.grad) {
            *g += d;
        }
        aux.push(a);
    }
    Ok((values, grad, aux))
}

// ---------------------------------------------------------------------------
// concrete experiment helpers
// ---------------------------------------------------------------------------

/// Batch over input states of a weight-parameterized circuit: per-state
/// energies plus the weight gradient summed over states.
pub fn batched_states(
    n: usize,
    n_params: usize,
    build: impl Fn(&[f64]) -> Circuit + Send + Sync + Clone + 'static,
    observable: &Observable,
    states: &[Vec<Complex64>],
    weights: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    vectorized_value_and_grad(
        |state: &Vec<Complex64>, y| {
            let state = state.clone();
            let template = build.clone();
            let pc = ParamCircuit::new(n_params, move |theta| {
                let body = template(theta);
                let mut c = Circuit::with_input(n, state.clone()).expect("state length checked");
                c.set_split_config(body.split_config());
                c.append(&body).expect("same width")
            });
            value_and_grad(&pc, observable, y)
        },
        states,
        weights,
    )
}

/// Batch over per-circuit parameter rows `x_j` of a two-argument family
/// `U(weights, x)`: per-circuit energies plus the weight gradient summed.
pub fn batched_circuit_params(
    n_params: usize,
    build: impl Fn(&[f64], &[f64]) -> Circuit + Send + Sync + Clone + 'static,
    observable: &Observable,
    weights: &[f64],
    xs: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    vectorized_value_and_grad(
        |x: &Vec<f64>, y| {
            let x = x.clone();
            let template = build.clone();
            let pc = ParamCircuit::new(n_params, move |theta| template(theta, &x));
            value_and_grad(&pc, observable, y)
        },
        xs,
        weights,
    )
}

/// Batch a fixed circuit over Pauli structures: one expectation per structure.
pub fn batched_structures(c: &Circuit, structures: &[PauliStructure]) -> Result<Vec<f64>> {
    try_vmap_apply(|s: &PauliStructure| parameterized_measurement(c, s), structures)
}

/// Batch a status-parameterized trajectory builder over status rows,
/// returning the stacked output states.
pub fn batched_mc_status(
    build: impl Fn(&[f64]) -> Result<Circuit> + Sync + Send,
    statuses: &[Vec<f64>],
) -> Result<Vec<Vec<Complex64>>> {
    try_vmap_apply(|row: &Vec<f64>| build(row)?.state(), statuses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vmap_square_matches_loop() {
        let out = vmap_apply(|x: &f64| x * x, &[1.0, 2.0, 3.0]);
        assert_eq!(out, vec![1.0, 4.0, 9.0]);
    }

    #[test]
    fn toy_vvag_example() {
        // f(x, y) = x0 * x1 * y0^2 over rows of X with y = [2]
        let xs = vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![0.0, -1.0]];
        let (values, grad) = vectorized_value_and_grad(
            |x: &Vec<f64>, y| {
                Ok(GradientResult {
                    value: x[0] * x[1] * y[0] * y[0],
                    grad: vec![2.0 * x[0] * x[1] * y[0]],
                })
            },
            &xs,
            &[2.0],
        )
        .unwrap();
        assert_eq!(values, vec![8.0, 24.0, 0.0]);
        assert_eq!(grad, vec![32.0]);
    }

    #[test]
    fn gradient_additivity_equals_sequential_sum() {
        let xs: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![i as f64 * 0.3, 1.0 - i as f64 * 0.1])
            .collect();
        let y = [0.4, -0.2];
        let vg = |x: &Vec<f64>, y: &[f64]| {
            Ok(GradientResult {
                value: x[0] * y[0] + x[1] * y[1] * y[1],
                grad: vec![x[0], 2.0 * x[1] * y[1]],
            })
        };
        let (values, grad) = vectorized_value_and_grad(vg, &xs, &y).unwrap();
        // sequential loop oracle
        let mut loop_values = Vec::new();
        let mut loop_grad = vec![0.0f64; y.len()];
        for x in &xs {
            let r = vg(x, &y).unwrap();
            loop_values.push(r.value);
            for (g, d) in loop_grad.iter_mut().zip(&r.grad) {
                *g += d;
            }
        }
        assert_eq!(values, loop_values);
        for (a, b) in grad.iter().zip(&loop_grad) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parallel_determinism_across_repeat_runs() {
        let xs: Vec<Vec<f64>> = (0..16).map(|i| vec![(i as f64).sin(), 0.5]).collect();
        let run = || {
            vectorized_value_and_grad(
                |x: &Vec<f64>, y: &[f64]| {
                    Ok(GradientResult { value: x[0] * y[0], grad: vec![x[0]] })
                },
                &xs,
                &[1.5],
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
