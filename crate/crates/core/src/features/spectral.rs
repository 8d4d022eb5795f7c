//! Largest singular value by power iteration on `WᵀW`.

use ndarray::{Array1, ArrayView2, Axis};

pub const DEFAULT_ITERS: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Leading singular value with its left and right singular vectors.
#[derive(Debug, Clone)]
pub struct SingularTriplet {
    pub value: f64,
    pub u: Array1<f64>,
    pub v: Array1<f64>,
}

fn normalize(v: &mut Array1<f64>) -> f64 {
    let n = v.dot(v).sqrt();
    if n > 0.0 {
        v.mapv_inplace(|x| x / n);
    }
    n
}

/// Power iteration from the normalized all-ones vector. Stops after `iters`
/// rounds or when the estimate changes by less than `tol` relatively.
pub fn top_singular(w: ArrayView2<'_, f64>, iters: usize, tol: f64) -> SingularTriplet {
    let (rows, cols) = w.dim();
    let zero = SingularTriplet {
        value: 0.0,
        u: Array1::zeros(rows),
        v: Array1::zeros(cols),
    };
    if rows == 0 || cols == 0 {
        return zero;
    }
    let mut v = Array1::from_elem(cols, 1.0 / (cols as f64).sqrt());
    let mut u = w.dot(&v);
    if normalize(&mut u) == 0.0 {
        // The all-ones start lies in the null space; restart from the
        // heaviest column.
        let norms = w.map_axis(Axis(0), |c| c.dot(&c));
        let (best, &mass) = norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        if mass == 0.0 {
            return zero;
        }
        v.fill(0.0);
        v[best] = 1.0;
        u = w.dot(&v);
        normalize(&mut u);
    }
    let mut value = 0.0;
    for _ in 0..iters.max(1) {
        v = w.t().dot(&u);
        let next = normalize(&mut v);
        u = w.dot(&v);
        normalize(&mut u);
        let done = (next - value).abs() <= tol * next;
        value = next;
        if done {
            break;
        }
    }
    SingularTriplet { value, u, v }
}

pub fn spectral_norm(w: ArrayView2<'_, f64>, iters: usize, tol: f64) -> f64 {
    top_singular(w, iters, tol).value
}
