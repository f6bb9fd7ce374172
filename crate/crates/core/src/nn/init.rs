use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// (Semi-)orthogonal matrix from the QR factorization of a Gaussian draw.
    Orthogonal,
    /// `U(−√(6/fan_in), √(6/fan_in))`.
    FanUniform,
}

/// Returns a row-major `rows × cols` matrix.
pub fn init_dense(rows: usize, cols: usize, scheme: InitScheme, rng: &mut impl Rng) -> Vec<f64> {
    match scheme {
        InitScheme::FanUniform => {
            let bound = (6.0 / cols.max(1) as f64).sqrt();
            (0..rows * cols)
                .map(|_| rng.random_range(-bound..=bound))
                .collect()
        }
        InitScheme::Orthogonal => {
            let tall = rows >= cols;
            let (r, c) = if tall { (rows, cols) } else { (cols, rows) };
            let gaussian = DMatrix::<f64>::from_fn(r, c, |_, _| rng.sample(StandardNormal));
            let qr = gaussian.qr();
            let mut q = qr.q();
            let diag = qr.r().diagonal();
            // Sign correction makes the factorization unique.
            for j in 0..c {
                if diag[j] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            let q = if tall { q } else { q.transpose() };
            let mut out = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for j in 0..cols {
                    out.push(q[(i, j)]);
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn gram_error(w: &[f64], rows: usize, cols: usize) -> f64 {
        let m = DMatrix::from_row_slice(rows, cols, w);
        let g = if rows >= cols {
            m.transpose() * &m
        } else {
            &m * m.transpose()
        };
        let k = rows.min(cols);
        (g - DMatrix::<f64>::identity(k, k)).abs().max()
    }

    #[test]
    fn orthogonal_square_tall_and_wide() {
        let mut rng = stream(3, Stream::TeacherInit(0));
        for (r, c) in [(4, 4), (6, 3), (3, 6)] {
            let w = init_dense(r, c, InitScheme::Orthogonal, &mut rng);
            assert!(gram_error(&w, r, c) < 1e-6, "{r}x{c}");
        }
    }

    #[test]
    fn orthogonal_is_seed_deterministic() {
        let a = init_dense(
            5,
            5,
            InitScheme::Orthogonal,
            &mut stream(9, Stream::TeacherInit(1)),
        );
        let b = init_dense(
            5,
            5,
            InitScheme::Orthogonal,
            &mut stream(9, Stream::TeacherInit(1)),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn fan_uniform_respects_bound() {
        let w = init_dense(
            100,
            100,
            InitScheme::FanUniform,
            &mut stream(1, Stream::TeacherInit(0)),
        );
        let bound = (6.0f64 / 100.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
        assert!(w.iter().any(|v| v.abs() > 0.5 * bound));
    }
}
