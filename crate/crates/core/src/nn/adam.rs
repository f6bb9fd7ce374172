use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    fn update(&self, step: u64, lr: f64, p: &mut f64, g: f64, m: &mut f64, v: &mut f64) {
        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
        let m_hat = *m / (1.0 - self.beta1.powi(step as i32));
        let v_hat = *v / (1.0 - self.beta2.powi(step as i32));
        *p -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
    }
}

/// Bias-corrected Adam over a fixed list of dense tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    names: Vec<String>,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step_count: u64,
}

impl Adam {
    pub fn new(names: Vec<String>, sizes: &[usize], config: AdamConfig) -> Self {
        assert_eq!(names.len(), sizes.len());
        Self {
            config,
            names,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update in place. A non-finite gradient aborts before any
    /// parameter changes.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) -> Result<()> {
        check_len("adam tensor count", self.first.len(), params.len())?;
        check_len("adam gradient count", self.first.len(), grads.len())?;
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            check_len("adam tensor", self.first[i].len(), p.len())?;
            check_len("adam gradient", self.first[i].len(), g.len())?;
            if !crate::math::all_finite(g) {
                return Err(Error::Training(format!(
                    "non-finite gradient for tensor '{}'",
                    self.names[i]
                )));
            }
        }
        self.step_count += 1;
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for j in 0..p.len() {
                self.config
                    .update(self.step_count, lr, &mut p[j], g[j], &mut m[j], &mut v[j]);
            }
        }
        Ok(())
    }
}

/// Lazy Adam for embedding matrices: only rows that receive a gradient are
/// updated, each with its own moments and step counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowAdam {
    pub config: AdamConfig,
    state: HashMap<usize, RowState>,
}

#[derive(Debug, Clone, PartialEq)]
struct RowState {
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl RowAdam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            state: HashMap::new(),
        }
    }

    /// Updates `matrix` (row-major, `width` columns) for each `(row, grad)`.
    pub fn step<'a>(
        &mut self,
        name: &str,
        matrix: &mut [f64],
        width: usize,
        rows: impl IntoIterator<Item = (usize, &'a [f64])>,
        lr: f64,
    ) -> Result<()> {
        let rows: Vec<(usize, &[f64])> = rows.into_iter().collect();
        for (row, g) in &rows {
            check_len("row gradient", width, g.len())?;
            if !crate::math::all_finite(g) {
                return Err(Error::Training(format!(
                    "non-finite gradient for {name} row {row}"
                )));
            }
        }
        for (row, g) in rows {
            let st = self.state.entry(row).or_insert_with(|| RowState {
                first: vec![0.0; width],
                second: vec![0.0; width],
                steps: 0,
            });
            st.steps += 1;
            let p = &mut matrix[row * width..(row + 1) * width];
            for j in 0..width {
                self.config.update(
                    st.steps,
                    lr,
                    &mut p[j],
                    g[j],
                    &mut st.first[j],
                    &mut st.second[j],
                );
            }
        }
        Ok(())
    }
}
