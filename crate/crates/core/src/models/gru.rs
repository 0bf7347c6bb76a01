//! Single-layer GRU over row-vector inputs.
//!
//! ```text
//! z  = σ(x Wz + h Uz + bz)
//! r  = σ(x Wr + h Ur + br)
//! n  = tanh(x Wn + bn + r ⊙ (h Un + bhn))
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```

use crate::tensor::{sigmoid, Matrix, SeededRng};
use crate::{Error, Result};

use super::glorot;

#[derive(Debug, Clone, PartialEq)]
pub struct Gru {
    pub wz: Matrix,
    pub uz: Matrix,
    pub bz: Matrix,
    pub wr: Matrix,
    pub ur: Matrix,
    pub br: Matrix,
    pub wn: Matrix,
    pub un: Matrix,
    pub bn: Matrix,
    pub bhn: Matrix,
}

#[derive(Debug, Clone)]
pub struct GruStep {
    x: Matrix,
    h_prev: Matrix,
    z: Matrix,
    r: Matrix,
    n: Matrix,
    /// `h Un + bhn`
    g: Matrix,
}

impl Gru {
    pub const N_TENSORS: usize = 10;

    pub fn new(input: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        Gru {
            wz: glorot(input, hidden, rng),
            uz: glorot(hidden, hidden, rng),
            bz: Matrix::zeros(1, hidden),
            wr: glorot(input, hidden, rng),
            ur: glorot(hidden, hidden, rng),
            br: Matrix::zeros(1, hidden),
            wn: glorot(input, hidden, rng),
            un: glorot(hidden, hidden, rng),
            bn: Matrix::zeros(1, hidden),
            bhn: Matrix::zeros(1, hidden),
        }
    }

    pub fn input(&self) -> usize {
        self.wz.rows()
    }

    pub fn hidden(&self) -> usize {
        self.uz.rows()
    }

    pub fn step(&self, x: &Matrix, h: &Matrix) -> Result<(Matrix, GruStep)> {
        if x.shape() != (1, self.input()) || h.shape() != (1, self.hidden()) {
            return Err(Error::Shape {
                op: "gru_step",
                left: x.shape(),
                right: h.shape(),
            });
        }
        let z = x.matmul(&self.wz)?.add(&h.matmul(&self.uz)?)?.add(&self.bz)?.map(sigmoid);
        let r = x.matmul(&self.wr)?.add(&h.matmul(&self.ur)?)?.add(&self.br)?.map(sigmoid);
        let g = h.matmul(&self.un)?.add(&self.bhn)?;
        let n = x.matmul(&self.wn)?.add(&self.bn)?.add(&r.hadamard(&g)?)?.map(f64::tanh);
        let mut h_new = Matrix::zeros(1, self.hidden());
        for j in 0..self.hidden() {
            let zj = z.get(0, j);
            h_new.set(0, j, (1.0 - zj) * n.get(0, j) + zj * h.get(0, j));
        }
        Ok((
            h_new,
            GruStep {
                x: x.clone(),
                h_prev: h.clone(),
                z,
                r,
                n,
                g,
            },
        ))
    }

    /// Runs the sequence from a zero hidden state.
    pub fn forward(&self, xs: &[Matrix]) -> Result<(Matrix, Vec<GruStep>)> {
        let mut h = Matrix::zeros(1, self.hidden());
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            let (h_new, st) = self.step(x, &h)?;
            steps.push(st);
            h = h_new;
        }
        Ok((h, steps))
    }

    /// Backpropagation through time. Accumulates into `grads[0..10]` and
    /// returns the gradient for each input.
    pub fn backward(&self, steps: &[GruStep], dh_final: &Matrix, grads: &mut [Matrix]) -> Result<Vec<Matrix>> {
        let hid = self.hidden();
        let mut dh = dh_final.clone();
        let mut dxs = vec![Matrix::zeros(1, self.input()); steps.len()];
        for (k, st) in steps.iter().enumerate().rev() {
            let mut da_z = Matrix::zeros(1, hid);
            let mut da_r = Matrix::zeros(1, hid);
            let mut da_n = Matrix::zeros(1, hid);
            let mut dg = Matrix::zeros(1, hid);
            let mut dh_prev = Matrix::zeros(1, hid);
            for j in 0..hid {
                let (z, r, n, g) = (st.z.get(0, j), st.r.get(0, j), st.n.get(0, j), st.g.get(0, j));
                let d = dh.get(0, j);
                let dn = d * (1.0 - z);
                let dz = d * (st.h_prev.get(0, j) - n);
                dh_prev.set(0, j, d * z);
                let dan = dn * (1.0 - n * n);
                da_n.set(0, j, dan);
                dg.set(0, j, dan * r);
                da_r.set(0, j, dan * g * r * (1.0 - r));
                da_z.set(0, j, dz * z * (1.0 - z));
            }
            // z gate
            grads[0].add_assign(&st.x.t_matmul(&da_z)?)?;
            grads[1].add_assign(&st.h_prev.t_matmul(&da_z)?)?;
            grads[2].add_assign(&da_z)?;
            // r gate
            grads[3].add_assign(&st.x.t_matmul(&da_r)?)?;
            grads[4].add_assign(&st.h_prev.t_matmul(&da_r)?)?;
            grads[5].add_assign(&da_r)?;
            // candidate
            grads[6].add_assign(&st.x.t_matmul(&da_n)?)?;
            grads[7].add_assign(&st.h_prev.t_matmul(&dg)?)?;
            grads[8].add_assign(&da_n)?;
            grads[9].add_assign(&dg)?;

            let mut dx = da_z.matmul_t(&self.wz)?;
            dx.add_assign(&da_r.matmul_t(&self.wr)?)?;
            dx.add_assign(&da_n.matmul_t(&self.wn)?)?;
            dxs[k] = dx;
            dh_prev.add_assign(&da_z.matmul_t(&self.uz)?)?;
            dh_prev.add_assign(&da_r.matmul_t(&self.ur)?)?;
            dh_prev.add_assign(&dg.matmul_t(&self.un)?)?;
            dh = dh_prev;
        }
        Ok(dxs)
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        vec![
            &self.wz, &self.uz, &self.bz, &self.wr, &self.ur, &self.br, &self.wn, &self.un, &self.bn, &self.bhn,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![
            &mut self.wz,
            &mut self.uz,
            &mut self.bz,
            &mut self.wr,
            &mut self.ur,
            &mut self.br,
            &mut self.wn,
            &mut self.un,
            &mut self.bn,
            &mut self.bhn,
        ]
    }
}
