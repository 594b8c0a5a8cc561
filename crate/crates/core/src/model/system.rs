use super::banded::BandedCholesky;
use super::photocurrent::PhotoKernel;
use super::{GridTopology, NetworkParams};
use crate::error::Result;

/// Symmetric system matrix of the implicit update in compressed-row form.
///
/// Diagonal `c_m/dt + g_leak + deg(i) g_gap`, off-diagonal `-g_gap` on grid
/// edges. Explicit zeros are not stored, so with `g_gap = 0` the matrix is
/// diagonal.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SystemMatrix {
    pub fn assemble(topology: &GridTopology, params: &NetworkParams) -> Self {
        let n = topology.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let base = params.c_m / params.dt + params.g_leak;
        for i in 0..n {
            let nb = topology.neighbors(i);
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(nb.len() + 1);
            row.push((i, base + nb.len() as f64 * params.g_gap));
            if params.g_gap != 0.0 {
                row.extend(nb.iter().map(|&j| (j, -params.g_gap)));
            }
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SystemMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| j == i))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }
}

/// The backward-Euler system of one grid, factorized once and reusable for
/// any number of drives. Immutable after construction.
#[derive(Debug, Clone)]
pub struct FactorizedSystem {
    topology: GridTopology,
    params: NetworkParams,
    matrix: SystemMatrix,
    kernel: PhotoKernel,
    chol: BandedCholesky,
    // Internal numbering runs along the shorter grid axis to keep the band narrow.
    to_internal: Vec<usize>,
    to_external: Vec<usize>,
}

impl FactorizedSystem {
    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn topology(&self) -> &GridTopology {
        &self.topology
    }

    pub fn matrix(&self) -> &SystemMatrix {
        &self.matrix
    }

    pub fn kernel(&self) -> &PhotoKernel {
        &self.kernel
    }

    pub fn bandwidth(&self) -> usize {
        self.chol.bandwidth()
    }

    pub(crate) fn chol(&self) -> &BandedCholesky {
        &self.chol
    }

    pub(crate) fn to_internal(&self) -> &[usize] {
        &self.to_internal
    }

    pub(crate) fn to_external(&self) -> &[usize] {
        &self.to_external
    }
}

/// Assembles and factorizes the implicit update matrix for `topology`.
pub fn build_system(topology: &GridTopology, params: &NetworkParams) -> Result<FactorizedSystem> {
    for w in params.validate()? {
        log::warn!("{w}");
    }
    let kernel = PhotoKernel::from_params(params)?;
    let matrix = SystemMatrix::assemble(topology, params);
    let (w, h) = (topology.width(), topology.height());
    let n = topology.len();

    let column_major = w > h;
    let to_internal: Vec<usize> = (0..n)
        .map(|e| {
            let (x, y) = (e % w, e / w);
            if column_major {
                x * h + y
            } else {
                e
            }
        })
        .collect();
    let mut to_external = vec![0; n];
    for (e, &i) in to_internal.iter().enumerate() {
        to_external[i] = e;
    }
    let bw = if params.g_gap == 0.0 || n == 1 {
        0
    } else {
        w.min(h)
    };
    let chol = BandedCholesky::factorize(n, bw, |i, j| {
        matrix.get(to_external[i], to_external[j])
    })?;
    Ok(FactorizedSystem {
        topology: topology.clone(),
        params: *params,
        matrix,
        kernel,
        chol,
        to_internal,
        to_external,
    })
}
