use serde::Serialize;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    /// Builds from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(rows: usize, cols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            debug_assert!(i < rows && j < cols);
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = Self { rows, cols, indptr, indices, data };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.data[k] != 0.0 {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        (self.indptr, self.indices, self.data) = (indptr, indices, data);
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.data[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            trips.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        Csr::from_triplets(self.cols, self.rows, trips)
    }

    /// `Σ_k D_kᵀ D_k`.
    pub fn gram(parts: &[Csr]) -> Csr {
        let n = parts.first().map_or(0, |p| p.cols);
        let mut trips = Vec::new();
        for d in parts {
            assert_eq!(d.cols, n, "gram parts must share the column space");
            for i in 0..d.rows {
                let row: Vec<(usize, f64)> = d.row(i).collect();
                for &(a, va) in &row {
                    for &(b, vb) in &row {
                        trips.push((a, b, va * vb));
                    }
                }
            }
        }
        Csr::from_triplets(n, n, trips)
    }

    /// `max |a_ij - a_ji|` relative to `max |a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }
}
