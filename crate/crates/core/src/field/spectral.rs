//! FFT plumbing shared by every spectral operation on a grid.
//!
//! Transforms are unnormalized forward and `1/N^n`-normalized inverse. One
//! `Spectral` per grid shape is built lazily and cached for the process.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

type CacheKey = (usize, usize, u64);

pub(crate) struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Wavenumber of each bin along one axis.
    k_axis: Vec<f64>,
    /// `|k|^2` of each flat bin.
    k_sq: Vec<f64>,
    /// Flat index of the bin holding `-k`.
    mirror: Vec<usize>,
}

impl Spectral {
    pub(crate) fn for_grid(grid: &Grid) -> Arc<Spectral> {
        static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Spectral>>>> = OnceLock::new();
        let key = (grid.dim, grid.points, grid.length.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key).or_insert_with(|| Arc::new(Spectral::new(*grid))).clone()
    }

    fn new(grid: Grid) -> Self {
        let n = grid.points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k_axis: Vec<f64> = (0..n).map(|j| grid.wavenumber(j)).collect();
        let len = grid.len();
        let mut k_sq = Vec::with_capacity(len);
        let mut mirror = Vec::with_capacity(len);
        for flat in 0..len {
            let idx = grid.unravel(flat);
            let mut ks = 0.0;
            let mut m = 0;
            for &j in idx.iter().take(grid.dim) {
                ks += k_axis[j] * k_axis[j];
                m = m * n + (n - j) % n;
            }
            k_sq.push(ks);
            mirror.push(m);
        }
        Self { grid, forward, inverse, k_axis, k_sq, mirror }
    }

    pub(crate) fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points;
        let dim = self.grid.dim;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // Last axis is contiguous: rustfft processes consecutive chunks of length n.
        fft.process_with_scratch(data, &mut scratch);
        if dim == 1 {
            return;
        }
        let mut block = Vec::new();
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let outer = data.len() / (n * stride);
            block.resize(n * stride, Complex64::default());
            for o in 0..outer {
                let base = o * n * stride;
                // Transpose the n x stride block so every line is contiguous.
                for j in 0..n {
                    for s in 0..stride {
                        block[s * n + j] = data[base + j * stride + s];
                    }
                }
                fft.process_with_scratch(&mut block, &mut scratch);
                for j in 0..n {
                    for s in 0..stride {
                        data[base + j * stride + s] = block[s * n + j];
                    }
                }
            }
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn spectrum_of(&self, values: &[f64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut z);
        z
    }

    /// `int |grad u|^2 dx` via Parseval.
    pub(crate) fn gradient_energy(&self, values: &[f64]) -> f64 {
        let z = self.spectrum_of(values);
        let s: f64 = z.iter().zip(&self.k_sq).map(|(c, k2)| k2 * c.norm_sqr()).sum();
        s * self.grid.cell_volume() / values.len() as f64
    }

    pub(crate) fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let n = self.grid.points;
        let mut z = self.spectrum_of(values);
        for (flat, c) in z.iter_mut().enumerate() {
            let j = self.grid.unravel(flat)[axis];
            let k = if j == n / 2 { 0.0 } else { self.k_axis[j] };
            *c = Complex64::new(-k * c.im, k * c.re);
        }
        self.inverse(&mut z);
        z.into_iter().map(|c| c.re).collect()
    }

    pub(crate) fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut z = self.spectrum_of(values);
        for (c, k2) in z.iter_mut().zip(&self.k_sq) {
            *c *= -k2;
        }
        self.inverse(&mut z);
        z.into_iter().map(|c| c.re).collect()
    }

    /// Applies a real 2x2 map `[a, b; c, d]` to `(u_k, v_k)` in every bin.
    ///
    /// `u` and `v` are packed into one complex transform `u + i v`; the map
    /// must depend on `|k|` only so the outputs stay real.
    pub(crate) fn apply_mode_matrix(&self, u: &mut [f64], v: &mut [f64], table: &[[f64; 4]]) {
        let mut z: Vec<Complex64> = u.iter().zip(v.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward(&mut z);
        let minus_half_i = Complex64::new(0.0, -0.5);
        let i = Complex64::new(0.0, 1.0);
        let out: Vec<Complex64> = (0..z.len())
            .map(|k| {
                let a = z[k];
                let b = z[self.mirror[k]].conj();
                let uh = (a + b) * 0.5;
                let vh = (a - b) * minus_half_i;
                let [m11, m12, m21, m22] = table[k];
                let nu = uh * m11 + vh * m12;
                let nv = uh * m21 + vh * m22;
                nu + i * nv
            })
            .collect();
        let mut out = out;
        self.inverse(&mut out);
        for ((a, b), c) in u.iter_mut().zip(v.iter_mut()).zip(&out) {
            *a = c.re;
            *b = c.im;
        }
    }

    /// Evaluates a pointwise map on the 3/2-padded grid and projects back,
    /// removing the aliasing a quadratic product would fold into resolved modes.
    pub(crate) fn dealiased_map(&self, values: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.grid.points;
        let padded_points = {
            let m = (3 * n).div_ceil(2);
            m + m % 2
        };
        let fine_grid = Grid { points: padded_points, ..self.grid };
        let fine = Spectral::for_grid(&fine_grid);
        let dim = self.grid.dim;
        let fine_index = |flat: usize| -> Option<usize> {
            let idx = self.grid.unravel(flat);
            let mut m = 0;
            for &j in idx.iter().take(dim) {
                if j == n / 2 {
                    return None;
                }
                let signed = if j < n / 2 { j } else { padded_points + j - n };
                m = m * padded_points + signed;
            }
            Some(m)
        };
        let coarse = self.spectrum_of(values);
        let mut padded = vec![Complex64::default(); fine_grid.len()];
        for (flat, c) in coarse.iter().enumerate() {
            if let Some(m) = fine_index(flat) {
                padded[m] = *c;
            }
        }
        let ratio = (padded_points as f64 / n as f64).powi(dim as i32);
        fine.inverse(&mut padded);
        for c in padded.iter_mut() {
            *c = Complex64::new(f(c.re * ratio), 0.0);
        }
        fine.forward(&mut padded);
        let mut out = vec![Complex64::default(); coarse.len()];
        for (flat, o) in out.iter_mut().enumerate() {
            if let Some(m) = fine_index(flat) {
                *o = padded[m] / ratio;
            }
        }
        self.inverse(&mut out);
        out.into_iter().map(|c| c.re).collect()
    }
}
