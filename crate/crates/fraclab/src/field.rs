//! Uniform periodic grids, sampled fields, and the discrete Fourier
//! transform contract used by every spectral operator.
//!
//! Convention: the transform carries 2π in the exponent, so a field on a
//! period-L window has frequencies ξ_k = k/L (cycles per unit) and the
//! fractional Laplacian is literally the multiplier (2π|ξ|)^{2s}. Grid
//! coordinates are centered: x_j = -L/2 + j h.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::io::{BufRead, Write};

/// Uniform periodic grid with the same power-of-two point count per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    points: usize,
    period: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new_1d(points: usize, period: f64) -> Result<Self> {
        Self::new(1, points, vec![period])
    }

    pub fn new_2d(points: usize, period_x: f64, period_y: f64) -> Result<Self> {
        Self::new(2, points, vec![period_x, period_y])
    }

    fn new(n: usize, points: usize, period: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::Invalid("only 1D and 2D grids are supported".into()));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "points per axis must be a power of two >= 2, got {points}"
            )));
        }
        if period.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Invalid("periods must be positive".into()));
        }
        Ok(PeriodicGrid { n, points, period })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    /// Total number of grid points.
    #[inline]
    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn period(&self, axis: usize) -> f64 {
        self.period[axis]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.points as f64
    }

    /// Volume of one grid cell (h in 1D, h_x h_y in 2D).
    pub fn cell_volume(&self) -> f64 {
        (0..self.n).map(|a| self.spacing(a)).product()
    }

    /// Physical coordinate of a flat index, centered at the origin.
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        match self.n {
            1 => out[0] = -0.5 * self.period[0] + idx as f64 * self.spacing(0),
            _ => {
                let ix = idx % self.points;
                let iy = idx / self.points;
                out[0] = -0.5 * self.period[0] + ix as f64 * self.spacing(0);
                out[1] = -0.5 * self.period[1] + iy as f64 * self.spacing(1);
            }
        }
        out
    }

    /// Frequency vector (cycles per unit) of a flat spectral index,
    /// FFT bin order per axis.
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let signed = |k: usize| -> f64 {
            if k < self.points / 2 {
                k as f64
            } else {
                k as f64 - self.points as f64
            }
        };
        let mut out = [0.0; 2];
        match self.n {
            1 => out[0] = signed(idx) / self.period[0],
            _ => {
                let ix = idx % self.points;
                let iy = idx / self.points;
                out[0] = signed(ix) / self.period[0];
                out[1] = signed(iy) / self.period[1];
            }
        }
        out
    }
}

/// Real values sampled on a periodic grid. Immutable by convention: every
/// operation returns a fresh field.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("field values must be finite".into()));
        }
        Ok(SampledField { grid, values })
    }

    pub fn from_fn_1d(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Invalid("from_fn_1d requires a 1D grid".into()));
        }
        let values = (0..grid.len()).map(|i| f(grid.coord(i)[0])).collect();
        Self::new(grid, values)
    }

    pub fn from_fn_2d(grid: PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Invalid("from_fn_2d requires a 2D grid".into()));
        }
        let values = (0..grid.len())
            .map(|i| {
                let c = grid.coord(i);
                f(c[0], c[1])
            })
            .collect();
        Self::new(grid, values)
    }

    /// Riemann-sum approximation of the continuum transform (exact for
    /// bandlimited periodic data); Parseval holds discretely.
    pub fn to_spectral(&self) -> SpectralField {
        let mut buf: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_all_axes(&mut buf, &self.grid, false);
        let scale = self.grid.cell_volume();
        for (idx, c) in buf.iter_mut().enumerate() {
            *c *= scale * center_phase(&self.grid, idx);
        }
        SpectralField { grid: self.grid.clone(), coef: buf }
    }

    /// h^n-weighted Riemann sum of the field.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// One row per grid point: coordinates then value, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        match self.grid.dim() {
            1 => {
                writeln!(w, "x,value")?;
                for (i, v) in self.values.iter().enumerate() {
                    writeln!(w, "{:.16e},{:.16e}", self.grid.coord(i)[0], v)?;
                }
            }
            _ => {
                writeln!(w, "x,y,value")?;
                for (i, v) in self.values.iter().enumerate() {
                    let c = self.grid.coord(i);
                    writeln!(w, "{:.16e},{:.16e},{:.16e}", c[0], c[1], v)?;
                }
            }
        }
        Ok(())
    }

    /// Inverse of `write_csv` for 1D fields; values round-trip bit-faithfully.
    /// 2D files go through [`read_csv_2d`].
    pub fn read_csv<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut values = Vec::new();
        let mut first_x = None;
        for (ln, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Invalid(format!("io: {e}")))?;
            if ln == 0 {
                match line.trim() {
                    "x,value" => continue,
                    "x,y,value" => {
                        return Err(Error::Invalid("2D CSV: use read_csv_2d".into()))
                    }
                    other => {
                        return Err(Error::Invalid(format!("unrecognized CSV header `{other}`")))
                    }
                }
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Invalid(format!("row {}: wrong field count", ln + 1)));
            }
            let x: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("row {}: {e}", ln + 1)))?;
            let v: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("row {}: {e}", ln + 1)))?;
            first_x.get_or_insert(x);
            values.push(v);
        }
        // x_0 = -L/2 exactly, so the period is recovered bit-exactly as -2 x_0
        let x0 = first_x.ok_or_else(|| Error::Invalid("no data rows".into()))?;
        let grid = PeriodicGrid::new_1d(values.len(), -2.0 * x0)?;
        SampledField::new(grid, values)
    }
}

/// Complex Fourier coefficients of a sampled field, FFT bin order.
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub grid: PeriodicGrid,
    pub coef: Vec<Complex64>,
}

impl SpectralField {
    /// Inverse transform; returns the real part (the imaginary residue of
    /// conjugate-symmetric data is at rounding level).
    pub fn to_physical(&self) -> SampledField {
        let (re, _) = self.inverse_parts();
        SampledField { grid: self.grid.clone(), values: re }
    }

    /// Max |imaginary part| the inverse transform discards.
    pub fn imag_residue(&self) -> f64 {
        let (_, im) = self.inverse_parts();
        im
    }

    fn inverse_parts(&self) -> (Vec<f64>, f64) {
        let mut buf: Vec<Complex64> = self
            .coef
            .iter()
            .enumerate()
            .map(|(idx, c)| c * center_phase(&self.grid, idx))
            .collect();
        fft_all_axes(&mut buf, &self.grid, true);
        let vol: f64 = (0..self.grid.dim()).map(|a| self.grid.period(a)).product();
        let scale = 1.0 / vol;
        let mut max_im = 0.0_f64;
        let values = buf
            .iter()
            .map(|c| {
                max_im = max_im.max((c.im * scale).abs());
                c.re * scale
            })
            .collect();
        (values, max_im)
    }

    /// Discrete Parseval sum Σ|coef|² Δξ (equals ∫|f|² dx).
    pub fn energy(&self) -> f64 {
        let vol: f64 = (0..self.grid.dim()).map(|a| self.grid.period(a)).product();
        self.coef.iter().map(|c| c.norm_sqr()).sum::<f64>() / vol
    }
}

// Phase translating between the FFT's x_j = j h convention and centered
// coordinates x_j = -L/2 + j h: e^{iπ(k_x + k_y)} = (-1)^{k_x+k_y}.
fn center_phase(grid: &PeriodicGrid, idx: usize) -> f64 {
    let k_sum = match grid.dim() {
        1 => idx,
        _ => (idx % grid.points_per_axis()) + (idx / grid.points_per_axis()),
    };
    if k_sum % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn fft_all_axes(buf: &mut [Complex64], grid: &PeriodicGrid, inverse: bool) {
    let n = grid.points_per_axis();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    match grid.dim() {
        1 => fft.process(buf),
        _ => {
            for row in buf.chunks_exact_mut(n) {
                fft.process(row);
            }
            let mut col = vec![Complex64::default(); n];
            for x in 0..n {
                for y in 0..n {
                    col[y] = buf[y * n + x];
                }
                fft.process(&mut col);
                for y in 0..n {
                    buf[y * n + x] = col[y];
                }
            }
        }
    }
}

/// 2D counterpart of `SampledField::read_csv`.
pub fn read_csv_2d<R: BufRead>(r: &mut R) -> Result<SampledField> {
    let mut first_x = None;
    let mut first_y = None;
    let mut values = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Invalid(format!("io: {e}")))?;
        if ln == 0 {
            if line.trim() != "x,y,value" {
                return Err(Error::Invalid("expected header `x,y,value`".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Invalid(format!("row {}: wrong field count", ln + 1)));
        }
        let mut nums = [0.0_f64; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|e| Error::Invalid(format!("row {}: {e}", ln + 1)))?;
        }
        first_x.get_or_insert(nums[0]);
        first_y.get_or_insert(nums[1]);
        values.push(nums[2]);
    }
    let total = values.len();
    let points = (total as f64).sqrt().round() as usize;
    if points * points != total {
        return Err(Error::Invalid("2D CSV is not a square grid".into()));
    }
    let grid = PeriodicGrid::new_2d(points, -2.0 * first_x.unwrap(), -2.0 * first_y.unwrap())?;
    SampledField::new(grid, values)
}
