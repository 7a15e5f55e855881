use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{fill_indexed, sum_rows, Exec};
use crate::quadrature::simpson_weights;

/// Uniform grid over `[x_min, x_max] × [y_min, y_max]` with `nx × ny` nodes
/// (endpoints included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

pub const MIN_GRID_POINTS: usize = 16;

impl Grid2 {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let g = Grid2 { x_min: x.0, x_max: x.1, y_min: y.0, y_max: y.1, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[-ex, ex] × [-ey, ey]`.
    pub fn centered(ex: f64, ey: f64, n: usize) -> Result<Self> {
        Self::new((-ex, ex), (-ey, ey), n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_GRID_POINTS || self.ny < MIN_GRID_POINTS {
            return Err(Error::GridMismatch(format!(
                "grid needs at least {MIN_GRID_POINTS} points per axis (got {}x{})",
                self.nx, self.ny
            )));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::GridMismatch(format!("grid extents must be finite and increasing: {self:?}")));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.y_max
        } else {
            self.y_min + j as f64 * self.hy()
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index: `x` varies slowest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFrame {
    /// Decoupled coordinates `(Q₁, Q₂)`.
    Transformed,
    /// Original coordinates `(X₁, X₂)`.
    Original,
}

impl FieldFrame {
    fn code(self) -> u32 {
        match self {
            FieldFrame::Transformed => 0,
            FieldFrame::Original => 1,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(FieldFrame::Transformed),
            1 => Ok(FieldFrame::Original),
            _ => Err(Error::GridMismatch(format!("unknown frame code {code}"))),
        }
    }
}

/// Complex samples of a wave function on a [`Grid2`] at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid2,
    values: Vec<Complex64>,
    t: f64,
    frame: FieldFrame,
}

/// Magic bytes of the binary dump.
pub const MAGIC: &[u8; 8] = b"TDOSCWF1";

impl WaveField {
    pub fn new(grid: Grid2, values: Vec<Complex64>, t: f64, frame: FieldFrame) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a {}x{} grid", values.len(), grid.nx, grid.ny)));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::GridMismatch(format!(
                "non-finite value at ({}, {})",
                grid.x(k / grid.ny),
                grid.y(k % grid.ny)
            )));
        }
        Ok(WaveField { grid, values, t, frame })
    }

    /// Evaluate `f(x, y)` at every node.
    pub fn from_fn<F>(grid: Grid2, t: f64, frame: FieldFrame, exec: Exec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Complex64> + Sync + Send,
    {
        grid.validate()?;
        let mut out: Vec<Result<Complex64>> = Vec::with_capacity(grid.len());
        out.resize_with(grid.len(), || Ok(Complex64::new(0.0, 0.0)));
        fill_indexed(exec, &mut out, |k| f(grid.x(k / grid.ny), grid.y(k % grid.ny)));
        let values = out.into_iter().collect::<Result<Vec<_>>>()?;
        Self::new(grid, values, t, frame)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn frame(&self) -> FieldFrame {
        self.frame
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    /// `∬|ψ|²` by 2D Simpson quadrature.
    pub fn norm_sq(&self, exec: Exec) -> f64 {
        let wx = simpson_weights(self.grid.nx, self.grid.hx());
        let wy = simpson_weights(self.grid.ny, self.grid.hy());
        sum_rows(exec, self.grid.nx, |i| {
            let row = &self.values[i * self.grid.ny..(i + 1) * self.grid.ny];
            wx[i] * row.iter().zip(&wy).map(|(v, w)| w * v.norm_sqr()).sum::<f64>()
        })
    }

    /// Largest pointwise `|a − b|`.
    pub fn max_abs_diff(&self, other: &WaveField) -> Result<f64> {
        same_layout(self, other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `‖a − b‖` by Simpson quadrature.
    pub fn l2_diff(&self, other: &WaveField, exec: Exec) -> Result<f64> {
        same_layout(self, other)?;
        let diff: Vec<Complex64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(WaveField { values: diff, ..self.clone() }.norm_sq(exec).sqrt())
    }

    /// Binary dump: the 8-byte magic, then `nx`, `ny` and the frame code as
    /// little-endian `u32`, then `x_min, x_max, y_min, y_max, t` as `f64`,
    /// then `nx·ny` pairs `(re, im)` of `f64` in row-major order (`x` slowest).
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.grid.nx as u32, self.grid.ny as u32, self.frame.code()] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.grid.x_min, self.grid.x_max, self.grid.y_min, self.grid.y_max, self.t] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::GridMismatch(format!("reading wave field: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::GridMismatch("not a wave-field dump".into()));
        }
        let mut u = [0u8; 4];
        let mut header = [0u32; 3];
        for h in &mut header {
            r.read_exact(&mut u).map_err(io)?;
            *h = u32::from_le_bytes(u);
        }
        let mut f = [0u8; 8];
        let mut reals = [0f64; 5];
        for v in &mut reals {
            r.read_exact(&mut f).map_err(io)?;
            *v = f64::from_le_bytes(f);
        }
        let grid = Grid2::new((reals[0], reals[1]), (reals[2], reals[3]), header[0] as usize, header[1] as usize)?;
        let mut bytes = vec![0u8; 16 * grid.len()];
        r.read_exact(&mut bytes).map_err(io)?;
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        WaveField::new(grid, values, reals[4], FieldFrame::from_code(header[2])?)
    }
}

fn same_layout(a: &WaveField, b: &WaveField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("grids differ: {:?} vs {:?}", a.grid, b.grid)));
    }
    if a.t != b.t || a.frame != b.frame {
        return Err(Error::GridMismatch(format!(
            "fields sampled at different times or frames ({}, {:?}) vs ({}, {:?})",
            a.t, a.frame, b.t, b.frame
        )));
    }
    Ok(())
}

/// `∬ a* b` by 2D Simpson quadrature.
pub fn grid_overlap(a: &WaveField, b: &WaveField, exec: Exec) -> Result<Complex64> {
    same_layout(a, b)?;
    let g = a.grid;
    let wx = simpson_weights(g.nx, g.hx());
    let wy = simpson_weights(g.ny, g.hy());
    Ok(sum_rows(exec, g.nx, |i| {
        let ra = &a.values[i * g.ny..(i + 1) * g.ny];
        let rb = &b.values[i * g.ny..(i + 1) * g.ny];
        let row: Complex64 = ra.iter().zip(rb).zip(&wy).map(|((x, y), w)| x.conj() * y * *w).sum();
        row * wx[i]
    }))
}
