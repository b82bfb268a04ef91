//! Depth-resolved net flux by track-length estimation.
//!
//! Each straight segment adds `dy * w(s) ds` to the bins it crosses, where
//! `dy` is the depth cosine and `w(s) = w0 exp(-beta s)`. Upward and
//! downward parts are kept apart. Dividing by rays and bin width gives the
//! bin-averaged flux per unit incident flux.

use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FluxTally {
    depth: f64,
    up: Vec<f64>,
    down: Vec<f64>,
}

impl FluxTally {
    pub fn new(depth: f64, n_bins: usize) -> Result<Self> {
        if !(depth > 0.0 && depth.is_finite()) || n_bins == 0 {
            return Err(invalid("flux tally needs positive depth and at least one bin"));
        }
        Ok(Self {
            depth,
            up: vec![0.0; n_bins],
            down: vec![0.0; n_bins],
        })
    }

    pub fn n_bins(&self) -> usize {
        self.up.len()
    }

    fn bin_width(&self) -> f64 {
        self.depth / self.up.len() as f64
    }

    /// Add the segment starting at depth `y0` with depth cosine `dy`, of length `len`.
    pub fn add_segment(&mut self, y0: f64, dy: f64, len: f64, w0: f64, beta: f64) {
        if !(len > 0.0) || w0 == 0.0 {
            return;
        }
        let integral = |s1: f64, s2: f64| {
            if beta > 0.0 {
                ((-beta * s1).exp() - (-beta * s2).exp()) / beta
            } else {
                s2 - s1
            }
        };
        let n = self.up.len();
        let dz = self.bin_width();
        let bin_of = |y: f64| ((y / dz).floor().max(0.0) as usize).min(n - 1);
        if dy.abs() < 1e-14 {
            // grazing: no net depth flow
            return;
        }
        let y1 = y0 + dy * len;
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        let (lo, hi) = (lo.max(0.0), hi.min(self.depth));
        if lo >= hi {
            return;
        }
        let target = if dy > 0.0 { &mut self.up } else { &mut self.down };
        for k in bin_of(lo)..=bin_of(hi) {
            let a = (k as f64 * dz).max(lo);
            let b = ((k + 1) as f64 * dz).min(hi);
            if b <= a {
                continue;
            }
            let (sa, sb) = ((a - y0) / dy, (b - y0) / dy);
            let (s1, s2) = if sa < sb { (sa, sb) } else { (sb, sa) };
            let (s1, s2) = (s1.max(0.0), s2.min(len));
            if s2 > s1 {
                target[k] += dy.abs() * w0 * integral(s1, s2);
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.up.iter_mut().zip(&other.up) {
            *a += b;
        }
        for (a, b) in self.down.iter_mut().zip(&other.down) {
            *a += b;
        }
    }

    pub fn finish(&self, n_rays: u64) -> FluxProfile {
        let dz = self.bin_width();
        let norm = 1.0 / (n_rays.max(1) as f64 * dz);
        let up: Vec<f64> = self.up.iter().map(|v| v * norm).collect();
        let down: Vec<f64> = self.down.iter().map(|v| v * norm).collect();
        FluxProfile {
            bin_edges: (0..=self.up.len()).map(|k| k as f64 * dz).collect(),
            net: up.iter().zip(&down).map(|(u, d)| u - d).collect(),
            up,
            down,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxProfile {
    pub bin_edges: Vec<f64>,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    /// `up - down`
    pub net: Vec<f64>,
}

impl FluxProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("depth_lo,depth_hi,up,down,net\n");
        for k in 0..self.net.len() {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.bin_edges[k],
                self.bin_edges[k + 1],
                self.up[k],
                self.down[k],
                self.net[k]
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}
