//! Random beds of overlapping opaque discs (a 2-D Boolean model).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Targets above this coverage are reported as hard to reach.
pub const VF_WARNING: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BedDensity {
    Count(u64),
    /// Target covered-area fraction `1 - exp(-n pi r^2 / area)`.
    VolumeFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BedSpec {
    pub radius: f64,
    pub density: BedDensity,
    pub width: f64,
    pub depth: f64,
    pub periodic: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BedGeometry {
    pub radius: f64,
    pub width: f64,
    pub depth: f64,
    pub periodic: bool,
    pub seed: u64,
    pub centers: Vec<[f64; 2]>,
}

impl BedSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(invalid(format!("radius must be > 0, got {}", self.radius)));
        }
        if !(self.width.is_finite() && self.width > 4.0 * self.radius) {
            return Err(invalid(format!(
                "width must exceed 4 radii, got {} for radius {}",
                self.width, self.radius
            )));
        }
        if !(self.depth.is_finite() && self.depth > 0.0) {
            return Err(invalid(format!("depth must be > 0, got {}", self.depth)));
        }
        if let BedDensity::VolumeFraction(vf) = self.density {
            if !(0.0..1.0).contains(&vf) {
                return Err(invalid(format!("volume fraction must lie in [0, 1), got {vf}")));
            }
        }
        Ok(())
    }

    /// Disc count for the requested density.
    pub fn count(&self) -> u64 {
        match self.density {
            BedDensity::Count(n) => n,
            BedDensity::VolumeFraction(vf) => {
                let lambda = -(1.0 - vf).ln() / (PI * self.radius * self.radius);
                (lambda * self.width * self.depth).round() as u64
            }
        }
    }

    pub fn warning(&self) -> Option<String> {
        match self.density {
            BedDensity::VolumeFraction(vf) if vf > VF_WARNING => Some(format!(
                "volume fraction {vf} is above {VF_WARNING}; the bed is nearly solid"
            )),
            _ => None,
        }
    }
}

/// Disc centers i.i.d. uniform on `[0, W) x [0, D)`, deterministic in the seed.
pub fn build_bed(spec: &BedSpec) -> Result<BedGeometry> {
    spec.validate()?;
    let n = spec.count();
    let mut r = rng::stream(spec.seed, 0);
    let centers = (0..n)
        .map(|_| [r.gen::<f64>() * spec.width, r.gen::<f64>() * spec.depth])
        .collect();
    Ok(BedGeometry {
        radius: spec.radius,
        width: spec.width,
        depth: spec.depth,
        periodic: spec.periodic,
        seed: spec.seed,
        centers,
    })
}

impl BedGeometry {
    /// Centers per unit area.
    pub fn density(&self) -> f64 {
        self.centers.len() as f64 / (self.width * self.depth)
    }

    /// Boolean-model coverage `1 - exp(-density pi r^2)`.
    pub fn expected_coverage(&self) -> f64 {
        1.0 - (-self.density() * PI * self.radius * self.radius).exp()
    }

    /// Covered fraction of a `resolution x resolution` pixel grid over the
    /// domain, honouring periodic wrap.
    pub fn pixel_coverage(&self, resolution: usize) -> f64 {
        let (nx, ny) = (resolution, resolution);
        let mut covered = vec![false; nx * ny];
        let (dx, dy) = (self.width / nx as f64, self.depth / ny as f64);
        let r2 = self.radius * self.radius;
        for c in &self.centers {
            let i_lo = ((c[0] - self.radius) / dx).floor() as i64;
            let i_hi = ((c[0] + self.radius) / dx).ceil() as i64;
            let j_lo = (((c[1] - self.radius) / dy).floor() as i64).max(0);
            let j_hi = (((c[1] + self.radius) / dy).ceil() as i64).min(ny as i64 - 1);
            for i in i_lo..=i_hi {
                let wrapped = if self.periodic {
                    i.rem_euclid(nx as i64)
                } else if (0..nx as i64).contains(&i) {
                    i
                } else {
                    continue;
                };
                let px = (i as f64 + 0.5) * dx;
                for j in j_lo..=j_hi {
                    let py = (j as f64 + 0.5) * dy;
                    let (ddx, ddy) = (px - c[0], py - c[1]);
                    if ddx * ddx + ddy * ddy <= r2 {
                        covered[j as usize * nx + wrapped as usize] = true;
                    }
                }
            }
        }
        covered.iter().filter(|c| **c).count() as f64 / (nx * ny) as f64
    }

    /// Plain-text form: `radius W D periodic seed`, then one `cx cy` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {} {} {}\n",
            self.radius,
            self.width,
            self.depth,
            u8::from(self.periodic),
            self.seed
        );
        for c in &self.centers {
            let _ = writeln!(s, "{} {}", c[0], c[1]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Empty("bed file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: hl + 1,
                msg: "expected `radius W D periodic seed`".into(),
            });
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: hl + 1,
                msg: format!("bad number `{}`", fields[i]),
            })
        };
        let periodic = match fields[3] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::Parse {
                    line: hl + 1,
                    msg: format!("bad periodic flag `{other}`"),
                })
            }
        };
        let seed = fields[4].parse().map_err(|_| Error::Parse {
            line: hl + 1,
            msg: format!("bad seed `{}`", fields[4]),
        })?;
        let mut centers = Vec::new();
        for (i, line) in lines {
            let xy: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad center `{line}`"),
                })?;
            if xy.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected `cx cy`".into(),
                });
            }
            centers.push([xy[0], xy[1]]);
        }
        Ok(Self {
            radius: num(0)?,
            width: num(1)?,
            depth: num(2)?,
            periodic,
            seed,
            centers,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Slab depth for a Beerian run: `exp(-beta D) < 1e-9`.
pub fn beerian_depth(beta: f64) -> f64 {
    (1e9f64).ln() / beta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(density: BedDensity) -> BedSpec {
        BedSpec {
            radius: 1.0,
            density,
            width: 100.0,
            depth: 100.0,
            periodic: true,
            seed: 42,
        }
    }

    #[test]
    fn empty_bed() {
        let bed = build_bed(&spec(BedDensity::Count(0))).unwrap();
        assert!(bed.centers.is_empty());
        assert_eq!(bed.pixel_coverage(50), 0.0);
    }

    #[test]
    fn seed_reproduces_centers() {
        let a = build_bed(&spec(BedDensity::VolumeFraction(0.2))).unwrap();
        let b = build_bed(&spec(BedDensity::VolumeFraction(0.2))).unwrap();
        assert_eq!(a, b);
        let mut other = spec(BedDensity::VolumeFraction(0.2));
        other.seed = 43;
        assert_ne!(a.centers, build_bed(&other).unwrap().centers);
        for c in &a.centers {
            assert!((0.0..100.0).contains(&c[0]) && (0.0..100.0).contains(&c[1]));
        }
    }

    #[test]
    fn coverage_follows_boolean_model() {
        let bed = build_bed(&spec(BedDensity::VolumeFraction(0.3))).unwrap();
        let pix = bed.pixel_coverage(1000);
        assert!((pix - bed.expected_coverage()).abs() < 0.02, "{pix} vs {}", bed.expected_coverage());
        assert!((bed.expected_coverage() - 0.3).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_bed(&spec(BedDensity::VolumeFraction(1.0))).is_err());
        let mut s = spec(BedDensity::Count(3));
        s.width = 3.0;
        assert!(build_bed(&s).is_err());
        s.width = 100.0;
        s.radius = 0.0;
        assert!(build_bed(&s).is_err());
        assert!(spec(BedDensity::VolumeFraction(0.95)).warning().is_some());
        assert!(spec(BedDensity::VolumeFraction(0.5)).warning().is_none());
    }

    #[test]
    fn text_round_trip() {
        let bed = build_bed(&spec(BedDensity::Count(25))).unwrap();
        let text = bed.to_text();
        assert!(text.starts_with("1 100 100 1 42\n"));
        assert_eq!(BedGeometry::from_text(&text).unwrap(), bed);
        assert!(matches!(
            BedGeometry::from_text("1 100 100 1 42\n0.5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
