//! Geometric ray tracing through a bed of opaque discs.
//!
//! Rays enter at depth 0 and move in the `(x, y)` plane, `y` being depth.
//! Disc hits use the exact quadratic ray–circle intersection; a uniform
//! grid with cell size of about one diameter limits the discs tested per
//! step. With periodic wrap the grid column index is reduced modulo the
//! column count and the disc image is shifted by whole widths.

use std::f64::consts::PI;

use rand::Rng;

use super::bed::BedGeometry;
use super::flux::FluxTally;

/// Re-emission law at a disc surface, relative to the outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatterLaw {
    /// Angle uniform on (-pi/2, pi/2).
    #[default]
    HemisphericUniform,
    /// Density proportional to the cosine of the angle.
    Lambertian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub scatter: ScatterLaw,
    pub weight_cutoff: f64,
    /// Bounce guard: more scatterings than this censor the ray.
    pub max_scatterings: u64,
    /// Straight flights longer than this censor the ray.
    pub max_free_path: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            scatter: ScatterLaw::HemisphericUniform,
            weight_cutoff: 1e-8,
            max_scatterings: 1_000_000,
            max_free_path: 1e7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceExit {
    ReflectedBottom,
    TransmittedTop,
    Absorbed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Entry-to-first-hit distance; `None` if the ray never hit a disc.
    pub first_flight: Option<f64>,
    /// Distances between consecutive disc hits.
    pub free_paths: Vec<f64>,
    pub exit: TraceExit,
    pub final_weight: f64,
    pub scatterings: u64,
    /// Stopped by the weight cutoff.
    pub cutoff: bool,
    /// Stopped by a bounce or flight guard.
    pub censored: bool,
}

struct Grid {
    nx: i64,
    ny: i64,
    cell: f64,
    /// `starts[c]..starts[c + 1]` indexes `entries` for cell `c = iy * nx + ix`.
    starts: Vec<usize>,
    /// (disc index, image offset in widths)
    entries: Vec<(u32, i32)>,
}

impl Grid {
    fn new(bed: &BedGeometry) -> Self {
        let r = bed.radius;
        let nx = ((bed.width / (2.0 * r)).floor() as i64).max(1);
        let cell = bed.width / nx as f64;
        let ny = ((bed.depth / cell).ceil() as i64).max(1);
        let mut buckets: Vec<Vec<(u32, i32)>> = vec![Vec::new(); (nx * ny) as usize];
        for (k, c) in bed.centers.iter().enumerate() {
            let ix_lo = ((c[0] - r) / cell).floor() as i64;
            let ix_hi = ((c[0] + r) / cell).floor() as i64;
            let iy_lo = (((c[1] - r) / cell).floor() as i64).max(0);
            let iy_hi = (((c[1] + r) / cell).floor() as i64).min(ny - 1);
            for ix in ix_lo..=ix_hi {
                let (col, offset) = if bed.periodic {
                    (ix.rem_euclid(nx), -(ix.div_euclid(nx) as i32))
                } else if (0..nx).contains(&ix) {
                    (ix, 0)
                } else {
                    continue;
                };
                for iy in iy_lo..=iy_hi {
                    buckets[(iy * nx + col) as usize].push((k as u32, offset));
                }
            }
        }
        let mut starts = Vec::with_capacity(buckets.len() + 1);
        let mut entries = Vec::new();
        starts.push(0);
        for b in buckets {
            entries.extend(b);
            starts.push(entries.len());
        }
        Self {
            nx,
            ny,
            cell,
            starts,
            entries,
        }
    }

    fn cell_entries(&self, col: i64, row: i64) -> &[(u32, i32)] {
        let c = (row * self.nx + col) as usize;
        &self.entries[self.starts[c]..self.starts[c + 1]]
    }
}

/// Entry distance of the ray `o + t d` (unit `d`) into the disc, if it lies beyond `eps`.
pub fn ray_circle_entry(o: [f64; 2], d: [f64; 2], center: [f64; 2], r: f64, eps: f64) -> Option<f64> {
    let oc = [o[0] - center[0], o[1] - center[1]];
    let b = oc[0] * d[0] + oc[1] * d[1];
    let c = oc[0] * oc[0] + oc[1] * oc[1] - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t > eps).then_some(t)
}

/// Immutable tracer over one bed; safe to share across threads.
pub struct Tracer<'a> {
    bed: &'a BedGeometry,
    grid: Grid,
    opts: TraceOptions,
    eps: f64,
}

enum Limit {
    Exit,
    Side,
    Guard,
}

impl<'a> Tracer<'a> {
    pub fn new(bed: &'a BedGeometry, opts: TraceOptions) -> Self {
        Self {
            bed,
            grid: Grid::new(bed),
            opts,
            eps: 1e-9 * bed.radius,
        }
    }

    pub fn bed(&self) -> &BedGeometry {
        self.bed
    }

    fn image_center(&self, disc: u32, offset: i32, col_wraps: i64) -> [f64; 2] {
        let c = self.bed.centers[disc as usize];
        [c[0] + (offset as i64 + col_wraps) as f64 * self.bed.width, c[1]]
    }

    fn column(&self, ix: i64) -> Option<(i64, i64)> {
        if self.bed.periodic {
            Some((ix.rem_euclid(self.grid.nx), ix.div_euclid(self.grid.nx)))
        } else {
            (0..self.grid.nx).contains(&ix).then_some((ix, 0))
        }
    }

    /// Whether `p` lies strictly inside some disc.
    pub fn inside_disc(&self, p: [f64; 2]) -> bool {
        let g = &self.grid;
        let ix = (p[0] / g.cell).floor() as i64;
        let iy = ((p[1] / g.cell).floor() as i64).clamp(0, g.ny - 1);
        let Some((col, wraps)) = self.column(ix) else {
            return false;
        };
        let r2 = self.bed.radius * self.bed.radius;
        g.cell_entries(col, iy).iter().any(|&(k, off)| {
            let c = self.image_center(k, off, wraps);
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            dx * dx + dy * dy < r2
        })
    }

    /// Nearest disc entry along `o + t d` with `t <= t_limit`.
    pub fn first_hit(&self, o: [f64; 2], d: [f64; 2], t_limit: f64) -> Option<(f64, [f64; 2])> {
        let g = &self.grid;
        let mut ix = (o[0] / g.cell).floor() as i64;
        let mut iy = ((o[1] / g.cell).floor() as i64).clamp(0, g.ny - 1);
        let step_x: i64 = if d[0] > 0.0 { 1 } else { -1 };
        let step_y: i64 = if d[1] > 0.0 { 1 } else { -1 };
        let mut t_max_x = if d[0] > 0.0 {
            ((ix + 1) as f64 * g.cell - o[0]) / d[0]
        } else if d[0] < 0.0 {
            (ix as f64 * g.cell - o[0]) / d[0]
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if d[1] > 0.0 {
            ((iy + 1) as f64 * g.cell - o[1]) / d[1]
        } else if d[1] < 0.0 {
            (iy as f64 * g.cell - o[1]) / d[1]
        } else {
            f64::INFINITY
        };
        let dt_x = g.cell / d[0].abs();
        let dt_y = g.cell / d[1].abs();
        let r = self.bed.radius;
        let mut best: Option<(f64, [f64; 2])> = None;
        loop {
            if let Some((col, wraps)) = self.column(ix) {
                for &(k, off) in g.cell_entries(col, iy) {
                    let c = self.image_center(k, off, wraps);
                    if let Some(t) = ray_circle_entry(o, d, c, r, self.eps) {
                        if best.is_none_or(|(bt, _)| t < bt) {
                            best = Some((t, c));
                        }
                    }
                }
            }
            let t_cell_exit = t_max_x.min(t_max_y);
            if let Some((bt, _)) = best {
                if bt <= t_cell_exit.min(t_limit) {
                    return best;
                }
            }
            if t_cell_exit >= t_limit {
                return None;
            }
            if t_max_x < t_max_y {
                ix += step_x;
                t_max_x += dt_x;
            } else {
                iy += step_y;
                t_max_y += dt_y;
                if !(0..g.ny).contains(&iy) {
                    return best.filter(|(bt, _)| *bt <= t_limit);
                }
            }
        }
    }

    fn scatter_direction<R: Rng + ?Sized>(&self, normal: [f64; 2], rng: &mut R) -> [f64; 2] {
        let u: f64 = rng.gen();
        let (s, c) = match self.opts.scatter {
            ScatterLaw::HemisphericUniform => ((u - 0.5) * PI).sin_cos(),
            ScatterLaw::Lambertian => {
                let s = 2.0 * u - 1.0;
                (s, (1.0 - s * s).max(0.0).sqrt())
            }
        };
        let tangent = [-normal[1], normal[0]];
        [
            normal[0] * c + tangent[0] * s,
            normal[1] * c + tangent[1] * s,
        ]
    }

    /// Trace one ray entering at a uniform position on the bottom edge.
    pub fn trace_ray<R: Rng + ?Sized>(
        &self,
        beta: f64,
        theta: f64,
        rng: &mut R,
        mut flux: Option<&mut FluxTally>,
    ) -> TraceRecord {
        let bed = self.bed;
        let mut o = [rng.gen::<f64>() * bed.width, 0.0];
        let mut d = [theta.sin(), theta.cos()];
        let mut w = 1.0;
        let mut rec = TraceRecord {
            first_flight: None,
            free_paths: Vec::new(),
            exit: TraceExit::Absorbed,
            final_weight: 0.0,
            scatterings: 0,
            cutoff: false,
            censored: false,
        };
        if self.inside_disc(o) {
            // entry point lies on a particle face: reflected at the surface
            rec.exit = TraceExit::ReflectedBottom;
            rec.final_weight = 1.0;
            return rec;
        }
        loop {
            let t_exit = if d[1] > 0.0 {
                (bed.depth - o[1]) / d[1]
            } else if d[1] < 0.0 {
                -o[1] / d[1]
            } else {
                f64::INFINITY
            };
            let t_side = if bed.periodic {
                f64::INFINITY
            } else if d[0] > 0.0 {
                (bed.width - o[0]) / d[0]
            } else if d[0] < 0.0 {
                -o[0] / d[0]
            } else {
                f64::INFINITY
            };
            let (t_limit, limit) = [
                (t_exit, Limit::Exit),
                (t_side, Limit::Side),
                (self.opts.max_free_path, Limit::Guard),
            ]
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
            // remaining flight before the weight drops below the cutoff
            let t_absorb = if beta > 0.0 {
                (w / self.opts.weight_cutoff).ln().max(0.0) / beta
            } else {
                f64::INFINITY
            };

            match self.first_hit(o, d, t_limit) {
                Some((t, center)) => {
                    if rec.scatterings == 0 {
                        rec.first_flight = Some(t);
                    } else {
                        rec.free_paths.push(t);
                    }
                    if t > t_absorb {
                        if let Some(f) = flux.as_deref_mut() {
                            f.add_segment(o[1], d[1], t_absorb, w, beta);
                        }
                        rec.cutoff = true;
                        return rec;
                    }
                    if let Some(f) = flux.as_deref_mut() {
                        f.add_segment(o[1], d[1], t, w, beta);
                    }
                    w *= (-beta * t).exp();
                    rec.scatterings += 1;
                    if rec.scatterings > self.opts.max_scatterings {
                        rec.censored = true;
                        return rec;
                    }
                    let hit = [o[0] + t * d[0], o[1] + t * d[1]];
                    let r = bed.radius;
                    let n = [(hit[0] - center[0]) / r, (hit[1] - center[1]) / r];
                    let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
                    let n = [n[0] / norm, n[1] / norm];
                    d = self.scatter_direction(n, rng);
                    o = [hit[0] + n[0] * self.eps, hit[1] + n[1] * self.eps];
                    if bed.periodic {
                        o[0] = o[0].rem_euclid(bed.width);
                    }
                }
                None => {
                    let travelled = t_limit.min(t_absorb);
                    if let Some(f) = flux.as_deref_mut() {
                        f.add_segment(o[1], d[1], travelled, w, beta);
                    }
                    if t_absorb < t_limit {
                        rec.cutoff = true;
                        return rec;
                    }
                    match limit {
                        Limit::Exit => {
                            rec.final_weight = w * (-beta * t_exit).exp();
                            rec.exit = if d[1] < 0.0 {
                                TraceExit::ReflectedBottom
                            } else {
                                TraceExit::TransmittedTop
                            };
                        }
                        Limit::Side => {}
                        Limit::Guard => rec.censored = true,
                    }
                    return rec;
                }
            }
        }
    }
}

/// Trace one ray with default options.
pub fn trace_ray<R: Rng + ?Sized>(bed: &BedGeometry, beta: f64, theta: f64, rng: &mut R) -> TraceRecord {
    Tracer::new(bed, TraceOptions::default()).trace_ray(beta, theta, rng, None)
}
