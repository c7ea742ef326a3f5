//! Uniformly sampled fields over `(t, x, y, z)`.
//!
//! # File layout
//!
//! Grid files are CSV. Lines starting with `#` are comments. The first three
//! records are the header, followed by one record per sample:
//!
//! ```text
//! origin,t0,x0,y0,z0
//! spacing,dt,dx,dy,dz
//! count,nt,nx,ny,nz
//! v                     # real grids: one value per record
//! re,im                 # complex grids: real and imaginary part
//! ```
//!
//! Samples are row-major with `t` slowest and `z` fastest, i.e. sample
//! `(k, i, j, l)` sits at record `((k·nx + i)·ny + j)·nz + l`. An axis with
//! count 1 is constant along that axis; any other axis needs at least 5
//! samples so the derivative stencils fit.
//!
//! Spatial values between nodes use 4-point Lagrange interpolation per axis;
//! time uses linear interpolation between slices.

use std::io::{Read, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{to_f64_array, Real};

/// Minimum sample count along an axis that varies.
pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub origin: [T; 4],
    pub spacing: [T; 4],
    pub counts: [usize; 4],
}

impl<T: Real> GridSpec<T> {
    pub fn new(origin: [T; 4], spacing: [T; 4], counts: [usize; 4]) -> Result<Self> {
        for ax in 0..4 {
            if counts[ax] == 0 {
                return Err(Error::InvalidGrid(format!("axis {ax} has no samples")));
            }
            if counts[ax] > 1 {
                if counts[ax] < MIN_SAMPLES {
                    return Err(Error::InvalidGrid(format!(
                        "axis {ax} has {} samples; need 1 or at least {MIN_SAMPLES}",
                        counts[ax]
                    )));
                }
                if !(spacing[ax] > T::zero()) {
                    return Err(Error::InvalidGrid(format!("axis {ax} spacing must be positive")));
                }
            }
        }
        Ok(Self { origin, spacing, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, idx: [usize; 4]) -> usize {
        let [_, nx, ny, nz] = self.counts;
        ((idx[0] * nx + idx[1]) * ny + idx[2]) * nz + idx[3]
    }

    pub fn unravel(&self, mut flat: usize) -> [usize; 4] {
        let mut idx = [0; 4];
        for ax in (0..4).rev() {
            idx[ax] = flat % self.counts[ax];
            flat /= self.counts[ax];
        }
        idx
    }

    pub fn point(&self, idx: [usize; 4]) -> [T; 4] {
        std::array::from_fn(|ax| self.origin[ax] + self.spacing[ax] * T::from_usize(idx[ax]).unwrap())
    }

    pub fn upper(&self) -> [T; 4] {
        std::array::from_fn(|ax| {
            self.origin[ax] + self.spacing[ax] * T::from_usize(self.counts[ax] - 1).unwrap()
        })
    }

    /// Iterates all node coordinates in storage order.
    pub fn points(&self) -> impl Iterator<Item = [T; 4]> + '_ {
        (0..self.len()).map(move |f| self.point(self.unravel(f)))
    }

    /// Whether `p` lies inside the sampled box (degenerate axes accept anything).
    pub fn contains(&self, p: &[T; 4]) -> bool {
        let hi = self.upper();
        (0..4).all(|ax| {
            if self.counts[ax] == 1 {
                return true;
            }
            let slack = self.spacing[ax] * T::lit(1e-9);
            p[ax] >= self.origin[ax] - slack && p[ax] <= hi[ax] + slack
        })
    }
}

/// Real-valued samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, found {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec<T>, f: impl Fn([T; 4]) -> T) -> Self {
        let values = spec.points().map(f).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn at(&self, idx: [usize; 4]) -> T {
        self.values[self.spec.index(idx)]
    }

    fn out_of_box(&self, p: &[T; 4]) -> Error {
        Error::DomainBoundary { point: to_f64_array(p) }
    }

    /// Value at an arbitrary point inside the grid box.
    pub fn value(&self, p: &[T; 4]) -> Result<T> {
        if !self.spec.contains(p) {
            return Err(self.out_of_box(p));
        }
        let (k0, k1, w) = self.time_bracket(p[0]);
        let v0 = self.spatial_value(k0, p);
        if w == T::zero() {
            return Ok(v0);
        }
        let v1 = self.spatial_value(k1, p);
        Ok(v0 + (v1 - v0) * w)
    }

    /// Slice indices around `t` and the linear weight of the upper one.
    fn time_bracket(&self, t: T) -> (usize, usize, T) {
        let n = self.spec.counts[0];
        if n == 1 {
            return (0, 0, T::zero());
        }
        let s = ((t - self.spec.origin[0]) / self.spec.spacing[0])
            .max(T::zero())
            .min(T::from_usize(n - 1).unwrap());
        let k = s.floor().to_usize().unwrap().min(n - 2);
        let w = s - T::from_usize(k).unwrap();
        (k, k + 1, w)
    }

    /// Lagrange window start and weights along one spatial axis.
    fn axis_weights(&self, ax: usize, coord: T) -> (usize, [T; 4]) {
        let n = self.spec.counts[ax];
        if n == 1 {
            return (0, [T::one(), T::zero(), T::zero(), T::zero()]);
        }
        let s = (coord - self.spec.origin[ax]) / self.spec.spacing[ax];
        let base = s.floor().to_isize().unwrap_or(0) - 1;
        let start = base.clamp(0, n as isize - 4) as usize;
        let u = s - T::from_usize(start).unwrap();
        let nodes = [T::zero(), T::one(), T::two(), T::lit(3.0)];
        let w = std::array::from_fn(|a| {
            let mut l = T::one();
            for b in 0..4 {
                if b != a {
                    l *= (u - nodes[b]) / (nodes[a] - nodes[b]);
                }
            }
            l
        });
        (start, w)
    }

    fn spatial_value(&self, k: usize, p: &[T; 4]) -> T {
        let (sx, wx) = self.axis_weights(1, p[1]);
        let (sy, wy) = self.axis_weights(2, p[2]);
        let (sz, wz) = self.axis_weights(3, p[3]);
        let span = |ax: usize| if self.spec.counts[ax] == 1 { 1 } else { 4 };
        let mut acc = T::zero();
        for a in 0..span(1) {
            for b in 0..span(2) {
                for c in 0..span(3) {
                    let w = wx[a] * wy[b] * wz[c];
                    if w != T::zero() {
                        acc += w * self.at([k, sx + a, sy + b, sz + c]);
                    }
                }
            }
        }
        acc
    }

    fn shifted(&self, p: &[T; 4], ax: usize, delta: T) -> Result<T> {
        let mut q = *p;
        q[ax] += delta;
        if !self.spec.contains(&q) {
            return Err(self.out_of_box(p));
        }
        self.value(&q)
    }

    /// Partial derivative along `ax`.
    ///
    /// Spatial axes use central differences at steps `h` and `2h`
    /// (h = spacing) combined by one Richardson level. The time axis uses
    /// the slope between bracketing slices, or the central slope across
    /// neighbouring slices when `t` sits on a slice.
    pub fn derivative(&self, ax: usize, p: &[T; 4]) -> Result<T> {
        if !self.spec.contains(p) {
            return Err(self.out_of_box(p));
        }
        if self.spec.counts[ax] == 1 {
            return Ok(T::zero());
        }
        if ax == 0 {
            return self.time_derivative(p);
        }
        let h = self.spec.spacing[ax];
        let d = |step: T| -> Result<T> {
            Ok((self.shifted(p, ax, step)? - self.shifted(p, ax, -step)?) / (T::two() * step))
        };
        let d1 = d(h)?;
        let d2 = d(T::two() * h)?;
        Ok((T::lit(4.0) * d1 - d2) / T::lit(3.0))
    }

    /// Second derivative along a spatial axis, Richardson-extrapolated.
    pub fn second_derivative(&self, ax: usize, p: &[T; 4]) -> Result<T> {
        if !self.spec.contains(p) {
            return Err(self.out_of_box(p));
        }
        if self.spec.counts[ax] == 1 {
            return Ok(T::zero());
        }
        let h = self.spec.spacing[ax];
        let f0 = self.value(p)?;
        let d = |step: T| -> Result<T> {
            Ok((self.shifted(p, ax, step)? - T::two() * f0 + self.shifted(p, ax, -step)?) / (step * step))
        };
        let d1 = d(h)?;
        let d2 = d(T::two() * h)?;
        Ok((T::lit(4.0) * d1 - d2) / T::lit(3.0))
    }

    fn time_derivative(&self, p: &[T; 4]) -> Result<T> {
        let n = self.spec.counts[0];
        let dt = self.spec.spacing[0];
        let s = (p[0] - self.spec.origin[0]) / dt;
        let nearest = s.round();
        let on_slice = (s - nearest).abs() < T::lit(1e-9);
        let slice_value = |k: usize| -> T {
            let mut q = *p;
            q[0] = self.spec.origin[0] + dt * T::from_usize(k).unwrap();
            self.spatial_value(k, &q)
        };
        if on_slice {
            let k = nearest.to_usize().unwrap_or(0).min(n - 1);
            return Ok(if k == 0 {
                (slice_value(1) - slice_value(0)) / dt
            } else if k == n - 1 {
                (slice_value(n - 1) - slice_value(n - 2)) / dt
            } else {
                (slice_value(k + 1) - slice_value(k - 1)) / (T::two() * dt)
            });
        }
        let (k0, k1, _) = self.time_bracket(p[0]);
        Ok((slice_value(k1) - slice_value(k0)) / dt)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (spec, rows) = read_grid_records(reader, 1)?;
        let values = rows.into_iter().map(|r| T::lit(r[0])).collect();
        Self::new(spec, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let rows = self.values.iter().map(|v| vec![v.as_f64()]);
        write_grid_records(writer, &self.spec, rows)
    }
}

/// Complex samples, e.g. a wave function Ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid<T> {
    spec: GridSpec<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ComplexGrid<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, found {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec<T>, f: impl Fn([T; 4]) -> Complex<T>) -> Self {
        let values = spec.points().map(f).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (spec, rows) = read_grid_records(reader, 2)?;
        let values = rows
            .into_iter()
            .map(|r| Complex::new(T::lit(r[0]), T::lit(r[1])))
            .collect();
        Self::new(spec, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let rows = self.values.iter().map(|v| vec![v.re.as_f64(), v.im.as_f64()]);
        write_grid_records(writer, &self.spec, rows)
    }
}

fn read_grid_records<T: Real, R: Read>(reader: R, width: usize) -> Result<(GridSpec<T>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut header = |name: &str| -> Result<Vec<f64>> {
        let rec = records
            .next()
            .ok_or_else(|| Error::InvalidGrid(format!("missing `{name}` header")))?
            .map_err(|e| Error::InvalidGrid(e.to_string()))?;
        if rec.get(0) != Some(name) || rec.len() != 5 {
            return Err(Error::InvalidGrid(format!("expected `{name},a,b,c,d` header record")));
        }
        rec.iter()
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|_| Error::InvalidGrid(format!("bad number `{f}` in `{name}`"))))
            .collect()
    };
    let origin = header("origin")?;
    let spacing = header("spacing")?;
    let count = header("count")?;
    let counts: [usize; 4] = std::array::from_fn(|i| count[i] as usize);
    if count.iter().any(|c| c.fract() != 0.0 || *c < 1.0) {
        return Err(Error::InvalidGrid("counts must be positive integers".into()));
    }
    let spec = GridSpec::new(
        std::array::from_fn(|i| T::lit(origin[i])),
        std::array::from_fn(|i| T::lit(spacing[i])),
        counts,
    )?;
    let mut rows = Vec::with_capacity(spec.len());
    for (n, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::InvalidGrid(e.to_string()))?;
        if rec.len() != width {
            return Err(Error::InvalidGrid(format!("sample {n}: expected {width} fields, found {}", rec.len())));
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::InvalidGrid(format!("sample {n}: bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("sample {n} is not finite")));
        }
        rows.push(row);
    }
    Ok((spec, rows))
}

fn write_grid_records<T: Real, W: Write>(
    mut w: W,
    spec: &GridSpec<T>,
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidGrid(e.to_string());
    let fmt4 = |v: [f64; 4]| v.map(|x| format!("{x:.16e}")).join(",");
    writeln!(w, "origin,{}", fmt4(to_f64_array(&spec.origin))).map_err(io)?;
    writeln!(w, "spacing,{}", fmt4(to_f64_array(&spec.spacing))).map_err(io)?;
    writeln!(w, "count,{}", spec.counts.map(|c| c.to_string()).join(",")).map_err(io)?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    Ok(())
}
