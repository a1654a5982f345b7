//! Sampled functions on the uniform box grid `x_j = -L + j h`, `h = 2L / n`,
//! and the `LSGF1` file format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Real samples of `u` on `[-L, L)^N`, row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    n: usize,
    half_width: f64,
    periodic: bool,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(
        dim: usize,
        n: usize,
        half_width: f64,
        periodic: bool,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_shape(dim, n, half_width)?;
        let expected = n.pow(dim as u32);
        if values.len() != expected {
            return Err(Error::Data(format!(
                "expected {expected} samples for N={dim}, n={n}; got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("sample {i} is not finite")));
        }
        Ok(GridFunction {
            dim,
            n,
            half_width,
            periodic,
            values,
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(dim: usize, n: usize, half_width: f64, periodic: bool, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        check_shape(dim, n, half_width)?;
        let h = 2.0 * half_width / n as f64;
        let total = n.pow(dim as u32);
        let values = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut x = [0.0; MAX_DIM];
                let mut rem = idx;
                for axis in (0..dim).rev() {
                    x[axis] = -half_width + (rem % n) as f64 * h;
                    rem /= n;
                }
                f(&x[..dim])
            })
            .collect();
        GridFunction::new(dim, n, half_width, periodic, values)
    }

    pub fn constant(dim: usize, n: usize, half_width: f64, periodic: bool, c: f64) -> Result<Self> {
        check_shape(dim, n, half_width)?;
        GridFunction::new(dim, n, half_width, periodic, vec![c; n.pow(dim as u32)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same geometry, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        GridFunction::new(self.dim, self.n, self.half_width, self.periodic, values)
    }

    pub fn with_periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn same_geometry(&self, other: &GridFunction) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_width == other.half_width
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Result<Self> {
        self.with_values(self.values.par_iter().map(|&v| f(v)).collect())
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if !self.same_geometry(other) {
            return Err(Error::Contract("grid geometries differ".into()));
        }
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &j| acc * self.n + j)
    }

    /// Coordinates of the grid point with flat index `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut multi = vec![0; self.dim];
        self.unravel(idx, &mut multi);
        multi.iter().map(|&j| self.coord(j)).collect()
    }

    /// Sample at a (possibly out-of-range) multi-index, using the periodic or
    /// zero extension.
    pub fn at_index(&self, multi: &[i64]) -> f64 {
        let n = self.n as i64;
        let mut flat = 0usize;
        for &j in multi {
            let j = if self.periodic {
                j.rem_euclid(n)
            } else if j < 0 || j >= n {
                return 0.0;
            } else {
                j
            };
            flat = flat * self.n + j as usize;
        }
        self.values[flat]
    }

    /// Multilinear interpolation at an arbitrary point.
    pub fn sample(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let h = self.spacing();
        let mut base = [0i64; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            let t = (x[axis] + self.half_width) / h;
            let fl = t.floor();
            base[axis] = fl as i64;
            frac[axis] = t - fl;
        }
        let mut acc = 0.0;
        let mut corner = [0i64; MAX_DIM];
        for mask in 0..(1usize << self.dim) {
            let mut w = 1.0;
            for axis in 0..self.dim {
                if mask & (1 << axis) != 0 {
                    corner[axis] = base[axis] + 1;
                    w *= frac[axis];
                } else {
                    corner[axis] = base[axis];
                    w *= 1.0 - frac[axis];
                }
            }
            if w != 0.0 {
                acc += w * self.at_index(&corner[..self.dim]);
            }
        }
        acc
    }

    /// Fractional grid index of a coordinate along one axis.
    pub fn grid_position(&self, x: f64) -> f64 {
        (x + self.half_width) / self.spacing()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Flat index of the largest sample (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Writes the `LSGF1` header and little-endian samples.
    pub fn write_lsgf<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "LSGF1 N={} n={} L={} periodic={}",
            self.dim,
            self.n,
            self.half_width,
            u8::from(self.periodic)
        )?;
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_lsgf<R: Read>(r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header
            .strip_suffix('\n')
            .ok_or_else(|| Error::Format("header line is not newline-terminated".into()))?;
        let mut fields = header.split(' ');
        if fields.next() != Some("LSGF1") {
            return Err(Error::Format("missing LSGF1 magic".into()));
        }
        let mut take = |key: &str| -> Result<&str> {
            let field = fields
                .next()
                .ok_or_else(|| Error::Format(format!("missing field {key}")))?;
            field
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| Error::Format(format!("expected {key}=<value>, got {field:?}")))
        };
        let dim: usize = parse_field(take("N")?, "N")?;
        let n: usize = parse_field(take("n")?, "n")?;
        let half_width: f64 = parse_field(take("L")?, "L")?;
        let periodic = match take("periodic")? {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Format(format!(
                    "periodic must be 0 or 1, got {other}"
                )))
            }
        };
        if fields.next().is_some() {
            return Err(Error::Format("trailing header fields".into()));
        }
        check_shape(dim, n, half_width)?;
        let count = n.pow(dim as u32);
        let mut bytes = vec![0u8; 8 * count];
        reader
            .read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("expected {count} samples: {e}")))?;
        let mut extra = [0u8; 1];
        if reader.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after samples".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        GridFunction::new(dim, n, half_width, periodic, values)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_lsgf(BufWriter::new(File::create(path)?))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        GridFunction::read_lsgf(File::open(path)?)
    }
}

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

fn check_shape(dim: usize, n: usize, half_width: f64) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Domain(format!(
            "dimension must be 1..={MAX_DIM}, got {dim}"
        )));
    }
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "points per axis must be even and >= 4, got {n}"
        )));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::Domain(format!(
            "half-width must be positive, got {half_width}"
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("cannot parse {key}={s}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridFunction::constant(1, 3, 1.0, false, 0.0).is_err());
        assert!(GridFunction::constant(1, 2, 1.0, false, 0.0).is_err());
        assert!(GridFunction::constant(4, 4, 1.0, false, 0.0).is_err());
        assert!(GridFunction::new(1, 4, 1.0, false, vec![0.0, 1.0, f64::NAN, 0.0]).is_err());
        assert!(GridFunction::new(2, 4, 1.0, false, vec![0.0; 15]).is_err());
    }

    #[test]
    fn coordinates_and_layout() {
        let u = GridFunction::from_fn(2, 8, 2.0, false, |x| 10.0 * x[0] + x[1]).unwrap();
        assert_eq!(u.spacing(), 0.5);
        let idx = u.ravel(&[3, 5]);
        assert_eq!(idx, 3 * 8 + 5);
        assert_eq!(u.point(idx), vec![-0.5, 0.5]);
        assert_eq!(u.values()[idx], -4.5);
        // bilinear data is reproduced exactly
        assert!((u.sample(&[0.3, -0.7]) - (3.0 - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn extension_rules() {
        let u = GridFunction::from_fn(1, 8, 1.0, false, |x| x[0] + 2.0).unwrap();
        assert_eq!(u.at_index(&[-1]), 0.0);
        assert_eq!(u.at_index(&[8]), 0.0);
        let p = u.clone().with_periodic(true);
        assert_eq!(p.at_index(&[-1]), p.at_index(&[7]));
        assert_eq!(p.at_index(&[9]), p.at_index(&[1]));
    }

    #[test]
    fn header_is_bit_exact() {
        let u = GridFunction::from_fn(1, 4, 12.0, true, |x| x[0]).unwrap();
        let mut buf = Vec::new();
        u.write_lsgf(&mut buf).unwrap();
        let header = b"LSGF1 N=1 n=4 L=12 periodic=1\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf.len(), header.len() + 32);
        assert_eq!(
            &buf[header.len()..header.len() + 8],
            &(-12.0f64).to_le_bytes()
        );
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(GridFunction::read_lsgf(&b"LSGF2 N=1 n=4 L=1 periodic=0\n"[..]).is_err());
        assert!(GridFunction::read_lsgf(&b"LSGF1 N=1 n=4 L=1 periodic=2\n"[..]).is_err());
        let mut short = b"LSGF1 N=1 n=4 L=1 periodic=0\n".to_vec();
        short.extend_from_slice(&[0u8; 24]);
        assert!(GridFunction::read_lsgf(&short[..]).is_err());
        let mut long = b"LSGF1 N=1 n=4 L=1 periodic=0\n".to_vec();
        long.extend_from_slice(&[0u8; 33]);
        assert!(GridFunction::read_lsgf(&long[..]).is_err());
    }

    proptest! {
        #[test]
        fn lsgf_round_trip(
            dim in 1usize..=2,
            half_n in 2usize..6,
            half_width in 0.1f64..50.0,
            periodic: bool,
            seed in any::<u64>(),
        ) {
            let n = 2 * half_n;
            let u = GridFunction::from_fn(dim, n, half_width, periodic, |x| {
                let s = x.iter().sum::<f64>();
                (s * (seed % 97) as f64).sin() * 1e3
            }).unwrap();
            let mut buf = Vec::new();
            u.write_lsgf(&mut buf).unwrap();
            let back = GridFunction::read_lsgf(&buf[..]).unwrap();
            prop_assert_eq!(back, u);
        }
    }
}
