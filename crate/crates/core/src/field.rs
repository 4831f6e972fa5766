//! Two-component lattice fields with bound Dirichlet data, plus the flat
//! binary checkpoint format.

use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::domain::{BoundaryDatum, Grid2D, NodeClass};
use crate::scalar::Scalar;
use crate::vec2::Vec2;

#[derive(Clone, Debug)]
pub struct FieldR2<S> {
    grid: Arc<Grid2D<S>>,
    pub u1: Vec<S>,
    pub u2: Vec<S>,
}

impl<S: Scalar> FieldR2<S> {
    /// Zero interior, boundary-adjacent nodes pinned to `g` at their anchors.
    pub fn bind(grid: Arc<Grid2D<S>>, datum: &BoundaryDatum<S>) -> Self {
        let n2 = grid.n() * grid.n();
        let mut f = Self {
            grid,
            u1: vec![S::zero(); n2],
            u2: vec![S::zero(); n2],
        };
        f.apply_boundary(datum);
        f
    }

    pub fn zeros(grid: Arc<Grid2D<S>>) -> Self {
        let n2 = grid.n() * grid.n();
        Self {
            grid,
            u1: vec![S::zero(); n2],
            u2: vec![S::zero(); n2],
        }
    }

    pub fn grid(&self) -> &Arc<Grid2D<S>> {
        &self.grid
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Vec2<S> {
        Vec2::new(self.u1[idx], self.u2[idx])
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: Vec2<S>) {
        self.u1[idx] = v.x;
        self.u2[idx] = v.y;
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vec2<S> {
        self.get(self.grid.idx(i, j))
    }

    /// Re-pins boundary-adjacent values; the solver calls this after steps so
    /// the Dirichlet binding holds to machine precision.
    pub fn apply_boundary(&mut self, datum: &BoundaryDatum<S>) {
        for cn in self.grid.cut_nodes().iter() {
            let g = datum.g(cn.theta);
            self.u1[cn.idx as usize] = g.x;
            self.u2[cn.idx as usize] = g.y;
        }
    }

    /// Largest |u| over computational nodes.
    pub fn max_norm(&self) -> S {
        let mut m = S::zero();
        for j in 0..self.grid.n() {
            for i in 0..self.grid.n() {
                let idx = self.grid.idx(i, j);
                if self.grid.is_computational(idx) {
                    m = m.max(self.get(idx).norm());
                }
            }
        }
        m
    }

    /// Largest |∇u| by centered differences over interior nodes.
    pub fn max_grad_norm(&self) -> S {
        let g = &self.grid;
        let n = g.n();
        let two_h = S::two() * g.h();
        let mut m = S::zero();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let idx = g.idx(i, j);
                if g.class(idx) != NodeClass::Interior {
                    continue;
                }
                let dx = (self.get(g.idx(i + 1, j)) - self.get(g.idx(i - 1, j))) / two_h;
                let dy = (self.get(g.idx(i, j + 1)) - self.get(g.idx(i, j - 1))) / two_h;
                m = m.max((dx.norm_sq() + dy.norm_sq()).sqrt());
            }
        }
        m
    }

    /// Bilinear sample at an arbitrary in-domain point. Cells touching the
    /// boundary renormalize over their computational corners (first-order
    /// near the boundary, like the rest of the cut-cell treatment).
    pub fn sample(&self, p: Vec2<S>) -> Vec2<S> {
        let g = &self.grid;
        let n = g.n();
        let origin = g.point(0, 0);
        let fx = ((p.x - origin.x) / g.h()).to_f64().floor();
        let fy = ((p.y - origin.y) / g.h()).to_f64().floor();
        let i = (fx.max(0.0) as usize).min(n - 2);
        let j = (fy.max(0.0) as usize).min(n - 2);
        let base = g.point(i, j);
        let ax = ((p.x - base.x) / g.h()).max(S::zero()).min(S::one());
        let ay = ((p.y - base.y) / g.h()).max(S::zero()).min(S::one());
        let corners = [
            (i, j, (S::one() - ax) * (S::one() - ay)),
            (i + 1, j, ax * (S::one() - ay)),
            (i, j + 1, (S::one() - ax) * ay),
            (i + 1, j + 1, ax * ay),
        ];
        let mut acc = Vec2::zero();
        let mut wsum = S::zero();
        for (ci, cj, w) in corners {
            let idx = g.idx(ci, cj);
            if g.is_computational(idx) {
                acc += self.get(idx) * w;
                wsum = wsum + w;
            }
        }
        if wsum > S::zero() {
            acc / wsum
        } else {
            Vec2::zero()
        }
    }

    /// Writes the flat binary checkpoint: `n` (u64 LE), `h`, `eps` (f64 LE),
    /// then `u1` and `u2` row-major as f64 LE.
    pub fn write_checkpoint(&self, path: &Path, eps: S) -> io::Result<()> {
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        f.write_all(&self.grid.h().to_f64().to_le_bytes())?;
        f.write_all(&eps.to_f64().to_le_bytes())?;
        for &v in self.u1.iter().chain(self.u2.iter()) {
            f.write_all(&v.to_f64().to_le_bytes())?;
        }
        f.flush()
    }

    /// Reads a checkpoint onto an existing grid (sizes must match).
    pub fn read_checkpoint(path: &Path, grid: Arc<Grid2D<S>>) -> io::Result<(Self, S)> {
        let raw = RawCheckpoint::read(path)?;
        if raw.n != grid.n() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("checkpoint grid n = {}, expected {}", raw.n, grid.n()),
            ));
        }
        let f = Self {
            grid,
            u1: raw.u1.iter().map(|&v| S::lit(v)).collect(),
            u2: raw.u2.iter().map(|&v| S::lit(v)).collect(),
        };
        Ok((f, S::lit(raw.eps)))
    }
}

/// Checkpoint contents independent of any grid.
#[derive(Clone, Debug)]
pub struct RawCheckpoint {
    pub n: usize,
    pub h: f64,
    pub eps: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl RawCheckpoint {
    pub fn read(path: &Path) -> io::Result<Self> {
        let mut f = io::BufReader::new(std::fs::File::open(path)?);
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        f.read_exact(&mut b8)?;
        let h = f64::from_le_bytes(b8);
        f.read_exact(&mut b8)?;
        let eps = f64::from_le_bytes(b8);
        let mut read_plane = |count: usize| -> io::Result<Vec<f64>> {
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                f.read_exact(&mut b8)?;
                out.push(f64::from_le_bytes(b8));
            }
            Ok(out)
        };
        let u1 = read_plane(n * n)?;
        let u2 = read_plane(n * n)?;
        Ok(Self { n, h, eps, u1, u2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, CurveSpec};
    use crate::domain::{DomainSpec, StarDomain};

    fn small_grid() -> Arc<Grid2D<f64>> {
        let d = Arc::new(StarDomain::build(&DomainSpec::Disc { r: 1.0 }).unwrap());
        Arc::new(Grid2D::rasterize(d, 64).unwrap())
    }

    #[test]
    fn boundary_binding_is_exact() {
        let grid = small_grid();
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        let datum = BoundaryDatum::new(curve, 1, |_| 0.0).unwrap();
        let f = FieldR2::bind(grid.clone(), &datum);
        for cn in grid.cut_nodes() {
            let g = datum.g(cn.theta);
            assert_eq!(f.get(cn.idx as usize).x, g.x);
            assert_eq!(f.get(cn.idx as usize).y, g.y);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let grid = small_grid();
        let mut f = FieldR2::zeros(grid.clone());
        for (k, v) in f.u1.iter_mut().enumerate() {
            *v = (k as f64 * 0.37).sin();
        }
        for (k, v) in f.u2.iter_mut().enumerate() {
            *v = (k as f64 * 0.11).cos();
        }
        let dir = std::env::temp_dir().join("fieldr2_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u.bin");
        f.write_checkpoint(&path, 0.05).unwrap();

        let raw = RawCheckpoint::read(&path).unwrap();
        assert_eq!(raw.n, 64);
        assert_eq!(raw.eps, 0.05);
        assert_eq!(raw.h, grid.h());

        let (g, eps) = FieldR2::<f64>::read_checkpoint(&path, grid).unwrap();
        assert_eq!(eps, 0.05);
        assert_eq!(g.u1, f.u1);
        assert_eq!(g.u2, f.u2);
        std::fs::remove_dir_all(&dir).ok();
    }
}
