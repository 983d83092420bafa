use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::scalar::Real;

/// A path skeleton on a time grid with running-supremum accumulators.
///
/// `sup_first[k]` is the running maximum of coordinate 1 up to index `k`
/// (bridge-corrected when the sampler supplied a per-step bridge maximum);
/// `sup_norm[k]` is the running maximum of `|X_s - X_0|` over stored points.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid<T> {
    dim: usize,
    times: Vec<T>,
    positions: Vec<T>,
    sup_first: Vec<T>,
    sup_norm: Vec<T>,
}

impl<T: Real> PathGrid<T> {
    /// A path holding only its starting point at time 0.
    pub fn new(start: &[T]) -> Self {
        assert!(!start.is_empty(), "path dimension must be positive");
        Self {
            dim: start.len(),
            times: vec![T::zero()],
            positions: start.to_vec(),
            sup_first: vec![start[0]],
            sup_norm: vec![T::zero()],
        }
    }

    pub fn with_capacity(start: &[T], n: usize) -> Self {
        let mut out = Self::new(start);
        out.times.reserve(n);
        out.positions.reserve(n * start.len());
        out.sup_first.reserve(n);
        out.sup_norm.reserve(n);
        out
    }

    /// Append a point. `bridge_max` is an upper value for coordinate 1 on the
    /// step just completed, e.g. an exact Brownian bridge maximum.
    pub fn push(&mut self, time: T, position: &[T], bridge_max: Option<T>) {
        debug_assert_eq!(position.len(), self.dim);
        debug_assert!(time > *self.times.last().unwrap());
        let k = self.times.len() - 1;
        let mut sf = self.sup_first[k].max(position[0]);
        if let Some(b) = bridge_max {
            sf = sf.max(b);
        }
        let r = crate::scalar::dist(position, &self.positions[..self.dim]);
        self.times.push(time);
        self.positions.extend_from_slice(position);
        self.sup_first.push(sf);
        self.sup_norm.push(self.sup_norm[k].max(r));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored points (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn final_time(&self) -> T {
        *self.times.last().unwrap()
    }

    pub fn position(&self, k: usize) -> &[T] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn start(&self) -> &[T] {
        self.position(0)
    }

    pub fn end(&self) -> &[T] {
        self.position(self.len() - 1)
    }

    /// Coordinate `i` along the whole path.
    pub fn coordinate(&self, i: usize) -> Vec<T> {
        (0..self.len()).map(|k| self.positions[k * self.dim + i]).collect()
    }

    pub fn sup_first_coord(&self) -> &[T] {
        &self.sup_first
    }

    pub fn sup_norm_from_start(&self) -> &[T] {
        &self.sup_norm
    }

    /// `mask[k]` is true when every stored point up to `k` lies in `domain`.
    pub fn alive_mask(&self, domain: &DomainSpec<T>) -> Result<Vec<bool>> {
        if domain.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: self.dim,
            });
        }
        let mut alive = true;
        Ok((0..self.len())
            .map(|k| {
                alive = alive && domain.contains_unchecked(self.position(k));
                alive
            })
            .collect())
    }

    /// Every `factor`-th point, with accumulators recomputed from the kept
    /// points only (bridge corrections are dropped).
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || (self.len() - 1) % factor != 0 {
            return Err(Error::param(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.len() - 1
            )));
        }
        let mut out = Self::with_capacity(self.start(), (self.len() - 1) / factor + 1);
        for k in (factor..self.len()).step_by(factor) {
            out.push(self.times[k], self.position(k), None);
        }
        Ok(out)
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.times[0] != T::zero() {
            return Err(Error::param("path must start at time 0"));
        }
        for k in 1..self.len() {
            if !(self.times[k] > self.times[k - 1]) {
                return Err(Error::param(format!("times not increasing at index {k}")));
            }
            if self.sup_first[k] < self.positions[k * self.dim] || self.sup_first[k] < self.sup_first[k - 1] {
                return Err(Error::param(format!("sup accumulator broken at index {k}")));
            }
        }
        Ok(())
    }

    /// Whether coordinate 1 never decreases.
    pub fn is_nondecreasing(&self) -> bool {
        (1..self.len()).all(|k| self.positions[k * self.dim] >= self.positions[(k - 1) * self.dim])
    }
}

/// Running supremum of coordinate 1 over the whole path.
pub fn running_sup_first_coordinate<T: Real>(path: &PathGrid<T>) -> T {
    *path.sup_first_coord().last().unwrap()
}
