//! Uniform Cartesian grids in one and three dimensions.
//!
//! A [`Grid`] carries everything needed to turn sampled values into
//! integrals and derivatives: rectangle weights on periodic grids,
//! trapezoid weights on open grids, and fourth-order finite differences
//! (one-sided at the two outermost points of an open axis).
//!
//! Points are stored with the last axis fastest, so a 3-D point
//! `(ix, iy, iz)` lives at `(ix * n + iy) * n + iz`.
//!
//! Every reduction walks the grid in a fixed order: the first axis is split
//! into planes that may be processed in parallel, each plane is summed with
//! compensated summation, and the plane sums are combined sequentially.
//! Results are therefore bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    points: usize,
    spacing: f64,
    boundary: Boundary,
    origin: [f64; 3],
}

// Stencil coefficients, all over a common denominator of 12.
const D1_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D2_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(
        dim: usize,
        points_per_axis: usize,
        spacing: f64,
        boundary: Boundary,
        origin: [f64; 3],
    ) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 3, got {dim}"
            )));
        }
        if points_per_axis < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} points per axis, got {points_per_axis}",
                Self::MIN_POINTS
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let mut origin = origin;
        for o in origin.iter_mut().skip(dim) {
            *o = 0.0;
        }
        Ok(Self {
            dim,
            points: points_per_axis,
            spacing,
            boundary,
            origin,
        })
    }

    /// Open grid sampling `[-half_width, half_width]` on every axis, end points included.
    pub fn open_cube(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let spacing = 2.0 * half_width / (points_per_axis.max(2) - 1) as f64;
        Self::new(
            dim,
            points_per_axis,
            spacing,
            Boundary::Open,
            [-half_width; 3],
        )
    }

    /// Periodic grid on the box `[0, edge)` with `points_per_axis` samples per edge.
    pub fn periodic_box(dim: usize, points_per_axis: usize, edge: f64) -> Result<Self> {
        if !(edge.is_finite() && edge > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box edge must be positive, got {edge}"
            )));
        }
        Self::new(
            dim,
            points_per_axis,
            edge / points_per_axis as f64,
            Boundary::Periodic,
            [0.0; 3],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Total number of sample points.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Length of the quadrature domain along one axis.
    pub fn extent(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.points as f64 * self.spacing,
            Boundary::Open => (self.points - 1) as f64 * self.spacing,
        }
    }

    pub fn volume(&self) -> f64 {
        self.extent().powi(self.dim as i32)
    }

    /// Index stride of `axis` in the flattened storage.
    pub fn stride(&self, axis: usize) -> usize {
        debug_assert!(axis < self.dim);
        self.points.pow((self.dim - 1 - axis) as u32)
    }

    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    pub fn axis_coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing
    }

    /// Cartesian position of a flattened index; unused axes are zero.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut r = [0.0; 3];
        for axis in 0..self.dim {
            r[axis] = self.axis_coordinate(axis, idx[axis]);
        }
        r
    }

    /// Indices of all points lying on the outer faces of the sampled block.
    pub fn boundary_points(&self) -> Vec<usize> {
        let last = self.points - 1;
        (0..self.len())
            .filter(|&flat| {
                let idx = self.unflatten(flat);
                idx[..self.dim].iter().any(|&i| i == 0 || i == last)
            })
            .collect()
    }

    /// The grid seen by a density scaled as `n(factor * r)`: same index
    /// layout, spacing and origin divided by `factor`.
    pub fn co_scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Overflow("grid co-scaling factor"));
        }
        let spacing = self.spacing / factor;
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Overflow("co-scaled grid spacing"));
        }
        let mut origin = self.origin;
        for o in origin.iter_mut() {
            *o /= factor;
        }
        Self::new(self.dim, self.points, spacing, self.boundary, origin)
    }

    /// One-dimensional quadrature weight of index `i` along any axis.
    pub fn axis_weight(&self, i: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.spacing,
            Boundary::Open if i == 0 || i == self.points - 1 => 0.5 * self.spacing,
            Boundary::Open => self.spacing,
        }
    }

    fn planes(&self) -> (usize, usize) {
        if self.dim == 3 {
            (self.points, self.points * self.points)
        } else {
            (1, self.points)
        }
    }

    /// `sum_i w_i f(i)` over every grid point, with `f` given by flat index.
    pub fn quadrature<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let n = self.points;
        let (planes, plane_len) = self.planes();
        let partial: Vec<f64> = (0..planes)
            .into_par_iter()
            .map(|plane| {
                let mut acc = NeumaierSum::default();
                let base = plane * plane_len;
                if self.dim == 3 {
                    let wx = self.axis_weight(plane);
                    for iy in 0..n {
                        let wxy = wx * self.axis_weight(iy);
                        for iz in 0..n {
                            let flat = base + iy * n + iz;
                            acc.add(wxy * self.axis_weight(iz) * f(flat));
                        }
                    }
                } else {
                    for i in 0..n {
                        acc.add(self.axis_weight(i) * f(base + i));
                    }
                }
                acc.value()
            })
            .collect();
        let mut total = NeumaierSum::default();
        for p in partial {
            total.add(p);
        }
        total.value()
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.quadrature(|i| values[i])
    }

    fn neighbour(&self, i: usize, offset: isize) -> usize {
        (i as isize + offset).rem_euclid(self.points as isize) as usize
    }

    // Applies a stencil along one axis at one point in difference form,
    // `sum_j c_j (f_j - f_center)`, which is exact zero for constants.
    fn stencil_at(&self, values: &[f64], flat: usize, axis: usize, second: bool) -> f64 {
        let n = self.points;
        let stride = self.stride(axis);
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        let at = |j: usize| values[base + j * stride];
        let center = values[flat];
        let h = self.spacing;
        let scale = if second { 12.0 * h * h } else { 12.0 * h };

        let interior = self.is_periodic() || (2..n - 2).contains(&i);
        if interior {
            let coeffs = if second { &D2_CENTRAL } else { &D1_CENTRAL };
            let mut acc = 0.0;
            for (k, c) in coeffs.iter().enumerate() {
                if *c != 0.0 && k != 2 {
                    acc += c * (at(self.neighbour(i, k as isize - 2)) - center);
                }
            }
            return acc / scale;
        }

        // One-sided stencils; on the right edge the stencil is mirrored, which
        // flips the sign of odd derivatives.
        let (offset, from_right) = if i < 2 { (i, false) } else { (n - 1 - i, true) };
        let pick = |k: usize| if from_right { at(n - 1 - k) } else { at(k) };
        let coeffs: &[f64] = match (second, offset) {
            (false, 0) => &D1_EDGE0,
            (false, _) => &D1_EDGE1,
            (true, 0) => &D2_EDGE0,
            (true, _) => &D2_EDGE1,
        };
        let mut acc = 0.0;
        for (k, c) in coeffs.iter().enumerate() {
            if k != offset {
                acc += c * (pick(k) - center);
            }
        }
        if from_right && !second {
            acc = -acc;
        }
        acc / scale
    }

    /// First derivative along `axis` at one point.
    pub fn derivative_at(&self, values: &[f64], flat: usize, axis: usize) -> f64 {
        self.stencil_at(values, flat, axis, false)
    }

    /// Second derivative along `axis` at one point.
    pub fn second_derivative_at(&self, values: &[f64], flat: usize, axis: usize) -> f64 {
        self.stencil_at(values, flat, axis, true)
    }

    /// Squared gradient norm at one point.
    pub fn gradient_norm_sq_at(&self, values: &[f64], flat: usize) -> f64 {
        (0..self.dim)
            .map(|axis| {
                let d = self.derivative_at(values, flat, axis);
                d * d
            })
            .sum()
    }

    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        self.map_points(|flat| self.derivative_at(values, flat, axis))
    }

    pub fn laplacian_values(&self, values: &[f64]) -> Vec<f64> {
        self.map_points(|flat| {
            (0..self.dim)
                .map(|axis| self.second_derivative_at(values, flat, axis))
                .sum()
        })
    }

    /// Evaluates `f` at every flat index, in parallel over planes.
    pub fn map_points<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let (_, plane_len) = self.planes();
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(plane_len)
            .enumerate()
            .for_each(|(plane, chunk)| {
                let base = plane * plane_len;
                for (k, v) in chunk.iter_mut().enumerate() {
                    *v = f(base + k);
                }
            });
        out
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = grid.map_points(|flat| f(grid.position(flat)));
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} components for a {}-D grid",
                components.len(),
                grid.dim()
            )));
        }
        if let Some(c) = components.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: c.len(),
            });
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn norm_sq(&self) -> ScalarField {
        let values = self
            .grid
            .map_points(|i| self.components.iter().map(|c| c[i] * c[i]).sum());
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// Rectangle rule on periodic grids, trapezoid rule on open grids.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.integrate_values(&f.values)
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let components = (0..f.grid.dim())
        .map(|axis| f.grid.derivative(&f.values, axis))
        .collect();
    VectorField {
        grid: f.grid.clone(),
        components,
    }
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    ScalarField {
        grid: f.grid.clone(),
        values: f.grid.laplacian_values(&f.values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(2, 16, 1.0, Boundary::Open, [0.0; 3]).is_err());
        assert!(Grid::new(3, 7, 1.0, Boundary::Open, [0.0; 3]).is_err());
        assert!(Grid::new(1, 16, 0.0, Boundary::Open, [0.0; 3]).is_err());
        assert!(Grid::new(1, 16, f64::NAN, Boundary::Periodic, [0.0; 3]).is_err());
    }

    #[test]
    fn constant_on_periodic_box_integrates_to_volume() {
        let grid = Grid::new(3, 16, 0.5, Boundary::Periodic, [0.0; 3]).unwrap();
        let f = ScalarField::constant(grid, 1.0);
        assert_eq!(integrate(&f), 512.0);
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let grid = Grid::open_cube(3, 16, 2.0).unwrap();
        assert_eq!(integrate(&ScalarField::constant(grid, 0.0)), 0.0);
    }

    #[test]
    fn gaussian_quadrature_matches_closed_form() {
        let grid = Grid::open_cube(3, 64, 8.0).unwrap();
        let f = ScalarField::from_fn(grid, |r| (-(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])).exp());
        let exact = PI.powf(1.5);
        assert!((integrate(&f) - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn open_trapezoid_weights() {
        let grid = Grid::open_cube(1, 9, 4.0).unwrap();
        assert_eq!(grid.axis_weight(0), 0.5);
        assert_eq!(grid.axis_weight(4), 1.0);
        assert_eq!(grid.axis_weight(8), 0.5);
        // trapezoid is exact for linear integrands
        let f = ScalarField::from_fn(grid, |r| 2.0 * r[0] + 3.0);
        assert!((integrate(&f) - 24.0).abs() < 1e-13);
    }

    #[test]
    fn flatten_layout_is_last_axis_fastest() {
        let grid = Grid::periodic_box(3, 8, 8.0).unwrap();
        assert_eq!(grid.stride(2), 1);
        assert_eq!(grid.stride(0), 64);
        assert_eq!(grid.unflatten(64 * 3 + 8 * 2 + 5), [3, 2, 5]);
        assert_eq!(grid.position(64 * 3 + 8 * 2 + 5), [3.0, 2.0, 5.0]);
        assert_eq!(grid.boundary_points().len(), 512 - 216);
    }

    #[test]
    fn linear_gradient_is_exact_everywhere() {
        let grid = Grid::open_cube(1, 32, 3.0).unwrap();
        let f = ScalarField::from_fn(grid, |r| r[0]);
        let g = gradient(&f);
        for d in g.component(0) {
            assert!((d - 1.0).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn quartic_derivatives_are_exact_including_edges() {
        // fourth-order stencils differentiate polynomials up to degree 4 exactly
        let grid = Grid::open_cube(1, 20, 1.0).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |r| {
            let x = r[0];
            x.powi(4) - 2.0 * x.powi(3) + x - 0.5
        });
        let g = gradient(&f);
        let l = laplacian(&f);
        for i in 0..grid.len() {
            let x = grid.position(i)[0];
            let d1 = 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
            let d2 = 12.0 * x * x - 12.0 * x;
            assert!((g.component(0)[i] - d1).abs() < 1e-11, "d1 at {i}");
            assert!((l.values()[i] - d2).abs() < 1e-9, "d2 at {i}");
        }
    }

    #[test]
    fn quadratic_laplacian_is_two() {
        let grid = Grid::open_cube(1, 40, 5.0).unwrap();
        let l = laplacian(&ScalarField::from_fn(grid, |r| r[0] * r[0]));
        for v in &l.values()[2..38] {
            assert!((v - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_derivatives_are_exactly_zero() {
        for grid in [
            Grid::periodic_box(3, 8, 3.7).unwrap(),
            Grid::open_cube(3, 8, 1.3).unwrap(),
        ] {
            let f = ScalarField::constant(grid, 0.1 + 0.2);
            let g = gradient(&f);
            for c in g.components() {
                assert!(c.iter().all(|&v| v == 0.0));
            }
            assert!(laplacian(&f).values().iter().all(|&v| v == 0.0));
        }
    }

    fn periodic_sine_errors(points: usize) -> (f64, f64) {
        let edge = 3.0;
        let k = 2.0 * PI / edge;
        let grid = Grid::periodic_box(1, points, edge).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |r| (k * r[0]).sin());
        let g = gradient(&f);
        let l = laplacian(&f);
        let exact_d1: Vec<f64> = (0..points)
            .map(|i| k * (k * grid.position(i)[0]).cos())
            .collect();
        let exact_d2: Vec<f64> = f.values().iter().map(|v| -k * k * v).collect();
        (
            max_abs_diff(g.component(0), &exact_d1),
            max_abs_diff(l.values(), &exact_d2),
        )
    }

    #[test]
    fn periodic_derivatives_converge_at_fourth_order() {
        let (g32, l32) = periodic_sine_errors(32);
        let (g64, l64) = periodic_sine_errors(64);
        let (g128, l128) = periodic_sine_errors(128);
        for (coarse, fine) in [(g32, g64), (g64, g128), (l32, l64), (l64, l128)] {
            let order = (coarse / fine).log2();
            assert!(order >= 3.9, "observed order {order}");
        }
    }

    #[test]
    fn plane_wave_is_laplacian_eigenfunction() {
        let edge = 4.0;
        let points = 32;
        let k = 2.0 * PI / edge;
        let grid = Grid::periodic_box(3, points, edge).unwrap();
        let f = ScalarField::from_fn(grid, |r| (k * r[1]).cos());
        let l = laplacian(&f);
        let h = edge / points as f64;
        // symbol of the five-point stencil: k^2 (1 - (kh)^4/90 + ...)
        let bound = (k * h).powi(4) / 60.0;
        for (lv, fv) in l.values().iter().zip(f.values()) {
            assert!((lv + k * k * fv).abs() <= bound * k * k * fv.abs() + 1e-12);
        }
    }

    #[test]
    fn co_scaling_divides_spacing_and_origin() {
        let grid = Grid::open_cube(3, 16, 4.0).unwrap();
        let scaled = grid.co_scaled(2.0).unwrap();
        assert_eq!(scaled.spacing(), grid.spacing() / 2.0);
        assert_eq!(scaled.origin(), [-2.0; 3]);
        assert!(grid.co_scaled(0.0).is_err());
        assert!(grid.co_scaled(f64::INFINITY).is_err());
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
