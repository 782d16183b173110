//! Initial-data profiles.

use crate::error::{Error, Result};
use crate::grid::{Field, Geometry, GridSpec};
use crate::scalar::Real;
use crate::smooth::window;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile<T> {
    Zero,
    /// `A exp(-|x - c|² / w²)`.
    Gaussian { amplitude: T, width: T, center: [T; 3] },
    /// `A S(1 - |x - c| / R)`: C², supported in the closed ball of radius `R`.
    Bump { amplitude: T, radius: T, center: [T; 3] },
}

impl<T: Real> Profile<T> {
    pub fn gaussian(amplitude: T, width: T, center: [T; 3]) -> Self {
        Profile::Gaussian { amplitude, width, center }
    }

    pub fn bump(amplitude: T, radius: T, center: [T; 3]) -> Self {
        Profile::Bump { amplitude, radius, center }
    }

    pub fn scaled(self, s: T) -> Self {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Gaussian { amplitude, width, center } => Profile::Gaussian { amplitude: amplitude * s, width, center },
            Profile::Bump { amplitude, radius, center } => Profile::Bump { amplitude: amplitude * s, radius, center },
        }
    }

    pub fn center(&self) -> [T; 3] {
        match *self {
            Profile::Zero => [T::zero(); 3],
            Profile::Gaussian { center, .. } | Profile::Bump { center, .. } => center,
        }
    }

    /// Radius of the closed support ball, if compact.
    pub fn support_radius(&self) -> Option<T> {
        match *self {
            Profile::Zero => Some(T::zero()),
            Profile::Gaussian { .. } => None,
            Profile::Bump { radius, .. } => Some(radius),
        }
    }

    pub fn eval_at_distance(&self, d: T) -> T {
        match *self {
            Profile::Zero => T::zero(),
            Profile::Gaussian { amplitude, width, .. } => amplitude * (-(d * d) / (width * width)).exp(),
            Profile::Bump { amplitude, radius, .. } => {
                if d >= radius {
                    T::zero()
                } else {
                    amplitude * window(d / radius)
                }
            }
        }
    }

    /// Samples the profile and zeroes the Dirichlet nodes.
    pub fn sample(&self, grid: &GridSpec<T>) -> Result<Field<T>> {
        let c = self.center();
        if grid.geometry == Geometry::Radial3D && c.iter().any(|&x| x != T::zero()) {
            return Err(Error::Precondition("radial data must be centred at the origin".into()));
        }
        let values = (0..grid.len())
            .map(|n| self.eval_at_distance(grid.distance_to(n, c)))
            .collect();
        Ok(Field::from_values(*grid, values)?.with_dirichlet())
    }
}
