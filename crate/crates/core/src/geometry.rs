//! Angle of incidence for a scanner pivoting over a flat or spherical target.
//!
//! Everything lives in the 2-D sweep plane. The pivot sits at the origin and
//! the motor-angle-0 beam runs along +y, hitting the surface at the working
//! distance. For a sphere the center is on that axis at `apex + R`, so the
//! pivot, the center and the hit point form a triangle whose angle at the
//! hit point gives the incidence angle by the law of sines.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("beam at {theta_deg} deg does not hit the surface")]
    NoIntersection { theta_deg: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotGeometry {
    pub working_distance_mm: f64,
}

impl Default for PivotGeometry {
    fn default() -> Self {
        Self {
            working_distance_mm: 17.0,
        }
    }
}

impl PivotGeometry {
    pub fn new(working_distance_mm: f64) -> Result<Self, GeometryError> {
        let g = Self {
            working_distance_mm,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.working_distance_mm.is_finite() && self.working_distance_mm > 0.0 {
            Ok(())
        } else {
            Err(GeometryError::InvalidGeometry(format!(
                "working distance must be positive, got {}",
                self.working_distance_mm
            )))
        }
    }
}

pub const DEFAULT_SPHERE_RADIUS_MM: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceModel {
    Flat,
    /// Convex cap whose apex faces the pivot at `apex_distance_mm`.
    Sphere {
        radius_mm: f64,
        apex_distance_mm: f64,
    },
}

impl SurfaceModel {
    /// Sphere with its apex at the working distance.
    pub fn sphere(radius_mm: f64, g: &PivotGeometry) -> Self {
        SurfaceModel::Sphere {
            radius_mm,
            apex_distance_mm: g.working_distance_mm,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            SurfaceModel::Flat => Ok(()),
            SurfaceModel::Sphere {
                radius_mm,
                apex_distance_mm,
            } => {
                if !(radius_mm.is_finite() && radius_mm > 0.0) {
                    return Err(GeometryError::InvalidGeometry(format!(
                        "sphere radius must be positive, got {radius_mm}"
                    )));
                }
                if !(apex_distance_mm.is_finite() && apex_distance_mm > 0.0) {
                    return Err(GeometryError::InvalidGeometry(format!(
                        "pivot must sit outside the sphere (apex distance {apex_distance_mm})"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SurfaceModel::Flat => "flat",
            SurfaceModel::Sphere { .. } => "convex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceSolution {
    pub aoi_rad: f64,
    pub path_mm: f64,
    /// Hit point in the sweep plane, pivot at the origin, axis along +y.
    pub hit_point: [f64; 2],
}

impl IncidenceSolution {
    pub fn aoi_deg(&self) -> f64 {
        self.aoi_rad.to_degrees()
    }
}

fn beam_direction(theta_rad: f64) -> [f64; 2] {
    [theta_rad.sin(), theta_rad.cos()]
}

pub fn incidence_flat(
    theta_deg: f64,
    g: &PivotGeometry,
) -> Result<IncidenceSolution, GeometryError> {
    g.validate()?;
    if !(theta_deg.is_finite() && theta_deg.abs() < 90.0) {
        return Err(GeometryError::NoIntersection { theta_deg });
    }
    let theta = theta_deg.to_radians();
    let path_mm = g.working_distance_mm / theta.cos();
    let dir = beam_direction(theta);
    Ok(IncidenceSolution {
        aoi_rad: theta.abs(),
        path_mm,
        hit_point: [dir[0] * path_mm, dir[1] * path_mm],
    })
}

/// Sphere with its apex at the working distance.
pub fn incidence_sphere(
    theta_deg: f64,
    g: &PivotGeometry,
    radius_mm: f64,
) -> Result<IncidenceSolution, GeometryError> {
    incidence_sphere_at(theta_deg, radius_mm, g.working_distance_mm)
}

fn incidence_sphere_at(
    theta_deg: f64,
    radius_mm: f64,
    apex_distance_mm: f64,
) -> Result<IncidenceSolution, GeometryError> {
    SurfaceModel::Sphere {
        radius_mm,
        apex_distance_mm,
    }
    .validate()?;
    if !(theta_deg.is_finite() && theta_deg.abs() < 90.0) {
        return Err(GeometryError::NoIntersection { theta_deg });
    }
    let theta = theta_deg.to_radians();
    let center_distance = apex_distance_mm + radius_mm;
    let sin_aoi = center_distance / radius_mm * theta.abs().sin();
    if sin_aoi > 1.0 {
        return Err(GeometryError::NoIntersection { theta_deg });
    }
    let aoi_rad = sin_aoi.asin();
    // near root of |t·u - c|² = R²
    let along = center_distance * theta.cos();
    let perp = center_distance * theta.abs().sin();
    let half_chord = (radius_mm * radius_mm - perp * perp).max(0.0).sqrt();
    let path_mm = along - half_chord;
    let dir = beam_direction(theta);
    Ok(IncidenceSolution {
        aoi_rad,
        path_mm,
        hit_point: [dir[0] * path_mm, dir[1] * path_mm],
    })
}

pub fn solve_incidence(
    theta_deg: f64,
    g: &PivotGeometry,
    s: &SurfaceModel,
) -> Result<IncidenceSolution, GeometryError> {
    g.validate()?;
    match *s {
        SurfaceModel::Flat => incidence_flat(theta_deg, g),
        SurfaceModel::Sphere {
            radius_mm,
            apex_distance_mm,
        } => incidence_sphere_at(theta_deg, radius_mm, apex_distance_mm),
    }
}

/// Largest motor angle (deg) that still hits the sphere.
pub fn sphere_miss_boundary_deg(radius_mm: f64, apex_distance_mm: f64) -> f64 {
    (radius_mm / (apex_distance_mm + radius_mm))
        .asin()
        .to_degrees()
}
