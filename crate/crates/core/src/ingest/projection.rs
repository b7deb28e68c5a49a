//! Ellipsoidal World Mercator (EPSG:3395) on WGS84.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::model::{Crs, Geometry};

/// WGS84 semi-major axis in meters.
pub const SEMI_MAJOR_AXIS: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const FLATTENING: f64 = 1.0 / 298.257_223_563;
/// WGS84 first eccentricity squared.
pub const ECCENTRICITY_SQ: f64 = FLATTENING * (2.0 - FLATTENING);
/// Latitudes at or beyond this magnitude are rejected.
pub const MAX_LATITUDE: f64 = 89.5;

const MAX_ITERATIONS: usize = 50;
const TOLERANCE_RAD: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum ProjectionError {
    #[error("latitude {0} outside the supported range (|lat| < 89.5)")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("inverse projection did not converge for ({x}, {y})")]
    NonConvergence { x: f64, y: f64 },
}

fn eccentricity() -> f64 {
    ECCENTRICITY_SQ.sqrt()
}

/// Degrees to EPSG:3395 meters.
///
/// `y = a·ln(tan(π/4 + φ/2)·((1 − e·sin φ)/(1 + e·sin φ))^(e/2))`, evaluated
/// in the equivalent form `a·(atanh(sin φ) − e·atanh(e·sin φ))`.
pub fn project_forward(lon: f64, lat: f64) -> Result<(f64, f64), ProjectionError> {
    if !lat.is_finite() || lat.abs() >= MAX_LATITUDE {
        return Err(ProjectionError::LatitudeOutOfRange(lat));
    }
    if !lon.is_finite() || lon.abs() > 180.0 {
        return Err(ProjectionError::LongitudeOutOfRange(lon));
    }
    let e = eccentricity();
    let sin_phi = lat.to_radians().sin();
    let x = SEMI_MAJOR_AXIS * lon.to_radians();
    let y = SEMI_MAJOR_AXIS * (sin_phi.atanh() - e * (e * sin_phi).atanh());
    Ok((x, y))
}

/// EPSG:3395 meters to degrees; latitude by fixed-point iteration.
pub fn project_inverse(x: f64, y: f64) -> Result<(f64, f64), ProjectionError> {
    let e = eccentricity();
    let t = (-y / SEMI_MAJOR_AXIS).exp();
    let mut phi = FRAC_PI_2 - 2.0 * t.atan();
    for _ in 0..MAX_ITERATIONS {
        let es = e * phi.sin();
        let next = FRAC_PI_2 - 2.0 * (t * ((1.0 - es) / (1.0 + es)).powf(e / 2.0)).atan();
        let delta = (next - phi).abs();
        phi = next;
        if delta < TOLERANCE_RAD {
            return Ok(((x / SEMI_MAJOR_AXIS).to_degrees(), phi.to_degrees()));
        }
    }
    Err(ProjectionError::NonConvergence { x, y })
}

/// Projects a geographic geometry into Mercator. Already projected input is
/// returned unchanged.
pub fn project_geometry(mut g: Geometry) -> Result<Geometry, ProjectionError> {
    if g.crs == Crs::Mercator {
        return Ok(g);
    }
    let mut err = None;
    g.for_each_position_mut(|p| match project_forward(p.x, p.y) {
        Ok((x, y)) => {
            p.x = x;
            p.y = y;
        }
        Err(e) => {
            err.get_or_insert(e);
        }
    });
    match err {
        Some(e) => Err(e),
        None => {
            g.crs = Crs::Mercator;
            Ok(g)
        }
    }
}
