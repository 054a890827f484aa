//! Spherical great-circle distances and linear-scan neighbour queries.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// IUGG mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Largest possible great-circle distance on the sphere.
pub const MAX_DISTANCE_KM: f64 = std::f64::consts::PI * EARTH_RADIUS_KM;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        if !(latitude.is_finite() && (-90.0..=90.0).contains(&latitude)) {
            return Err(Error::Config(format!("latitude {latitude} out of range")));
        }
        if !(longitude.is_finite() && (-180.0..=180.0).contains(&longitude)) {
            return Err(Error::Config(format!("longitude {longitude} out of range")));
        }
        Ok(GeoPoint {
            latitude,
            longitude,
        })
    }

    pub(crate) fn new_unchecked(latitude: f64, longitude: f64) -> Self {
        GeoPoint {
            latitude,
            longitude,
        }
    }
}

/// Haversine distance in kilometres.
///
/// Every term is symmetric in its arguments, so `d(a, b) == d(b, a)` holds
/// bit for bit.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let half_dphi = ((b.latitude - a.latitude).to_radians() * 0.5).sin();
    let half_dlambda = ((b.longitude - a.longitude).to_radians() * 0.5).sin();
    let h = half_dphi * half_dphi + phi1.cos() * phi2.cos() * half_dlambda * half_dlambda;
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Language coordinates for radius and nearest-neighbour queries.
#[derive(Debug, Clone, Default)]
pub struct NeighborIndex {
    points: Vec<(String, GeoPoint)>,
}

impl NeighborIndex {
    pub fn new<I, S>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, GeoPoint)>,
        S: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (code, p) in points {
            let code = code.into();
            if !seen.insert(code.clone()) {
                return Err(Error::DuplicateLanguage(code));
            }
            out.push((code, p));
        }
        Ok(NeighborIndex { points: out })
    }

    pub fn from_dataset(d: &crate::kb::Dataset) -> Self {
        NeighborIndex {
            points: d
                .languages()
                .iter()
                .map(|l| (l.code.clone(), l.point()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(String, GeoPoint)] {
        &self.points
    }

    /// Codes within `radius_km` of `center` (inclusive), minus `exclude`.
    pub fn within_radius(
        &self,
        center: GeoPoint,
        radius_km: f64,
        exclude: Option<&str>,
    ) -> BTreeSet<String> {
        self.points
            .iter()
            .filter(|(code, _)| Some(code.as_str()) != exclude)
            .filter(|(_, p)| haversine_km(center, *p) <= radius_km)
            .map(|(code, _)| code.clone())
            .collect()
    }

    /// The accepted code closest to `center`; ties go to the smaller code.
    pub fn nearest_with_predicate<F>(&self, center: GeoPoint, mut accept: F) -> Option<(String, f64)>
    where
        F: FnMut(&str) -> bool,
    {
        let mut best: Option<(&str, f64)> = None;
        for (code, p) in &self.points {
            if !accept(code) {
                continue;
            }
            let d = haversine_km(center, *p);
            best = match best {
                Some((bc, bd)) if bd < d || (bd == d && bc <= code.as_str()) => Some((bc, bd)),
                _ => Some((code.as_str(), d)),
            };
        }
        best.map(|(c, d)| (c.to_string(), d))
    }
}
