//! A point of either model domain, as carried by reports and the IFS engine.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ball::{BallPoint, CVector};
use crate::disc::DiscPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Disc(DiscPoint),
    Ball(BallPoint),
}

impl Point {
    pub fn disc(z: Complex64) -> Self {
        Point::Disc(DiscPoint::guarded(z))
    }

    pub fn ball(v: CVector) -> Self {
        Point::Ball(BallPoint::guarded(v))
    }

    pub fn as_disc(&self) -> Option<&DiscPoint> {
        match self {
            Point::Disc(p) => Some(p),
            Point::Ball(_) => None,
        }
    }

    pub fn as_ball(&self) -> Option<&BallPoint> {
        match self {
            Point::Ball(p) => Some(p),
            Point::Disc(_) => None,
        }
    }

    /// Coordinates as a list (one entry for disc points).
    pub fn coords(&self) -> Vec<Complex64> {
        match self {
            Point::Disc(p) => vec![p.value()],
            Point::Ball(p) => p.coords(),
        }
    }
}

impl From<DiscPoint> for Point {
    fn from(p: DiscPoint) -> Self {
        Point::Disc(p)
    }
}

impl From<BallPoint> for Point {
    fn from(p: BallPoint) -> Self {
        Point::Ball(p)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Disc(p) => write!(f, "{p}"),
            Point::Ball(p) => write!(f, "{p}"),
        }
    }
}
