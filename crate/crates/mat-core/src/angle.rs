//! Angles, bearings, and the angular predicates the controllers run on.
//!
//! Robots cannot measure distance; every geometric decision is made from
//! bearings. An [`Angle`] is always normalized to `[0, 2π)`, and all
//! arithmetic here returns normalized values.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::CoreError;
use crate::fm;

const TAU: f64 = 2.0 * PI;

/// An angle in radians, normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Normalizes an arbitrary radian value into `[0, 2π)`.
    pub fn new(radians: f64) -> Angle {
        let mut r = fm::rem_euclid(radians, TAU);
        // rem_euclid can return exactly TAU when the input is a tiny negative.
        if r >= TAU {
            r -= TAU;
        }
        Angle(r)
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Signed representative in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }

    #[inline]
    pub fn add(self, rhs: f64) -> Angle {
        Angle::new(self.0 + rhs)
    }

    #[inline]
    pub fn opposite(self) -> Angle {
        Angle::new(self.0 + PI)
    }

    /// Counterclockwise sweep from `self` to `to`, in `[0, 2π)`.
    pub fn ccw_sweep_to(self, to: Angle) -> f64 {
        fm::rem_euclid(to.0 - self.0, TAU)
    }

    /// Unsigned angular difference in `[0, π]`; symmetric in its arguments.
    pub fn diff(self, other: Angle) -> f64 {
        let d = fm::rem_euclid(self.0 - other.0, TAU);
        if d > PI {
            TAU - d
        } else {
            d
        }
    }

    /// Midpoint of the counterclockwise sweep from `self` to `to`.
    pub fn bisector_ccw(self, to: Angle) -> Angle {
        self.add(self.ccw_sweep_to(to) / 2.0)
    }

    /// Midpoint of the shorter arc between the two angles.
    pub fn bisector_short(self, other: Angle) -> Angle {
        if self.ccw_sweep_to(other) <= PI {
            self.bisector_ccw(other)
        } else {
            other.bisector_ccw(self)
        }
    }

    /// True if `self` lies on the counterclockwise sweep from `from` to `to`
    /// (inclusive bounds).
    pub fn within_ccw(self, from: Angle, to: Angle) -> bool {
        from.ccw_sweep_to(self) <= from.ccw_sweep_to(to)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}rad", self.0)
    }
}

/// Number of quantization sectors for a resolution, if it divides 2π evenly.
pub fn sector_count(resolution: f64) -> Result<u32, CoreError> {
    if !(resolution > 0.0) || resolution > TAU {
        return Err(CoreError::BadResolution { resolution });
    }
    let n = TAU / resolution;
    let rounded = fm::round(n);
    if fm::abs(n - rounded) > 1e-9 || rounded < 1.0 {
        return Err(CoreError::BadResolution { resolution });
    }
    Ok(rounded as u32)
}

/// Snaps an exact bearing to the center of its quantization sector.
///
/// Sector `i` spans `[i·res, (i+1)·res)` and maps to center `(i + 1/2)·res`,
/// so quantizing a sector center returns it unchanged. Matches a receiver
/// ring with `2π/res` elements.
pub fn quantize_bearing(exact: Angle, resolution: f64) -> Result<Angle, CoreError> {
    let sectors = sector_count(resolution)?;
    let idx = sector_index(exact, sectors);
    Ok(sector_center(idx, sectors))
}

/// Sector index of an angle for a given sector count.
pub fn sector_index(a: Angle, sectors: u32) -> u32 {
    let width = TAU / sectors as f64;
    let idx = fm::floor(a.radians() / width) as i64;
    idx.clamp(0, sectors as i64 - 1) as u32
}

/// Center angle of a sector.
pub fn sector_center(idx: u32, sectors: u32) -> Angle {
    let width = TAU / sectors as f64;
    Angle::new((idx as f64 + 0.5) * width)
}

/// Inner angles of a forming triangle at the left and right frontier
/// neighbors, as computed at those neighbors and shared over messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerAngles {
    /// Angle at the left frontier neighbor.
    pub theta_l: f64,
    /// Angle at the right frontier neighbor.
    pub theta_r: f64,
}

impl InnerAngles {
    /// True when both angles could belong to a non-degenerate triangle.
    pub fn is_valid_triangle(&self) -> bool {
        self.theta_l > 0.0 && self.theta_r > 0.0 && self.theta_l + self.theta_r < PI
    }
}

/// Derives the inner angles of candidate triangle Δ(u, L, R) from the four
/// bearings the two neighbors announced: L's bearings to u and to R, and R's
/// bearings to u and to L. Robot u never touches positions.
pub fn inner_angles_from_bearings(
    b_l_to_u: Angle,
    b_l_to_r: Angle,
    b_r_to_u: Angle,
    b_r_to_l: Angle,
) -> InnerAngles {
    InnerAngles {
        theta_l: b_l_to_u.diff(b_l_to_r),
        theta_r: b_r_to_u.diff(b_r_to_l),
    }
}

/// Bearing-only occupancy test: the observer is inside the triangle spanned
/// by three sighted robots iff no circular gap between consecutive bearings
/// exceeds π. Works on quantized bearings, degrading gracefully.
pub fn occupancy_test(bearings: &[Angle]) -> Result<bool, CoreError> {
    if bearings.len() < 3 {
        return Err(CoreError::TooFewBearings { got: bearings.len() });
    }
    let mut sorted: Vec<f64> = bearings.iter().map(|a| a.radians()).collect();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("bearings are finite"));
    let n = sorted.len();
    for i in 0..n {
        let next = if i + 1 == n { sorted[0] + TAU } else { sorted[i + 1] };
        if next - sorted[i] > PI {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Frontier angle θ_F: the sweep at a frontier robot between its two
/// frontier neighbors, taken on the side containing `unexplored_ref`.
/// Returns `(theta_f, normal)` where the normal is the bisector of the
/// chosen sweep, pointing into unexplored space.
pub fn frontier_angle(
    b_left: Angle,
    b_right: Angle,
    unexplored_ref: Angle,
) -> (f64, Angle) {
    let sweep_lr = b_left.ccw_sweep_to(b_right);
    // Does the reference direction fall inside the ccw sweep left→right?
    if unexplored_ref.within_ccw(b_left, b_right) {
        (sweep_lr, b_left.bisector_ccw(b_right))
    } else {
        (TAU - sweep_lr, b_right.bisector_ccw(b_left))
    }
}

/// Discovery quality gate: a candidate triangle is high-quality iff the
/// frontier angle at the shared frontier robot is strictly below `k`.
#[inline]
pub fn triangle_quality(theta_f: f64, k: f64) -> bool {
    theta_f < k
}

/// Which side of the directed line x→y the observer is on, judged purely
/// from its own bearings to x and y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    On,
}

/// Side of the directed line x→y from the observer's bearings. The observer
/// is left of x→y iff the ccw sweep from its bearing-to-x to its
/// bearing-to-y is less than π.
pub fn side_of_edge(b_to_x: Angle, b_to_y: Angle) -> Side {
    let s = fm::sin(b_to_x.ccw_sweep_to(b_to_y));
    if s > 1e-12 {
        Side::Left
    } else if s < -1e-12 {
        Side::Right
    } else {
        Side::On
    }
}
