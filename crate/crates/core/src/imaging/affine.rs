use super::{Image, ImagingError, Result};

const SINGULAR_EPS: f64 = 1e-9;

/// The map `(x, y) -> (a*x + b*y + c, d*x + e*y + f)` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineMatrix {
    pub const IDENTITY: AffineMatrix = AffineMatrix { a: 1.0, b: 0.0, c: 0.0, d: 0.0, e: 1.0, f: 0.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        let m = AffineMatrix { a, b, c, d, e, f };
        if m.coefficients().iter().all(|v| v.is_finite()) {
            Ok(m)
        } else {
            Err(ImagingError::InvalidArgument("affine coefficients must be finite".into()))
        }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y + self.c, self.d * x + self.e * y + self.f)
    }

    /// The map that applies `self` first and `next` second.
    pub fn then(&self, next: &AffineMatrix) -> AffineMatrix {
        AffineMatrix {
            a: next.a * self.a + next.b * self.d,
            b: next.a * self.b + next.b * self.e,
            c: next.a * self.c + next.b * self.f + next.c,
            d: next.d * self.a + next.e * self.d,
            e: next.d * self.b + next.e * self.e,
            f: next.d * self.c + next.e * self.f + next.f,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn inverse(&self) -> Result<AffineMatrix> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() <= SINGULAR_EPS {
            return Err(ImagingError::InvalidArgument(format!("singular affine matrix (det = {det})")));
        }
        let (a, b, d, e) = (self.e / det, -self.b / det, -self.d / det, self.a / det);
        Ok(AffineMatrix { a, b, c: -(a * self.c + b * self.f), d, e, f: -(d * self.c + e * self.f) })
    }
}

fn require_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ImagingError::InvalidArgument("non-finite transform parameter".into()))
    }
}

pub fn make_translation(dx: f64, dy: f64) -> Result<AffineMatrix> {
    require_finite(&[dx, dy])?;
    Ok(AffineMatrix { c: dx, f: dy, ..AffineMatrix::IDENTITY })
}

/// Rotation by `angle_deg` (counterclockwise in `x`-right/`y`-up terms) that
/// keeps `(cx, cy)` fixed. Multiples of 90 degrees use exact sines and cosines.
pub fn make_rotation(angle_deg: f64, cx: f64, cy: f64) -> Result<AffineMatrix> {
    require_finite(&[angle_deg, cx, cy])?;
    let (sin, cos) = exact_sin_cos(angle_deg);
    let (a, b, d, e) = (cos, -sin, sin, cos);
    Ok(AffineMatrix { a, b, c: cx - (a * cx + b * cy), d, e, f: cy - (d * cx + e * cy) })
}

/// Horizontal shear `x' = x + factor * (y - cy)`, which leaves row `cy` fixed.
pub fn make_shear(factor: f64, cy: f64) -> Result<AffineMatrix> {
    require_finite(&[factor, cy])?;
    Ok(AffineMatrix { b: factor, c: -factor * cy, ..AffineMatrix::IDENTITY })
}

fn exact_sin_cos(angle_deg: f64) -> (f64, f64) {
    let quarter = angle_deg / 90.0;
    if quarter.fract() == 0.0 {
        match (quarter as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle_deg.to_radians().sin_cos()
    }
}

/// Warps `img` by `m` using inverse mapping with nearest-neighbor sampling.
///
/// Output pixel `(x, y)` copies the input pixel nearest to `m^-1 (x, y)`;
/// pre-images outside the input get `fill` in every channel.
pub fn warp_affine(img: &Image, m: &AffineMatrix, fill: u8) -> Result<Image> {
    let inv = m.inverse()?;
    let (w, h) = (img.width() as f64, img.height() as f64);
    Ok(img.remap(img.width(), img.height(), fill, |x, y| {
        let (u, v) = inv.apply(x as f64, y as f64);
        let (u, v) = (u.round(), v.round());
        if u >= 0.0 && v >= 0.0 && u < w && v < h {
            Some((u as usize, v as usize))
        } else {
            None
        }
    }))
}
