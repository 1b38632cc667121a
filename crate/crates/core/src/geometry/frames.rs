use crate::error::{Error, Result};
use crate::manifold::{GeodesicPath, Vec3};

use super::transport_along;

/// `3τ² − 2τ³`, with exact values `0` and `1` at the ends.
pub fn smoothstep(tau: f64) -> f64 {
    tau * tau * (3.0 - 2.0 * tau)
}

/// Frame along a geodesic blending a transported start frame into a
/// back-transported end frame.
#[derive(Debug, Clone)]
pub struct FrameField {
    /// `frames[k][a]` is the `a`-th vector at sample `k`.
    pub frames: Vec<[Vec3; 2]>,
    /// Largest Gram defect `|g(X_a, X_b) − δ_ab|` over the samples.
    pub sigma: f64,
    /// `max_k ‖W̃_a(t_k) − Ṽ_a(t_k)‖` over samples and indices.
    pub max_gap: f64,
}

impl FrameField {
    /// Field of the `a`-th frame vector.
    pub fn component(&self, a: usize) -> Vec<Vec3> {
        self.frames.iter().map(|f| f[a]).collect()
    }
}

fn check_orthonormal(name: &str, f: &[Vec3; 2]) -> Result<()> {
    let defect = (f[0].norm_squared() - 1.0)
        .abs()
        .max((f[1].norm_squared() - 1.0).abs())
        .max(f[0].dot(&f[1]).abs());
    if defect > 1e-9 {
        return Err(Error::Argument(format!("{name} frame is not orthonormal (defect {defect:e})")));
    }
    Ok(())
}

/// `X_a(t) = (1 − η(t/ℓ)) Ṽ_a(t) + η(t/ℓ) W̃_a(t)`, where `Ṽ` is the parallel
/// transport of the frame `start` from `γ(0)` and `W̃` that of `end` from
/// `γ(ℓ)` backwards. Endpoint values equal the inputs exactly.
pub fn interpolated_frame(path: &GeodesicPath, start: [Vec3; 2], end: [Vec3; 2]) -> Result<FrameField> {
    check_orthonormal("start", &start)?;
    check_orthonormal("end", &end)?;
    let m = path.steps();
    let fwd = [transport_along(path, &start[0])?, transport_along(path, &start[1])?];
    let rev = path.reversed();
    let back = [transport_along(&rev, &end[0])?, transport_along(&rev, &end[1])?];
    let len = path.length();
    let mut frames = Vec::with_capacity(m + 1);
    let mut sigma = 0.0f64;
    let mut max_gap = 0.0f64;
    for (k, &t) in path.params().iter().enumerate() {
        let eta = smoothstep(t / len);
        let mut x = [Vec3::zeros(); 2];
        for a in 0..2 {
            let v = if k == 0 { start[a] } else { fwd[a][k] };
            let w = if k == m { end[a] } else { back[a][m - k] };
            max_gap = max_gap.max((w - v).norm());
            x[a] = v * (1.0 - eta) + w * eta;
        }
        sigma = sigma
            .max((x[0].norm_squared() - 1.0).abs())
            .max((x[1].norm_squared() - 1.0).abs())
            .max(x[0].dot(&x[1]).abs());
        frames.push(x);
    }
    Ok(FrameField { frames, sigma, max_gap })
}
