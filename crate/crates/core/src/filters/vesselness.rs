//! Multiscale Hessian tubularity (Frangi-style vesselness).

use alloc::vec;
use alloc::vec::Vec;

use super::gaussian::gaussian_smooth_axes;
use crate::volume::{ScalarVolume, Volume};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VesselnessParams {
    /// Gaussian scales in mm, strictly increasing.
    pub scales_mm: Vec<f64>,
    /// Plate-vs-line sensitivity (RA term).
    pub alpha: f64,
    /// Blob-vs-line sensitivity (RB term).
    pub beta: f64,
    /// Structureness scale; `None` uses half the largest Hessian norm found
    /// at each scale.
    pub c: Option<f64>,
    pub bright_on_dark: bool,
}

impl Default for VesselnessParams {
    fn default() -> Self {
        Self { scales_mm: vec![1.0, 1.5, 2.0, 3.0], alpha: 0.5, beta: 0.5, c: None, bright_on_dark: true }
    }
}

impl VesselnessParams {
    pub fn validate(&self) -> Result<()> {
        if self.scales_mm.is_empty() {
            return Err(Error::InvalidParams("vesselness needs at least one scale"));
        }
        if self.scales_mm.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParams("vesselness scales must be positive"));
        }
        if self.scales_mm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("vesselness scales must be strictly increasing"));
        }
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::InvalidParams("alpha and beta must be positive"));
        }
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(Error::InvalidParams("c must be positive"));
            }
        }
        Ok(())
    }
}

/// Eigenvalues of the symmetric matrix
/// `[[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]]`, sorted by
/// increasing magnitude.
pub fn symmetric_eigenvalues(a11: f64, a22: f64, a33: f64, a12: f64, a13: f64, a23: f64) -> [f64; 3] {
    let off = a12 * a12 + a13 * a13 + a23 * a23;
    let mut ev = if off == 0.0 {
        [a11, a22, a33]
    } else {
        let q = (a11 + a22 + a33) / 3.0;
        let (b11, b22, b33) = (a11 - q, a22 - q, a33 - q);
        let p = libm::sqrt((b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * off) / 6.0);
        if p == 0.0 {
            [q; 3]
        } else {
            let det = b11 * (b22 * b33 - a23 * a23) - a12 * (a12 * b33 - a23 * a13) + a13 * (a12 * a23 - b22 * a13);
            let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
            let phi = libm::acos(r) / 3.0;
            let e1 = q + 2.0 * p * libm::cos(phi);
            let e3 = q + 2.0 * p * libm::cos(phi + 2.0 * core::f64::consts::FRAC_PI_3);
            [e1, 3.0 * q - e1 - e3, e3]
        }
    };
    ev.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    ev
}

/// Per-voxel maximum over scales of the tubularity response, in `[0, 1]`.
pub fn frangi_vesselness(vol: &ScalarVolume, params: &VesselnessParams) -> Result<ScalarVolume> {
    params.validate()?;
    let g = *vol.geometry();
    let dims = g.dims();
    let sp = g.spacing();
    let mut best = vec![0.0f64; g.voxel_count()];
    let mut eig = vec![[0.0f64; 3]; g.voxel_count()];

    for &scale in &params.scales_mm {
        let smoothed = gaussian_smooth_axes(vol, [scale / sp[0], scale / sp[1], scale / sp[2]])?;
        let s2 = scale * scale;
        let mut max_norm = 0.0f64;
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let h = hessian_mm(&smoothed, [i, j, k], sp);
                    let ev = symmetric_eigenvalues(s2 * h[0], s2 * h[1], s2 * h[2], s2 * h[3], s2 * h[4], s2 * h[5]);
                    let norm = libm::sqrt(ev[0] * ev[0] + ev[1] * ev[1] + ev[2] * ev[2]);
                    max_norm = max_norm.max(norm);
                    eig[g.linear_index(i, j, k)] = ev;
                }
            }
        }
        let c = match params.c {
            Some(c) => c,
            None if max_norm > 0.0 => 0.5 * max_norm,
            // Flat input: no structure anywhere at this scale.
            None => continue,
        };
        let two_a2 = 2.0 * params.alpha * params.alpha;
        let two_b2 = 2.0 * params.beta * params.beta;
        let two_c2 = 2.0 * c * c;
        for (out, &[l1, l2, l3]) in best.iter_mut().zip(eig.iter()) {
            let wrong_sign = if params.bright_on_dark { l2 >= 0.0 || l3 >= 0.0 } else { l2 <= 0.0 || l3 <= 0.0 };
            if wrong_sign {
                continue;
            }
            let ra = l2.abs() / l3.abs();
            let rb = l1.abs() / libm::sqrt((l2 * l3).abs());
            let s_sq = l1 * l1 + l2 * l2 + l3 * l3;
            let v =
                (1.0 - libm::exp(-ra * ra / two_a2)) * libm::exp(-rb * rb / two_b2) * (1.0 - libm::exp(-s_sq / two_c2));
            *out = out.max(v);
        }
    }
    Volume::from_vec(g, best)
}

/// Hessian `[xx, yy, zz, xy, xz, yz]` in intensity per mm^2 by central
/// differences with replicated borders.
fn hessian_mm(v: &ScalarVolume, p: [usize; 3], sp: [f64; 3]) -> [f64; 6] {
    let dims = v.dims();
    let at = |d: [isize; 3]| -> f64 {
        let mut q = [0usize; 3];
        for a in 0..3 {
            q[a] = (p[a] as isize + d[a]).clamp(0, dims[a] as isize - 1) as usize;
        }
        *v.at(q[0], q[1], q[2])
    };
    let c = at([0, 0, 0]);
    let mut out = [0.0; 6];
    for a in 0..3 {
        let mut plus = [0isize; 3];
        let mut minus = [0isize; 3];
        plus[a] = 1;
        minus[a] = -1;
        out[a] = (at(plus) - 2.0 * c + at(minus)) / (sp[a] * sp[a]);
    }
    for (slot, (a, b)) in [(3, (0, 1)), (4, (0, 2)), (5, (1, 2))] {
        let mut pp = [0isize; 3];
        let mut pm = [0isize; 3];
        let mut mp = [0isize; 3];
        let mut mm = [0isize; 3];
        pp[a] = 1;
        pp[b] = 1;
        pm[a] = 1;
        pm[b] = -1;
        mp[a] = -1;
        mp[b] = 1;
        mm[a] = -1;
        mm[b] = -1;
        out[slot] = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * sp[a] * sp[b]);
    }
    out
}
