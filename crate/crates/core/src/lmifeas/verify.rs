use super::problem::LmiProblem;
use crate::error::{Error, Result};
use crate::symcore::{min_eig, SymMatrix};

/// True iff every block at `y` has `lambda_min >= -tol`.
pub fn verify_point(p: &LmiProblem, y: &[f64], tol: f64) -> Result<bool> {
    if y.len() != p.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, problem has {} variables",
            y.len(),
            p.num_vars()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(false);
    }
    for b in p.blocks() {
        if min_eig(&b.eval(y))? < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff `Z` is a Farkas ray: `Z_b ⪰ 0`, `sum_b <F_l^b, Z_b> = 0` for every
/// variable and `sum_b <F_0^b, Z_b> < 0`, all relative to the size of `Z`.
pub fn verify_ray(p: &LmiProblem, z: &[SymMatrix], tol: f64) -> Result<bool> {
    if z.len() != p.blocks().len() {
        return Err(Error::DimensionMismatch(format!(
            "ray has {} blocks, problem has {}",
            z.len(),
            p.blocks().len()
        )));
    }
    for (b, zb) in p.blocks().iter().zip(z) {
        if zb.dim() != b.size() {
            return Err(Error::DimensionMismatch(format!(
                "ray block of size {} for LMI block of size {}",
                zb.dim(),
                b.size()
            )));
        }
    }
    if z.iter().any(|zb| !zb.is_finite()) {
        return Ok(false);
    }
    let z_scale: f64 = z.iter().map(|zb| zb.frobenius()).sum();
    if z_scale == 0.0 {
        return Ok(false);
    }
    for zb in z {
        if min_eig(zb)? < -tol * z_scale {
            return Ok(false);
        }
    }
    for l in 0..p.num_vars() {
        let mut acc = 0.0;
        let mut fmax = 0.0f64;
        for (b, zb) in p.blocks().iter().zip(z) {
            acc += b.coeff(l).inner(zb);
            fmax = fmax.max(b.coeff(l).frobenius());
        }
        if acc.abs() > tol * z_scale * fmax.max(1.0) {
            return Ok(false);
        }
    }
    let c: f64 = p
        .blocks()
        .iter()
        .zip(z)
        .map(|(b, zb)| b.constant().inner(zb))
        .sum();
    Ok(c <= -tol * z_scale)
}
