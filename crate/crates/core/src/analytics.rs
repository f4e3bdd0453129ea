//! Closed-form rates, upper bounds and the convex-envelope helper.
//!
//! All logarithms are natural.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::model::Rational;

pub use crate::multilevel::{mu_rate_bound as r_mu_bound, su_rate_bound as r_su_bound};

fn int(v: usize) -> Rational {
    Rational::from_integer(v as i128)
}

fn check_memory(n: usize, m: Rational) -> Result<()> {
    if m < Rational::zero() || m > int(n) {
        return invalid(format!("M = {m} outside [0, {n}]"));
    }
    Ok(())
}

/// Rate of the centralized scheme: `(K - t)/(t + 1)` at `t = KM/N` when `t`
/// is integral, the chord between the neighbouring grid points otherwise.
pub fn r_man(n: usize, k: usize, m: Rational) -> Result<Rational> {
    check_memory(n, m)?;
    let t = m * int(k) / int(n);
    let at = |t: i128| Rational::new(k as i128 - t, t + 1);
    let lo = t.floor().to_integer();
    if t.is_integer() {
        return Ok(at(lo));
    }
    let lambda = Rational::from_integer(lo + 1) - t;
    Ok(lambda * at(lo) + (Rational::one() - lambda) * at(lo + 1))
}

/// `min{K, N/M} (1 - M/N)`, equal to `K` at `M = 0`.
pub fn r_man_ub(n: usize, k: usize, m: Rational) -> Result<Rational> {
    check_memory(n, m)?;
    if m.is_zero() {
        return Ok(int(k));
    }
    Ok(int(k).min(int(n) / m) * (Rational::one() - m / int(n)))
}

/// `K (1 - M/N) min{(N/(KM)) (1 - (1 - M/N)^K), N/K}`; the `M -> 0` limit is
/// `min{K, N}`.
pub fn r_dec(n: usize, k: usize, m: Rational) -> Result<BigRational> {
    check_memory(n, m)?;
    let big = |v: usize| BigRational::from_integer(BigInt::from(v));
    if m.is_zero() {
        return Ok(big(k.min(n)));
    }
    let m = BigRational::new(BigInt::from(*m.numer()), BigInt::from(*m.denom()));
    let q = BigRational::one() - &m / big(n);
    let coded = big(n) / (big(k) * &m) * (BigRational::one() - Pow::pow(&q, k as u32));
    let cap = big(n) / big(k);
    Ok(big(k) * q * coded.min(cap))
}

/// `-ln(2 rho e^{1 - 2 rho})`, positive for `rho` in `(0, 1/2)`.
pub fn alpha_const(rho: f64) -> f64 {
    -(2.0 * rho).ln() - (1.0 - 2.0 * rho)
}

/// `(1/rho) ln(1/rho) + 1 - 1/rho`.
pub fn h_const(rho: f64) -> f64 {
    (1.0 / rho) * (1.0 / rho).ln() + 1.0 - 1.0 / rho
}

/// `K^{-t} / sqrt(2 pi)`: expected number of users left unmatched.
pub fn excess_bound(k: usize, t: f64) -> f64 {
    (k as f64).powf(-t) / (2.0 * std::f64::consts::PI).sqrt()
}

/// Cluster parameters shared by the adaptive bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveParams {
    pub n_files: usize,
    pub n_caches: usize,
    pub cluster_size: usize,
    pub rho: f64,
    pub t0: f64,
}

impl AdaptiveParams {
    pub fn alpha(&self) -> f64 {
        alpha_const(self.rho)
    }

    /// Smallest `d` the bounds are stated for: `2(1 + t0)/alpha * ln K`.
    pub fn regularity_threshold(&self) -> f64 {
        2.0 * (1.0 + self.t0) / self.alpha() * (self.n_caches as f64).ln()
    }

    pub fn regular(&self) -> bool {
        self.cluster_size as f64 >= self.regularity_threshold()
    }
}

/// `floor(alpha d / (2 (1 + t) ln K))`; may be 0.
pub fn chi(p: &AdaptiveParams, t: f64) -> usize {
    let v = p.alpha() * p.cluster_size as f64 / (2.0 * (1.0 + t) * (p.n_caches as f64).ln());
    if v.is_finite() && v > 0.0 {
        v.floor() as usize
    } else {
        0
    }
}

/// `min{rho d, [N/M - 1]^+ + K^{-t0}/sqrt(2 pi)}`.
pub fn pcd_bound(p: &AdaptiveParams, m: f64) -> f64 {
    let cap = p.rho * p.cluster_size as f64;
    if m <= 0.0 {
        return cap;
    }
    let coded = (p.n_files as f64 / m - 1.0).max(0.0);
    cap.min(coded + excess_bound(p.n_caches, p.t0))
}

/// `rho K` when `M < N/d`, else `K M e^{-rho h d M / N}`.
pub fn pam_bound(p: &AdaptiveParams, m: f64) -> f64 {
    let (n, k, d) = (p.n_files as f64, p.n_caches as f64, p.cluster_size as f64);
    if m < n / d {
        p.rho * k
    } else {
        k * m * (-p.rho * h_const(p.rho) * d * m / n).exp()
    }
}

/// Piecewise bound at `chi(p, t)` colors. Between `floor(N/chi)` and
/// `ceil(N/chi)` the first branch is used.
pub fn hcm_bound(p: &AdaptiveParams, m: f64, t: f64) -> Result<f64> {
    let x = chi(p, t).min(p.cluster_size);
    if x == 0 {
        return Err(Error::DegenerateColoring);
    }
    let tail = excess_bound(p.n_caches, t);
    let upper = p.n_files.div_ceil(x) as f64;
    if m >= upper {
        return Ok(tail);
    }
    let cap = p.rho * p.n_caches as f64;
    if m <= 0.0 {
        return Ok(cap);
    }
    Ok(cap.min(p.n_files as f64 / m - x as f64 + tail))
}

/// `4 min{K, N/M} (1 - dM/N)` on `[0, N/d]`, 0 beyond.
pub fn r_ma_bound(n: usize, k: usize, d: usize, m: f64) -> f64 {
    let (n, k, d) = (n as f64, k as f64, d as f64);
    if d * m >= n {
        return 0.0;
    }
    if m <= 0.0 {
        return 4.0 * k;
    }
    4.0 * k.min(n / m) * (1.0 - d * m / n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dof {
    Finite(f64),
    /// `M_r = N`: the local-gain factor has no finite value.
    Unbounded,
}

/// Interference-network degrees of freedom as the product of the alignment,
/// local and global gains.
pub fn dof(n: usize, kt: usize, kr: usize, mr: f64) -> Result<Dof> {
    if kt < 2 || kr < 1 || n == 0 {
        return invalid("dof needs K_t >= 2, K_r >= 1, N >= 1");
    }
    let nf = n as f64;
    if !(0.0..=nf).contains(&mr) {
        return invalid(format!("M_r = {mr} outside [0, {n}]"));
    }
    if mr == nf {
        return Ok(Dof::Unbounded);
    }
    let (kt, kr) = (kt as f64, kr as f64);
    let mu = mr / nf;
    let align = kt * kr / (kt + kr - 1.0);
    let local = 1.0 / (1.0 - mu);
    let global = (kr * mu + 1.0) / (mu / (1.0 / kr + 1.0 / (kt - 1.0)) + 1.0);
    Ok(Dof::Finite(align * local * global))
}

/// Lower convex hull of a point set, evaluated by linear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexEnvelope {
    vertices: Vec<(f64, f64)>,
}

impl ConvexEnvelope {
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Value at `m`; queries outside the hull clamp to the end points.
    pub fn eval(&self, m: f64) -> f64 {
        let v = &self.vertices;
        if m <= v[0].0 {
            return v[0].1;
        }
        if m >= v[v.len() - 1].0 {
            return v[v.len() - 1].1;
        }
        let i = v.partition_point(|p| p.0 <= m);
        let (a, b) = (v[i - 1], v[i]);
        a.1 + (b.1 - a.1) * (m - a.0) / (b.0 - a.0)
    }
}

pub fn convex_envelope(points: &[(f64, f64)]) -> Result<ConvexEnvelope> {
    let mut pts = points.to_vec();
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return invalid("points must be finite");
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return invalid("two points share M but differ in R");
    }
    if pts.len() < 2 {
        return invalid("need at least two distinct points");
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(ConvexEnvelope { vertices: hull })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational;

    #[test]
    fn man_values() {
        assert_eq!(r_man(2, 2, rational(1, 1)).unwrap(), rational(1, 2));
        assert_eq!(r_man(5, 3, rational(5, 1)).unwrap(), rational(0, 1));
        assert_eq!(r_man(4, 4, rational(3, 2)).unwrap(), rational(13, 12));
        assert_eq!(r_man(4, 4, rational(0, 1)).unwrap(), rational(4, 1));
        let grid: Vec<_> = (0..=4)
            .map(|m| r_man(4, 4, rational(m, 1)).unwrap())
            .collect();
        assert_eq!(
            grid,
            vec![
                rational(4, 1),
                rational(3, 2),
                rational(2, 3),
                rational(1, 4),
                rational(0, 1)
            ]
        );
    }

    #[test]
    fn man_ub_dominates_grid() {
        for k in 1..=8usize {
            for n in 1..=8usize {
                for t in 0..=k {
                    let m = rational((t * n) as i128, k as i128);
                    assert!(r_man_ub(n, k, m).unwrap() >= r_man(n, k, m).unwrap());
                }
            }
        }
        // min{2, 2} * (1 - 1/2); the scheme itself achieves 1/2
        assert_eq!(r_man_ub(2, 2, rational(1, 1)).unwrap(), rational(1, 1));
        assert_eq!(r_man_ub(4, 4, rational(4, 1)).unwrap(), rational(0, 1));
    }

    #[test]
    fn dec_values() {
        let want = BigRational::new(525.into(), 256.into());
        assert_eq!(r_dec(4, 4, rational(1, 1)).unwrap(), want);
        assert!(r_dec(3, 5, rational(3, 1)).unwrap().is_zero());
        let single = r_dec(4, 1, rational(1, 1)).unwrap();
        assert_eq!(single, BigRational::new(3.into(), 4.into()));
        assert_eq!(to_f64(&r_dec(3, 5, rational(0, 1)).unwrap()), 3.0);
    }

    #[test]
    fn constants() {
        assert!((alpha_const(0.25) - (2f64.ln() - 0.5)).abs() < 1e-12);
        assert!((alpha_const(0.25) - 0.19315).abs() < 1e-5);
        assert!((h_const(0.25) - (4.0 * 4f64.ln() - 3.0)).abs() < 1e-12);
        assert!((h_const(0.25) - 2.5452).abs() < 1e-4);
    }

    fn criterion_params() -> AdaptiveParams {
        AdaptiveParams {
            n_files: 256,
            n_caches: 256,
            cluster_size: 64,
            rho: 0.25,
            t0: 0.1,
        }
    }

    #[test]
    fn adaptive_bounds() {
        let p = criterion_params();
        assert!(p.regular());
        assert!((p.regularity_threshold() - 63.16).abs() < 0.01);
        assert_eq!(chi(&p, 0.1), 1);
        assert_eq!(pam_bound(&p, 3.9), 64.0);
        assert!(pam_bound(&p, 256.0) < 1e-10);
        let pcd = pcd_bound(&p, 16.0);
        assert!((pcd - (15.0 + excess_bound(256, 0.1))).abs() < 1e-12);
        assert!((excess_bound(256, 0.1) - 0.229).abs() < 1e-3);
        assert!((hcm_bound(&p, 16.0, 0.1).unwrap() - pcd).abs() < 1e-12);
        assert_eq!(hcm_bound(&p, 256.0, 0.1).unwrap(), excess_bound(256, 0.1));
        let small = AdaptiveParams {
            cluster_size: 4,
            ..p
        };
        assert_eq!(hcm_bound(&small, 16.0, 0.1), Err(Error::DegenerateColoring));
    }

    #[test]
    fn multiaccess_bound() {
        assert_eq!(r_ma_bound(6, 6, 2, 3.0), 0.0);
        assert!((r_ma_bound(6, 6, 2, 2.0) - 4.0).abs() < 1e-12);
        for m in [0.5, 1.0, 2.5] {
            let man = r_man_ub(4, 4, Rational::new((m * 2.0) as i128, 2)).unwrap();
            let man = man.numer().to_f64().unwrap() / man.denom().to_f64().unwrap();
            assert!((r_ma_bound(4, 4, 1, m) - 4.0 * man).abs() < 1e-12);
        }
    }

    #[test]
    fn dof_values() {
        assert_eq!(dof(10, 2, 2, 0.0).unwrap(), Dof::Finite(4.0 / 3.0));
        assert_eq!(dof(3, 3, 3, 3.0).unwrap(), Dof::Unbounded);
        // 9/5 * 3/2 * 2 / (1/3 * 6/5 + 1)
        let Dof::Finite(v) = dof(3, 3, 3, 1.0).unwrap() else {
            panic!()
        };
        assert!((v - 27.0 / 5.0 / 1.4).abs() < 1e-12);
        assert!(dof(3, 1, 3, 1.0).is_err());
    }

    #[test]
    fn envelope_basics() {
        let env = convex_envelope(&[(0.0, 4.0), (2.0, 0.0)]).unwrap();
        assert_eq!(env.eval(1.0), 2.0);
        assert_eq!(env.eval(-1.0), 4.0);
        assert_eq!(env.eval(5.0), 0.0);
        let env = convex_envelope(&[(0.0, 4.0), (1.0, 1.0), (2.0, 1.5), (3.0, 0.0)]).unwrap();
        assert_eq!(env.vertices(), &[(0.0, 4.0), (1.0, 1.0), (3.0, 0.0)]);
        assert!(convex_envelope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(convex_envelope(&[(1.0, 1.0)]).is_err());
    }
}
