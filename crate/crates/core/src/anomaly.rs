//! Point-splitting kernels, mollifier integrals, and the iterated limits
//! that produce the anomalous constants.
//!
//! The split-point charge densities are built from the regularized kernels
//! `delta_pm(z, eps) = (1/L) / (exp(2 pi (eps -+ i z)/L) - 1)`.  Smearing
//! with an even mollifier of scale theta and taking eps -> 0 before
//! theta -> 0 turns the formally divergent sums into two finite constants:
//! the axial charge picks up `-aL/pi - 1`, the coupled Hamiltonian
//! `-a^2 L/(2 pi)`.  Everything here is plain quadrature: the limits are
//! emulated by a geometric schedule with eps forced far below theta, plus
//! Richardson extrapolation of the quadratic theta error.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for every individual quadrature.
const QUAD_TOL: f64 = 1e-12;

/// Deepest bisection level before a quadrature gives up.
const MAX_DEPTH: u32 = 48;

/// `exp(z) - 1` without cancellation for small `z`.
fn cexpm1(z: Complex64) -> Complex64 {
    let half_sin = (0.5 * z.im).sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin,
        z.re.exp() * z.im.sin(),
    )
}

// 15-point Kronrod nodes with the embedded 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993944,
    0.5860872354676911,
    0.4058451513773972,
    0.2077849550078985,
    0.0,
];
const WGK: [f64; 8] = [
    0.02293532201052922,
    0.06309209262997855,
    0.10479001032225018,
    0.14065325971552591,
    0.1690047266392679,
    0.1903505780647854,
    0.20443294007529889,
    0.20948214108472782,
];
const WG: [f64; 4] = [
    0.12948496616886969,
    0.27970539148927664,
    0.38183005050511894,
    0.41795918367346938,
];

/// One Kronrod panel: returns the 15-point estimate and the |K15 - G7|
/// error indicator.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> (Complex64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let v = f(center - half * x) + f(center + half * x);
        kronrod += WGK[i] * v;
        if i % 2 == 1 {
            gauss += WG[i / 2] * v;
        }
    }
    (kronrod * half, (kronrod - gauss).norm() * half.abs())
}

/// Adaptive bisection quadrature of a complex integrand.
///
/// Splits a panel until its error indicator fits within its share of the
/// absolute tolerance; panels that are still above budget at the maximum
/// depth surface as [`Error::QuadratureTolerance`].
pub fn adaptive_quadrature<F: Fn(f64) -> Complex64>(
    f: &F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    let mut total = Complex64::ZERO;
    let mut achieved = 0.0;
    let mut failed = false;
    let mut stack = vec![(lo, hi, abs_tol, 0u32)];
    while let Some((a, b, tol, depth)) = stack.pop() {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= MAX_DEPTH {
            total += value;
            achieved += err;
            failed |= err > tol;
        } else {
            let mid = 0.5 * (a + b);
            stack.push((a, mid, 0.5 * tol, depth + 1));
            stack.push((mid, b, 0.5 * tol, depth + 1));
        }
    }
    if failed && achieved > abs_tol {
        return Err(Error::QuadratureTolerance { achieved, requested: abs_tol });
    }
    Ok(total)
}

/// Which half of the split-point kernel pair to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Unchecked kernel evaluation; callers guarantee the denominator is away
/// from its zeros (eps > 0, or z away from 0 mod L).
fn delta_kernel(z: f64, eps: f64, l: f64, sign: Sign) -> Complex64 {
    let s = match sign {
        Sign::Plus => -1.0,
        Sign::Minus => 1.0,
    };
    let w = Complex64::new(2.0 * PI * eps / l, s * 2.0 * PI * z / l);
    (cexpm1(w) * l).inv()
}

/// Regularized positive/negative frequency half of the periodic delta:
/// `(1/L) / (exp(2 pi (eps -+ i z)/L) - 1)`.
pub fn delta_pm(z: f64, eps: f64, l: f64, sign: Sign) -> Result<Complex64> {
    if !(l > 0.0) || !l.is_finite() || !eps.is_finite() || !z.is_finite() {
        return Err(Error::InvalidParams(format!("bad kernel arguments z={z}, eps={eps}, L={l}")));
    }
    if eps < 0.0 {
        return Err(Error::InvalidParams(format!("kernel regulator must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        let turns = z / l;
        if (turns - turns.round()).abs() < 1e-12 {
            return Err(Error::InvalidParams(format!(
                "kernel pole: eps = 0 with z = {z} congruent to 0 mod L"
            )));
        }
    }
    Ok(delta_kernel(z, eps, l, sign))
}

/// `delta_+ - delta_-` in the cancellation-free trigonometric form
/// `(1/L) * 2 i E sin(phi) / ((E-1)^2 + 4 E sin^2(phi/2))` with
/// `E = exp(2 pi eps / L)`, `phi = 2 pi z / L`.
pub fn delta_difference(z: f64, eps: f64, l: f64) -> Complex64 {
    let phi = 2.0 * PI * z / l;
    let em1 = (2.0 * PI * eps / l).exp_m1();
    let e = em1 + 1.0;
    let half_sin = (0.5 * phi).sin();
    let denom = em1 * em1 + 4.0 * e * half_sin * half_sin;
    Complex64::new(0.0, 2.0 * e * phi.sin() / (denom * l))
}

/// Shapes available for the smearing function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `exp(-1/(1 - u^2))` on (-1, 1); smooth with all derivatives vanishing
    /// at the edge.
    SmoothBump,
    /// `(1 - u^2)^3`; twice continuously differentiable across the edge and
    /// cheap, a second admissible even profile for independence checks.
    PolyBump,
    /// `(1 - u^2)^3 (1 + u/2)`; deliberately not even, admitted only as a
    /// negative control for the parity cancellations.
    SkewedBump,
}

impl Profile {
    pub fn is_even(self) -> bool {
        !matches!(self, Profile::SkewedBump)
    }

    fn eval_raw(self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - u * u;
        match self {
            Profile::SmoothBump => (-1.0 / s).exp(),
            Profile::PolyBump => s * s * s,
            Profile::SkewedBump => s * s * s * (1.0 + 0.5 * u),
        }
    }

    fn deriv_raw(self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - u * u;
        match self {
            Profile::SmoothBump => (-1.0 / s).exp() * (-2.0 * u) / (s * s),
            Profile::PolyBump => -6.0 * u * s * s,
            Profile::SkewedBump => -6.0 * u * s * s * (1.0 + 0.5 * u) + 0.5 * s * s * s,
        }
    }
}

/// A compactly supported approximate identity of scale `theta`.
///
/// `eval` integrates to exactly one over a period by construction: the
/// profile mass is computed once in the unit variable and divided out, so
/// rescaling `theta` never re-introduces normalization error.
#[derive(Debug, Clone)]
pub struct Mollifier {
    profile: Profile,
    theta: f64,
    l: f64,
    profile_mass: f64,
}

impl Mollifier {
    /// `theta` is the support half-width; it must fit well inside a half
    /// period so the kernel sees only the principal pole.
    pub fn new(profile: Profile, theta: f64, l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParams(format!("period must be positive, got {l}")));
        }
        if !(theta > 0.0) || theta > l / 4.0 {
            return Err(Error::InvalidParams(format!(
                "mollifier scale must satisfy 0 < theta <= L/4 = {}, got {theta}",
                l / 4.0
            )));
        }
        let profile_mass =
            adaptive_quadrature(&|u| Complex64::new(profile.eval_raw(u), 0.0), -1.0, 1.0, 1e-13)?
                .re;
        Ok(Mollifier { profile, theta, l, profile_mass })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn is_even(&self) -> bool {
        self.profile.is_even()
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.profile.eval_raw(z / self.theta) / (self.theta * self.profile_mass)
    }

    pub fn deriv(&self, z: f64) -> f64 {
        self.profile.deriv_raw(z / self.theta) / (self.theta * self.theta * self.profile_mass)
    }
}

/// One point of the two-parameter regulator family.
#[derive(Debug, Clone, Copy)]
pub struct RegulatorPoint {
    pub eps: f64,
    pub theta: f64,
    pub a: f64,
    pub l: f64,
}

impl RegulatorPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !(self.theta > 0.0) || !(self.l > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidParams(format!("invalid regulator point {self:?}")));
        }
        if self.theta > self.l / 4.0 {
            return Err(Error::InvalidParams(format!(
                "smearing scale {} exceeds L/4 = {}",
                self.theta,
                self.l / 4.0
            )));
        }
        Ok(())
    }
}

fn check_point_matches(point: &RegulatorPoint, chi: &Mollifier) -> Result<()> {
    point.validate()?;
    if point.theta != chi.theta() || point.l != chi.l() {
        return Err(Error::InvalidParams(format!(
            "regulator point (theta={}, L={}) does not match mollifier (theta={}, L={})",
            point.theta,
            point.l,
            chi.theta(),
            chi.l()
        )));
    }
    Ok(())
}

/// Smeared split-point integral
/// `int (e^{iaz} - 1) / (exp(2 pi (eps -+ i z)/L) - 1) chi(z) dz`
/// over the mollifier support.  Tends to `-+ aL/(2 pi)` in the iterated
/// limit eps -> 0, theta -> 0.
pub fn eval_i(sign: Sign, point: &RegulatorPoint, chi: &Mollifier) -> Result<Complex64> {
    check_point_matches(point, chi)?;
    let (a, eps, l) = (point.a, point.eps, point.l);
    adaptive_quadrature(
        &|z| {
            cexpm1(Complex64::new(0.0, a * z)) * delta_kernel(z, eps, l, sign) * l * chi.eval(z)
        },
        -chi.theta(),
        chi.theta(),
        QUAD_TOL,
    )
}

/// Smeared difference of the bare kernels,
/// `int L (delta_+ - delta_-) chi(z) dz`.
///
/// Vanishes by parity for even mollifiers at every (eps, theta); a skewed
/// mollifier exposes the cancellation as genuinely parity-driven.
pub fn eval_ii_difference(point: &RegulatorPoint, chi: &Mollifier) -> Result<Complex64> {
    check_point_matches(point, chi)?;
    let (eps, l) = (point.eps, point.l);
    adaptive_quadrature(
        &|z| delta_difference(z, eps, l) * l * chi.eval(z),
        -chi.theta(),
        chi.theta(),
        QUAD_TOL,
    )
}

/// `e^{it} - 1 - it`, series-evaluated near 0 where both terms cancel.
fn phase_remainder(t: f64) -> Complex64 {
    if t.abs() < 0.5 {
        let it = Complex64::new(0.0, t);
        let mut term = it * it * 0.5;
        let mut sum = term;
        for k in 3..=24 {
            term *= it / k as f64;
            sum += term;
        }
        sum
    } else {
        cexpm1(Complex64::new(0.0, t)) - Complex64::new(0.0, t)
    }
}

/// The mollifier-derivative contribution in its integrated-by-parts form,
/// `-int d/dz [ cot(pi z / L) (e^{iaz} - 1 - iaz) ] chi(z) dz`,
/// already at eps = 0.  Tends to `+a^2 L / (2 pi)` as theta -> 0.
pub fn mollifier_derivative_term(a: f64, l: f64, chi: &Mollifier) -> Result<f64> {
    if chi.l() != l {
        return Err(Error::InvalidParams("mollifier period mismatch".into()));
    }
    let value = adaptive_quadrature(
        &|z| {
            if z == 0.0 {
                // Removable point: cot diverges but the remainder vanishes
                // quadratically; the product's derivative tends to
                // -a^2 L / (2 pi).
                return Complex64::new(a * a * l / (2.0 * PI) * chi.eval(0.0), 0.0);
            }
            let x = PI * z / l;
            let cot = x.cos() / x.sin();
            let cot_deriv = -(PI / l) / (x.sin() * x.sin());
            let h = phase_remainder(a * z);
            let h_deriv = Complex64::new(0.0, a) * cexpm1(Complex64::new(0.0, a * z));
            -(cot_deriv * h + cot * h_deriv) * chi.eval(z)
        },
        -chi.theta(),
        chi.theta(),
        QUAD_TOL,
    )?;
    Ok(value.re)
}

/// The same contribution before integrating by parts,
/// `-i int L (delta_+ - delta_-)(z, eps) (e^{iaz} - 1 - iaz) chi'(z) dz`,
/// at small but nonzero eps.  Cross-checks the eps = 0 form.
pub fn mollifier_derivative_term_regulated(
    a: f64,
    l: f64,
    chi: &Mollifier,
    eps: f64,
) -> Result<f64> {
    if chi.l() != l {
        return Err(Error::InvalidParams("mollifier period mismatch".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("regulator must be positive, got {eps}")));
    }
    let value = adaptive_quadrature(
        &|z| {
            Complex64::new(0.0, -1.0)
                * delta_difference(z, eps, l)
                * l
                * phase_remainder(a * z)
                * chi.deriv(z)
        },
        -chi.theta(),
        chi.theta(),
        QUAD_TOL,
    )?;
    Ok(value.re)
}

/// Geometric schedule realizing the iterated limit eps -> 0 before
/// theta -> 0.
///
/// Scale `j` smears over the half-width `L/16 * 2^{-j}`; within each scale
/// the regulator runs down `eps_k = theta^2 * 2^{-k}` until consecutive
/// estimates agree to `inner_tol` or the level budget runs out.  Coupling
/// eps to theta^2 keeps the inner limit always far ahead of the outer one.
#[derive(Debug, Clone, Copy)]
pub struct LimitSchedule {
    pub theta_levels: usize,
    pub eps_levels: usize,
    pub inner_tol: f64,
}

impl Default for LimitSchedule {
    fn default() -> Self {
        LimitSchedule { theta_levels: 6, eps_levels: 30, inner_tol: 1e-11 }
    }
}

impl LimitSchedule {
    pub fn half_width(&self, j: usize, l: f64) -> f64 {
        l / 16.0 * 0.5f64.powi(j as i32)
    }

    pub fn eps(&self, k: usize, half_width: f64) -> f64 {
        half_width * half_width * 0.5f64.powi(k as i32)
    }

    /// The iterated limit is only emulated faithfully when every scale
    /// drives the regulator far below the smearing width.
    pub fn validate(&self, l: f64) -> Result<()> {
        if self.theta_levels < 2 || self.eps_levels < 1 || !(self.inner_tol > 0.0) {
            return Err(Error::InvalidParams(format!("degenerate limit schedule {self:?}")));
        }
        for j in 0..self.theta_levels {
            let hw = self.half_width(j, l);
            let eps_floor = self.eps(self.eps_levels - 1, hw);
            if eps_floor > 0.01 * hw {
                return Err(Error::InvalidParams(format!(
                    "schedule leaves eps = {eps_floor} at theta = {hw}; \
                     the regulator limit must run ahead of the smearing limit"
                )));
            }
        }
        Ok(())
    }
}

/// One line of the convergence history: innermost-regulator estimate at a
/// smearing scale, and the running Richardson extrapolant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub theta: f64,
    pub eps: f64,
    pub estimate: f64,
    pub extrapolant: f64,
}

/// Result of an iterated-limit computation.
#[derive(Debug, Clone)]
pub struct AnomalyEstimate {
    pub value: f64,
    pub table: Vec<ConvergenceRow>,
}

/// Run the eps-then-theta limit of `eps_part + theta_part` and Richardson
/// extrapolate the quadratic theta error.
fn iterated_limit<F, G>(
    context: &str,
    profile: Profile,
    l: f64,
    schedule: &LimitSchedule,
    eps_part: F,
    theta_part: G,
) -> Result<AnomalyEstimate>
where
    F: Fn(&Mollifier, f64) -> Result<Complex64> + Sync,
    G: Fn(&Mollifier) -> Result<Complex64> + Sync,
{
    schedule.validate(l)?;
    let per_theta: Vec<(f64, f64, f64)> = (0..schedule.theta_levels)
        .into_par_iter()
        .map(|j| -> Result<(f64, f64, f64)> {
            let hw = schedule.half_width(j, l);
            let chi = Mollifier::new(profile, hw, l)?;
            let fixed = theta_part(&chi)?;
            let mut eps_used = schedule.eps(0, hw);
            let mut value = Complex64::ZERO;
            let mut prev: Option<Complex64> = None;
            for k in 0..schedule.eps_levels {
                eps_used = schedule.eps(k, hw);
                value = eps_part(&chi, eps_used)? + fixed;
                if let Some(p) = prev {
                    if (value - p).norm() <= schedule.inner_tol * (1.0 + value.norm()) {
                        break;
                    }
                }
                prev = Some(value);
            }
            Ok((hw, eps_used, value.re))
        })
        .collect::<Result<Vec<_>>>()?;

    let estimates: Vec<f64> = per_theta.iter().map(|t| t.2).collect();
    // Halving theta must shrink consecutive differences (by ~4 for a clean
    // quadratic error) until they sink into regulator noise.
    let scale = 1.0 + estimates.last().copied().unwrap_or(0.0).abs();
    for j in 2..estimates.len() {
        let d_prev = (estimates[j - 1] - estimates[j - 2]).abs();
        let d = (estimates[j] - estimates[j - 1]).abs();
        if d_prev > 1e-7 * scale && d > 0.9 * d_prev {
            return Err(Error::Extrapolation { context: context.into(), sequence: estimates });
        }
    }

    let mut table = Vec::with_capacity(per_theta.len());
    let mut extrapolant = estimates[0];
    for (j, &(theta, eps, estimate)) in per_theta.iter().enumerate() {
        if j > 0 {
            extrapolant = (4.0 * estimates[j] - estimates[j - 1]) / 3.0;
        }
        table.push(ConvergenceRow { theta, eps, estimate, extrapolant });
    }
    Ok(AnomalyEstimate { value: extrapolant, table })
}

/// The smeared-kernel constant in the regularized axial charge:
/// `lim_theta lim_eps [ I+ - I- + (II+ - II-) - int e^{iaz} chi dz ]`,
/// which converges to `-aL/pi - 1`.
pub fn compute_ca(
    a: f64,
    l: f64,
    profile: Profile,
    schedule: &LimitSchedule,
) -> Result<AnomalyEstimate> {
    if !a.is_finite() || !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidParams(format!("bad anomaly arguments a={a}, L={l}")));
    }
    if !profile.is_even() {
        return Err(Error::InvalidParams("the smeared limits require an even mollifier".into()));
    }
    iterated_limit(
        "axial charge constant",
        profile,
        l,
        schedule,
        |chi, eps| {
            let point = RegulatorPoint { eps, theta: chi.theta(), a, l };
            let plus = eval_i(Sign::Plus, &point, chi)?;
            let minus = eval_i(Sign::Minus, &point, chi)?;
            let parity = eval_ii_difference(&point, chi)?;
            Ok(plus - minus + parity)
        },
        // The -1/L piece of the kernel: its double integral collapses to
        // -int e^{iaz} chi dz, kept as a quadrature rather than substituted
        // by hand so the whole pipeline is exercised.
        |chi| {
            let a_local = a;
            let v = adaptive_quadrature(
                &|z| Complex64::cis(a_local * z) * chi.eval(z),
                -chi.theta(),
                chi.theta(),
                QUAD_TOL,
            )?;
            Ok(-v)
        },
    )
}

/// The smeared-kernel constant in the coupled Hamiltonian:
/// `a` times the axial-charge kernel integrals plus the mollifier-derivative
/// term, converging to `-a^2 L/(2 pi)`.
pub fn compute_ca_prime(
    a: f64,
    l: f64,
    profile: Profile,
    schedule: &LimitSchedule,
) -> Result<AnomalyEstimate> {
    if !a.is_finite() || !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidParams(format!("bad anomaly arguments a={a}, L={l}")));
    }
    if !profile.is_even() {
        return Err(Error::InvalidParams("the smeared limits require an even mollifier".into()));
    }
    iterated_limit(
        "Hamiltonian constant",
        profile,
        l,
        schedule,
        |chi, eps| {
            let point = RegulatorPoint { eps, theta: chi.theta(), a, l };
            let plus = eval_i(Sign::Plus, &point, chi)?;
            let minus = eval_i(Sign::Minus, &point, chi)?;
            let parity = eval_ii_difference(&point, chi)?;
            Ok((plus - minus + parity) * a)
        },
        |chi| Ok(Complex64::new(mollifier_derivative_term(a, l, chi)?, 0.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const L: f64 = 2.0 * PI;

    #[test]
    fn quadrature_reproduces_closed_forms() {
        let v = adaptive_quadrature(&|z| Complex64::new(z.cos(), 0.0), 0.0, PI / 2.0, 1e-13)
            .unwrap();
        assert!((v.re - 1.0).abs() < 1e-12);
        let osc = adaptive_quadrature(&|z| Complex64::cis(7.0 * z), 0.0, 2.0 * PI, 1e-13).unwrap();
        assert!(osc.norm() < 1e-12);
    }

    #[test]
    fn quadrature_reports_unreachable_tolerance() {
        // Integrable inverse-square-root singularity in the interior: the
        // panel estimates cannot reach 1e-12 within the depth budget.
        let r = adaptive_quadrature(
            &|z| Complex64::new(1.0 / (z - 0.3).abs().sqrt(), 0.0),
            0.0,
            1.0,
            1e-12,
        );
        match r {
            Err(Error::QuadratureTolerance { achieved, requested }) => {
                assert!(achieved > requested);
            }
            other => panic!("expected tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn kernel_reflection_swaps_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let z = rng.gen_range(-3.0 * L..3.0 * L);
            let eps = rng.gen_range(1e-9..1.0);
            let p = delta_pm(-z, eps, L, Sign::Plus).unwrap();
            let m = delta_pm(z, eps, L, Sign::Minus).unwrap();
            assert_eq!(p, m);
        }
    }

    #[test]
    fn kernel_difference_matches_trigonometric_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let z = rng.gen_range(-L..L);
            let eps = rng.gen_range(1e-8..2.0);
            let direct = delta_pm(z, eps, L, Sign::Plus).unwrap()
                - delta_pm(z, eps, L, Sign::Minus).unwrap();
            let trig = delta_difference(z, eps, L);
            assert!(
                (direct - trig).norm() <= 1e-12 * (1.0 + direct.norm()),
                "z={z}, eps={eps}: {direct} vs {trig}"
            );
        }
    }

    #[test]
    fn kernel_modulus_bound_and_pole_detection() {
        for eps in [0.5, 1.0, 3.0] {
            let bound = 1.0 / (L * (2.0 * PI * eps / L).exp_m1());
            for z in [-2.0, 0.0, 0.7, 3.0] {
                let v = delta_pm(z, eps, L, Sign::Plus).unwrap();
                assert!(v.norm() <= bound * (1.0 + 1e-12));
            }
        }
        assert!(delta_pm(0.0, 0.0, L, Sign::Plus).is_err());
        assert!(delta_pm(3.0 * L, 0.0, L, Sign::Minus).is_err());
        assert!(delta_pm(0.3, 0.0, L, Sign::Plus).is_ok());
        assert!(delta_pm(0.3, -1.0, L, Sign::Plus).is_err());
    }

    #[test]
    fn delta_pair_acts_as_periodic_identity() {
        // delta_+ + delta_- + 1/L integrates a smooth periodic function to
        // its value at 0; the error is the Fourier tail suppressed by
        // 1 - e^{-2 pi |n| eps / L}, so gentle spectra converge tightest.
        let eps = 1e-6;
        let probe = |f: &dyn Fn(f64) -> f64| -> f64 {
            adaptive_quadrature(
                &|z| {
                    let pair = delta_kernel(z, eps, L, Sign::Plus)
                        + delta_kernel(z, eps, L, Sign::Minus)
                        + Complex64::new(1.0 / L, 0.0);
                    pair * f(z)
                },
                -L / 2.0,
                L / 2.0,
                QUAD_TOL,
            )
            .unwrap()
            .re
        };
        let mild = probe(&|z| 1.0 + 1e-3 * (2.0 * PI * z / L).cos());
        assert!((mild - 1.001).abs() < 1e-8, "mild: {mild}");
        // Broader spectrum: first harmonic weight ~0.56, so the same eps
        // leaves a few-1e-6 tail.
        let generic = probe(&|z| (2.0 * PI * z / L).sin().exp());
        assert!((generic - 1.0).abs() < 5e-6, "generic: {generic}");
    }

    #[test]
    fn mollifiers_have_unit_mass_and_bounded_support() {
        for profile in [Profile::SmoothBump, Profile::PolyBump, Profile::SkewedBump] {
            let theta = L / 16.0;
            let chi = Mollifier::new(profile, theta, L).unwrap();
            let mass =
                adaptive_quadrature(&|z| Complex64::new(chi.eval(z), 0.0), -theta, theta, 1e-13)
                    .unwrap();
            assert!((mass.re - 1.0).abs() < 1e-12, "{profile:?}: {}", mass.re);
            assert_eq!(chi.eval(theta * 1.0001), 0.0);
            assert_eq!(chi.eval(-theta * 1.5), 0.0);
        }
        assert!(Mollifier::new(Profile::SmoothBump, L / 3.0, L).is_err());
        assert!(Mollifier::new(Profile::SmoothBump, 0.0, L).is_err());
    }

    #[test]
    fn mollifier_derivative_is_consistent_with_finite_differences() {
        let chi = Mollifier::new(Profile::SmoothBump, L / 16.0, L).unwrap();
        let h = 1e-6;
        for z in [-0.3, -0.05, 0.0, 0.11, 0.3] {
            let fd = (chi.eval(z + h) - chi.eval(z - h)) / (2.0 * h);
            assert!(
                (chi.deriv(z) - fd).abs() < 1e-4 * (1.0 + fd.abs()),
                "z={z}: {} vs {fd}",
                chi.deriv(z)
            );
        }
    }

    #[test]
    fn split_point_integral_vanishes_identically_at_zero_coupling() {
        let chi = Mollifier::new(Profile::SmoothBump, L / 16.0, L).unwrap();
        let point = RegulatorPoint { eps: 1e-4, theta: chi.theta(), a: 0.0, l: L };
        let v = eval_i(Sign::Plus, &point, &chi).unwrap();
        assert_eq!(v, Complex64::ZERO);
    }

    /// Iterated limit of a single smeared integral via the default schedule.
    fn limit_of<F>(f: F) -> f64
    where
        F: Fn(&Mollifier, f64) -> Result<Complex64> + Sync,
    {
        iterated_limit(
            "test",
            Profile::SmoothBump,
            L,
            &LimitSchedule::default(),
            f,
            |_| Ok(Complex64::ZERO),
        )
        .unwrap()
        .value
    }

    #[test]
    fn split_point_integrals_converge_to_their_limits() {
        let a = 0.7;
        let plus = limit_of(|chi, eps| {
            let point = RegulatorPoint { eps, theta: chi.theta(), a, l: L };
            eval_i(Sign::Plus, &point, chi)
        });
        assert!((plus - (-a * L / (2.0 * PI))).abs() < 1e-6, "I+: {plus}");
        let minus = limit_of(|chi, eps| {
            let point = RegulatorPoint { eps, theta: chi.theta(), a, l: L };
            eval_i(Sign::Minus, &point, chi)
        });
        assert!((minus - a * L / (2.0 * PI)).abs() < 1e-6, "I-: {minus}");
        let pair_sum = limit_of(|chi, eps| {
            let point = RegulatorPoint { eps, theta: chi.theta(), a, l: L };
            Ok(eval_i(Sign::Plus, &point, chi)? + eval_i(Sign::Minus, &point, chi)?)
        });
        assert!(pair_sum.abs() < 1e-6, "I+ + I-: {pair_sum}");
    }

    #[test]
    fn parity_cancellation_holds_for_even_mollifiers_only() {
        for (profile, theta) in [
            (Profile::SmoothBump, L / 16.0),
            (Profile::PolyBump, L / 64.0),
            (Profile::SmoothBump, L / 256.0),
        ] {
            let chi = Mollifier::new(profile, theta, L).unwrap();
            for eps in [2.0 * L, 0.1, theta * theta * 1e-6] {
                let point = RegulatorPoint { eps, theta, a: 0.3, l: L };
                let v = eval_ii_difference(&point, &chi).unwrap();
                assert!(v.norm() < 1e-10, "{profile:?}, eps={eps}: {v}");
            }
        }
        let skew = Mollifier::new(Profile::SkewedBump, L / 16.0, L).unwrap();
        let point =
            RegulatorPoint { eps: skew.theta() * skew.theta() * 1e-6, theta: skew.theta(), a: 0.3, l: L };
        let v = eval_ii_difference(&point, &skew).unwrap();
        assert!(v.norm() > 1e-3, "skewed control too small: {v}");
    }

    #[test]
    fn axial_constant_matches_closed_form() {
        let schedule = LimitSchedule::default();
        let ca = compute_ca(0.7, L, Profile::SmoothBump, &schedule).unwrap();
        assert!((ca.value - (-2.4)).abs() < 1e-6, "C_A(0.7, 2pi) = {}", ca.value);
        let at_zero = compute_ca(0.0, L, Profile::SmoothBump, &schedule).unwrap();
        assert!((at_zero.value - (-1.0)).abs() < 1e-8, "C_A(0) = {}", at_zero.value);

        // The table must show the inner limit running ahead of the outer.
        for row in &ca.table {
            assert!(row.eps < 0.01 * row.theta);
        }
        for pair in ca.table.windows(2) {
            assert!(pair[1].theta < pair[0].theta);
        }
    }

    #[test]
    fn axial_constant_is_mollifier_independent() {
        let schedule = LimitSchedule::default();
        let smooth = compute_ca(-1.3, 5.0, Profile::SmoothBump, &schedule).unwrap();
        let poly = compute_ca(-1.3, 5.0, Profile::PolyBump, &schedule).unwrap();
        assert!(
            (smooth.value - poly.value).abs() < 2e-6,
            "{} vs {}",
            smooth.value,
            poly.value
        );
        assert!(compute_ca(0.5, L, Profile::SkewedBump, &schedule).is_err());
    }

    #[test]
    fn axial_constant_is_affine_in_the_coupling() {
        let schedule = LimitSchedule::default();
        let l = 3.7;
        let samples: Vec<(f64, f64)> = [-1.1, -0.4, 0.2, 0.8, 1.7]
            .iter()
            .map(|&a| (a, compute_ca(a, l, Profile::SmoothBump, &schedule).unwrap().value + 1.0))
            .collect();
        // Least squares line through (a, C_A + 1); the residual measures
        // nonlinearity, the slope must be -L/pi.
        let n = samples.len() as f64;
        let (sx, sy) = samples.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
        let (sxx, sxy) =
            samples.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0 * p.0, s.1 + p.0 * p.1));
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        for (a, y) in &samples {
            assert!((intercept + slope * a - y).abs() < 1e-6, "residual at a = {a}");
        }
        assert!((slope - (-l / PI)).abs() < 1e-5, "slope {slope}");
        assert!(intercept.abs() < 1e-6, "intercept {intercept}");
    }

    #[test]
    fn hamiltonian_constant_matches_closed_form() {
        let schedule = LimitSchedule::default();
        let v = compute_ca_prime(0.7, L, Profile::SmoothBump, &schedule).unwrap();
        assert!((v.value - (-0.49)).abs() < 1e-5, "C_A'(0.7, 2pi) = {}", v.value);
        let zero = compute_ca_prime(0.0, L, Profile::SmoothBump, &schedule).unwrap();
        assert!(zero.value.abs() < 1e-8, "C_A'(0) = {}", zero.value);
        let poly = compute_ca_prime(0.7, L, Profile::PolyBump, &schedule).unwrap();
        assert!((poly.value - v.value).abs() < 2e-5, "{} vs {}", poly.value, v.value);
    }

    #[test]
    fn hamiltonian_constant_is_quadratic_with_no_linear_part() {
        let schedule = LimitSchedule::default();
        let l = L;
        // Fit c0 + c1 a + c2 a^2 to C_A'(a) * (-2 pi / L), expecting (0,0,1).
        let samples: Vec<(f64, f64)> = [-1.2, -0.5, 0.3, 0.9, 1.6]
            .iter()
            .map(|&a| {
                let v = compute_ca_prime(a, l, Profile::SmoothBump, &schedule).unwrap().value;
                (a, v * (-2.0 * PI / l))
            })
            .collect();
        let mut ata = [[0.0; 3]; 3];
        let mut atb = [0.0; 3];
        for &(a, y) in &samples {
            let row = [1.0, a, a * a];
            for i in 0..3 {
                for j in 0..3 {
                    ata[i][j] += row[i] * row[j];
                }
                atb[i] += row[i] * y;
            }
        }
        let m = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
        let b = nalgebra::Vector3::from_row_slice(&atb);
        let c = m.lu().solve(&b).expect("normal equations solvable");
        assert!(c[0].abs() < 1e-5, "constant term {}", c[0]);
        assert!(c[1].abs() < 1e-5, "linear term {}", c[1]);
        assert!((c[2] - 1.0).abs() < 1e-5, "quadratic term {}", c[2]);
        for &(a, y) in &samples {
            assert!((c[0] + c[1] * a + c[2] * a * a - y).abs() < 1e-5);
        }
    }

    #[test]
    fn derivative_term_agrees_across_integration_by_parts() {
        let a = 0.7;
        // Richardson pair in theta for the eps = 0 form.
        let coarse = Mollifier::new(Profile::SmoothBump, L / 512.0, L).unwrap();
        let fine = Mollifier::new(Profile::SmoothBump, L / 1024.0, L).unwrap();
        let t_coarse = mollifier_derivative_term(a, L, &coarse).unwrap();
        let t_fine = mollifier_derivative_term(a, L, &fine).unwrap();
        let extrapolated = (4.0 * t_fine - t_coarse) / 3.0;
        let expected = a * a * L / (2.0 * PI);
        assert!((extrapolated - expected).abs() < 1e-5, "{extrapolated} vs {expected}");

        // The regulated pre-integration-by-parts form approaches the eps = 0
        // value from below the smearing scale.
        let regulated =
            mollifier_derivative_term_regulated(a, L, &coarse, 1e-7 * coarse.theta()).unwrap();
        assert!((regulated - t_coarse).abs() < 1e-5, "{regulated} vs {t_coarse}");
    }

    #[test]
    fn schedule_rejects_regulator_lagging_the_smearing() {
        let bad = LimitSchedule { theta_levels: 3, eps_levels: 1, inner_tol: 1e-11 };
        assert!(bad.validate(L).is_err());
        assert!(LimitSchedule::default().validate(L).is_ok());
        assert!(LimitSchedule { theta_levels: 1, ..Default::default() }.validate(L).is_err());
    }
}
