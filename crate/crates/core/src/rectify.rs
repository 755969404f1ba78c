//! Changes of variables that straighten winding contours.
//!
//! Two maps are supported: the single-branch square map `ix = (iz)²`, which
//! turns the spiked oscillator into a zero-energy sextic problem, and the
//! two-branch map `x = -i sqrt((1 - z²)^κ - 1)`, for which the transformed
//! equation `-φ'' + U_eff(iz) φ = 0` is built from `β = dz/dx`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{kappa_eval, state_along_segment, BranchState, KappaEval, EXCLUSION_RADIUS};
use crate::error::{Error, Result};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Which singular terms are added to the polynomial part of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleForm {
    /// Polynomial only.
    Regular,
    /// `(α² - 1/4)/x²`
    SinglePole,
    /// `ℓ(ℓ+1)/(x-1)² + ℓ(ℓ+1)/(x+1)²`
    TwoPole,
}

/// A potential `V(x) = Σ c_k (ix)^k` plus optional centrifugal poles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Coefficients of `(ix)^k`, lowest power first.
    pub core: Vec<C>,
    pub ell: f64,
    pub alpha: f64,
    pub form: PoleForm,
}

impl PotentialSpec {
    pub fn polynomial(core: Vec<C>) -> Self {
        PotentialSpec { core, ell: 0.0, alpha: 0.5, form: PoleForm::Regular }
    }

    pub fn real_polynomial(core: &[f64]) -> Self {
        Self::polynomial(core.iter().map(|&c| C::new(c, 0.0)).collect())
    }

    pub fn single_pole(core: Vec<C>, alpha: f64) -> Self {
        PotentialSpec { core, ell: 0.0, alpha, form: PoleForm::SinglePole }
    }

    pub fn two_pole(core: Vec<C>, ell: f64) -> Self {
        PotentialSpec { core, ell, alpha: 0.5, form: PoleForm::TwoPole }
    }

    /// `x²` written in powers of `ix`.
    pub fn harmonic() -> Self {
        Self::real_polynomial(&[0.0, 0.0, -1.0])
    }

    /// Polynomial part as a function of `x`.
    pub fn polynomial_at(&self, x: C) -> C {
        let ix = I * x;
        self.core.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * ix + c)
    }

    /// Full potential at `x`.
    pub fn eval(&self, x: C) -> C {
        let v = self.polynomial_at(x);
        match self.form {
            PoleForm::Regular => v,
            PoleForm::SinglePole => v + (self.alpha * self.alpha - 0.25) / (x * x),
            PoleForm::TwoPole => {
                let g = self.ell * (self.ell + 1.0);
                if g == 0.0 {
                    return v;
                }
                let (a, b) = (x - 1.0, x + 1.0);
                v + g / (a * a) + g / (b * b)
            }
        }
    }

    /// True when every coefficient is real.
    pub fn has_real_coefficients(&self) -> bool {
        self.core.iter().all(|c| c.im == 0.0)
    }

    fn trimmed_core(&self) -> &[C] {
        let n = self.core.iter().rposition(|c| *c != C::new(0.0, 0.0)).map_or(0, |i| i + 1);
        &self.core[..n]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RectificationMap {
    SingleBranchSquare,
    TwoBranchKappa { kappa: f64 },
}

/// Spiked oscillator under `ix = (iz)²`, `ψ(x) = sqrt(z) φ(z)`: returns the
/// level-dependent potential `4z⁶ + 4E z² + (4α² - 1/4)/z²`, to be solved at
/// zero total energy.
pub fn single_branch_rectify(p: &PotentialSpec, energy: C) -> Result<PotentialSpec> {
    if p.form != PoleForm::SinglePole {
        return Err(Error::InvalidInput("single-branch rectification needs a single-pole potential".into()));
    }
    let core = p.trimmed_core();
    if core != [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)] {
        return Err(Error::InvalidInput("single-branch rectification expects V = x² plus the pole".into()));
    }
    let mut sextic = vec![C::new(0.0, 0.0); 7];
    sextic[2] = -4.0 * energy;
    sextic[6] = C::new(-4.0, 0.0);
    Ok(PotentialSpec::single_pole(sextic, 2.0 * p.alpha))
}

fn check_regular(z: C) -> Result<()> {
    if z.norm() < EXCLUSION_RADIUS {
        return Err(Error::Singular(z));
    }
    Ok(())
}

/// `β(z) = dz/dx` for the two-branch map, on the branch selected by `state`
/// (principal values when `None`).
pub fn beta(z: C, kappa: f64, state: Option<&BranchState>) -> Result<C> {
    Ok(beta_derivatives(z, kappa, state)?.0)
}

/// `(β, β', β'')` in closed form.
pub fn beta_derivatives(z: C, kappa: f64, state: Option<&BranchState>) -> Result<(C, C, C)> {
    check_regular(z)?;
    let ev = kappa_eval(z, kappa, state, None)?;
    beta_derivatives_from(&ev, z, kappa)
}

/// Logarithmic derivatives `L1 = β'/β` and `L1'`, with `β`.
fn beta_logs(ev: &KappaEval, z: C, kappa: f64) -> Result<(C, C, C)> {
    let p = ev.p;
    let x = ev.x;
    if x.norm() == 0.0 || z.norm() < EXCLUSION_RADIUS {
        return Err(Error::Singular(z));
    }
    // P^(κ-1) = P^κ / P
    let pk1 = ev.w / p;
    let g = kappa * z * pk1;
    let b = x / g;
    let x2 = x * x;
    let l1 = g / x2 - 1.0 / z + 2.0 * (kappa - 1.0) * z / p;
    let dg = kappa * pk1 - 2.0 * kappa * (kappa - 1.0) * z * z * pk1 / p;
    let dl1 =
        dg / x2 - 2.0 * g * g / (x2 * x2) + 1.0 / (z * z) + 2.0 * (kappa - 1.0) * (1.0 / p + 2.0 * z * z / (p * p));
    Ok((b, l1, dl1))
}

pub(crate) fn beta_derivatives_from(ev: &KappaEval, z: C, kappa: f64) -> Result<(C, C, C)> {
    let (b, l1, dl1) = beta_logs(ev, z, kappa)?;
    Ok((b, b * l1, b * (l1 * l1 + dl1)))
}

/// `χ(z) = 1/sqrt(β(z))`, continuous along any path on which `state` is
/// tracked and `z` stays off the negative real axis.
pub fn liouville_factor(z: C, kappa: f64, state: Option<&BranchState>) -> Result<C> {
    check_regular(z)?;
    let ev = kappa_eval(z, kappa, state, None)?;
    Ok((-0.5 * log_beta(&ev, z, kappa)).exp())
}

fn log_beta(ev: &KappaEval, z: C, kappa: f64) -> C {
    // log x = -iπ/2 + (ln|Q| + i arg Q)/2
    let log_x = C::new(0.5 * ev.q.norm().ln(), 0.5 * ev.state.arg_q - std::f64::consts::FRAC_PI_2);
    log_x - kappa.ln() - z.ln() - (kappa - 1.0) * ev.log_p
}

/// `U_eff(iz)` of the two-branch problem at fixed `E`; the Sturmian
/// spectral parameter is `energy`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectivePotential {
    pub potential: PotentialSpec,
    pub energy: C,
    pub kappa: f64,
    /// Diagnostic strength `μ` of the double poles at `z = ±1`, if fitted.
    pub mu_fit: Option<f64>,
}

pub fn effective_potential(p: &PotentialSpec, energy: C, m: RectificationMap) -> Result<EffectivePotential> {
    let kappa = match m {
        RectificationMap::TwoBranchKappa { kappa } => kappa,
        RectificationMap::SingleBranchSquare => {
            return Err(Error::InvalidInput(
                "U_eff is defined for the two-branch map; use single_branch_rectify".into(),
            ))
        }
    };
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidInput(format!("map exponent must be positive, got {kappa}")));
    }
    if p.form == PoleForm::SinglePole {
        return Err(Error::InvalidInput("the two-branch map expects poles at ±1, not at 0".into()));
    }
    Ok(EffectivePotential { potential: p.clone(), energy, kappa, mu_fit: None })
}

impl EffectivePotential {
    pub fn with_energy(&self, energy: C) -> Self {
        EffectivePotential { energy, ..self.clone() }
    }

    /// `U_eff(iz) = (V_eff(ix) - E)/β² + β''/(2β) - β'²/(4β²)`.
    pub fn eval(&self, z: C, state: Option<&BranchState>) -> Result<C> {
        check_regular(z)?;
        let ev = kappa_eval(z, self.kappa, state, None)?;
        self.eval_from(&ev, z)
    }

    pub(crate) fn eval_from(&self, ev: &KappaEval, z: C) -> Result<C> {
        let (b, l1, dl1) = beta_logs(ev, z, self.kappa)?;
        let x = ev.x;
        let schwarz = 0.25 * l1 * l1 + 0.5 * dl1;
        Ok((self.potential.eval(x) - self.energy) / (b * b) + schwarz)
    }

    /// Fits `c/(z-1)²` to `U_eff` along the ray `z = 1 - ir` and records `μ`
    /// with `μ(μ+1) = c`. `start` is a regular point with its branch record,
    /// typically a sample of the straight line next to `Re z = 1`.
    pub fn fit_mu(&mut self, start: (C, BranchState)) -> Result<f64> {
        let top = C::new(1.0, -0.05);
        let state = state_along_segment(start.0, start.1, top, self.kappa)?;
        let mut st = state;
        let mut z_prev = top;
        let mut samples = Vec::new();
        // geometric sequence of r from 0.05 down to 1e-4, tracked step by step
        let n = 60;
        for k in 0..=n {
            let r = 0.05 * (1e-4f64 / 0.05).powf(k as f64 / n as f64);
            let z = C::new(1.0, -r);
            st = state_along_segment(z_prev, st, z, self.kappa)?;
            z_prev = z;
            if r <= 1e-2 {
                samples.push((z - 1.0, self.eval(z, Some(&st))?));
            }
        }
        let mu = mu_from_samples(&samples)?;
        self.mu_fit = Some(mu);
        Ok(mu)
    }
}

/// Fits `(z-1)² U ≈ c + a(z-1) + b(z-1)²` to samples `(z-1, U)` and returns
/// the root `μ ≥ -1/2` of `μ(μ+1) = Re c`.
pub fn mu_from_samples(samples: &[(C, C)]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::Fit("need at least 4 samples".into()));
    }
    // complex least squares via normal equations on the 3 unknowns
    let mut a = [[C::new(0.0, 0.0); 3]; 3];
    let mut rhs = [C::new(0.0, 0.0); 3];
    let scale = samples.iter().map(|s| s.0.norm()).fold(0.0, f64::max);
    for &(d, u) in samples {
        let t = d / scale;
        let basis = [C::new(1.0, 0.0), t, t * t];
        let y = d * d * u;
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += basis[i].conj() * basis[j];
            }
            rhs[i] += basis[i].conj() * y;
        }
    }
    let coef = solve3(a, rhs).ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    let c = coef[0];
    let max_y = samples.iter().map(|&(d, u)| (d * d * u).norm()).fold(0.0, f64::max);
    let misfit = samples
        .iter()
        .map(|&(d, u)| {
            let t = d / scale;
            (d * d * u - (coef[0] + coef[1] * t + coef[2] * t * t)).norm()
        })
        .fold(0.0, f64::max);
    if !(max_y.is_finite()) || c.norm() < 1e-8 * (1.0 + max_y) {
        return Err(Error::Fit("no double pole: leading coefficient vanishes".into()));
    }
    if misfit > 1e-3 * max_y || c.im.abs() > 1e-4 * c.norm() {
        return Err(Error::Fit(format!("pole order is not 2 (misfit {misfit:.3e})")));
    }
    let disc = 1.0 + 4.0 * c.re;
    if disc < 0.0 {
        return Err(Error::Fit(format!("μ(μ+1) = {} has no real root", c.re)));
    }
    Ok(0.5 * (disc.sqrt() - 1.0))
}

fn solve3(mut a: [[C; 3]; 3], mut b: [C; 3]) -> Option<[C; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, v) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = [C::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// `μ = κ(ℓ + 1/2) - 1/2`, the double-pole strength at `z = ±1` obtained by
/// expanding `U_eff` there.
pub fn mu_closed_form(kappa: f64, ell: f64) -> f64 {
    kappa * (ell + 0.5) - 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{map_two_branch, state_by_arc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd4<F: Fn(C) -> C>(f: F, z: C, h: f64) -> (C, C) {
        let (f2, f1, f0, fm1, fm2) = (f(z + 2.0 * h), f(z + h), f(z), f(z - h), f(z - 2.0 * h));
        let d1 = (-f2 + 8.0 * f1 - 8.0 * fm1 + fm2) / (12.0 * h);
        let d2 = (-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
        (d1, d2)
    }

    #[test]
    fn potential_evaluation() {
        let v = PotentialSpec::harmonic();
        assert!((v.eval(C::new(2.0, 1.0)) - C::new(2.0, 1.0).powi(2)).norm() < 1e-14);
        let s = PotentialSpec::single_pole(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)], 1.5);
        let x = C::new(0.7, -0.2);
        assert!((s.eval(x) - (x * x + 2.0 / (x * x))).norm() < 1e-13);
        let t = PotentialSpec::two_pole(vec![], 1.0);
        let alt = 4.0 * (1.0 + x * x) / ((1.0 - x * x) * (1.0 - x * x));
        assert!((t.eval(x) - alt).norm() < 1e-12);
    }

    #[test]
    fn square_map_coefficients() {
        let p = PotentialSpec::single_pole(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)], 0.25);
        let e = C::new(-1.5, 0.0);
        let r = single_branch_rectify(&p, e).unwrap();
        assert_eq!(r.form, PoleForm::SinglePole);
        assert_eq!(r.alpha * r.alpha - 0.25, 4.0 * 0.25 * 0.25 - 0.25);
        let z = C::new(0.4, -0.9);
        let expect = 4.0 * z.powi(6) + 4.0 * e * z * z + (4.0 * 0.0625 - 0.25) / (z * z);
        assert!((r.eval(z) - expect).norm() < 1e-12);
        assert!(single_branch_rectify(&PotentialSpec::harmonic(), e).is_err());
        let quartic = PotentialSpec::single_pole(vec![C::new(0.0, 0.0); 5], 0.25);
        assert!(single_branch_rectify(&quartic, e).is_err());
    }

    #[test]
    fn chain_rule_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for (round, &kappa) in [2.4, 3.0, 5.0].iter().enumerate() {
            while checked < 67 * (round + 1) {
                let z = C::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.2..-0.1));
                if (z - 1.0).norm() < 0.05 || (z + 1.0).norm() < 0.05 {
                    continue;
                }
                let st = state_by_arc(z, kappa).unwrap();
                let b = beta(z, kappa, Some(&st)).unwrap();
                let h = 1e-5 * (1.0 + z.norm());
                let xp = map_two_branch(z + h, kappa, Some(&st)).unwrap().0;
                let xm = map_two_branch(z - h, kappa, Some(&st)).unwrap().0;
                let xp2 = map_two_branch(z + 2.0 * h, kappa, Some(&st)).unwrap().0;
                let xm2 = map_two_branch(z - 2.0 * h, kappa, Some(&st)).unwrap().0;
                let dxdz = (-xp2 + 8.0 * xp - 8.0 * xm + xm2) / (12.0 * h);
                let err = (b * dxdz - 1.0).norm();
                assert!(err < 1e-9, "κ={kappa} z={z}: {err:e}");
                checked += 1;
            }
        }
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        for &(z, kappa) in &[(C::new(0.4, -0.5), 3.0), (C::new(-0.9, -0.3), 2.4), (C::new(1.3, -0.2), 5.0)] {
            let st = state_by_arc(z, kappa).unwrap();
            let (_, b1, b2) = beta_derivatives(z, kappa, Some(&st)).unwrap();
            let (d1, d2) = fd4(|w| beta(w, kappa, Some(&st)).unwrap(), z, 1e-3);
            assert!((d1 - b1).norm() < 1e-6 * b1.norm(), "β' at {z}: {d1} vs {b1}");
            assert!((d2 - b2).norm() < 1e-6 * b2.norm(), "β'' at {z}: {d2} vs {b2}");
        }
    }

    #[test]
    fn beta_on_the_axis_and_identity_map() {
        // on z = -ir the map stays on the negative imaginary axis, so β is real
        for r in [0.1, 0.5, 2.0] {
            let b = beta(C::new(0.0, -r), 2.4, None).unwrap();
            assert!(b.im.abs() < 1e-14 * b.norm() && b.re > 0.0);
        }
        let b = beta(C::new(0.3, -0.8), 1.0, None).unwrap();
        assert!((b.norm() - 1.0).abs() < 1e-13);
        assert!(matches!(beta(C::new(0.0, 0.0), 2.4, None), Err(Error::Singular(_))));
        let near = beta(C::new(1.0 - 1e-4, 0.0), 2.4, None).unwrap();
        assert!(near.norm() > 1e4);
    }

    #[test]
    fn liouville_factor_definition() {
        let z = C::new(0.6, -0.4);
        let st = state_by_arc(z, 3.0).unwrap();
        let chi = liouville_factor(z, 3.0, Some(&st)).unwrap();
        let b = beta(z, 3.0, Some(&st)).unwrap();
        assert!((chi * chi * b - 1.0).norm() < 1e-12);
    }

    #[test]
    fn ueff_pt_symmetry() {
        let p = PotentialSpec::two_pole(
            vec![C::new(0.3, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)],
            1.0,
        );
        let ep = effective_potential(&p, C::new(1.7, 0.0), RectificationMap::TwoBranchKappa { kappa: 2.4 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z = C::new(rng.gen_range(-1.8..1.8), rng.gen_range(-1.0..-0.1));
            let st = state_by_arc(z, 2.4).unwrap();
            let mz = -z.conj();
            let mst = state_by_arc(mz, 2.4).unwrap();
            let u = ep.eval(z, Some(&st)).unwrap();
            let um = ep.eval(mz, Some(&mst)).unwrap();
            assert!((um.conj() - u).norm() < 1e-9 * (1.0 + u.norm()), "{z}: {u} vs {um}");
        }
    }

    #[test]
    fn ueff_reduces_to_schwarzian() {
        let ep = effective_potential(
            &PotentialSpec::polynomial(vec![]),
            C::new(0.0, 0.0),
            RectificationMap::TwoBranchKappa { kappa: 3.0 },
        )
        .unwrap();
        let z = C::new(0.2, -0.7);
        let (b, b1, b2) = beta_derivatives(z, 3.0, None).unwrap();
        let expect = b2 / (2.0 * b) - b1 * b1 / (4.0 * b * b);
        assert!((ep.eval(z, None).unwrap() - expect).norm() < 1e-10 * expect.norm());
        assert!(effective_potential(
            &PotentialSpec::harmonic(),
            C::new(0.0, 0.0),
            RectificationMap::SingleBranchSquare
        )
        .is_err());
    }

    #[test]
    fn mu_fit_on_synthetic_inputs() {
        let rays: Vec<C> = (0..20).map(|k| C::new(0.0, -1e-3 * (1.0 + k as f64))).collect();
        let pole: Vec<(C, C)> = rays.iter().map(|&d| (d, 6.0 / (d * d))).collect();
        assert!((mu_from_samples(&pole).unwrap() - 2.0).abs() < 1e-10);
        let zero: Vec<(C, C)> = rays.iter().map(|&d| (d, C::new(0.0, 0.0))).collect();
        assert!(matches!(mu_from_samples(&zero), Err(Error::Fit(_))));
        let triple: Vec<(C, C)> = rays.iter().map(|&d| (d, 1.0 / (d * d * d))).collect();
        assert!(mu_from_samples(&triple).is_err());
    }

    #[test]
    fn mu_fit_matches_expansion() {
        for &(kappa, ell) in &[(2.4, 0.0), (3.0, 1.0), (5.0, 0.0)] {
            let p = PotentialSpec::two_pole(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)], ell);
            let mut ep = effective_potential(&p, C::new(1.0, 0.0), RectificationMap::TwoBranchKappa { kappa }).unwrap();
            let start = C::new(0.0, -0.15);
            let st = kappa_eval(start, kappa, None, None).unwrap().state;
            let mu = ep.fit_mu((start, st)).unwrap();
            assert!((mu - mu_closed_form(kappa, ell)).abs() < 1e-3, "κ={kappa} ℓ={ell}: {mu}");
            assert_eq!(ep.mu_fit, Some(mu));
        }
    }
}
