//! Shooting solver for `-ψ'' + V(x) ψ = E ψ` along a sampled contour.
//!
//! The equation is integrated in the contour parameter as the first-order
//! system `dψ/ds = x' ψ_x`, `dψ_x/ds = x' (V - E) ψ`, so no coordinate is
//! ever deformed back to the real axis.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::contour::{PathPoint, SampledContour};
use crate::error::{Error, Result};
use crate::integrator::{integrate, Output, State, Stepping};
use crate::rectify::{self, EffectivePotential, PotentialSpec};

type C = Complex64;

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_W_TOL: f64 = 1e-9;
pub const REALITY_TOL: f64 = 1e-7;
pub const EQUIVALENCE_TOL: f64 = 1e-5;
/// Seeds whose WKB exponent is this close to purely oscillatory are rejected.
const MIN_DECAY_RATIO: f64 = 0.05;
const DEDUPE_TOL: f64 = 1e-7;

/// The potential term of a problem.
#[derive(Clone, Debug)]
pub enum Interaction {
    Plain(PotentialSpec),
    /// `U_eff(iz)` along the straight `z` path underlying `guide`, whose
    /// branch record selects the sheet at every point.
    Effective {
        potential: EffectivePotential,
        guide: Arc<SampledContour>,
    },
}

/// Boundary behaviour imposed at one end of the contour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Seed {
    /// Leading WKB branch, decaying outward.
    Wkb,
    /// Regular Frobenius solution `x^ν (1 + c x²)` near a pole at `x = 0`.
    Frobenius { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum End {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeedKind {
    DecayingLeft,
    DecayingRight,
}

#[derive(Clone, Debug)]
pub struct OdeProblem {
    pub contour: Arc<SampledContour>,
    pub interaction: Interaction,
    /// Total energy; zero for Sturmian problems.
    pub energy: C,
    pub left_seed: Seed,
    pub right_seed: Seed,
    /// Matching parameter; the midpoint of the range when `None`.
    pub matching_point: Option<f64>,
    pub stepping: Stepping,
}

impl OdeProblem {
    pub fn new(contour: Arc<SampledContour>, potential: PotentialSpec, energy: C) -> Self {
        OdeProblem {
            contour,
            interaction: Interaction::Plain(potential),
            energy,
            left_seed: Seed::Wkb,
            right_seed: Seed::Wkb,
            matching_point: None,
            stepping: Stepping::Adaptive { rtol: DEFAULT_RTOL },
        }
    }

    /// Zero-energy problem for `U_eff` along the `z` path that `image` was
    /// mapped from.
    pub fn rectified(image: Arc<SampledContour>, potential: EffectivePotential) -> Result<Self> {
        let line = image
            .base()
            .ok_or_else(|| Error::InvalidInput("rectified problems need an image contour as guide".into()))?
            .clone();
        if image.kappa() != Some(potential.kappa) {
            return Err(Error::InvalidInput("guide contour and effective potential use different κ".into()));
        }
        Ok(OdeProblem {
            contour: Arc::new(line),
            interaction: Interaction::Effective { potential, guide: image },
            energy: C::new(0.0, 0.0),
            left_seed: Seed::Wkb,
            right_seed: Seed::Wkb,
            matching_point: None,
            stepping: Stepping::Adaptive { rtol: DEFAULT_RTOL },
        })
    }

    pub fn with_energy(&self, energy: C) -> Self {
        OdeProblem { energy, ..self.clone() }
    }

    pub fn matching_s(&self) -> f64 {
        let (a, b) = self.contour.s_range();
        self.matching_point.unwrap_or(0.5 * (a + b))
    }

    /// Path point and `V(x(s)) - E` at `s`.
    pub fn local(&self, s: f64) -> Result<(PathPoint, C)> {
        let pt = self.contour.point_at(s)?;
        let v = match &self.interaction {
            Interaction::Plain(p) => p.eval(pt.x),
            Interaction::Effective { potential, guide } => {
                let st = guide.branch_state_near(s);
                potential.eval(pt.x, st.as_ref())?
            }
        };
        let q = v - self.energy;
        if !q.is_finite() {
            return Err(Error::Singular(pt.x));
        }
        Ok((pt, q))
    }

    fn rhs(&self, s: f64, y: &State) -> Result<State> {
        let (pt, q) = self.local(s)?;
        Ok([pt.dx * y[1], pt.dx * q * y[0]])
    }

    fn seed(&self, end: End) -> Result<(f64, State)> {
        let (a, b) = self.contour.s_range();
        let (s, kind) = match end {
            End::Left => (a, self.left_seed),
            End::Right => (b, self.right_seed),
        };
        let (pt, q) = self.local(s)?;
        let one = C::new(1.0, 0.0);
        match kind {
            Seed::Wkb => {
                let k = q.sqrt();
                let rate = k * pt.dx;
                if rate.norm() == 0.0 || rate.re.abs() < MIN_DECAY_RATIO * rate.norm() {
                    return Err(Error::NonDecayingSeed { s, indicator: rate.re.abs() / rate.norm().max(1e-300) });
                }
                let sigma = match end {
                    End::Right => rate.re.signum(),
                    End::Left => -rate.re.signum(),
                };
                Ok((s, [one, -sigma * k]))
            }
            Seed::Frobenius { exponent } => {
                let Interaction::Plain(p) = &self.interaction else {
                    return Err(Error::InvalidInput("Frobenius seeds need a plain potential".into()));
                };
                let x0 = pt.x;
                let c = (p.polynomial_at(C::new(0.0, 0.0)) - self.energy) / (4.0 * exponent + 2.0);
                let psi = one + c * x0 * x0;
                let dpsi = psi * (exponent / x0 + 2.0 * c * x0 / psi);
                Ok((s, [psi, dpsi]))
            }
        }
    }

    /// State `(ψ, ψ_x)` and log scale at every target, integrating from `end`.
    fn shoot(&self, end: End, targets: &[f64]) -> Result<Vec<Output>> {
        let (s0, y0) = self.seed(end)?;
        integrate(|s, y| self.rhs(s, y), s0, y0, targets, self.stepping)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolutionPoint {
    pub s: f64,
    /// `ψ(x(s))`
    pub u: C,
    /// `du/ds`
    pub du: C,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub points: Vec<SolutionPoint>,
    pub seed_kind: SeedKind,
    /// Natural log of the factor by which the unit-seeded solution was
    /// divided so that `max |u| = 1`.
    pub log_normalization: f64,
}

/// Integrates from `end` to the matching point, recording every contour
/// sample passed on the way.
pub fn integrate_along(p: &OdeProblem, end: End) -> Result<Solution> {
    integrate_until(p, end, p.matching_s())
}

/// As [`integrate_along`], stopping at `stop` instead.
pub fn integrate_until(p: &OdeProblem, end: End, stop: f64) -> Result<Solution> {
    let (a, b) = p.contour.s_range();
    if !(a..=b).contains(&stop) {
        return Err(Error::InvalidInput(format!("stop parameter {stop} outside [{a}, {b}]")));
    }
    // samples closer to `stop` than this would duplicate it
    let gap = 1e-9 * (b - a);
    let mut targets: Vec<f64> = match end {
        End::Left => p.contour.samples.iter().map(|q| q.s).filter(|&s| s > a && s < stop - gap).collect(),
        End::Right => p.contour.samples.iter().rev().map(|q| q.s).filter(|&s| s < b && s > stop + gap).collect(),
    };
    targets.push(stop);
    let outs = p.shoot(end, &targets)?;
    let (s0, y0) = p.seed(end)?;
    let mut raw = vec![Output { s: s0, y: y0, log_scale: 0.0 }];
    raw.extend(outs);
    if end == End::Right {
        raw.reverse();
    }
    let log_mag = |o: &Output| o.y[0].norm().ln() + o.log_scale;
    let top = raw.iter().map(log_mag).fold(f64::NEG_INFINITY, f64::max);
    let mut points = Vec::with_capacity(raw.len());
    for o in &raw {
        let (pt, _) = p.local(o.s)?;
        let f = (o.log_scale - top).exp();
        points.push(SolutionPoint { s: o.s, u: o.y[0] * f, du: pt.dx * o.y[1] * f });
    }
    Ok(Solution {
        points,
        seed_kind: if end == End::Left { SeedKind::DecayingLeft } else { SeedKind::DecayingRight },
        log_normalization: top,
    })
}

/// Wronskian of the two decaying solutions at the matching point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Matching {
    /// `ψ_L ψ_R,x - ψ_L,x ψ_R` for unit seeds, divided by `exp(log_scale)`.
    pub mantissa: C,
    pub log_scale: f64,
    /// Wronskian of the solutions scaled to unit norm `|(ψ, ψ_x)| = 1`;
    /// carries the phase of `W` and vanishes at the same energies.
    pub normalized: C,
}

impl Matching {
    /// `W(E)` itself, analytic in `E` (may overflow on long contours).
    pub fn value(&self) -> C {
        self.mantissa * self.log_scale.exp()
    }
}

pub fn matching_determinant(p: &OdeProblem, energy: C) -> Result<Matching> {
    let q = p.with_energy(energy);
    let sm = q.matching_s();
    let l = q.shoot(End::Left, &[sm])?[0];
    let r = q.shoot(End::Right, &[sm])?[0];
    let w = l.y[0] * r.y[1] - l.y[1] * r.y[0];
    let nl = (l.y[0].norm_sqr() + l.y[1].norm_sqr()).sqrt();
    let nr = (r.y[0].norm_sqr() + r.y[1].norm_sqr()).sqrt();
    Ok(Matching { mantissa: w, log_scale: l.log_scale + r.log_scale, normalized: w / (nl * nr) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenResult {
    pub energy: C,
    pub match_residual: f64,
    pub imag_part: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub real: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Spectrum {
    pub levels: Vec<EigenResult>,
    /// Brackets whose secant polish did not converge.
    pub unconverged: Vec<(f64, f64)>,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<C> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    pub window: (f64, f64),
    pub grid: usize,
    pub tol: f64,
}

impl ScanConfig {
    pub fn new(window: (f64, f64), grid: usize) -> Self {
        ScanConfig { window, grid, tol: DEFAULT_W_TOL }
    }
}

#[cfg(feature = "parallel")]
fn map_all<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_all<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Scans the real energy window for zeros of the matching determinant of
/// the problems produced by `build` and polishes each in complex `E`.
pub fn scan<B>(build: B, cfg: &ScanConfig) -> Result<Spectrum>
where
    B: Fn(C) -> Result<OdeProblem> + Sync + Send,
{
    let (lo, hi) = cfg.window;
    if !(hi > lo) || cfg.grid < 2 {
        return Ok(Spectrum::default());
    }
    let det = |e: C| -> Result<C> {
        let p = build(e)?;
        Ok(matching_determinant(&p, p.energy)?.normalized)
    };
    let n = cfg.grid;
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let values = map_all(&grid, |&e| det(C::new(e, 0.0))).into_iter().collect::<Result<Vec<C>>>()?;

    let mut brackets = Vec::new();
    for k in 0..n - 1 {
        let (a, b) = (values[k], values[k + 1]);
        if a.norm() == 0.0 {
            brackets.push((grid[k], grid[k + 1]));
            continue;
        }
        let d = b - a;
        let dn = d.norm();
        if dn == 0.0 {
            continue;
        }
        // project onto the local direction of W; a root shows up as the
        // segment crossing the origin
        let pa = (a * d.conj()).re;
        let pb = (b * d.conj()).re;
        let off = (a * d.conj()).im.abs() / dn;
        if pa <= 0.0 && pb > 0.0 && off <= dn {
            brackets.push((grid[k], grid[k + 1]));
        }
    }

    let polished = map_all(&brackets, |&(a, b)| polish(&det, a, b, cfg.tol));
    let mut levels = Vec::new();
    let mut unconverged = Vec::new();
    for (r, &br) in polished.into_iter().zip(&brackets) {
        match r? {
            Some(res) => levels.push(res),
            None => unconverged.push(br),
        }
    }
    levels.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
    let mut dedup: Vec<EigenResult> = Vec::with_capacity(levels.len());
    for l in levels {
        match dedup.last_mut() {
            Some(prev) if (prev.energy - l.energy).norm() < DEDUPE_TOL => {
                if l.match_residual < prev.match_residual {
                    *prev = l;
                }
            }
            _ => dedup.push(l),
        }
    }
    Ok(Spectrum { levels: dedup, unconverged })
}

fn polish<F>(det: &F, a: f64, b: f64, tol: f64) -> Result<Option<EigenResult>>
where
    F: Fn(C) -> Result<C>,
{
    let (fa, fb) = (det(C::new(a, 0.0))?, det(C::new(b, 0.0))?);
    let d = fb - fa;
    if d.norm() == 0.0 {
        return Ok(None);
    }
    // real reduction along the local direction of W
    let dir = d / d.norm();
    let g = |f: C| (f * dir.conj()).re;
    let (mut lo, mut hi) = (a, b);
    let (mut glo, mut ghi) = (g(fa), g(fb));
    let (mut flo, mut fhi) = (fa, fb);
    let mut iterations = 0;
    // Illinois steps narrow the bracket; W may be steep near a root when
    // the matching point sits in a forbidden region
    let mut side = 0i32;
    while hi - lo > 1e-6 * (1.0 + lo.abs()) && iterations < 100 {
        iterations += 1;
        let mut m = (lo * ghi - hi * glo) / (ghi - glo);
        if !(m > lo && m < hi) || iterations % 4 == 0 {
            m = 0.5 * (lo + hi);
        }
        let fm = det(C::new(m, 0.0))?;
        let gm = g(fm);
        if gm <= 0.0 {
            (lo, glo, flo) = (m, gm, fm);
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            (hi, ghi, fhi) = (m, gm, fm);
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
        if fm.norm() < tol {
            break;
        }
    }
    let width = (b - a).max(1e-12);
    let centre = 0.5 * (a + b);
    let (mut e0, mut e1) = (C::new(lo, 0.0), C::new(hi, 0.0));
    let (mut f0, mut f1) = (flo, fhi);
    if f0.norm() < f1.norm() {
        std::mem::swap(&mut e0, &mut e1);
        std::mem::swap(&mut f0, &mut f1);
    }
    if f1.norm() < tol && hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return Ok(Some(result(e1, f1, iterations, (a, b))));
    }
    for _ in 0..60 {
        iterations += 1;
        let df = f1 - f0;
        if df.norm() == 0.0 {
            break;
        }
        let e2 = e1 - f1 * (e1 - e0) / df;
        if !e2.is_finite() || (e2 - centre).norm() > 2.0 * width {
            return Ok(None);
        }
        let f2 = det(e2)?;
        let step = (e2 - e1).norm();
        (e0, f0, e1, f1) = (e1, f1, e2, f2);
        let settled = step < 1e-13 * (1.0 + e2.norm());
        if f2.norm() < tol || (settled && f2.norm() < 1e3 * tol) {
            return Ok(Some(result(e2, f2, iterations, (a, b))));
        }
        if settled {
            break;
        }
    }
    Ok(None)
}

fn result(e: C, f: C, iterations: usize, bracket: (f64, f64)) -> EigenResult {
    EigenResult {
        energy: e,
        match_residual: f.norm(),
        imag_part: e.im.abs(),
        iterations,
        bracket,
        real: e.im.abs() < REALITY_TOL,
    }
}

pub fn find_spectrum(p: &OdeProblem, cfg: &ScanConfig) -> Result<Spectrum> {
    scan(|e| Ok(p.with_energy(e)), cfg)
}

/// Families of zero-energy problems whose potential carries the spectral
/// parameter.
#[derive(Clone, Debug)]
pub enum SturmianFamily {
    /// The spiked oscillator after `ix = (iz)²`; the contour is the `z` path.
    SingleBranch { spiked: PotentialSpec },
    /// `U_eff` of the two-branch map; the contour is the image contour of the
    /// straight `z` path, whose branch record guides the evaluation.
    TwoBranch { effective: EffectivePotential },
}

pub fn sturmian_problem(family: &SturmianFamily, contour: &Arc<SampledContour>, energy: C) -> Result<OdeProblem> {
    match family {
        SturmianFamily::SingleBranch { spiked } => {
            let pot = rectify::single_branch_rectify(spiked, energy)?;
            Ok(OdeProblem::new(contour.clone(), pot, C::new(0.0, 0.0)))
        }
        SturmianFamily::TwoBranch { effective } => {
            OdeProblem::rectified(contour.clone(), effective.with_energy(energy))
        }
    }
}

pub fn sturmian_energies(family: &SturmianFamily, contour: &Arc<SampledContour>, cfg: &ScanConfig) -> Result<Spectrum> {
    sturmian_problem(family, contour, C::new(cfg.window.0, 0.0))?;
    scan(|e| sturmian_problem(family, contour, e), cfg)
}

/// Finite-difference weights for the first derivative at `x0` (Fornberg).
fn first_derivative_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Largest pointwise violation of `u'' = (x''/x') u' + x'² (V - E) u`, with
/// `u''` from five-point differences of `u'`, relative to `1 + |u|`.
pub fn residual(sol: &Solution, p: &OdeProblem) -> Result<f64> {
    let pts = &sol.points;
    let mut worst: f64 = 0.0;
    for i in 2..pts.len().saturating_sub(2) {
        let nodes: Vec<f64> = pts[i - 2..=i + 2].iter().map(|q| q.s).collect();
        let w = first_derivative_weights(&nodes, pts[i].s);
        let d2u: C = pts[i - 2..=i + 2].iter().zip(&w).map(|(q, &c)| q.du * c).sum();
        let (pt, q) = p.local(pts[i].s)?;
        let rhs = pt.d2x / pt.dx * pts[i].du + pt.dx * pt.dx * q * pts[i].u;
        worst = worst.max((d2u - rhs).norm() / (1.0 + pts[i].u.norm()));
    }
    Ok(worst)
}

/// Carries a solution `u(s) = ψ(x(s))` along an image contour over to
/// `φ(z(s)) = ψ / χ = ψ sqrt(β)` along its straight `z` path.
pub fn transport_to_rectified(sol: &Solution, image: &SampledContour) -> Result<Solution> {
    let kappa = image.kappa().ok_or_else(|| Error::InvalidInput("transport needs an image contour".into()))?;
    let base = image.base().expect("image contour has a base");
    let mut points = Vec::with_capacity(sol.points.len());
    for q in &sol.points {
        let zp = base.point_at(q.s)?;
        let st = image.branch_state_near(q.s);
        let (b, b1, _) = rectify::beta_derivatives(zp.x, kappa, st.as_ref())?;
        let root = 1.0 / rectify::liouville_factor(zp.x, kappa, st.as_ref())?;
        // du/ds = ψ_x x' = ψ_x z'/β
        let psi_x = q.du * b / zp.dx;
        let dphi_dz = psi_x / root + q.u * b1 / (2.0 * root);
        points.push(SolutionPoint { s: q.s, u: q.u * root, du: dphi_dz * zp.dx });
    }
    Ok(Solution { points, seed_kind: sol.seed_kind, log_normalization: sol.log_normalization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{build_line, build_u_contour, ContourSpec};

    fn ho_line(eps: f64) -> Arc<SampledContour> {
        Arc::new(build_line(&ContourSpec::line(eps, (-8.0, 8.0), 801)).unwrap())
    }

    fn spiked(alpha: f64) -> PotentialSpec {
        PotentialSpec::single_pole(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)], alpha)
    }

    #[test]
    fn stop_on_a_sample_is_not_duplicated() {
        let p = OdeProblem::new(ho_line(0.0), PotentialSpec::harmonic(), C::new(1.0, 0.0));
        // 0.4 is a sample of the 801-point grid up to rounding
        let sol = integrate_until(&p, End::Left, 0.4).unwrap();
        let min_gap = sol.points.windows(2).map(|w| w[1].s - w[0].s).fold(f64::INFINITY, f64::min);
        assert!(min_gap > 1e-3, "{min_gap:e}");
        assert!(residual(&sol, &p).unwrap() < 1e-6);
    }

    #[test]
    fn weights_reproduce_polynomials() {
        let nodes = [0.0, 0.1, 0.25, 0.3, 0.5];
        let w = first_derivative_weights(&nodes, 0.25);
        let d: f64 = nodes.iter().zip(&w).map(|(x, c)| x.powi(4) * c).sum();
        assert!((d - 4.0 * 0.25f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn harmonic_ground_state() {
        let p = OdeProblem::new(ho_line(0.0), PotentialSpec::harmonic(), C::new(1.0, 0.0));
        for end in [End::Left, End::Right] {
            let sol = integrate_along(&p, end).unwrap();
            let last = if end == End::Left { sol.points.last().unwrap() } else { &sol.points[0] };
            assert_eq!(last.s, 0.0);
            assert!((last.du / last.u).norm() < 1e-8);
            // shape exp(-x²/2)
            for q in sol.points.iter().filter(|q| q.s.abs() < 3.0) {
                assert!((q.u - (-0.5 * q.s * q.s).exp()).norm() < 1e-7, "{} {}", q.s, q.u);
            }
            assert!(residual(&sol, &p).unwrap() < 1e-6);
        }
    }

    #[test]
    fn analytic_ground_state_residual() {
        let c = Arc::new(build_line(&ContourSpec::line(0.0, (-8.0, 8.0), 3201)).unwrap());
        let p = OdeProblem::new(c.clone(), PotentialSpec::harmonic(), C::new(1.0, 0.0));
        let points = c
            .samples
            .iter()
            .map(|q| {
                let u = (-0.5 * q.s * q.s).exp();
                SolutionPoint { s: q.s, u: C::new(u, 0.0), du: C::new(-q.s * u, 0.0) }
            })
            .collect();
        let sol = Solution { points, seed_kind: SeedKind::DecayingLeft, log_normalization: 0.0 };
        assert!(residual(&sol, &p).unwrap() < 1e-8);
    }

    #[test]
    fn integrator_order_on_the_oscillator() {
        let base = OdeProblem::new(ho_line(0.0), PotentialSpec::harmonic(), C::new(1.0, 0.0));
        let err = |h: f64| {
            let mut p = base.clone();
            p.stepping = Stepping::Fixed(h);
            let sol = integrate_until(&p, End::Left, 0.0).unwrap();
            let q = sol.points.last().unwrap();
            (q.du / q.u).norm()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 / e2 > 12.0, "{e1:e} {e2:e}");
    }

    #[test]
    fn determinant_changes_sign_at_ground_state() {
        let p = OdeProblem::new(ho_line(0.0), PotentialSpec::harmonic(), C::new(0.0, 0.0));
        let a = matching_determinant(&p, C::new(0.9, 0.0)).unwrap().normalized;
        let b = matching_determinant(&p, C::new(1.1, 0.0)).unwrap().normalized;
        assert!(a.re * b.re < 0.0);
        let cfg = ScanConfig::new((1.2, 2.8), 17);
        assert!(find_spectrum(&p, &cfg).unwrap().levels.is_empty());
        let cfg = ScanConfig::new((2.9, 3.1), 5);
        let s = find_spectrum(&p, &cfg).unwrap();
        assert_eq!(s.levels.len(), 1);
        assert!((s.levels[0].energy - 3.0).norm() < 1e-8);
    }

    #[test]
    fn determinant_is_analytic() {
        let c = Arc::new(build_line(&ContourSpec::line(0.3, (-5.0, 5.0), 101)).unwrap());
        let p = OdeProblem::new(c, PotentialSpec::harmonic(), C::new(0.0, 0.0));
        let e = C::new(2.3, 0.2);
        let h = 1e-4;
        let w = |e: C| matching_determinant(&p, e).unwrap().value();
        let dx = (w(e + h) - w(e - h)) / (2.0 * h);
        let dy = (w(e + C::new(0.0, h)) - w(e - C::new(0.0, h))) / (2.0 * h);
        // ∂W/∂y = i ∂W/∂x
        assert!((dy - C::new(0.0, 1.0) * dx).norm() < 1e-5 * dx.norm(), "{dx} {dy}");
    }

    #[test]
    fn pt_oscillator_on_shifted_lines() {
        let mut previous: Option<Vec<C>> = None;
        for eps in [0.25, 0.35] {
            // ε² + x² along x = s - iε
            let pot = PotentialSpec::real_polynomial(&[eps * eps, 0.0, -1.0]);
            let p = OdeProblem::new(ho_line(eps), pot, C::new(0.0, 0.0));
            let s = find_spectrum(&p, &ScanConfig::new((0.0, 8.0), 81)).unwrap();
            let e: Vec<C> = s.energies();
            assert_eq!(e.len(), 4, "{e:?}");
            for (n, v) in e.iter().enumerate() {
                assert!((v - (2.0 * n as f64 + 1.0 + eps * eps)).norm() < 1e-6);
            }
            if let Some(prev) = &previous {
                for (a, b) in prev.iter().zip(&e) {
                    assert!(((b - a) - (0.35f64.powi(2) - 0.25f64.powi(2))).norm() < 1e-6);
                }
            }
            previous = Some(e);
        }
    }

    #[test]
    fn matching_point_and_grid_independence() {
        let pot = PotentialSpec::real_polynomial(&[0.0, -0.6, -1.0]);
        let c = Arc::new(build_line(&ContourSpec::line(0.0, (-8.0, 8.0), 801)).unwrap());
        let mut p = OdeProblem::new(c, pot, C::new(0.0, 0.0));
        let cfg = ScanConfig::new((0.0, 6.0), 31);
        let base = find_spectrum(&p, &cfg).unwrap().energies();
        assert_eq!(base.len(), 3);
        for sm in [-3.2, 3.2] {
            p.matching_point = Some(sm);
            let moved = find_spectrum(&p, &cfg).unwrap().energies();
            for (a, b) in base.iter().zip(&moved) {
                assert!((a - b).norm() < 1e-8, "{a} {b}");
            }
        }
        p.matching_point = None;
        let fine = find_spectrum(&p, &ScanConfig::new((0.0, 6.0), 61)).unwrap().energies();
        for e in &base {
            assert!(fine.iter().any(|f| (f - e).norm() < 1e-8));
        }
    }

    #[test]
    fn empty_window() {
        let p = OdeProblem::new(ho_line(0.0), PotentialSpec::harmonic(), C::new(0.0, 0.0));
        assert!(find_spectrum(&p, &ScanConfig::new((1.0, 1.0), 10)).unwrap().levels.is_empty());
    }

    #[test]
    fn oscillatory_seed_is_rejected() {
        // V - E < 0 real at the ends: pure oscillation on the real line
        let c = Arc::new(build_line(&ContourSpec::line(0.0, (-2.0, 2.0), 11)).unwrap());
        let p = OdeProblem::new(c, PotentialSpec::real_polynomial(&[]), C::new(1.0, 0.0));
        assert!(matches!(matching_determinant(&p, C::new(1.0, 0.0)), Err(Error::NonDecayingSeed { .. })));
    }

    #[test]
    fn u_contour_carries_growing_gaussian() {
        // along the U contour decay means exp(+x²/2); with the spike at the
        // origin both families x^(1/2 ± α) exp(x²/2) survive, at
        // E = -(4n + 2 ± 2α)
        let c = Arc::new(build_u_contour(&ContourSpec::u_shaped(0.0, 0.0, 1.0, (-6.0, 6.0), 4001)).unwrap());
        let p = OdeProblem::new(c.clone(), spiked(0.25), C::new(0.0, 0.0));
        let e = find_spectrum(&p, &ScanConfig::new((-7.0, -1.0), 61)).unwrap().energies();
        let expect = [-6.5, -5.5, -2.5, -1.5];
        assert_eq!(e.len(), 4, "{e:?}");
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
        let ground = p.with_energy(C::new(-2.5, 0.0));
        let sol = integrate_until(&ground, End::Left, 1.0).unwrap();
        // log x continuous along the path, cut upward
        let log = |x: C| {
            let mut arg = x.arg();
            if arg > std::f64::consts::FRAC_PI_2 {
                arg -= std::f64::consts::TAU;
            }
            C::new(x.norm().ln(), arg)
        };
        let exact = |x: C| (0.75 * log(x) + 0.5 * x * x).exp();
        let ratio: Vec<C> = sol
            .points
            .iter()
            .filter(|q| q.s > -4.0)
            .step_by(100)
            .map(|q| q.u / exact(c.point_at(q.s).unwrap().x))
            .collect();
        for r in &ratio {
            assert!((r / ratio[0] - 1.0).norm() < 1e-6, "{r}");
        }
        assert!(residual(&sol, &ground).unwrap() < 1e-6);
    }
}
