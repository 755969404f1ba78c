//! Complex integration paths.
//!
//! Every path is a map `s ↦ x(s)` from a real parameter interval into the
//! complex plane. A [`SampledContour`] keeps uniform (or adaptively refined)
//! samples for output and analysis, and can also be evaluated between
//! samples, which the adaptive ODE integrator relies on.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::descriptor::{Letter, Word};
use crate::error::{Error, Result};
use crate::rectify;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Largest allowed change of a tracked argument between consecutive
/// evaluations.
pub const MAX_PHASE_STEP: f64 = FRAC_PI_2;
/// Bisection depth limit for adaptive refinement of image contours.
pub const MAX_REFINE_DEPTH: u32 = 40;
/// Exclusion radius around the singular points `0` and `±1` of the map.
pub const EXCLUSION_RADIUS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContourKind {
    Line,
    Wedge,
    UShaped,
    TobogganSingle,
    TwoBranchImage,
}

/// Parameters for the contour builders. Fields a kind does not use are
/// ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Downward shift `ε`: the builders return `x(s) = y(s) - iε`.
    pub epsilon: f64,
    /// Constant tilt `ξ` of the right asymptote; the left one is its mirror
    /// image under `x ↦ -x̄`.
    pub xi: f64,
    /// Turning radius: the offset `δ` of the single-branch toboggan, and the
    /// radius of the U-turn.
    pub delta: f64,
    /// Parameter value at the centre of the winding segment.
    pub eta: f64,
    /// Number of full turns of the single-branch toboggan.
    pub winding: i64,
    /// Exponent of the two-branch map.
    pub kappa: f64,
    pub s_range: (f64, f64),
    pub sample_count: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            kind: ContourKind::Line,
            epsilon: 0.0,
            xi: 0.0,
            delta: 1.0,
            eta: 0.0,
            winding: 1,
            kappa: 2.4,
            s_range: (-8.0, 8.0),
            sample_count: 2001,
        }
    }
}

impl ContourSpec {
    pub fn line(epsilon: f64, s_range: (f64, f64), sample_count: usize) -> Self {
        ContourSpec { kind: ContourKind::Line, epsilon, s_range, sample_count, ..Default::default() }
    }

    pub fn wedge(epsilon: f64, xi: f64, s_range: (f64, f64), sample_count: usize) -> Self {
        ContourSpec { kind: ContourKind::Wedge, epsilon, xi, s_range, sample_count, ..Default::default() }
    }

    pub fn u_shaped(epsilon: f64, xi: f64, radius: f64, s_range: (f64, f64), sample_count: usize) -> Self {
        ContourSpec {
            kind: ContourKind::UShaped,
            epsilon,
            xi,
            delta: radius,
            s_range,
            sample_count,
            ..Default::default()
        }
    }

    pub fn toboggan(winding: i64, delta: f64, eta: f64, xi: f64, half_width: f64, sample_count: usize) -> Self {
        ContourSpec {
            kind: ContourKind::TobogganSingle,
            winding,
            delta,
            eta,
            xi,
            s_range: (eta - half_width, eta + half_width),
            sample_count,
            ..Default::default()
        }
    }
}

/// One point of a path with its first two parameter derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub x: C,
    pub dx: C,
    pub d2x: C,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub x: C,
    pub dx: C,
    pub d2x: C,
}

/// Continuously tracked arguments of `P = 1 - z²` and `Q = P^κ - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchState {
    pub arg_p: f64,
    pub arg_q: f64,
}

impl BranchState {
    /// Principal arguments at `z`; on the negative imaginary axis both are 0.
    pub fn fresh(z: C, kappa: f64) -> Result<BranchState> {
        Ok(kappa_eval(z, kappa, None, None)?.state)
    }

    pub fn mirrored(self) -> BranchState {
        BranchState { arg_p: -self.arg_p, arg_q: -self.arg_q }
    }
}

#[derive(Clone, Debug)]
enum Path {
    Line { eps: f64 },
    Wedge { eps: f64, xi: f64, width: f64 },
    Polar(PolarPath),
    Image { kappa: f64, base: Box<SampledContour> },
    Tabulated,
}

/// `x(s) = r(t) e^{iθ(t)} - iε` with `t = s - η`: exact rays for `|t| ≥ w`,
/// joined by a C⁴ turn at radius between `ρ` and `w = 3ρ`.
#[derive(Clone, Copy, Debug)]
struct PolarPath {
    eta: f64,
    eps: f64,
    radius: f64,
    theta_mid: f64,
    sweep: f64,
}

impl PolarPath {
    fn width(&self) -> f64 {
        3.0 * self.radius
    }

    fn eval(&self, s: f64) -> PathPoint {
        let t = s - self.eta;
        let w = self.width();
        let rho2 = self.radius * self.radius;
        let tau = t / w;
        let (g, g1, g2) = if tau.abs() < 1.0 {
            let a = 1.0 - tau * tau;
            let a3 = a * a * a;
            (a3 * a * a, -10.0 * tau / w * a3 * a, (-10.0 * a3 * a + 80.0 * tau * tau * a3) / (w * w))
        } else {
            (0.0, 0.0, 0.0)
        };
        let h = t * t + rho2 * g;
        let h1 = 2.0 * t + rho2 * g1;
        let h2 = 2.0 + rho2 * g2;
        let r = h.sqrt();
        let r1 = h1 / (2.0 * r);
        let r2 = (0.5 * h2 - r1 * r1) / r;

        let (sv, s1, s2) = smooth_sign(tau);
        let half = 0.5 * self.sweep;
        let theta = self.theta_mid + half * sv;
        let th1 = half * s1 / w;
        let th2 = half * s2 / (w * w);

        let e = C::from_polar(1.0, theta);
        PathPoint {
            x: r * e - I * self.eps,
            dx: C::new(r1, r * th1) * e,
            d2x: C::new(r2 - r * th1 * th1, 2.0 * r1 * th1 + r * th2) * e,
        }
    }
}

/// Odd C⁴ step from -1 to 1 on `[-1, 1]`, constant outside; returns the value
/// and its first two derivatives.
fn smooth_sign(t: f64) -> (f64, f64, f64) {
    if t <= -1.0 {
        return (-1.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u = 0.5 * (t + 1.0);
    let v = 1.0 - u;
    let u4 = u * u * u * u;
    let q = u4 * u * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + 70.0 * u))));
    let q1 = 630.0 * u4 * v * v * v * v;
    let q2 = 2520.0 * u * u * u * v * v * v * (1.0 - 2.0 * u);
    (2.0 * q - 1.0, q1, 0.5 * q2)
}

/// A sampled complex path together with the means to evaluate it between
/// samples.
#[derive(Clone, Debug)]
pub struct SampledContour {
    pub kind: ContourKind,
    pub samples: Vec<Sample>,
    /// Per-sample branch record, present for images of the two-branch map.
    pub branch: Option<Vec<BranchState>>,
    path: Path,
}

impl SampledContour {
    pub fn s_range(&self) -> (f64, f64) {
        (self.samples[0].s, self.samples[self.samples.len() - 1].s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = C> + '_ {
        self.samples.iter().map(|p| p.x)
    }

    /// Exponent of the two-branch map, for image contours.
    pub fn kappa(&self) -> Option<f64> {
        match &self.path {
            Path::Image { kappa, .. } => Some(*kappa),
            _ => None,
        }
    }

    /// The straight (or tabulated) `z` path an image contour was mapped from.
    pub fn base(&self) -> Option<&SampledContour> {
        match &self.path {
            Path::Image { base, .. } => Some(base),
            _ => None,
        }
    }

    /// Index of the last sample with `samples[i].s <= s`, clamped.
    fn interval(&self, s: f64) -> usize {
        let idx = self.samples.partition_point(|p| p.s <= s);
        idx.saturating_sub(1).min(self.samples.len().saturating_sub(2))
    }

    /// Branch record of the sample nearest to `s` from below.
    pub fn branch_state_near(&self, s: f64) -> Option<BranchState> {
        self.branch.as_ref().map(|b| b[self.interval(s)])
    }

    /// Evaluates the path at any `s` in its range.
    pub fn point_at(&self, s: f64) -> Result<PathPoint> {
        match &self.path {
            Path::Line { eps } => Ok(PathPoint { x: C::new(s, -eps), dx: C::new(1.0, 0.0), d2x: C::new(0.0, 0.0) }),
            Path::Wedge { eps, xi, width } => Ok(wedge_point(s, *eps, *xi, *width)),
            Path::Polar(p) => Ok(p.eval(s)),
            Path::Image { kappa, base } => {
                let zp = base.point_at(s)?;
                let i = self.interval(s);
                let state = self.branch.as_ref().expect("image contour carries branch states")[i];
                let ev = kappa_eval(zp.x, *kappa, Some(&state), None)?;
                let (b, b1, _) = rectify::beta_derivatives_from(&ev, zp.x, *kappa)?;
                Ok(PathPoint { x: ev.x, dx: zp.dx / b, d2x: zp.d2x / b - b1 / (b * b) * zp.dx * zp.dx })
            }
            Path::Tabulated => Ok(self.hermite(s)),
        }
    }

    fn hermite(&self, s: f64) -> PathPoint {
        let i = self.interval(s);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let h = b.s - a.s;
        let t = (s - a.s) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let e00 = (12.0 * t - 6.0) / (h * h);
        let e10 = (6.0 * t - 4.0) / h;
        let e01 = (-12.0 * t + 6.0) / (h * h);
        let e11 = (6.0 * t - 2.0) / h;
        PathPoint {
            x: a.x * h00 + a.dx * (h * h10) + b.x * h01 + b.dx * (h * h11),
            dx: a.x * d00 + a.dx * d10 + b.x * d01 + b.dx * d11,
            d2x: a.x * e00 + a.dx * e10 + b.x * e01 + b.dx * e11,
        }
    }

    /// A contour known only through its samples `(s, x, dx/ds)`; values in
    /// between come from cubic Hermite interpolation.
    pub fn tabulated(points: Vec<(f64, C, C)>) -> Result<SampledContour> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a tabulated contour needs at least 2 samples".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("contour parameter must be strictly increasing".into()));
        }
        let mut c = SampledContour {
            kind: ContourKind::Line,
            samples: points.iter().map(|&(s, x, dx)| Sample { s, x, dx, d2x: C::new(0.0, 0.0) }).collect(),
            branch: None,
            path: Path::Tabulated,
        };
        let n = c.samples.len();
        let mut d2 = vec![C::new(0.0, 0.0); n];
        for (i, d) in d2.iter_mut().enumerate() {
            let left = (i > 0).then(|| c.hermite_d2_end(i - 1, 1.0));
            let right = (i + 1 < n).then(|| c.hermite_d2_end(i, 0.0));
            *d = match (left, right) {
                (Some(l), Some(r)) => 0.5 * (l + r),
                (Some(v), None) | (None, Some(v)) => v,
                (None, None) => unreachable!(),
            };
        }
        for (p, d) in c.samples.iter_mut().zip(d2) {
            p.d2x = d;
        }
        Ok(c)
    }

    fn hermite_d2_end(&self, i: usize, t: f64) -> C {
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let h = b.s - a.s;
        a.x * ((12.0 * t - 6.0) / (h * h))
            + a.dx * ((6.0 * t - 4.0) / h)
            + b.x * ((-12.0 * t + 6.0) / (h * h))
            + b.dx * ((6.0 * t - 2.0) / h)
    }

    /// Checks the sampling invariants: increasing parameter, bounded steps
    /// and, when present, bounded branch-phase steps.
    pub fn check_continuity(&self, max_step: f64) -> Result<()> {
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].s <= w[0].s {
                return Err(Error::InvalidInput(format!("non-increasing parameter at sample {i}")));
            }
            if (w[1].x - w[0].x).norm() > max_step {
                return Err(Error::InvalidInput(format!(
                    "step {} exceeds bound at sample {i}",
                    (w[1].x - w[0].x).norm()
                )));
            }
            if let Some(b) = &self.branch {
                let dp = (b[i + 1].arg_p - b[i].arg_p).abs();
                let dq = (b[i + 1].arg_q - b[i].arg_q).abs();
                if dp.max(dq) >= MAX_PHASE_STEP {
                    return Err(Error::BranchStep { at: w[1].x, step: dp.max(dq) });
                }
            }
        }
        Ok(())
    }
}

fn wedge_point(s: f64, eps: f64, xi: f64, width: f64) -> PathPoint {
    // x = s e^{iφ(s)} - iε with φ = ξ s / sqrt(s² + w²), an odd tilt
    let q = (s * s + width * width).sqrt();
    let phi = xi * s / q;
    let phi1 = xi * width * width / (q * q * q);
    let phi2 = -3.0 * xi * width * width * s / (q * q * q * q * q);
    let e = C::from_polar(1.0, phi);
    let dx = e * (1.0 + I * s * phi1);
    let d2x = e * (I * phi1 * (1.0 + I * s * phi1) + I * (phi1 + s * phi2));
    PathPoint { x: s * e - I * eps, dx, d2x }
}

fn uniform_grid(spec: &ContourSpec) -> Result<Vec<f64>> {
    let (a, b) = spec.s_range;
    if spec.sample_count < 2 {
        return Err(Error::InvalidInput(format!("sample count must be >= 2, got {}", spec.sample_count)));
    }
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("invalid parameter range [{a}, {b}]")));
    }
    let n = spec.sample_count;
    Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

fn sampled(kind: ContourKind, path: Path, grid: &[f64]) -> Result<SampledContour> {
    let mut c = SampledContour { kind, samples: Vec::with_capacity(grid.len()), branch: None, path };
    for &s in grid {
        let p = c.point_at(s)?;
        c.samples.push(Sample { s, x: p.x, dx: p.dx, d2x: p.d2x });
    }
    Ok(c)
}

fn expect_kind(spec: &ContourSpec, kind: ContourKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidInput(format!("expected a {kind:?} spec, got {:?}", spec.kind)));
    }
    Ok(())
}

/// `x(s) = s - iε`.
pub fn build_line(spec: &ContourSpec) -> Result<SampledContour> {
    expect_kind(spec, ContourKind::Line)?;
    let grid = uniform_grid(spec)?;
    sampled(ContourKind::Line, Path::Line { eps: spec.epsilon }, &grid)
}

/// Smooth deformation of the real line whose asymptotes are tilted by `±ξ`
/// (`x → |s| e^{iξ}` on the right, `-|s| e^{-iξ}` on the left).
pub fn build_wedge(spec: &ContourSpec) -> Result<SampledContour> {
    expect_kind(spec, ContourKind::Wedge)?;
    if spec.xi.abs() >= PI / 4.0 {
        return Err(Error::InvalidInput(format!("tilt {} lies outside (-π/4, π/4)", spec.xi)));
    }
    let grid = uniform_grid(spec)?;
    sampled(ContourKind::Wedge, Path::Wedge { eps: spec.epsilon, xi: spec.xi, width: 1.0 }, &grid)
}

/// U-shaped path: rays at `3π/8 + ξ` (right) and `-11π/8 - ξ` (left),
/// joined below the origin at radius `spec.delta`, then shifted by `-iε`.
pub fn build_u_contour(spec: &ContourSpec) -> Result<SampledContour> {
    expect_kind(spec, ContourKind::UShaped)?;
    if spec.xi.abs() >= PI / 8.0 {
        return Err(Error::InvalidInput(format!("tilt {} lies outside (-π/8, π/8)", spec.xi)));
    }
    if !(spec.delta > 0.0) {
        return Err(Error::InvalidInput("U-turn radius must be positive".into()));
    }
    let right = 3.0 * PI / 8.0 + spec.xi;
    let left = -11.0 * PI / 8.0 - spec.xi;
    let path = PolarPath {
        eta: 0.0,
        eps: spec.epsilon,
        radius: spec.delta,
        theta_mid: 0.5 * (left + right),
        sweep: right - left,
    };
    let grid = uniform_grid(spec)?;
    sampled(ContourKind::UShaped, Path::Polar(path), &grid)
}

/// Single-branch-point toboggan: rays leaving at `5π/8 + ξ` on the right
/// after `N` full counterclockwise turns around `x = 0` at radius `~δ`; the
/// left ray is the PT mirror (`-13π/8 - ξ` for `N = 1`).
pub fn build_toboggan_single(spec: &ContourSpec) -> Result<SampledContour> {
    expect_kind(spec, ContourKind::TobogganSingle)?;
    if !(spec.delta > 0.0) {
        return Err(Error::InvalidInput(format!("offset δ must be positive, got {}", spec.delta)));
    }
    if spec.winding < 1 {
        return Err(Error::InvalidInput(format!("winding number must be >= 1, got {}", spec.winding)));
    }
    if spec.xi.abs() >= PI / 8.0 {
        return Err(Error::InvalidInput(format!("tilt {} lies outside (-π/8, π/8)", spec.xi)));
    }
    let right = 5.0 * PI / 8.0 + spec.xi;
    let sweep = TAU * spec.winding as f64 + PI / 4.0 + 2.0 * spec.xi;
    let left = right - sweep;
    let path = PolarPath { eta: spec.eta, eps: 0.0, radius: spec.delta, theta_mid: 0.5 * (left + right), sweep };
    let grid = uniform_grid(spec)?;
    sampled(ContourKind::TobogganSingle, Path::Polar(path), &grid)
}

/// Builds any non-image kind from its spec.
pub fn build(spec: &ContourSpec) -> Result<SampledContour> {
    match spec.kind {
        ContourKind::Line => build_line(spec),
        ContourKind::Wedge => build_wedge(spec),
        ContourKind::UShaped => build_u_contour(spec),
        ContourKind::TobogganSingle => build_toboggan_single(spec),
        ContourKind::TwoBranchImage => {
            let line = build_line(&ContourSpec { kind: ContourKind::Line, ..spec.clone() })?;
            image_contour(&line, spec.kappa)
        }
    }
}

// ---------------------------------------------------------------------------
// two-branch map x = -i sqrt((1 - z²)^κ - 1)

/// Intermediate quantities of one evaluation of the two-branch map.
#[derive(Clone, Copy, Debug)]
pub struct KappaEval {
    /// `P = 1 - z²`
    pub p: C,
    /// Tracked `log P`.
    pub log_p: C,
    /// `w = P^κ`
    pub w: C,
    /// `Q = w - 1`
    pub q: C,
    /// Tracked `sqrt(Q)`.
    pub sqrt_q: C,
    /// `x = -i sqrt(Q)`
    pub x: C,
    pub state: BranchState,
}

fn unwrap_near(principal: f64, reference: f64) -> f64 {
    principal + TAU * ((reference - principal) / TAU).round()
}

/// `e^u - 1` without cancellation for small `u`.
pub(crate) fn cexpm1(u: C) -> C {
    let (a, b) = (u.re, u.im);
    let em1 = a.exp_m1();
    let half = (0.5 * b).sin();
    C::new(em1 * b.cos() - 2.0 * half * half, a.exp() * b.sin())
}

/// Evaluates the map with branch tracking. With `prev = None` the principal
/// arguments are used. With `max_step = Some(m)` a tracked argument moving
/// by more than `m` is reported as [`Error::BranchStep`].
pub fn kappa_eval(z: C, kappa: f64, prev: Option<&BranchState>, max_step: Option<f64>) -> Result<KappaEval> {
    if (z - 1.0).norm() < EXCLUSION_RADIUS || (z + 1.0).norm() < EXCLUSION_RADIUS {
        return Err(Error::Singular(z));
    }
    let z2 = z * z;
    let p = C::new(1.0 - z2.re, -z2.im);
    // log(1 - z²) computed as log1p(-z²)
    let u = -z2;
    let modulus = if u.norm() < 0.5 { 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p() } else { p.norm().ln() };
    let principal_p = p.im.atan2(p.re);
    let arg_p = match prev {
        Some(st) => {
            let a = unwrap_near(principal_p, st.arg_p);
            check_step(a - st.arg_p, z, max_step)?;
            a
        }
        None => principal_p,
    };
    let log_p = C::new(modulus, arg_p);
    let q = cexpm1(kappa * log_p);
    if q.norm() == 0.0 {
        return Err(Error::Singular(z));
    }
    let w = q + 1.0;
    let principal_q = q.im.atan2(q.re);
    let arg_q = match prev {
        Some(st) => {
            let a = unwrap_near(principal_q, st.arg_q);
            check_step(a - st.arg_q, z, max_step)?;
            a
        }
        None => principal_q,
    };
    let sqrt_q = C::from_polar(q.norm().sqrt(), 0.5 * arg_q);
    Ok(KappaEval { p, log_p, w, q, sqrt_q, x: -I * sqrt_q, state: BranchState { arg_p, arg_q } })
}

fn check_step(step: f64, z: C, max_step: Option<f64>) -> Result<()> {
    match max_step {
        Some(m) if step.abs() > m => Err(Error::BranchStep { at: z, step }),
        _ => Ok(()),
    }
}

/// One step of the two-branch map `x = -i sqrt((1 - z²)^κ - 1)`, continuing
/// the branch recorded in `state` (or starting from principal values).
pub fn map_two_branch(z: C, kappa: f64, state: Option<&BranchState>) -> Result<(C, BranchState)> {
    let ev = kappa_eval(z, kappa, state, state.map(|_| MAX_PHASE_STEP))?;
    Ok((ev.x, ev.state))
}

/// Follows the map along `z(t)`, `t ∈ [t0, t1]`, bisecting whenever a branch
/// step is too large or the image jumps too far. Returns the accepted
/// points, excluding `t0`.
fn track_segment<F>(
    z_of: F,
    t0: f64,
    t1: f64,
    kappa: f64,
    start: (C, BranchState),
) -> Result<Vec<(f64, C, BranchState)>>
where
    F: Fn(f64) -> Result<C>,
{
    let mut out = Vec::new();
    let (mut x_prev, mut st_prev) = start;
    let mut t_prev = t0;
    let span = (t1 - t0).abs();
    // pending targets, nearest last
    let mut pending: Vec<f64> = vec![t1];
    while let Some(&t) = pending.last() {
        let z = z_of(t)?;
        let accepted = match kappa_eval(z, kappa, Some(&st_prev), Some(MAX_PHASE_STEP)) {
            Ok(ev) => {
                let jump = (ev.x - x_prev).norm();
                (jump <= continuity_bound(x_prev)).then_some(ev)
            }
            Err(Error::BranchStep { .. }) => None,
            Err(e) => return Err(e),
        };
        match accepted {
            Some(ev) => {
                pending.pop();
                out.push((t, ev.x, ev.state));
                x_prev = ev.x;
                st_prev = ev.state;
                t_prev = t;
            }
            None => {
                let depth = (span / (t - t_prev).abs()).log2().ceil() as u32;
                if depth >= MAX_REFINE_DEPTH {
                    return Err(Error::RefinementDepth { s: t, depth });
                }
                pending.push(0.5 * (t_prev + t));
            }
        }
    }
    Ok(out)
}

/// Step bound of the refined image: a fraction of the distance to the
/// nearer of `±1`, capped relative to `|x|`.
fn continuity_bound(x: C) -> f64 {
    let d = (x - 1.0).norm().min((x + 1.0).norm());
    // floor: closer than this the map cannot resolve the distance anyway
    (0.5 * d.min(0.5 * (1.0 + x.norm()))).max(1e-10 * (1.0 + x.norm()))
}

/// Maps a `z` path through the two-branch map. Tracking starts from the
/// principal branch on the negative imaginary axis at the height of the
/// sample closest to it and is continued in both directions along the path.
/// Paths that reach the axis only above the real line are anchored by an arc
/// through the lower half plane instead.
pub fn image_contour(base: &SampledContour, kappa: f64) -> Result<SampledContour> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidInput(format!("map exponent must be positive, got {kappa}")));
    }
    let anchor = base
        .samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.x.re.abs().total_cmp(&b.1.x.re.abs()))
        .map(|(i, _)| i)
        .expect("nonempty contour");
    let za = base.samples[anchor].x;
    let start = if za.im < 0.0 {
        // horizontal approach from the axis to the anchor sample
        let z_axis = C::new(0.0, za.im);
        let ev0 = kappa_eval(z_axis, kappa, None, None)?;
        let approach = track_segment(|t| Ok(z_axis + (za - z_axis) * t), 0.0, 1.0, kappa, (ev0.x, ev0.state))?;
        approach.last().map(|&(_, x, st)| (x, st)).unwrap_or((ev0.x, ev0.state))
    } else {
        let st = state_by_arc(za, kappa)?;
        (kappa_eval(za, kappa, Some(&st), None)?.x, st)
    };

    let s_anchor = base.samples[anchor].s;
    let z_at = |s: f64| base.point_at(s).map(|p| p.x);
    let mut forward = vec![(s_anchor, start.0, start.1)];
    for w in base.samples[anchor..].windows(2) {
        let last = *forward.last().unwrap();
        forward.extend(track_segment(z_at, w[0].s, w[1].s, kappa, (last.1, last.2))?);
    }
    let mut backward: Vec<(f64, C, BranchState)> = Vec::new();
    let mut last = (s_anchor, start.0, start.1);
    for w in base.samples[..=anchor].windows(2).rev() {
        let seg = track_segment(z_at, w[1].s, w[0].s, kappa, (last.1, last.2))?;
        if let Some(&l) = seg.last() {
            last = l;
        }
        backward.extend(seg);
    }
    backward.reverse();
    backward.extend(forward);

    let mut image = SampledContour {
        kind: ContourKind::TwoBranchImage,
        samples: Vec::with_capacity(backward.len()),
        branch: Some(backward.iter().map(|p| p.2).collect()),
        path: Path::Image { kappa, base: Box::new(base.clone()) },
    };
    for &(s, _, st) in &backward {
        let zp = base.point_at(s)?;
        let ev = kappa_eval(zp.x, kappa, Some(&st), None)?;
        let (b, b1, _) = rectify::beta_derivatives_from(&ev, zp.x, kappa)?;
        image.samples.push(Sample { s, x: ev.x, dx: zp.dx / b, d2x: zp.d2x / b - b1 / (b * b) * zp.dx * zp.dx });
    }
    Ok(image)
}

/// Tracks the branch record from the negative imaginary axis at `-i|z|`
/// along the arc of radius `|z|` through the lower half plane to `z`.
pub fn state_by_arc(z: C, kappa: f64) -> Result<BranchState> {
    let r = z.norm();
    let start = C::new(0.0, -r);
    let ev0 = kappa_eval(start, kappa, None, None)?;
    let target = z.arg();
    let target = if target > FRAC_PI_2 { target - TAU } else { target };
    let pts = track_segment(
        |t| Ok(C::from_polar(r, -FRAC_PI_2 + (target + FRAC_PI_2) * t)),
        0.0,
        1.0,
        kappa,
        (ev0.x, ev0.state),
    )?;
    Ok(pts.last().map(|p| p.2).unwrap_or(ev0.state))
}

/// Tracks the branch record from `from` (with `state`) along the straight
/// segment to `to`.
pub fn state_along_segment(from: C, state: BranchState, to: C, kappa: f64) -> Result<BranchState> {
    let ev = kappa_eval(from, kappa, Some(&state), None)?;
    let pts = track_segment(|t| Ok(from + (to - from) * t), 0.0, 1.0, kappa, (ev.x, ev.state))?;
    Ok(pts.last().map(|p| p.2).unwrap_or(state))
}

// ---------------------------------------------------------------------------
// winding

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindingProfile {
    /// Signed turns around the left branch point.
    pub turns_left: f64,
    /// Signed turns around the right branch point.
    pub turns_right: f64,
    /// Descriptor read off by nearest-branch-point segmentation.
    pub inferred_word: Word,
}

/// Total continuous phase change of `x(s) - centre`, in turns.
pub fn turns_around(points: &[C], centre: C) -> f64 {
    points.windows(2).map(|w| ((w[1] - centre) / (w[0] - centre)).arg()).sum::<f64>() / TAU
}

pub fn winding_profile(c: &SampledContour, branch_points: (C, C)) -> WindingProfile {
    let pts: Vec<C> = c.points().collect();
    winding_profile_of(&pts, branch_points)
}

pub fn winding_profile_of(pts: &[C], (left, right): (C, C)) -> WindingProfile {
    let mut letters = Vec::new();
    // current run: which point is nearest, accumulated phase, letters emitted
    let mut run: Option<(bool, f64, i64)> = None;
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let near_right = (mid - right).norm() < (mid - left).norm();
        let centre = if near_right { right } else { left };
        let dphi = ((w[1] - centre) / (w[0] - centre)).arg();
        let (side, acc, emitted) = match run {
            Some((side, acc, emitted)) if side == near_right => (side, acc + dphi, emitted),
            _ => (near_right, dphi, 0),
        };
        let full = (acc / TAU + 1e-9 * acc.signum()).trunc() as i64;
        let mut emitted = emitted;
        while emitted.abs() < full.abs() {
            let step = full.signum();
            emitted += step;
            let base = if side { Letter::R } else { Letter::L };
            letters.push(if step > 0 { base } else { base.inverse() });
        }
        run = Some((side, acc, emitted));
    }
    WindingProfile {
        turns_left: turns_around(pts, left),
        turns_right: turns_around(pts, right),
        inferred_word: Word(letters),
    }
}

pub const BRANCH_POINTS: (C, C) = (C::new(-1.0, 0.0), C::new(1.0, 0.0));
