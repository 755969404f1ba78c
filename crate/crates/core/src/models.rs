//! Ready-made problems for the model families exposed by the command line
//! and the browser demo.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::contour::{build_line, build_toboggan_single, build_wedge, image_contour, ContourSpec, SampledContour};
use crate::error::{Error, Result};
use crate::rectify::{effective_potential, EffectivePotential, PotentialSpec, RectificationMap};
use crate::schrod::{OdeProblem, Seed, SturmianFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// `x² + ε²` on the line `x = s - iε`; levels `2n + 1 + ε²`.
    PtOscillator,
    /// The oscillator with the centrifugal spike `(α² - 1/4)/x²`.
    SpikedOscillator,
    /// The spiked oscillator on a contour that winds once around `x = 0`.
    TobogganN1,
    /// A polynomial potential on the image of a straight line under the
    /// two-branch map.
    TwoBranch,
}

impl Model {
    /// Energy window containing the first few levels with default parameters.
    pub fn default_window(self) -> (f64, f64) {
        match self {
            Model::PtOscillator => (0.0, 8.0),
            Model::SpikedOscillator => (0.0, 12.0),
            Model::TobogganN1 => (-12.0, -0.5),
            Model::TwoBranch => (0.0, 13.0),
        }
    }
}

/// Ten scan points per unit of energy.
pub fn default_grid(window: (f64, f64)) -> usize {
    ((window.1 - window.0).abs() * 10.0).ceil() as usize + 1
}

const LINE_HALF_WIDTH: f64 = 8.0;
const LINE_SAMPLES: usize = 801;
/// Left end of the half line used for the spiked oscillator at `ε = 0`.
const HALF_LINE_START: f64 = 1e-3;
const HALF_LINE_END: f64 = 7.0;

pub fn pt_oscillator(eps: f64) -> Result<OdeProblem> {
    let c = build_line(&ContourSpec::line(eps, (-LINE_HALF_WIDTH, LINE_HALF_WIDTH), LINE_SAMPLES))?;
    let pot = PotentialSpec::real_polynomial(&[eps * eps, 0.0, -1.0]);
    Ok(OdeProblem::new(Arc::new(c), pot, C::new(0.0, 0.0)))
}

/// At `ε = 0` the line would hit the spike, so the problem is posed on the
/// half line with the regular Frobenius solution at the origin.
pub fn spiked_oscillator(alpha: f64, eps: f64) -> Result<OdeProblem> {
    let pot = PotentialSpec::single_pole(real_core(&[eps * eps, 0.0, -1.0]), alpha);
    if eps == 0.0 {
        let c = build_line(&ContourSpec::line(0.0, (HALF_LINE_START, HALF_LINE_END), LINE_SAMPLES))?;
        let mut p = OdeProblem::new(Arc::new(c), pot, C::new(0.0, 0.0));
        p.left_seed = Seed::Frobenius { exponent: 0.5 + alpha.abs() };
        return Ok(p);
    }
    let c = build_line(&ContourSpec::line(eps, (-LINE_HALF_WIDTH, LINE_HALF_WIDTH), LINE_SAMPLES))?;
    Ok(OdeProblem::new(Arc::new(c), pot, C::new(0.0, 0.0)))
}

pub fn spiked_potential(alpha: f64) -> PotentialSpec {
    PotentialSpec::single_pole(real_core(&[0.0, 0.0, -1.0]), alpha)
}

/// Single-branch toboggan with one turn around the spike.
pub fn toboggan_n1(alpha: f64, delta: f64, xi: f64) -> Result<OdeProblem> {
    let c = build_toboggan_single(&ContourSpec::toboggan(1, delta, 0.0, xi, 7.0, 2001))?;
    Ok(OdeProblem::new(Arc::new(c), spiked_potential(alpha), C::new(0.0, 0.0)))
}

/// The zero-energy sextic partner of [`toboggan_n1`] with the near-straight
/// path it is solved on.
pub fn sextic_partner(alpha: f64) -> Result<(SturmianFamily, Arc<SampledContour>)> {
    let c = build_wedge(&ContourSpec::wedge(0.3, PI / 16.0, (-2.6, 2.6), 1001))?;
    Ok((SturmianFamily::SingleBranch { spiked: spiked_potential(alpha) }, Arc::new(c)))
}

/// Both sides of a two-branch equivalence pair.
#[derive(Clone, Debug)]
pub struct TwoBranchSetup {
    pub image: Arc<SampledContour>,
    pub potential: PotentialSpec,
    pub effective: EffectivePotential,
}

impl TwoBranchSetup {
    /// `core` lists the coefficients of `(ix)^k`; `ell` sets the strength of
    /// the poles at `±1`. The straight line is `z = s - iε`, `|s| ≤ half_width`.
    pub fn new(kappa: f64, eps: f64, core: &[f64], ell: f64, half_width: f64, samples: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput("the straight line must pass below the branch points (eps > 0)".into()));
        }
        let line = build_line(&ContourSpec::line(eps, (-half_width, half_width), samples))?;
        let image = Arc::new(image_contour(&line, kappa)?);
        let potential = PotentialSpec::two_pole(real_core(core), ell);
        let effective = effective_potential(&potential, C::new(0.0, 0.0), RectificationMap::TwoBranchKappa { kappa })?;
        Ok(TwoBranchSetup { image, potential, effective })
    }

    /// The quartic test case used for the two-branch equivalence check.
    pub fn quartic() -> Result<Self> {
        Self::new(2.4, 0.05, &[0.0, 0.0, 0.0, 0.0, -1.0], 0.0, 3.0, 2001)
    }

    pub fn direct(&self) -> OdeProblem {
        OdeProblem::new(self.image.clone(), self.potential.clone(), C::new(0.0, 0.0))
    }

    pub fn rectified(&self) -> SturmianFamily {
        SturmianFamily::TwoBranch { effective: self.effective.clone() }
    }
}

pub fn real_core(c: &[f64]) -> Vec<C> {
    c.iter().map(|&v| C::new(v, 0.0)).collect()
}
