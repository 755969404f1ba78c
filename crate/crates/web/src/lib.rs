//! Browser bindings for three operations: the image of a straight line under
//! the two-branch map with its winding, descriptor enumeration, and model
//! spectra.
//!
//! Each binding wraps a plain function that returns `Result<_, String>` so the
//! logic can be tested without a JavaScript host.

use num_complex::Complex64 as C;
use wasm_bindgen::prelude::*;

use toboggan::contour::{build_line, image_contour, winding_profile, ContourSpec, BRANCH_POINTS};
use toboggan::descriptor::{count_allowed, enumerate_allowed, EnumerationMode};
use toboggan::models::{self, default_grid, Model, TwoBranchSetup};
use toboggan::schrod::{find_spectrum, ScanConfig, Spectrum};

/// Sampled image contour; `points` interleaves real and imaginary parts.
#[wasm_bindgen]
pub struct ImageContour {
    points: Vec<f64>,
    turns_left: f64,
    turns_right: f64,
    word: String,
}

#[wasm_bindgen]
impl ImageContour {
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn turns_left(&self) -> f64 {
        self.turns_left
    }

    #[wasm_bindgen(getter)]
    pub fn turns_right(&self) -> f64 {
        self.turns_right
    }

    #[wasm_bindgen(getter)]
    pub fn word(&self) -> String {
        self.word.clone()
    }
}

pub fn image_contour_of(kappa: f64, eps: f64, s_min: f64, s_max: f64, samples: usize) -> Result<ImageContour, String> {
    if samples > 20_000 {
        return Err("at most 20000 samples".into());
    }
    let line = build_line(&ContourSpec::line(eps, (s_min, s_max), samples)).map_err(|e| e.to_string())?;
    let img = image_contour(&line, kappa).map_err(|e| e.to_string())?;
    let w = winding_profile(&img, BRANCH_POINTS);
    Ok(ImageContour {
        points: img.points().flat_map(|x| [x.re, x.im]).collect(),
        turns_left: w.turns_left,
        turns_right: w.turns_right,
        word: w.inferred_word.to_string(),
    })
}

/// Allowed words of length `n`, one per line, followed by `count=k` and, in
/// published mode, the tabulated total when it differs.
pub fn descriptors_of(n: i32, published: bool) -> Result<String, String> {
    if !(0..=8).contains(&n) {
        return Err("word length must be between 0 and 8".into());
    }
    let mode = if published { EnumerationMode::Published } else { EnumerationMode::FreeGroup };
    let words = enumerate_allowed(n.into(), mode).map_err(|e| e.to_string())?;
    let count = count_allowed(n.into(), mode).map_err(|e| e.to_string())?;
    let mut out: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    if let Some(note) = count.discrepancy {
        out.push(format!("# {note}"));
    }
    out.push(format!("count={}", count.count));
    Ok(out.join("\n"))
}

/// Eigenvalues of a named model, interleaved as `re, im`. `param` is the
/// line shift `ε` for the oscillators, the spike strength `α` for the
/// toboggan and the map exponent `κ` for the two-branch quartic.
pub fn spectrum_of(model: &str, param: f64, emin: f64, emax: f64) -> Result<Vec<f64>, String> {
    let window = (emin, emax);
    let cfg = ScanConfig::new(window, default_grid(window));
    let spec: Spectrum = match model {
        "pt-ho" => find_spectrum(&models::pt_oscillator(param).map_err(|e| e.to_string())?, &cfg),
        "spiked-ho" => find_spectrum(&models::spiked_oscillator(0.25, param).map_err(|e| e.to_string())?, &cfg),
        "toboggan1" => find_spectrum(&models::toboggan_n1(param, 0.3, 0.0).map_err(|e| e.to_string())?, &cfg),
        "two-branch" => {
            let setup = TwoBranchSetup::new(param, 0.05, &[0.0, 0.0, 0.0, 0.0, -1.0], 0.0, 3.0, 1001)
                .map_err(|e| e.to_string())?;
            // level spacing is wide; a coarse grid keeps the page responsive
            let coarse = ScanConfig::new(window, ((emax - emin).abs() * 2.0).ceil() as usize + 1);
            find_spectrum(&setup.direct(), &coarse)
        }
        other => return Err(format!("unknown model {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    Ok(spec.energies().iter().flat_map(|e: &C| [e.re, e.im]).collect())
}

/// Default energy window of a model, as `[emin, emax]`.
pub fn window_of(model: &str) -> Result<Vec<f64>, String> {
    let m = match model {
        "pt-ho" => Model::PtOscillator,
        "spiked-ho" => Model::SpikedOscillator,
        "toboggan1" => Model::TobogganN1,
        "two-branch" => Model::TwoBranch,
        other => return Err(format!("unknown model {other:?}")),
    };
    let (a, b) = m.default_window();
    Ok(vec![a, b])
}

#[wasm_bindgen(js_name = imageContour)]
pub fn image_contour_js(kappa: f64, eps: f64, s_min: f64, s_max: f64, samples: usize) -> Result<ImageContour, JsError> {
    image_contour_of(kappa, eps, s_min, s_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = descriptors)]
pub fn descriptors_js(n: i32, published: bool) -> Result<String, JsError> {
    descriptors_of(n, published).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = spectrum)]
pub fn spectrum_js(model: &str, param: f64, emin: f64, emax: f64) -> Result<Vec<f64>, JsError> {
    spectrum_of(model, param, emin, emax).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = defaultWindow)]
pub fn window_js(model: &str) -> Result<Vec<f64>, JsError> {
    window_of(model).map_err(|e| JsError::new(&e))
}
