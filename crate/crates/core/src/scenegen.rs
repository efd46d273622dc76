//! Flat-patch Mondrian scenes with known reflectances, rendered under a
//! diagonal illuminant model, plus the cue-suppression manipulations used
//! to probe which image statistics an algorithm leans on.
//!
//! Rendering is `pixel = reflectance ⊙ gain`, where `gain = √3 · direction`
//! so the neutral light has unit gain and renders reflectance unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{lab_to_linear_unchecked, linear_to_lab, Lab, LinearRgb, WhitePoint};
use crate::image::{ColorSpace, ImagePlane, LabelImage};
use crate::psychophys::{Competitor, CompetitorSet, PsychophysError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error(
        "OutOfGamut: patch {patch} channel {channel} needs {value:.6} (allowed [0, {limit:.6}])"
    )]
    OutOfGamut {
        patch: usize,
        channel: usize,
        value: f64,
        limit: f64,
    },
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Competitors(#[from] PsychophysError),
}

/// A named light; `direction` is unit length in linear RGB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminantSpec {
    pub name: String,
    pub direction: [f64; 3],
}

impl IlluminantSpec {
    /// Normalizes `rgb` to unit length.
    pub fn new(name: impl Into<String>, rgb: [f64; 3]) -> Result<Self, SceneError> {
        let n = (rgb[0] * rgb[0] + rgb[1] * rgb[1] + rgb[2] * rgb[2]).sqrt();
        if !(n > 0.0) || rgb.iter().any(|v| !(*v > 0.0)) {
            return Err(SceneError::InvalidSpec(format!(
                "illuminant needs positive channels, got {rgb:?}"
            )));
        }
        Ok(IlluminantSpec {
            name: name.into(),
            direction: rgb.map(|v| v / n),
        })
    }

    /// Default lights: blue and yellow roughly along the daylight locus, red
    /// and green across it. Placeholder chromaticities, not calibrated ones.
    pub fn named(name: &str) -> Option<Self> {
        let rgb = match name {
            "neutral" => [1.0, 1.0, 1.0],
            "blue" => [0.85, 0.95, 1.2],
            "yellow" => [1.15, 1.0, 0.75],
            "red" => [1.15, 0.88, 0.95],
            "green" => [0.88, 1.12, 0.92],
            _ => return None,
        };
        IlluminantSpec::new(name, rgb).ok()
    }

    pub fn defaults() -> Vec<IlluminantSpec> {
        ["neutral", "blue", "yellow", "red", "green"]
            .into_iter()
            .filter_map(IlluminantSpec::named)
            .collect()
    }

    pub fn chromatic_defaults() -> Vec<IlluminantSpec> {
        IlluminantSpec::defaults()
            .into_iter()
            .filter(|i| !i.is_neutral())
            .collect()
    }

    pub fn neutral() -> Self {
        IlluminantSpec::named("neutral").expect("builtin light")
    }

    pub fn gain(&self) -> LinearRgb {
        LinearRgb::from_array(self.direction).scale(3f64.sqrt())
    }

    pub fn is_neutral(&self) -> bool {
        let d = self.direction;
        (d[0] - d[1]).abs() < 1e-12 && (d[1] - d[2]).abs() < 1e-12
    }

    /// Unit a*b* direction of the light's tint, `None` for a neutral light.
    pub fn chromatic_direction(&self, wp: WhitePoint) -> Option<[f64; 2]> {
        let lab = linear_to_lab(self.gain(), wp);
        let n = lab.a.hypot(lab.b);
        (n > 1e-9).then(|| [lab.a / n, lab.b / n])
    }
}

/// A grid of flat rectangular patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub patch_size: usize,
    /// Row-major, one per patch.
    pub reflectances: Vec<[f64; 3]>,
    pub target: usize,
    pub surround: Vec<usize>,
    #[serde(default)]
    pub bright: Option<usize>,
    /// Patches left alone by the maximum-flux manipulation, kept so a
    /// bright region survives it.
    #[serde(default)]
    pub aux_white: Option<usize>,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let n = self.rows * self.cols;
        if n == 0 || self.patch_size == 0 {
            return Err(SceneError::InvalidSpec("empty grid".into()));
        }
        if self.reflectances.len() != n {
            return Err(SceneError::InvalidSpec(format!(
                "{} reflectances for a {}x{} grid",
                self.reflectances.len(),
                self.rows,
                self.cols
            )));
        }
        let idx = std::iter::once(self.target)
            .chain(self.surround.iter().copied())
            .chain(self.bright)
            .chain(self.aux_white);
        for i in idx {
            if i >= n {
                return Err(SceneError::InvalidSpec(format!(
                    "patch index {i} outside grid"
                )));
            }
        }
        for (patch, r) in self.reflectances.iter().enumerate() {
            check_unit(patch, *r, 1.0)?;
        }
        Ok(())
    }

    pub fn patch_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn width(&self) -> usize {
        self.cols * self.patch_size
    }

    pub fn height(&self) -> usize {
        self.rows * self.patch_size
    }

    /// Mean reflectance over patches (equal to the pixel mean, since every
    /// patch has the same area).
    pub fn mean_reflectance(&self) -> [f64; 3] {
        let n = self.reflectances.len() as f64;
        let mut m = [0.0; 3];
        for r in &self.reflectances {
            for c in 0..3 {
                m[c] += r[c];
            }
        }
        m.map(|v| v / n)
    }

    /// The reference scene used by the mechanism battery: an 8×8 grid whose
    /// background patches come in pairs with opposite chromatic offsets (so
    /// the mean reflectance is achromatic and edges are faint), a gray
    /// target at patch 27 ringed by a high-contrast dark/light surround, a
    /// light-gray bright patch and a brighter white patch.
    pub fn standard(seed: u64) -> SceneSpec {
        let (rows, cols) = (8, 8);
        let target = 27;
        let surround = vec![18, 19, 20, 28, 36, 35, 34, 26];
        let bright = 7;
        let aux_white = 56;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut refl = vec![[0.0; 3]; rows * cols];
        refl[target] = [0.4, 0.4, 0.4];
        for (k, &i) in surround.iter().enumerate() {
            refl[i] = if k % 2 == 0 { [0.08; 3] } else { [0.62; 3] };
        }
        refl[bright] = [0.75; 3];
        refl[aux_white] = [0.8; 3];
        let special: Vec<usize> = std::iter::once(target)
            .chain(surround.iter().copied())
            .chain([bright, aux_white])
            .collect();
        let free: Vec<usize> = (0..rows * cols).filter(|i| !special.contains(i)).collect();
        for pair in free.chunks(2) {
            let g: f64 = rng.gen_range(0.25..0.45);
            if let [i, j] = pair {
                let d: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
                refl[*i] = std::array::from_fn(|c| g + d[c]);
                refl[*j] = std::array::from_fn(|c| g - d[c]);
            } else {
                refl[pair[0]] = [g; 3];
            }
        }
        SceneSpec {
            rows,
            cols,
            patch_size: 8,
            reflectances: refl,
            target,
            surround,
            bright: Some(bright),
            aux_white: Some(aux_white),
            seed,
        }
    }

    /// Patch indices used as competitor locations in the battery: the
    /// target position first, then two background patches.
    pub fn standard_positions() -> Vec<usize> {
        vec![27, 10, 45]
    }
}

fn check_unit(patch: usize, v: [f64; 3], limit: f64) -> Result<(), SceneError> {
    check_limits(patch, v, [limit; 3])
}

fn check_limits(patch: usize, v: [f64; 3], limit: [f64; 3]) -> Result<(), SceneError> {
    for c in 0..3 {
        if !(v[c] >= 0.0 && v[c] <= limit[c] + 1e-12) {
            return Err(SceneError::OutOfGamut {
                patch,
                channel: c,
                value: v[c],
                limit: limit[c],
            });
        }
    }
    Ok(())
}

/// Largest reflectance that still renders at or below 1 in each channel.
fn displayable(illum: &IlluminantSpec) -> [f64; 3] {
    illum.gain().to_array().map(|g| (1.0 / g).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: ImagePlane,
    pub reflectance: ImagePlane,
    /// Patch index + 1 for every pixel.
    pub patches: LabelImage,
}

pub fn render(scene: &SceneSpec, illum: &IlluminantSpec) -> Result<Rendered, SceneError> {
    scene.validate()?;
    let gain = illum.gain().to_array();
    let (w, h, s) = (scene.width(), scene.height(), scene.patch_size);
    let mut img = Vec::with_capacity(w * h);
    let mut refl = Vec::with_capacity(w * h);
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let patch = (y / s) * scene.cols + x / s;
            let r = scene.reflectances[patch];
            refl.push(r);
            img.push([r[0] * gain[0], r[1] * gain[1], r[2] * gain[2]]);
            labels.push(patch as u32 + 1);
        }
    }
    let build = |px| ImagePlane::new(w, h, ColorSpace::Linear, px).expect("sized by construction");
    Ok(Rendered {
        image: build(img),
        reflectance: build(refl),
        patches: LabelImage::new(w, h, labels).expect("sized by construction"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MechanismSpec {
    Baseline,
    /// Holds the rendered color of every surround patch fixed. With no
    /// color given, each patch keeps the color it has under neutral light.
    LocalSurround {
        #[serde(default)]
        color: Option<[f64; 3]>,
    },
    /// Makes the bright patch render as the achromatic value `level`.
    MaximumFlux {
        level: f64,
    },
    /// Appends `rows` rows of patches whose rendered color sits at
    /// `lightness` with `chroma` opposite the light's tint.
    SpatialMeanAddObjects {
        rows: usize,
        lightness: f64,
        chroma: f64,
    },
    /// Scales non-target reflectances per channel so the rendered mean
    /// moves `magnitude` ΔE opposite the light's tint. With no magnitude,
    /// the tint component of the mean is cancelled.
    SpatialMeanChangeReflectances {
        #[serde(default)]
        magnitude: Option<f64>,
    },
}

impl MechanismSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismSpec::Baseline => "baseline",
            MechanismSpec::LocalSurround { .. } => "local-surround",
            MechanismSpec::MaximumFlux { .. } => "maximum-flux",
            MechanismSpec::SpatialMeanAddObjects { .. } => "spatial-mean-add-objects",
            MechanismSpec::SpatialMeanChangeReflectances { .. } => {
                "spatial-mean-change-reflectances"
            }
        }
    }

    /// The settings the battery uses for each manipulation.
    pub fn battery() -> Vec<MechanismSpec> {
        vec![
            MechanismSpec::Baseline,
            MechanismSpec::LocalSurround { color: None },
            MechanismSpec::MaximumFlux { level: 0.5 },
            MechanismSpec::SpatialMeanAddObjects {
                rows: 2,
                lightness: 60.0,
                chroma: 20.0,
            },
            MechanismSpec::SpatialMeanChangeReflectances { magnitude: None },
        ]
    }
}

pub fn apply_mechanism(
    scene: &SceneSpec,
    mech: &MechanismSpec,
    illum: &IlluminantSpec,
    wp: WhitePoint,
) -> Result<SceneSpec, SceneError> {
    scene.validate()?;
    let gain = illum.gain().to_array();
    let mut out = scene.clone();
    match mech {
        MechanismSpec::Baseline => {}
        MechanismSpec::LocalSurround { color } => {
            for &i in &scene.surround {
                let rendered = color.unwrap_or(scene.reflectances[i]);
                let r = std::array::from_fn(|c| rendered[c] / gain[c]);
                check_unit(i, r, 1.0)?;
                out.reflectances[i] = r;
            }
        }
        MechanismSpec::MaximumFlux { level } => {
            let i = scene
                .bright
                .ok_or_else(|| SceneError::InvalidSpec("scene has no bright patch".into()))?;
            let r = std::array::from_fn(|c| level / gain[c]);
            check_unit(i, r, 1.0)?;
            out.reflectances[i] = r;
        }
        MechanismSpec::SpatialMeanAddObjects {
            rows,
            lightness,
            chroma,
        } => {
            let reflectance = match illum.chromatic_direction(wp) {
                // nothing to oppose under a neutral light
                None => lab_to_linear_unchecked(Lab::new(*lightness, 0.0, 0.0), wp).to_array(),
                Some(u) => {
                    let lab = Lab::new(*lightness, -chroma * u[0], -chroma * u[1]);
                    let rendered = lab_to_linear_unchecked(lab, wp).to_array();
                    std::array::from_fn(|c| rendered[c] / gain[c])
                }
            };
            let start = scene.patch_count();
            for k in 0..rows * scene.cols {
                check_limits(start + k, reflectance, displayable(illum))?;
                out.reflectances.push(reflectance);
            }
            out.rows += rows;
        }
        MechanismSpec::SpatialMeanChangeReflectances { magnitude } => {
            change_mean(&mut out, *magnitude, illum, wp)?;
        }
    }
    Ok(out)
}

fn rendered_mean(scene: &SceneSpec, gain: [f64; 3]) -> [f64; 3] {
    let m = scene.mean_reflectance();
    std::array::from_fn(|c| m[c] * gain[c])
}

fn change_mean(
    scene: &mut SceneSpec,
    magnitude: Option<f64>,
    illum: &IlluminantSpec,
    wp: WhitePoint,
) -> Result<(), SceneError> {
    let Some(u) = illum.chromatic_direction(wp) else {
        return Ok(());
    };
    let gain = illum.gain().to_array();
    let base = linear_to_lab(LinearRgb::from_array(rendered_mean(scene, gain)), wp);
    let m = magnitude.unwrap_or(base.a * u[0] + base.b * u[1]);
    let (ta, tb) = (base.a - m * u[0], base.b - m * u[1]);

    let n = scene.patch_count() as f64;
    let t = scene.target;
    let mut others = [0.0; 3];
    for (i, r) in scene.reflectances.iter().enumerate() {
        if i != t {
            for c in 0..3 {
                others[c] += r[c] * gain[c];
            }
        }
    }
    let tr = scene.reflectances[t];
    let limit = displayable(illum);

    // Channel gains that put the rendered mean at (l, ta, tb), and the
    // first patch they would push out of gamut.
    let solve = |l: f64| -> ([f64; 3], Option<SceneError>) {
        let mu = lab_to_linear_unchecked(Lab::new(l, ta, tb), wp).to_array();
        let g: [f64; 3] = std::array::from_fn(|c| (n * mu[c] - tr[c] * gain[c]) / others[c]);
        let err = scene
            .reflectances
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != t)
            .find_map(|(i, r)| check_limits(i, std::array::from_fn(|c| g[c] * r[c]), limit).err());
        (g, err)
    };

    let (mut g, err) = solve(base.l);
    if let Some(first) = err {
        // Darken the target mean until the gains fit; chromaticity is kept.
        // Very dark means need negative gains, so the feasible lightnesses
        // form a band below base.l: find one, then tighten toward the top.
        let mut hi = base.l;
        let mut lo = hi;
        loop {
            lo -= 0.25;
            if lo <= 0.0 {
                return Err(first);
            }
            if solve(lo).1.is_none() {
                break;
            }
            hi = lo;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if solve(mid).1.is_none() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        g = solve(lo).0;
    }
    for (i, r) in scene.reflectances.iter_mut().enumerate() {
        if i != t {
            *r = std::array::from_fn(|c| g[c] * r[c]);
        }
    }
    Ok(())
}

/// Competitor positions for the scene's target under `illum`: R is the
/// target reflectance, T the reflectance whose rendering under `illum`
/// equals the target's rendering under neutral light, and the others are
/// equally spaced along R–T in CIELAB.
pub fn competitor_set(
    scene: &SceneSpec,
    illum: &IlluminantSpec,
    wp: WhitePoint,
) -> Result<CompetitorSet, SceneError> {
    scene.validate()?;
    let gain = illum.gain().to_array();
    let rho = scene.reflectances[scene.target];
    let t: [f64; 3] = std::array::from_fn(|c| rho[c] / gain[c]);
    let r_lab = linear_to_lab(LinearRgb::from_array(rho), wp);
    let t_lab = linear_to_lab(LinearRgb::from_array(t), wp);
    Ok(CompetitorSet::equally_spaced(r_lab, t_lab)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitorImage {
    pub competitor: Competitor,
    pub position: usize,
    pub image: ImagePlane,
    pub reflectance: ImagePlane,
    /// Competitor index (1–5) on the competitor's patch, 0 elsewhere.
    pub mask: LabelImage,
}

/// One rendering per (competitor, position), with the competitor's
/// reflectance placed on the patch at `position`.
pub fn competitor_scene_set(
    scene: &SceneSpec,
    comps: &CompetitorSet,
    positions: &[usize],
    illum: &IlluminantSpec,
    wp: WhitePoint,
) -> Result<Vec<CompetitorImage>, SceneError> {
    scene.validate()?;
    let mut out = Vec::with_capacity(5 * positions.len());
    for c in Competitor::ALL {
        let rho = lab_to_linear_unchecked(comps.get(c), wp).to_array();
        for &pos in positions {
            if pos >= scene.patch_count() {
                return Err(SceneError::InvalidSpec(format!(
                    "position {pos} outside grid"
                )));
            }
            check_limits(pos, rho, displayable(illum))?;
            let mut s = scene.clone();
            s.reflectances[pos] = rho;
            let rendered = render(&s, illum)?;
            let label = c.index() as u32 + 1;
            let labels = rendered
                .patches
                .labels()
                .iter()
                .map(|&p| if p as usize == pos + 1 { label } else { 0 })
                .collect();
            out.push(CompetitorImage {
                competitor: c,
                position: pos,
                mask: LabelImage::new(s.width(), s.height(), labels)
                    .expect("sized by construction"),
                image: rendered.image,
                reflectance: rendered.reflectance,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{
        estimate_illuminant, mean_chromaticity, von_kries_correct, EstimatorParams,
    };

    const WP: WhitePoint = WhitePoint::D65;

    #[test]
    fn neutral_render_is_the_reflectance() {
        let s = SceneSpec::standard(1);
        let r = render(&s, &IlluminantSpec::neutral()).unwrap();
        for (a, b) in r.image.pixels().iter().zip(r.reflectance.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_field_is_proportional_to_light() {
        let mut s = SceneSpec::standard(1);
        s.reflectances = vec![[0.5; 3]; 64];
        let l = IlluminantSpec::new("x", [2.0, 1.0, 1.0]).unwrap();
        let r = render(&s, &l).unwrap();
        for p in r.image.pixels() {
            assert!((p[0] / p[1] - 2.0).abs() < 1e-12);
            assert!((p[1] - p[2]).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_correction_recovers_neutral_render() {
        let s = SceneSpec::standard(3);
        let neutral = render(&s, &IlluminantSpec::neutral()).unwrap();
        for l in IlluminantSpec::chromatic_defaults() {
            let r = render(&s, &l).unwrap();
            let est =
                crate::estimators::IlluminantEstimate::from_rgb(LinearRgb::from_array(l.direction))
                    .unwrap();
            let back = von_kries_correct(&r.image, &est).unwrap();
            for (a, b) in back.pixels().iter().zip(neutral.image.pixels()) {
                for c in 0..3 {
                    assert!((a[c] - b[c]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn standard_scene_mean_is_achromatic_and_gray_world_finds_the_light() {
        let s = SceneSpec::standard(11);
        let m = s.mean_reflectance();
        assert!((m[0] - m[1]).abs() < 1e-12 && (m[1] - m[2]).abs() < 1e-12);
        for l in IlluminantSpec::defaults() {
            let r = render(&s, &l).unwrap();
            let e = estimate_illuminant(&r.image, &EstimatorParams::gray_world()).unwrap();
            assert!(e.angular_error_deg(LinearRgb::from_array(l.direction)) < 0.5);
        }
    }

    #[test]
    fn determinism() {
        assert_eq!(SceneSpec::standard(5), SceneSpec::standard(5));
        assert_ne!(SceneSpec::standard(5), SceneSpec::standard(6));
    }

    #[test]
    fn baseline_and_neutral_surround_are_identity() {
        let s = SceneSpec::standard(2);
        let n = IlluminantSpec::neutral();
        assert_eq!(
            apply_mechanism(&s, &MechanismSpec::Baseline, &n, WP).unwrap(),
            s
        );
        let ls =
            apply_mechanism(&s, &MechanismSpec::LocalSurround { color: None }, &n, WP).unwrap();
        assert_eq!(ls, s);
    }

    #[test]
    fn local_surround_renders_constant() {
        let s = SceneSpec::standard(2);
        let blue = IlluminantSpec::named("blue").unwrap();
        let m =
            apply_mechanism(&s, &MechanismSpec::LocalSurround { color: None }, &blue, WP).unwrap();
        let g = blue.gain().to_array();
        for &i in &s.surround {
            for c in 0..3 {
                assert!((m.reflectances[i][c] * g[c] - s.reflectances[i][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_gamut_names_patch_and_channel() {
        let s = SceneSpec::standard(2);
        let yellow = IlluminantSpec::named("yellow").unwrap();
        let err = apply_mechanism(&s, &MechanismSpec::MaximumFlux { level: 0.95 }, &yellow, WP)
            .unwrap_err();
        assert_eq!(
            err,
            SceneError::OutOfGamut {
                patch: 7,
                channel: 2,
                value: 0.95 / yellow.gain().b,
                limit: 1.0
            }
        );
    }

    #[test]
    fn change_reflectances_shifts_mean_by_magnitude() {
        let s = SceneSpec::standard(4);
        let blue = IlluminantSpec::named("blue").unwrap();
        let u = blue.chromatic_direction(WP).unwrap();
        let before = mean_chromaticity(&render(&s, &blue).unwrap().image, WP).unwrap();
        let mech = MechanismSpec::SpatialMeanChangeReflectances {
            magnitude: Some(5.0),
        };
        let after_scene = apply_mechanism(&s, &mech, &blue, WP).unwrap();
        let after = mean_chromaticity(&render(&after_scene, &blue).unwrap().image, WP).unwrap();
        assert!((after.a - (before.a - 5.0 * u[0])).abs() < 1e-9);
        assert!((after.b - (before.b - 5.0 * u[1])).abs() < 1e-9);
        assert!((after.l - before.l).abs() < 1e-9);
        assert_eq!(after_scene.reflectances[s.target], s.reflectances[s.target]);
    }

    #[test]
    fn change_reflectances_cancels_tint_by_default() {
        let s = SceneSpec::standard(4);
        for l in IlluminantSpec::chromatic_defaults() {
            let u = l.chromatic_direction(WP).unwrap();
            let mech = MechanismSpec::SpatialMeanChangeReflectances { magnitude: None };
            let m = apply_mechanism(&s, &mech, &l, WP).unwrap();
            let after = mean_chromaticity(&render(&m, &l).unwrap().image, WP).unwrap();
            assert!((after.a * u[0] + after.b * u[1]).abs() < 1e-9, "{}", l.name);
        }
    }

    #[test]
    fn add_objects_opposes_the_light() {
        let s = SceneSpec::standard(4);
        let yellow = IlluminantSpec::named("yellow").unwrap();
        let u = yellow.chromatic_direction(WP).unwrap();
        let mech = MechanismSpec::SpatialMeanAddObjects {
            rows: 2,
            lightness: 60.0,
            chroma: 20.0,
        };
        let m = apply_mechanism(&s, &mech, &yellow, WP).unwrap();
        assert_eq!(m.rows, 10);
        assert_eq!(m.reflectances.len(), 80);
        let before = mean_chromaticity(&render(&s, &yellow).unwrap().image, WP).unwrap();
        let after = mean_chromaticity(&render(&m, &yellow).unwrap().image, WP).unwrap();
        let along = |l: Lab| l.a * u[0] + l.b * u[1];
        assert!(along(after) < along(before));
    }

    #[test]
    fn competitor_images() {
        let s = SceneSpec::standard(9);
        let n = IlluminantSpec::neutral();
        let blue = IlluminantSpec::named("blue").unwrap();
        let comps = competitor_set(&s, &blue, WP).unwrap();
        let set =
            competitor_scene_set(&s, &comps, &SceneSpec::standard_positions(), &blue, WP).unwrap();
        assert_eq!(set.len(), 15);
        for ci in &set {
            let label = ci.competitor.index() as u32 + 1;
            assert_eq!(ci.mask.count(label), 64);
            assert_eq!(ci.mask.count(0), 64 * 63);
        }
        // T under the test light renders like the target under neutral light
        let neutral = render(&s, &n).unwrap();
        let t_img = set
            .iter()
            .find(|c| c.competitor == Competitor::T && c.position == s.target)
            .unwrap();
        let x = 3 * 8 + 3;
        let y = 3 * 8 + 3;
        let a = t_img.image.get(x, y);
        let b = neutral.image.get(x, y);
        for c in 0..3 {
            assert!((a[c] - b[c]).abs() < 1e-9);
        }
        // R under neutral light is the original target
        let rn = competitor_set(&s, &n, WP);
        assert!(matches!(
            rn,
            Err(SceneError::Competitors(PsychophysError::DegenerateAxis))
        ));
        let r_img = set
            .iter()
            .find(|c| c.competitor == Competitor::R && c.position == s.target)
            .unwrap();
        let rr = r_img.reflectance.get(x, y);
        for c in 0..3 {
            assert!((rr[c] - s.reflectances[s.target][c]).abs() < 1e-9);
        }
    }
}
