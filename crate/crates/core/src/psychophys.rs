//! Competitor axis geometry, match derivation, and the Color Constancy
//! Index.
//!
//! Every competitor set spans an axis from the tristimulus match `T` (0 %)
//! to the reflectance match `R` (100 %). Model outputs for the five
//! competitors are projected onto that axis; the two whose projections land
//! closest to `R` are interpolated (inverse-distance weights on their
//! original positions) to obtain the match, and the CCI is the match's
//! signed coordinate along `T → R`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::Lab;
use crate::numeric::{dot3, norm3, sub3};

/// Along-axis spread (ΔE units) below which a match is flagged as clustered.
pub const CLUSTER_WARNING_SPREAD: f64 = 1.0;

/// Maximum distance (ΔE units) of S1, S2 and O from the R–T line.
pub const AXIS_TOLERANCE: f64 = 1.0;

const DEGENERATE_AXIS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsychophysError {
    #[error("DegenerateAxis: R and T coincide")]
    DegenerateAxis,
    #[error("missing competitor {0}")]
    MissingCompetitor(Competitor),
    #[error("invalid competitor set: {0}")]
    InvalidCompetitorSet(String),
    #[error("mismatched keys: {0}")]
    MismatchedKeys(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Competitor {
    R,
    S1,
    S2,
    T,
    O,
}

impl Competitor {
    /// Fixed label order, also used for tie-breaking.
    pub const ALL: [Competitor; 5] = [
        Competitor::R,
        Competitor::S1,
        Competitor::S2,
        Competitor::T,
        Competitor::O,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Competitor::R => "R",
            Competitor::S1 => "S1",
            Competitor::S2 => "S2",
            Competitor::T => "T",
            Competitor::O => "O",
        }
    }
}

impl fmt::Display for Competitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Competitor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Competitor::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown competitor `{s}`"))
    }
}

/// Which coordinates take part in projection and CCI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionSpace {
    /// Full (L, a, b).
    #[default]
    Lab,
    /// (a, b) only; lightness is ignored.
    ChromaticPlane,
}

impl ProjectionSpace {
    fn vec(self, c: Lab) -> [f64; 3] {
        match self {
            ProjectionSpace::Lab => [c.l, c.a, c.b],
            ProjectionSpace::ChromaticPlane => [0.0, c.a, c.b],
        }
    }
}

/// Positions of the five competitors for one (scene, condition, illuminant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorSet {
    positions: [Lab; 5],
    pub scene_id: String,
    pub condition_id: String,
    pub illuminant_id: String,
}

impl CompetitorSet {
    /// Builds and validates a set from label-keyed positions. The order of
    /// the input pairs does not matter.
    pub fn new<I>(
        positions: I,
        scene_id: impl Into<String>,
        condition_id: impl Into<String>,
        illuminant_id: impl Into<String>,
    ) -> Result<Self, PsychophysError>
    where
        I: IntoIterator<Item = (Competitor, Lab)>,
    {
        let map: BTreeMap<Competitor, Lab> = positions.into_iter().collect();
        let mut arr = [Lab::default(); 5];
        for c in Competitor::ALL {
            arr[c.index()] = *map.get(&c).ok_or(PsychophysError::MissingCompetitor(c))?;
        }
        let set = CompetitorSet {
            positions: arr,
            scene_id: scene_id.into(),
            condition_id: condition_id.into(),
            illuminant_id: illuminant_id.into(),
        };
        set.validate()?;
        Ok(set)
    }

    /// R, T and the derived S1 = R + (T−R)/3, S2 = R + 2(T−R)/3 and
    /// O = R − (T−R)/3.
    pub fn equally_spaced(r: Lab, t: Lab) -> Result<Self, PsychophysError> {
        let at = |k: f64| {
            Lab::new(
                r.l + k * (t.l - r.l),
                r.a + k * (t.a - r.a),
                r.b + k * (t.b - r.b),
            )
        };
        CompetitorSet::new(
            [
                (Competitor::R, r),
                (Competitor::S1, at(1.0 / 3.0)),
                (Competitor::S2, at(2.0 / 3.0)),
                (Competitor::T, t),
                (Competitor::O, at(-1.0 / 3.0)),
            ],
            "",
            "",
            "",
        )
    }

    pub fn with_ids(
        mut self,
        scene_id: impl Into<String>,
        condition_id: impl Into<String>,
        illuminant_id: impl Into<String>,
    ) -> Self {
        self.scene_id = scene_id.into();
        self.condition_id = condition_id.into();
        self.illuminant_id = illuminant_id.into();
        self
    }

    pub fn get(&self, c: Competitor) -> Lab {
        self.positions[c.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Competitor, Lab)> + '_ {
        Competitor::ALL.into_iter().map(move |c| (c, self.get(c)))
    }

    fn validate(&self) -> Result<(), PsychophysError> {
        if self.positions.iter().any(|p| !p.is_finite()) {
            return Err(PsychophysError::InvalidCompetitorSet(
                "non-finite coordinate".into(),
            ));
        }
        let r = self.get(Competitor::R);
        let t = self.get(Competitor::T);
        let axis_len = r.distance(t);
        if axis_len < DEGENERATE_AXIS {
            return Err(PsychophysError::DegenerateAxis);
        }
        for c in [Competitor::S1, Competitor::S2, Competitor::O] {
            let (proj, tp) = project_onto_axis(self.get(c), r, t)?;
            let off = proj.distance(self.get(c));
            if off > AXIS_TOLERANCE {
                return Err(PsychophysError::InvalidCompetitorSet(format!(
                    "{c} lies {off:.3} ΔE off the R–T axis"
                )));
            }
            if c != Competitor::O && !(tp > 0.0 && tp < 1.0) {
                return Err(PsychophysError::InvalidCompetitorSet(format!(
                    "{c} is not between R and T (axis position {tp:.3})"
                )));
            }
        }
        Ok(())
    }
}

/// Orthogonal projection of `p` onto the infinite R–T line in full CIELAB.
/// Returns the projected point and `t`, with `t = 1` at R and `t = 0` at T.
pub fn project_onto_axis(p: Lab, r: Lab, t: Lab) -> Result<(Lab, f64), PsychophysError> {
    project_in(ProjectionSpace::Lab, p, r, t)
}

/// [`project_onto_axis`] restricted to the coordinates of `space`. In the
/// chromatic plane the projected point keeps the lightness of `p`.
pub fn project_in(
    space: ProjectionSpace,
    p: Lab,
    r: Lab,
    t: Lab,
) -> Result<(Lab, f64), PsychophysError> {
    let (pv, rv, tv) = (space.vec(p), space.vec(r), space.vec(t));
    let axis = sub3(tv, rv);
    let len2 = dot3(axis, axis);
    if len2.sqrt() < DEGENERATE_AXIS {
        return Err(PsychophysError::DegenerateAxis);
    }
    let s = dot3(axis, sub3(pv, rv)) / len2;
    let proj = match space {
        ProjectionSpace::Lab => Lab::new(r.l + s * axis[0], r.a + s * axis[1], r.b + s * axis[2]),
        ProjectionSpace::ChromaticPlane => Lab::new(p.l, r.a + s * axis[1], r.b + s * axis[2]),
    };
    Ok((proj, 1.0 - s))
}

/// The model's averaged CIELAB output per competitor with pixel counts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelOutputs {
    entries: [Option<(Lab, u64)>; 5],
}

impl ModelOutputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_colors<I: IntoIterator<Item = (Competitor, Lab)>>(colors: I) -> Self {
        let mut out = ModelOutputs::new();
        for (c, lab) in colors {
            out.set(c, lab, 1);
        }
        out
    }

    pub fn set(&mut self, c: Competitor, color: Lab, pixel_count: u64) {
        self.entries[c.index()] = Some((color, pixel_count));
    }

    pub fn get(&self, c: Competitor) -> Option<(Lab, u64)> {
        self.entries[c.index()]
    }

    pub fn color(&self, c: Competitor) -> Result<Lab, PsychophysError> {
        match self.entries[c.index()] {
            Some((lab, n)) if n > 0 => Ok(lab),
            _ => Err(PsychophysError::MissingCompetitor(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    #[serde(rename = "match")]
    pub matched: Lab,
    /// Position on the axis, 0 at T and 1 at R.
    pub t_param: f64,
    pub chosen_pair: (Competitor, Competitor),
    pub d1: f64,
    pub d2: f64,
    pub cluster_spread: f64,
    pub cluster_warning: bool,
}

/// Derives the match from model outputs: project every output onto the
/// R–T axis, pick the two whose projections are nearest to R, and
/// interpolate their original positions with weights `d2 : d1`.
pub fn derive_match(
    outputs: &ModelOutputs,
    comps: &CompetitorSet,
    space: ProjectionSpace,
) -> Result<MatchResult, PsychophysError> {
    let r = comps.get(Competitor::R);
    let t = comps.get(Competitor::T);
    let axis_len = norm3(sub3(space.vec(t), space.vec(r)));

    let mut scored = Vec::with_capacity(5);
    for c in Competitor::ALL {
        let out = outputs.color(c)?;
        let (proj, tp) = project_in(space, out, r, t)?;
        let d = norm3(sub3(space.vec(proj), space.vec(r)));
        scored.push((c, d, tp));
    }

    let (lo, hi) = scored
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.2), hi.max(s.2))
        });
    let cluster_spread = (hi - lo) * axis_len;

    // stable sort keeps label order on ties
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (c1, d1, _) = scored[0];
    let (c2, d2, _) = scored[1];
    let p1 = comps.get(c1);
    let p2 = comps.get(c2);
    let (w1, w2) = if d1 + d2 == 0.0 {
        (0.5, 0.5)
    } else {
        (d2 / (d1 + d2), d1 / (d1 + d2))
    };
    let matched = Lab::new(
        w1 * p1.l + w2 * p2.l,
        w1 * p1.a + w2 * p2.a,
        w1 * p1.b + w2 * p2.b,
    );
    let (_, t_param) = project_in(space, matched, r, t)?;
    Ok(MatchResult {
        matched,
        t_param,
        chosen_pair: (c1, c2),
        d1,
        d2,
        cluster_spread,
        cluster_warning: cluster_spread < CLUSTER_WARNING_SPREAD,
    })
}

/// Color Constancy Index in percent: `100 · ((M − T)·(R − T)) / ‖R − T‖²`.
/// R gives 100, T gives 0; values outside `[0, 100]` are kept.
pub fn cci(matched: Lab, comps: &CompetitorSet) -> Result<f64, PsychophysError> {
    cci_in(ProjectionSpace::Lab, matched, comps)
}

pub fn cci_in(
    space: ProjectionSpace,
    matched: Lab,
    comps: &CompetitorSet,
) -> Result<f64, PsychophysError> {
    let r = space.vec(comps.get(Competitor::R));
    let t = space.vec(comps.get(Competitor::T));
    let rt = sub3(r, t);
    let len2 = dot3(rt, rt);
    if len2.sqrt() < DEGENERATE_AXIS {
        return Err(PsychophysError::DegenerateAxis);
    }
    // divide first so that M = R gives exactly 1 before scaling
    Ok(100.0 * (dot3(sub3(space.vec(matched), t), rt) / len2))
}

/// One CCI measurement for a (scene, condition, illuminant, subject) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CciRecord {
    pub scene: String,
    pub condition: String,
    pub illuminant: String,
    pub subject: String,
    pub cci_percent: f64,
}

/// `condition − baseline`, for records of the same scene, illuminant and
/// subject.
pub fn delta_cci(condition: &CciRecord, baseline: &CciRecord) -> Result<f64, PsychophysError> {
    if condition.scene != baseline.scene
        || condition.illuminant != baseline.illuminant
        || condition.subject != baseline.subject
    {
        return Err(PsychophysError::MismatchedKeys(format!(
            "({}, {}, {}) vs ({}, {}, {})",
            condition.scene,
            condition.illuminant,
            condition.subject,
            baseline.scene,
            baseline.illuminant,
            baseline.subject
        )));
    }
    Ok(condition.cci_percent - baseline.cci_percent)
}
