use constancy::agreement::{lin_ccc, pearson, ConditionVector};
use constancy::colorspace::{
    ciede2000, lab_to_linear, linear_to_lab, linear_to_srgb, srgb_to_linear, EncodedRgb, Lab,
    LinearRgb, WhitePoint,
};
use constancy::estimators::{estimate_illuminant, EstimatorParams, Method};
use constancy::image::{ColorSpace, ImagePlane};
use constancy::psychophys::{
    cci, derive_match, Competitor, CompetitorSet, ModelOutputs, ProjectionSpace,
};
use proptest::prelude::*;

const WP: WhitePoint = WhitePoint::D65;

fn lab() -> impl Strategy<Value = Lab> {
    (0.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64).prop_map(|(l, a, b)| Lab::new(l, a, b))
}

fn image(w: usize, h: usize) -> impl Strategy<Value = ImagePlane> {
    prop::collection::vec((0.02..1.0f64, 0.02..1.0f64, 0.02..1.0f64), w * h).prop_map(move |px| {
        ImagePlane::new(
            w,
            h,
            ColorSpace::Linear,
            px.into_iter().map(|(r, g, b)| [r, g, b]).collect(),
        )
        .unwrap()
    })
}

fn axis() -> impl Strategy<Value = CompetitorSet> {
    (lab(), -20.0..20.0f64, -40.0..40.0f64, -40.0..40.0f64)
        .prop_filter("axis too short", |(_, dl, da, db)| {
            (dl * dl + da * da + db * db).sqrt() > 2.0
        })
        .prop_map(|(r, dl, da, db)| {
            CompetitorSet::equally_spaced(r, Lab::new(r.l + dl, r.a + da, r.b + db)).unwrap()
        })
}

fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn srgb_round_trip(r in 0.0..1.0f64, g in 0.0..1.0f64, b in 0.0..1.0f64) {
        let e = EncodedRgb::new(r, g, b);
        prop_assert!(close(linear_to_srgb(srgb_to_linear(e)).to_array(), e.to_array(), 1e-12));
    }

    #[test]
    fn lab_round_trip(r in 0.0..1.0f64, g in 0.0..1.0f64, b in 0.0..1.0f64) {
        let lin = LinearRgb::new(r, g, b);
        let back = lab_to_linear(linear_to_lab(lin, WP), WP).unwrap();
        prop_assert!(close(back.to_array(), lin.to_array(), 1e-10));
    }

    #[test]
    fn ciede2000_symmetric_and_nonnegative(x in lab(), y in lab()) {
        let d = ciede2000(x, y);
        prop_assert!(d >= 0.0);
        prop_assert!((d - ciede2000(y, x)).abs() < 1e-10);
        prop_assert_eq!(ciede2000(x, x), 0.0);
    }

    #[test]
    fn estimators_ignore_exposure(img in image(12, 10), k in 0.05..20.0f64) {
        for m in Method::ALL {
            let p = EstimatorParams::default_for(m);
            let a = estimate_illuminant(&img, &p).unwrap();
            let b = estimate_illuminant(&img.scaled(k), &p).unwrap();
            prop_assert!(close(a.direction.to_array(), b.direction.to_array(), 1e-10), "{m:?}");
        }
    }

    #[test]
    fn estimators_follow_channel_permutation(img in image(10, 10)) {
        let swapped = ImagePlane::new(
            10, 10, ColorSpace::Linear,
            img.pixels().iter().map(|p| [p[2], p[0], p[1]]).collect(),
        ).unwrap();
        for m in Method::ALL {
            let p = EstimatorParams::default_for(m);
            let a = estimate_illuminant(&img, &p).unwrap().direction.to_array();
            let b = estimate_illuminant(&swapped, &p).unwrap().direction.to_array();
            prop_assert!(close([a[2], a[0], a[1]], b, 1e-12), "{m:?}");
        }
    }

    #[test]
    fn large_p_approaches_white_patch(img in image(8, 8)) {
        let wp = estimate_illuminant(&img, &EstimatorParams::white_patch()).unwrap();
        let sog = estimate_illuminant(&img, &EstimatorParams::shades_of_gray(1000.0)).unwrap();
        prop_assert!(wp.angular_error_deg(sog.direction) < 0.1);
    }

    #[test]
    fn gray_edge_ignores_constant_offset(img in image(12, 12), off in 0.0..0.5f64) {
        let shifted = ImagePlane::new(
            12, 12, ColorSpace::Linear,
            img.pixels().iter().map(|p| p.map(|v| v + off)).collect(),
        ).unwrap();
        let p = EstimatorParams::gray_edge(1, 1.0, 1.0);
        let a = estimate_illuminant(&img, &p).unwrap();
        let b = estimate_illuminant(&shifted, &p).unwrap();
        prop_assert!(close(a.direction.to_array(), b.direction.to_array(), 1e-12));
    }

    #[test]
    fn cci_is_linear_in_axis_position(comps in axis(), s in -0.5..1.5f64) {
        let r = comps.get(Competitor::R);
        let t = comps.get(Competitor::T);
        let m = Lab::new(t.l + s * (r.l - t.l), t.a + s * (r.a - t.a), t.b + s * (r.b - t.b));
        prop_assert!((cci(m, &comps).unwrap() - 100.0 * s).abs() < 1e-9);
    }

    #[test]
    fn match_lies_on_segment_and_scores_its_position(
        comps in axis(),
        pos in prop::array::uniform5(-0.5..1.5f64),
        off in prop::array::uniform5(-3.0..3.0f64),
    ) {
        let r = comps.get(Competitor::R);
        let t = comps.get(Competitor::T);
        let outs = ModelOutputs::from_colors(Competitor::ALL.iter().enumerate().map(|(i, c)| {
            let s = pos[i];
            (*c, Lab::new(r.l + s * (t.l - r.l) + off[i], r.a + s * (t.a - r.a), r.b + s * (t.b - r.b)))
        }));
        let m = derive_match(&outs, &comps, ProjectionSpace::Lab).unwrap();
        // the match interpolates two competitors, all of which sit on the axis
        prop_assert!(m.t_param >= -1e-9 && m.t_param <= 4.0 / 3.0 + 1e-9);
        prop_assert!((cci(m.matched, &comps).unwrap() - 100.0 * m.t_param).abs() < 1e-8);
    }

    #[test]
    fn match_is_translation_invariant(
        comps in axis(),
        shift in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
        pos in prop::array::uniform5(-0.5..1.5f64),
    ) {
        let mv = |p: Lab| Lab::new(p.l + shift.0, p.a + shift.1, p.b + shift.2);
        let r = comps.get(Competitor::R);
        let t = comps.get(Competitor::T);
        let colors: Vec<(Competitor, Lab)> = Competitor::ALL.iter().enumerate().map(|(i, c)| {
            let s = pos[i];
            (*c, Lab::new(r.l + s * (t.l - r.l) + 1.0, r.a + s * (t.a - r.a), r.b + s * (t.b - r.b)))
        }).collect();
        let moved = CompetitorSet::new(comps.iter().map(|(c, p)| (c, mv(p))), "", "", "").unwrap();
        let a = derive_match(&ModelOutputs::from_colors(colors.clone()), &comps, ProjectionSpace::Lab).unwrap();
        let b = derive_match(
            &ModelOutputs::from_colors(colors.iter().map(|(c, p)| (*c, mv(*p)))),
            &moved,
            ProjectionSpace::Lab,
        ).unwrap();
        prop_assert!((a.t_param - b.t_param).abs() < 1e-9);
    }

    #[test]
    fn match_ignores_input_order(comps in axis(), pos in prop::array::uniform5(-0.5..1.5f64)) {
        let r = comps.get(Competitor::R);
        let t = comps.get(Competitor::T);
        let colors: Vec<(Competitor, Lab)> = Competitor::ALL.iter().enumerate().map(|(i, c)| {
            let s = pos[i];
            (*c, Lab::new(r.l + s * (t.l - r.l), r.a + s * (t.a - r.a) + 0.5, r.b + s * (t.b - r.b)))
        }).collect();
        let reversed: Vec<_> = colors.iter().rev().copied().collect();
        let a = derive_match(&ModelOutputs::from_colors(colors), &comps, ProjectionSpace::Lab).unwrap();
        let b = derive_match(&ModelOutputs::from_colors(reversed), &comps, ProjectionSpace::Lab).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ccc_bounded_by_pearson_and_symmetric(
        xs in prop::collection::vec(-100.0..100.0f64, 3..25),
        noise in prop::collection::vec(-30.0..30.0f64, 25),
        slope in -2.0..2.0f64,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| slope * x + e).collect();
        let (x, y) = (ConditionVector::from_values(&xs), ConditionVector::from_values(&ys));
        if let (Ok(c), Ok(r)) = (lin_ccc(&x, &y), pearson(&x, &y)) {
            prop_assert!(c <= r.abs() + 1e-12);
            prop_assert!((c - lin_ccc(&y, &x).unwrap()).abs() < 1e-12);
        }
    }
}
