use fontcheck::classifier::{ClassifierKind, LabelCodec};
use fontcheck::metrics::{
    exclusion_sensitivity, force_forged_sensitivity, BinaryCounts, ModifiedConfusionMatrix, Ratio,
};
use fontcheck::nn::softmax;
use fontcheck::synth::io::{decode_dataset, encode_dataset};
use fontcheck::synth::{Dataset, DatasetProvenance, GlyphImage, GlyphSample};
use fontcheck::util::parse_class_list;
use fontcheck::verdict::{field_verdict, Decision, SymbolAssessment};
use fontcheck::{IMAGE_PIXELS, TOOL_VERSION};
use proptest::prelude::*;

fn symbol(position: usize, flagged: bool, weight: f64) -> SymbolAssessment {
    SymbolAssessment {
        position,
        std_char: 0,
        std_confidence: weight,
        auth_char: Some(0),
        auth_forged: flagged,
        forced: false,
        flagged,
        weight,
    }
}

fn field() -> impl Strategy<Value = Vec<SymbolAssessment>> {
    prop::collection::vec((any::<bool>(), 0.0f64..=1.0), 1..20)
        .prop_map(|v| v.into_iter().enumerate().map(|(i, (f, w))| symbol(i, f, w)).collect())
}

fn matrix() -> impl Strategy<Value = ModifiedConfusionMatrix> {
    (2usize..12).prop_flat_map(|m| {
        prop::collection::vec(prop::array::uniform4(0u64..500), m).prop_map(|counts| ModifiedConfusionMatrix { counts })
    })
}

fn counts_for(m: &ModifiedConfusionMatrix) -> BinaryCounts {
    BinaryCounts::new(m.tp(), 1000, 100, m.fn_())
}

proptest! {
    #[test]
    fn codec_is_a_bijection(m in 1usize..40, c in 0usize..40, forged in any::<bool>()) {
        prop_assume!(c < m);
        let codec = LabelCodec::new(ClassifierKind::CType { m });
        let k = codec.encode(c, forged).unwrap();
        prop_assert!(k < 2 * m);
        prop_assert_eq!(codec.decode(k).unwrap(), (Some(c), forged));
    }

    #[test]
    fn every_output_decodes_and_reencodes(m in 1usize..40, k in 0usize..80) {
        prop_assume!(k < 2 * m);
        let codec = LabelCodec::new(ClassifierKind::CType { m });
        let (c, f) = codec.decode(k).unwrap();
        prop_assert_eq!(codec.encode(c.unwrap(), f).unwrap(), k);
    }

    #[test]
    fn flagging_never_clears_a_forged_verdict(f in field(), i in any::<prop::sample::Index>(), tau in 0.0f64..0.999) {
        let before = field_verdict(f.clone(), tau).unwrap();
        let mut flipped = f;
        let i = i.index(flipped.len());
        flipped[i].flagged = true;
        let after = field_verdict(flipped, tau).unwrap();
        prop_assert!(!(before.verdict == Decision::Forged && after.verdict == Decision::Genuine));
    }

    #[test]
    fn verdict_is_scale_invariant(f in field(), k in 1e-3f64..1e3, tau in 0.0f64..0.999) {
        let base = field_verdict(f.clone(), tau).unwrap();
        let scaled = field_verdict(f.into_iter().map(|mut a| { a.weight *= k; a }).collect(), tau).unwrap();
        prop_assert!((base.flagged_weight_fraction - scaled.flagged_weight_fraction).abs() <= 1e-12);
        // Rounding can move a fraction across a threshold it sits on.
        if (base.flagged_weight_fraction - tau).abs() > 1e-9 {
            prop_assert_eq!(base.verdict, scaled.verdict);
        }
    }

    #[test]
    fn single_symbol_verdict_follows_its_flag(flagged in any::<bool>(), w in 0.0f64..=1.0, tau in 0.0f64..0.999) {
        let v = field_verdict(vec![symbol(0, flagged, w)], tau).unwrap();
        prop_assert_eq!(v.verdict == Decision::Forged, flagged);
    }

    #[test]
    fn fraction_is_a_weighted_share(f in field()) {
        let v = field_verdict(f.clone(), 0.5).unwrap();
        prop_assert!((0.0..=1.0).contains(&v.flagged_weight_fraction));
        prop_assert_eq!(v.verdict == Decision::Forged, v.flagged_weight_fraction > 0.5);
    }

    #[test]
    fn forcing_more_classes_never_lowers_sensitivity(m in matrix(), a in 0usize..12, b in 0usize..12) {
        let base = counts_for(&m);
        let (a, b) = (a % m.m(), b % m.m());
        let one = force_forged_sensitivity(&m, &base, &[a]).unwrap();
        let mut two = vec![a, b];
        two.sort_unstable();
        two.dedup();
        let both = force_forged_sensitivity(&m, &base, &two).unwrap();
        let none = base.sensitivity();
        if let (Some(x), Some(y), Some(z)) = (none.value(), one.value(), both.value()) {
            prop_assert!(x <= y && y <= z);
        }
    }

    #[test]
    fn excluding_nothing_is_plain_sensitivity(m in matrix()) {
        prop_assert_eq!(exclusion_sensitivity(&m, &[]).unwrap(), counts_for(&m).sensitivity());
    }

    #[test]
    fn half_up_rounding_matches_decimal_rule(num in 0u64..1_000_000, extra in 1u64..1_000_000) {
        let den = num + extra;
        let s = Ratio::new(num, den).percent_2dp();
        let (whole, frac) = s.split_once('.').unwrap();
        let shown = whole.parse::<u128>().unwrap() * 100 + frac.parse::<u128>().unwrap();
        let exact = num as u128 * 10_000;
        // shown - 1/2 <= exact/den < shown + 1/2, in hundredths of a percent
        prop_assert!((2 * shown).saturating_sub(1) * den as u128 <= 2 * exact);
        prop_assert!(2 * exact < (2 * shown + 1) * den as u128);
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(row in prop::collection::vec(-50.0f64..50.0, 2..30), shift in -100.0f64..100.0) {
        let p = softmax(&row);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let shifted: Vec<f64> = row.iter().map(|z| z + shift).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn dataset_bytes_round_trip(
        samples in prop::collection::vec(
            (prop::collection::vec(any::<u8>(), IMAGE_PIXELS), 0usize..10, "[a-z_]{1,12}", any::<bool>()),
            0..12,
        )
    ) {
        let ds = Dataset {
            m: 10,
            samples: samples
                .into_iter()
                .map(|(px, c, font, forged)| GlyphSample {
                    image: GlyphImage::from_u8(&px).unwrap(),
                    char_index: c,
                    font_id: font,
                    forged,
                })
                .collect(),
            provenance: DatasetProvenance::imported(TOOL_VERSION),
        };
        let bytes = encode_dataset(&ds).unwrap();
        let back = decode_dataset(&bytes).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(encode_dataset(&back).unwrap(), bytes);
    }

    #[test]
    fn class_lists_are_sorted_and_unique(v in prop::collection::vec(0usize..20, 1..8)) {
        let text = v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        let parsed = parse_class_list(&text).unwrap();
        let mut want = v;
        want.sort_unstable();
        want.dedup();
        prop_assert_eq!(parsed, want);
    }
}
