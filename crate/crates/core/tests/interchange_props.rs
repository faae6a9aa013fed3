use carspeed::features::{read_features_table, write_features_table, SampleRecord};
use carspeed::interchange::{
    parse_manifest, BBox, DatasetManifest, DatasetMetadata, DepthConvention, DepthRaster,
    DepthUnits, Detection, FrameObservation, MaskRaster, Perspective, SampleEntry,
};
use proptest::prelude::*;

fn finite_f32() -> impl Strategy<Value = f32> {
    any::<f32>().prop_filter("finite", |v| v.is_finite())
}

fn depth_raster() -> impl Strategy<Value = DepthRaster> {
    (1u32..24, 1u32..24).prop_flat_map(|(w, h)| {
        prop::collection::vec(finite_f32(), (w * h) as usize)
            .prop_map(move |values| DepthRaster::new(w, h, values).unwrap())
    })
}

fn mask_raster() -> impl Strategy<Value = MaskRaster> {
    (1u32..24, 1u32..24).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u8..=1, (w * h) as usize)
            .prop_map(move |values| MaskRaster::new(w, h, values).unwrap())
    })
}

fn bbox() -> impl Strategy<Value = BBox> {
    prop::array::uniform4(-1e6f64..1e6)
        .prop_map(|[a, b, c, d]| BBox::new(a.min(b), c.min(d), a.max(b), c.max(d)))
}

fn sample(id: usize) -> impl Strategy<Value = SampleEntry> {
    (
        0.1f64..240.0,
        prop::collection::vec(prop::collection::vec((0.0f64..=1.0, bbox()), 0..3), 2..5),
        prop::option::of(0.0f64..300.0),
        prop::sample::select(vec![
            Perspective::Front,
            Perspective::Side,
            Perspective::Unknown,
        ]),
    )
        .prop_map(move |(fps, frames, speed, perspective)| SampleEntry {
            sample_id: format!("s{id}"),
            fps,
            frames: frames
                .into_iter()
                .enumerate()
                .map(|(i, dets)| FrameObservation {
                    frame_index: 3 * i as u64,
                    detections: dets
                        .into_iter()
                        .map(|(c, b)| Detection::new("car", c, b))
                        .collect(),
                    depth_path: None,
                    mask_path: None,
                })
                .collect(),
            ground_truth_speed_kmh: speed,
            perspective,
        })
}

fn manifest() -> impl Strategy<Value = DatasetManifest> {
    (0usize..4).prop_flat_map(|n| {
        (0..n)
            .map(sample)
            .collect::<Vec<_>>()
            .prop_map(|samples| DatasetManifest {
                metadata: DatasetMetadata::new(
                    DepthUnits::Relative,
                    DepthConvention::LargerIsNearer,
                ),
                samples,
            })
    })
}

fn record() -> impl Strategy<Value = SampleRecord> {
    (
        "[a-z0-9_,\" ]{1,12}",
        1e-6f64..1e3,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e9f64..1e9,
        prop::option::of(0.0f64..400.0),
    )
        .prop_map(|(id, t, a, d, s)| SampleRecord {
            speed_kmh: s,
            ..SampleRecord::new(id, t, a, d)
        })
}

proptest! {
    #[test]
    fn depth_rasters_round_trip(r in depth_raster()) {
        let back = DepthRaster::from_bytes(&r.to_bytes().unwrap()).unwrap();
        prop_assert_eq!((back.width, back.height), (r.width, r.height));
        prop_assert!(back.values.iter().map(|v| v.to_bits()).eq(r.values.iter().map(|v| v.to_bits())));
    }

    #[test]
    fn mask_rasters_round_trip(m in mask_raster()) {
        prop_assert_eq!(MaskRaster::from_bytes(&m.to_bytes().unwrap()).unwrap(), m);
    }

    #[test]
    fn every_truncation_is_rejected(r in depth_raster(), cut in any::<prop::sample::Index>()) {
        let bytes = r.to_bytes().unwrap();
        let len = cut.index(bytes.len());
        prop_assert!(DepthRaster::from_bytes(&bytes[..len]).is_err());
    }

    #[test]
    fn manifests_round_trip(m in manifest()) {
        let text = serde_json::to_string_pretty(&m).unwrap();
        prop_assert_eq!(parse_manifest(&text).unwrap(), m);
    }

    #[test]
    fn feature_tables_round_trip(records in prop::collection::vec(record(), 0..8)) {
        let mut buf = Vec::new();
        write_features_table(&records, &mut buf).unwrap();
        prop_assert_eq!(read_features_table(buf.as_slice()).unwrap(), records);
    }
}
