use std::collections::BTreeMap;

use proptest::prelude::*;
use srplan::formats::{
    calibration_json, device_profile_json, parse_calibration, parse_device_profile, parse_quality_profile,
    quality_profile_json,
};
use srplan::pnm;
use srplan::srplan_core::{
    CalibrationSet, DeviceProfile, Engine, EngineSet, Image, QualityProfile, QualityRecord, TvValue,
};

fn image_strategy() -> impl Strategy<Value = Image> {
    (1usize..24, 1usize..24, prop_oneof![Just(1usize), Just(3)]).prop_flat_map(|(h, w, c)| {
        proptest::collection::vec(any::<u8>(), h * w * c).prop_map(move |data| Image::new(w, h, c, data).unwrap())
    })
}

fn profile_strategy() -> impl Strategy<Value = DeviceProfile> {
    let engines = proptest::collection::vec(any::<bool>(), 0..3).prop_map(|mut rest| {
        rest.insert(0, true);
        rest
    });
    engines.prop_flat_map(|flags| {
        let n = flags.len();
        let row = proptest::collection::vec(proptest::option::of(1e-6f64..1e6), n);
        (
            Just(flags),
            proptest::collection::btree_map("[a-z][a-z0-9_]{0,6}", row, 1..5),
            0.0f64..100.0,
            (1usize..400, 1usize..400),
        )
            .prop_map(|(flags, table, stitch, patch)| {
                let set = EngineSet::new(
                    flags.iter().enumerate().map(|(i, &p)| Engine::new(&format!("E{i}"), "FP16", p)).collect(),
                )
                .unwrap();
                DeviceProfile::new(set, patch, stitch, table).unwrap()
            })
    })
}

type RawRecord = (f64, BTreeMap<String, f64>, BTreeMap<String, f64>);

fn db() -> impl Strategy<Value = f64> {
    prop_oneof![9 => 5.0f64..60.0, 1 => Just(f64::INFINITY)]
}

fn quality_strategy() -> impl Strategy<Value = QualityProfile> {
    let record = (
        0.0f64..1e6,
        proptest::collection::btree_map("m[0-3]", db(), 1..4),
        proptest::collection::btree_map("m[0-3]", db(), 0..3),
    );
    proptest::collection::vec(record, 1..12).prop_map(|rows| {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, (tv, psnr, psnr_reduced)): (usize, RawRecord)| {
                QualityRecord { patch_id: format!("p{i}"), tv: TvValue::new(tv).unwrap(), psnr, psnr_reduced }
            })
            .collect();
        QualityProfile::new(records).unwrap()
    })
}

proptest! {
    #[test]
    fn pnm_round_trip(image in image_strategy()) {
        let bytes = pnm::encode(&image);
        prop_assert_eq!(&bytes[..2], if image.channels() == 1 { b"P5" } else { b"P6" });
        prop_assert_eq!(pnm::decode(&bytes).unwrap(), image);
    }

    #[test]
    fn device_profile_round_trip(profile in profile_strategy()) {
        let text = serde_json::to_string(&device_profile_json(&profile)).unwrap();
        prop_assert_eq!(parse_device_profile(&text).unwrap(), profile);
    }

    #[test]
    fn quality_profile_round_trip(quality in quality_strategy()) {
        let text = serde_json::to_string_pretty(&quality_profile_json(&quality)).unwrap();
        prop_assert_eq!(parse_quality_profile(&text).unwrap(), quality);
    }

    #[test]
    fn calibration_round_trip(values in proptest::collection::vec(0.0f64..1e7, 1..40)) {
        let cal = CalibrationSet::from_raw(&values).unwrap();
        let text = calibration_json(&cal).to_string();
        prop_assert_eq!(parse_calibration(&text).unwrap(), cal);
    }
}

#[test]
fn pnm_file_round_trip() {
    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("x.ppm");
    let image = Image::new(3, 2, 3, (0..18).collect()).unwrap();
    pnm::write(&path, &image).unwrap();
    assert_eq!(pnm::read(&path).unwrap(), image);
}
