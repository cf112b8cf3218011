//! Every extracted value spec, checked against the interpreter: sampled
//! in-spec values are accepted and out-of-spec probes are rejected.

mod common;

use common::specs::{alnum, attr_paths, invalid, status, valid, SAMPLES};
use paramfuzz::extractor::{build_inventory, ValueKind};
use paramfuzz::vkernel::{boot, Status};
use paramfuzz::SplitMix64;

#[test]
fn every_spec_is_sound_under_the_interpreter() {
    let mut rng = SplitMix64::new(0x5eed);
    let mut checked = 0;
    for f in common::corpus() {
        let mut state = boot(&f.program).unwrap();
        for r in build_inventory(&f.program).attribute_records {
            let spec = r.value_spec.clone().unwrap();
            if spec.kind == ValueKind::Undetermined {
                continue;
            }
            for path in attr_paths(&f.program, &state, &r.driver, &r.fname) {
                for _ in 0..SAMPLES {
                    let v = valid(&spec, &mut rng);
                    assert_eq!(status(&mut state, &path, &v), Status::Ok, "{path} <- {v:?} ({spec:?})");
                }
                for _ in 0..SAMPLES {
                    let Some(v) = invalid(&spec, &mut rng) else { break };
                    assert_eq!(status(&mut state, &path, &v), Status::Einval, "{path} <- {v:?} ({spec:?})");
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 40);
}

#[test]
fn string_set_is_exactly_the_accepted_set() {
    let p = common::load("zeroing_mode");
    let mut state = boot(&p).unwrap();
    let mut rng = SplitMix64::new(9);
    let mut accepted = std::collections::BTreeSet::new();
    let mut candidates: Vec<String> = ["off", "unmap", "zero", "Off", "unmap ", ""].map(String::from).to_vec();
    candidates.extend((0..50).map(|_| alnum(&mut rng, 0, 10)));
    for c in &candidates {
        if status(&mut state, "/sys/scsi/sda/zeroing_mode", c) == Status::Ok {
            accepted.insert(c.as_str());
        }
    }
    assert_eq!(accepted, ["off", "unmap", "zero"].into());
}

#[test]
fn bounded_uint_is_exactly_the_accepted_range() {
    let p = common::load("loop");
    let mut state = boot(&p).unwrap();
    let ok: Vec<u32> = (0..1000)
        .filter(|v| status(&mut state, "/sys/block/loop0/poll_rate", &v.to_string()) == Status::Ok)
        .collect();
    assert_eq!(ok, (0..=16).collect::<Vec<_>>());
    for junk in ["", "x", "-1", "1.5", "4294967296"] {
        assert_eq!(status(&mut state, "/sys/block/loop0/poll_rate", junk), Status::Einval);
    }
}
