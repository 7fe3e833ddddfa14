use ncollapse::format::{decode_binary, encode_binary, load_embeddings, parse_csv, save_embeddings, to_csv, Format};
use ncollapse_core::LabeledEmbeddings;
use proptest::prelude::*;

fn sets() -> impl Strategy<Value = LabeledEmbeddings> {
    (1usize..6, 1usize..20).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(any::<u32>(), n),
            prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, n * dim),
        )
            .prop_map(move |(labels, data)| LabeledEmbeddings::from_flat(dim, labels, data).unwrap())
    })
}

proptest! {
    #[test]
    fn csv_round_trip(set in sets()) {
        prop_assert_eq!(parse_csv(&to_csv(&set)).unwrap(), set);
    }

    #[test]
    fn binary_round_trip(set in sets()) {
        prop_assert_eq!(decode_binary(&encode_binary(&set)).unwrap(), set);
    }

    #[test]
    fn truncated_binary_rejected(set in sets(), cut in 1usize..64) {
        let bytes = encode_binary(&set);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(decode_binary(&bytes[..keep]).is_err());
    }
}

#[test]
fn files_round_trip_and_sniff() {
    let dir = tempfile::tempdir().unwrap();
    let set = LabeledEmbeddings::from_flat(2, vec![3, 1], vec![0.1, -2.5, 1e300, 5e-324]).unwrap();
    for (name, fmt) in [("a.csv", Format::Csv), ("a.bin", Format::Binary), ("b.csv", Format::Binary)] {
        let path = dir.path().join(name);
        save_embeddings(&set, &path, fmt).unwrap();
        assert_eq!(load_embeddings(&path, None).unwrap(), set, "{name}");
    }
}

#[test]
fn bad_csv_inputs() {
    for text in [
        "",
        "label,f1\n0,1\n",
        "label,f0\n0,nan\n",
        "label,f0,f1\n0,1\n",
        "label,f0\nx,1\n",
        "label,f0\n0,inf\n",
    ] {
        assert!(parse_csv(text).is_err(), "{text:?}");
    }
}
