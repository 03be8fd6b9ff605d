use fis::lsq::{self, LsqError};
use fis_core::LatentSequence;
use proptest::prelude::*;

fn latent() -> impl Strategy<Value = LatentSequence> {
    (1usize..4, 1usize..4, 1usize..4, 1usize..6).prop_flat_map(|(f, h, w, d)| {
        prop::collection::vec(-1e6f32..1e6, f * h * w * d)
            .prop_map(move |data| LatentSequence::new(f, h, w, d, data).unwrap())
    })
}

proptest! {
    #[test]
    fn encode_decode_round_trip(x in latent()) {
        let bytes = lsq::encode(&x).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 4 * x.data().len());
        prop_assert_eq!(lsq::decode(&bytes).unwrap(), x);
    }

    #[test]
    fn truncation_is_rejected(x in latent(), cut in 1usize..8) {
        let bytes = lsq::encode(&x).unwrap();
        let cut = cut.min(bytes.len());
        let short = &bytes[..bytes.len() - cut];
        let rejected = matches!(lsq::decode(short), Err(LsqError::PayloadLength { .. } | LsqError::Truncated(_)));
        prop_assert!(rejected);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.lsq");
    let x = LatentSequence::from_fn(2, 3, 1, 2, |f, h, w, c| {
        (f * 100 + h * 10 + w + c) as f32 - 0.5
    })
    .unwrap();
    lsq::write(&path, &x).unwrap();
    assert_eq!(lsq::read(&path).unwrap(), x);
    assert!(matches!(
        lsq::read(&dir.path().join("none.lsq")),
        Err(LsqError::Io(_))
    ));
}
