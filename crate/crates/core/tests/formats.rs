use std::io::Cursor;

use rpq::features::{read_features_from, write_features_to, FEATURE_HEADER_LEN};
use rpq::quantizer::{load_model, load_model_from, model_file_len, save_model, save_model_to};
use rpq::tokens::{
    read_merge_table_from, read_token_streams_from, train_merges, write_merge_table_to,
    write_token_streams_to,
};
use rpq::{
    encode_batch, generate_synthetic, read_features, write_features, Error, FeatureMatrix,
    QuantizerConfig, SynthSpec, TokenStream,
};

fn features_bytes(m: &FeatureMatrix) -> Vec<u8> {
    let mut buf = Vec::new();
    write_features_to(m, &mut buf).unwrap();
    buf
}

#[test]
fn one_by_one_feature_file_is_header_plus_one_float() {
    let m = FeatureMatrix::new(1, 1, vec![2.5]).unwrap();
    let buf = features_bytes(&m);
    assert_eq!(FEATURE_HEADER_LEN, 24);
    assert_eq!(buf.len(), 28);
    assert_eq!(&buf[..4], b"DSRF");
    assert_eq!(&buf[24..], &2.5f32.to_le_bytes());
}

#[test]
fn features_round_trip_through_a_file() {
    let m: FeatureMatrix = generate_synthetic(&SynthSpec::new(7, 33, 3, 0.5, 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.dsrf");
    write_features(&m, &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 24 + 4 * 33 * 7);
    assert_eq!(read_features(&path).unwrap(), m);
}

#[test]
fn empty_feature_matrix_round_trips() {
    let m = FeatureMatrix::<f32>::empty(5).unwrap();
    let back = read_features_from(Cursor::new(features_bytes(&m))).unwrap();
    assert_eq!(back.n_frames(), 0);
    assert_eq!(back.dim(), 5);
}

#[test]
fn damaged_feature_files_are_rejected() {
    let m = FeatureMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let good = features_bytes(&m);

    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    assert!(matches!(read_features_from(Cursor::new(bad_magic)), Err(Error::Format(_))));

    let mut bad_version = good.clone();
    bad_version[4] = 9;
    assert!(matches!(read_features_from(Cursor::new(bad_version)), Err(Error::Format(_))));

    let short = good[..good.len() - 1].to_vec();
    assert!(matches!(read_features_from(Cursor::new(short)), Err(Error::Corruption(_))));

    let mut long = good.clone();
    long.extend_from_slice(&[0; 4]);
    assert!(matches!(read_features_from(Cursor::new(long)), Err(Error::Corruption(_))));

    let header_only = good[..10].to_vec();
    assert!(read_features_from(Cursor::new(header_only)).unwrap_err().is_io_or_format());

    let mut nan = good;
    nan[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(read_features_from(Cursor::new(nan)), Err(Error::Validation(_))));
}

#[test]
fn rpq_model_round_trip_preserves_codes() {
    let data: FeatureMatrix = generate_synthetic(&SynthSpec::new(16, 1000, 4, 0.3, 11)).unwrap();
    let model = QuantizerConfig::rpq(4, 0.375, 8).with_seed(5).fit(&data).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.dsrq");
    save_model(&model, &path).unwrap();
    assert_eq!(
        std::fs::metadata(&path).unwrap().len() as usize,
        model_file_len(16, 4, 6, 8)
    );
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.layout(), model.layout());
    assert_eq!(loaded.codebooks(), model.codebooks());
    assert_eq!(loaded.train_meta().seed, 5);
    assert_eq!(
        encode_batch(&data, &loaded, "a").unwrap(),
        encode_batch(&data, &model, "a").unwrap()
    );
}

#[test]
fn truncated_or_padded_models_fail() {
    let data: FeatureMatrix = generate_synthetic(&SynthSpec::new(8, 200, 2, 0.0, 1)).unwrap();
    let model = QuantizerConfig::pq(2, 4).with_seed(1).fit(&data).unwrap();
    let mut buf = Vec::new();
    save_model_to(&model, &mut buf).unwrap();

    assert!(matches!(load_model_from(Cursor::new(&buf[..20])), Err(Error::Corruption(_))));
    assert!(matches!(load_model_from(Cursor::new(&buf[..40])), Err(Error::Corruption(_))));
    assert!(matches!(
        load_model_from(Cursor::new(&buf[..buf.len() - 4])),
        Err(Error::Invariant(_))
    ));
    let mut padded = buf.clone();
    padded.push(0);
    assert!(matches!(load_model_from(Cursor::new(padded)), Err(Error::Invariant(_))));
    let mut bad_method = buf;
    bad_method[8] = 7;
    assert!(load_model_from(Cursor::new(bad_method)).is_err());
}

#[test]
fn token_file_layout() {
    let streams = vec![
        TokenStream::new("0", 2, vec![1, 2, 3, 4]).unwrap(),
        TokenStream::new("1", 2, vec![]).unwrap(),
        TokenStream::new("2", 2, vec![5, 6]).unwrap(),
    ];
    let mut buf = Vec::new();
    write_token_streams_to(&streams, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,2 3,4\n\n5,6\n");
    assert_eq!(read_token_streams_from(Cursor::new(buf)).unwrap(), streams);
}

#[test]
fn token_file_comments_and_errors() {
    let parsed = read_token_streams_from(Cursor::new("# header\n4 4 5\n")).unwrap();
    assert_eq!(parsed.len(), 1);
    assert_eq!(parsed[0].as_slice(), &[4, 4, 5]);
    assert!(matches!(
        read_token_streams_from(Cursor::new("1,2 3\n")),
        Err(Error::Format(_))
    ));
    assert!(matches!(read_token_streams_from(Cursor::new("1 x\n")), Err(Error::Format(_))));
}

#[test]
fn merge_table_round_trip() {
    let corpus = vec![TokenStream::single("a", vec![1, 2, 1, 2, 3])];
    let table = train_merges(&corpus, 6).unwrap();
    let mut buf = Vec::new();
    write_merge_table_to(&table, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("DSRM 1 4 6\n1 2 4\n"), "{text}");
    assert_eq!(read_merge_table_from(Cursor::new(buf)).unwrap(), table);
    assert!(matches!(
        read_merge_table_from(Cursor::new("DSRM 2 4 5\n")),
        Err(Error::Format(_))
    ));
    assert!(read_merge_table_from(Cursor::new("DSRM 1 4 5\n1 2 9\n")).is_err());
}
