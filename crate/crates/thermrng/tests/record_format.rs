use proptest::prelude::*;
use thermrng::record::{read_record, write_record, RecordError, HEADER_LEN};
use thermrng_core::acquisition::{AdcConfig, SampleRecord};

fn record(bits: u8, codes: Vec<u16>) -> SampleRecord {
    SampleRecord::new(codes, AdcConfig::new(bits, -1.5, 2.25).unwrap(), 1e8, String::from("file")).unwrap()
}

fn encode(r: &SampleRecord) -> Vec<u8> {
    let mut v = Vec::new();
    write_record(&mut v, r).unwrap();
    v
}

fn offset_of(e: RecordError) -> u64 {
    match e {
        RecordError::Format { offset, .. } => offset,
        RecordError::Io(e) => panic!("unexpected io error {e}"),
    }
}

#[test]
fn header_layout() {
    let bytes = encode(&record(12, vec![1, 4095, 0x0abc]));
    assert_eq!(bytes.len(), HEADER_LEN + 6);
    assert_eq!(&bytes[..4], b"TRNG");
    assert_eq!(bytes[4..6], [1, 0]);
    assert_eq!(bytes[6], 12);
    assert_eq!(bytes[7], 0);
    assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), -1.5);
    assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2.25);
    assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 1e8);
    assert_eq!(u64::from_le_bytes(bytes[32..40].try_into().unwrap()), 3);
    assert_eq!(bytes[44..46], [0xbc, 0x0a]);
}

#[test]
fn malformed_files_report_offsets() {
    let good = encode(&record(8, vec![3, 200, 17]));
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    assert_eq!(offset_of(read_record(&bad_magic[..]).unwrap_err()), 0);

    assert_eq!(offset_of(read_record(&good[..20]).unwrap_err()), 20);

    let mut bad_version = good.clone();
    bad_version[4] = 2;
    assert_eq!(offset_of(read_record(&bad_version[..]).unwrap_err()), 4);

    assert_eq!(offset_of(read_record(&good[..HEADER_LEN + 3]).unwrap_err()), HEADER_LEN as u64 + 3);

    let mut big_code = good.clone();
    big_code[HEADER_LEN + 3] = 1; // second sample becomes 256 + 200
    assert_eq!(offset_of(read_record(&big_code[..]).unwrap_err()), HEADER_LEN as u64 + 2);

    let mut trailing = good.clone();
    trailing.push(0);
    assert_eq!(offset_of(read_record(&trailing[..]).unwrap_err()), HEADER_LEN as u64 + 6);

    let mut bad_range = good;
    bad_range[16..24].copy_from_slice(&(-9.0f64).to_le_bytes());
    assert_eq!(offset_of(read_record(&bad_range[..]).unwrap_err()), 8);
}

proptest! {
    #[test]
    fn bit_exact_round_trip(bits in 1u8..=16, raw in proptest::collection::vec(any::<u16>(), 0..2000)) {
        let mask = ((1u32 << bits) - 1) as u16;
        let r = record(bits, raw.into_iter().map(|c| c & mask).collect());
        let bytes = encode(&r);
        let back = read_record(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(encode(&back), bytes);
    }
}
