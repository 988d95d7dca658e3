use std::fs;

use proptest::prelude::*;
use tsica::format::*;
use tsica::IoError;
use tsica_core::Volume4D;

/// An ANALYZE/NIFTI header assembled field by field, independent of the codec.
fn handmade_header(big: bool, magic: &[u8; 4], dims: &[i16], datatype: i16, bitpix: i16, slope: f32, inter: f32) -> Vec<u8> {
    let mut b = vec![0u8; 348];
    let put16 = |b: &mut [u8], at: usize, v: i16| {
        b[at..at + 2].copy_from_slice(&if big { v.to_be_bytes() } else { v.to_le_bytes() })
    };
    let put32 = |b: &mut [u8], at: usize, v: [u8; 4]| b[at..at + 4].copy_from_slice(&v);
    let f = |v: f32| if big { v.to_be_bytes() } else { v.to_le_bytes() };
    let i = |v: i32| if big { v.to_be_bytes() } else { v.to_le_bytes() };
    put32(&mut b, 0, i(348));
    put16(&mut b, 40, dims.len() as i16);
    for k in 0..7 {
        put16(&mut b, 42 + 2 * k, *dims.get(k).unwrap_or(&1));
    }
    put16(&mut b, 70, datatype);
    put16(&mut b, 72, bitpix);
    for (k, v) in [1.0f32, 2.0, 2.0, 3.0, 1.5].iter().enumerate() {
        put32(&mut b, 76 + 4 * k, f(*v));
    }
    put32(&mut b, 108, f(if magic == b"n+1\0" { 352.0 } else { 0.0 }));
    put32(&mut b, 112, f(slope));
    put32(&mut b, 116, f(inter));
    b[344..348].copy_from_slice(magic);
    b
}

#[test]
fn byte_swapped_header_reads_as_big_endian() {
    let little = handmade_header(false, b"n+1\0", &[128, 128, 3, 100], 16, 32, 1.0, 0.0);
    let big = handmade_header(true, b"n+1\0", &[128, 128, 3, 100], 16, 32, 1.0, 0.0);
    assert_eq!(detect_format(&little).unwrap(), (FormatKind::NiftiSingle, Endianness::Little));
    assert_eq!(detect_format(&big).unwrap(), (FormatKind::NiftiSingle, Endianness::Big));
    let (l, b) = (VolumeHeader::decode(&little).unwrap(), VolumeHeader::decode(&big).unwrap());
    assert_eq!(l.dims, vec![128, 128, 3, 100]);
    assert_eq!(l.datatype, DataType::F32);
    assert_eq!(l.voxel_size(), [2.0, 2.0, 3.0]);
    assert_eq!(l.time_step(), 1.5);
    assert_eq!(l.fields()[2..], b.fields()[2..]);
}

#[test]
fn scaled_i16_sample_decodes_with_slope_and_intercept() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = handmade_header(false, b"n+1\0", &[1, 1, 1, 1], 4, 16, 2.0, 1.0);
    bytes.extend_from_slice(&[0; 4]);
    bytes.extend_from_slice(&3i16.to_le_bytes());
    let path = dir.path().join("s.nii");
    fs::write(&path, &bytes).unwrap();
    let (vol, _) = read_volume(&path).unwrap();
    assert_eq!(vol.samples(), &[7.0]);

    fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(read_volume(&path), Err(IoError::TruncatedData { .. })));
}

#[test]
fn analyze_pair_written_by_hand_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = handmade_header(true, b"\0\0\0\0", &[2, 2, 1], 2, 8, 0.0, 0.0);
    fs::write(dir.path().join("a.hdr"), &hdr).unwrap();
    fs::write(dir.path().join("a.img"), [1u8, 2, 3, 4]).unwrap();
    let path = dir.path().join("a.hdr");
    assert_eq!(detect_format_path(&path).unwrap(), (FormatKind::Analyze75, Endianness::Big));
    let (vol, h) = read_volume(&path).unwrap();
    assert_eq!(h.dims, vec![2, 2, 1]);
    assert_eq!(vol.samples(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn pair_header_is_exactly_348_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let vol = Volume4D::new([3, 2, 2, 2], (0..24).map(f64::from).collect()).unwrap();
    let header = VolumeHeader::for_volume(&vol, FormatKind::NiftiPair, DataType::F64);
    write_nifti(&dir.path().join("p.hdr"), &vol, &header, false).unwrap();
    assert_eq!(fs::metadata(dir.path().join("p.hdr")).unwrap().len(), 348);
    assert_eq!(fs::metadata(dir.path().join("p.img")).unwrap().len(), 24 * 8);
    assert_eq!(&fs::read(dir.path().join("p.hdr")).unwrap()[344..348], b"ni1\0");
}

#[test]
fn single_file_rewrite_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let vol = Volume4D::new([2, 2, 2, 3], (0..24).map(|i| i as f64 * 0.1 - 1.0).collect()).unwrap();
    let header = VolumeHeader::for_volume(&vol, FormatKind::NiftiSingle, DataType::F64);
    let (a, b) = (dir.path().join("a.nii"), dir.path().join("b.nii"));
    write_nifti(&a, &vol, &header, true).unwrap();
    let (back, h) = read_volume(&a).unwrap();
    write_nifti(&b, &back, &h, true).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn extents_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let vol = Volume4D::zeros([2, 2, 2, 2]);
    let header = VolumeHeader::new(FormatKind::NiftiSingle, &[2, 2, 2, 3], DataType::F32);
    assert!(matches!(
        write_nifti(&dir.path().join("m.nii"), &vol, &header, true),
        Err(IoError::HeaderVolumeMismatch(_))
    ));
}

#[test]
fn short_and_implausible_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("short.nii");
    fs::write(&p, [0u8; 100]).unwrap();
    assert!(matches!(read_header(&p), Err(IoError::TruncatedHeader(100))));
    fs::write(&p, [0x55u8; 400]).unwrap();
    assert!(matches!(read_header(&p), Err(IoError::UnrecognizedFormat)));
}

fn datatype() -> impl Strategy<Value = DataType> {
    prop::sample::select(DataType::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = FormatKind> {
    prop::sample::select(vec![FormatKind::NiftiSingle, FormatKind::NiftiPair, FormatKind::Analyze75])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_read_round_trip(
        dims in proptest::collection::vec(1usize..5, 1..=4),
        dt in datatype(),
        k in kind(),
        big in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let mut header = VolumeHeader::new(k, &dims, dt);
        header.endianness = if big { Endianness::Big } else { Endianness::Little };
        let n: usize = dims.iter().product();
        let samples: Vec<f64> = (0..n).map(|i| ((seed as usize).wrapping_add(i * 7919) % 200) as f64).collect();
        let vol = Volume4D::new(header.extents4(), samples).unwrap();
        let path = dir.path().join(format!("v.{}", k.extension()));
        write_volume(&path, &vol, &header).unwrap();
        let (back, h) = read_volume(&path).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(back.samples(), vol.samples());
    }
}
