//! NIFTI-1 (single `.nii` or `.hdr`/`.img` pair) and ANALYZE 7.5 codec.
//!
//! Both formats share a 348-byte header whose first field is its own size,
//! which also reveals the byte order. NIFTI files carry a magic string at
//! byte 344 (`n+1` for single files, `ni1` for pairs); ANALYZE files do not.
//! Header bytes this codec does not model are carried verbatim so that a
//! header read from disk is written back unchanged.

use std::fs;
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use tsica_core::Volume4D;

use crate::error::{IoError, Result};

pub const HEADER_SIZE: usize = 348;
/// Offset of the data in a single-file NIFTI without extensions.
pub const NIFTI_SINGLE_OFFSET: usize = 352;

const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const MAGIC_PAIR: &[u8; 4] = b"ni1\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatKind {
    Analyze75,
    NiftiSingle,
    NiftiPair,
}

impl FormatKind {
    pub fn name(self) -> &'static str {
        match self {
            FormatKind::Analyze75 => "analyze75",
            FormatKind::NiftiSingle => "nifti_single",
            FormatKind::NiftiPair => "nifti_pair",
        }
    }

    pub fn is_nifti(self) -> bool {
        self != FormatKind::Analyze75
    }

    /// File extension of the file holding the header.
    pub fn extension(self) -> &'static str {
        match self {
            FormatKind::NiftiSingle => "nii",
            _ => "hdr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endianness {
    Little,
    Big,
}

impl Endianness {
    pub fn name(self) -> &'static str {
        match self {
            Endianness::Little => "little",
            Endianness::Big => "big",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl DataType {
    pub const ALL: [DataType; 5] = [
        DataType::U8,
        DataType::I16,
        DataType::I32,
        DataType::F32,
        DataType::F64,
    ];

    pub fn code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
        }
    }

    pub fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            other => return Err(IoError::UnsupportedDatatype(other)),
        })
    }

    pub fn bytes(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DataType::U8 => "u8",
            DataType::I16 => "i16",
            DataType::I32 => "i32",
            DataType::F32 => "f32",
            DataType::F64 => "f64",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    fn integer_range(self) -> Option<(f64, f64)> {
        match self {
            DataType::U8 => Some((0.0, u8::MAX as f64)),
            DataType::I16 => Some((i16::MIN as f64, i16::MAX as f64)),
            DataType::I32 => Some((i32::MIN as f64, i32::MAX as f64)),
            _ => None,
        }
    }
}

/// NIFTI orientation parameters, kept as stored. ANALYZE headers leave them
/// at their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpatialTransform {
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeHeader {
    pub format: FormatKind,
    pub endianness: Endianness,
    /// One to four extents, all >= 1.
    pub dims: Vec<usize>,
    pub datatype: DataType,
    /// `pixdim[0..8]`: `[1..4]` are voxel sizes in mm, `[4]` the time step in
    /// seconds; NIFTI stores the qform handedness in `[0]`.
    pub pixdim: [f32; 8],
    pub scale_slope: f32,
    pub scale_intercept: f32,
    pub vox_offset: usize,
    pub transform: SpatialTransform,
    pub description: String,
    opaque: Box<[u8; HEADER_SIZE]>,
}

/// Byte ranges decoded into typed fields; everything else is opaque.
const SHARED_FIELDS: [(usize, usize); 5] = [(0, 4), (40, 56), (70, 74), (76, 120), (148, 228)];
const NIFTI_FIELDS: [(usize, usize); 2] = [(252, 328), (344, 348)];

fn modeled(format: FormatKind) -> impl Iterator<Item = (usize, usize)> {
    let extra: &[(usize, usize)] = if format.is_nifti() { &NIFTI_FIELDS } else { &[] };
    SHARED_FIELDS.iter().chain(extra).copied()
}

fn mask_modeled(bytes: &[u8], format: FormatKind) -> Box<[u8; HEADER_SIZE]> {
    let mut out = Box::new([0u8; HEADER_SIZE]);
    out.copy_from_slice(&bytes[..HEADER_SIZE]);
    for (lo, hi) in modeled(format) {
        out[lo..hi].fill(0);
    }
    out
}

struct Codec(Endianness);

macro_rules! accessors {
    ($get:ident, $put:ident, $ty:ty, $read:ident, $write:ident) => {
        fn $get(&self, b: &[u8], at: usize) -> $ty {
            match self.0 {
                Endianness::Little => LittleEndian::$read(&b[at..]),
                Endianness::Big => BigEndian::$read(&b[at..]),
            }
        }

        fn $put(&self, b: &mut [u8], at: usize, v: $ty) {
            match self.0 {
                Endianness::Little => LittleEndian::$write(&mut b[at..], v),
                Endianness::Big => BigEndian::$write(&mut b[at..], v),
            }
        }
    };
}

impl Codec {
    accessors!(i16, put_i16, i16, read_i16, write_i16);
    accessors!(i32, put_i32, i32, read_i32, write_i32);
    accessors!(f32, put_f32, f32, read_f32, write_f32);
    accessors!(f64, put_f64, f64, read_f64, write_f64);
}

/// Identifies the container and byte order from the first 348 bytes.
pub fn detect_format(bytes: &[u8]) -> Result<(FormatKind, Endianness)> {
    if bytes.len() < HEADER_SIZE {
        return Err(IoError::TruncatedHeader(bytes.len()));
    }
    let magic = &bytes[344..348];
    let kind = if magic == MAGIC_SINGLE {
        Some(FormatKind::NiftiSingle)
    } else if magic == MAGIC_PAIR {
        Some(FormatKind::NiftiPair)
    } else {
        None
    };
    let size = |c: Endianness| Codec(c).i32(bytes, 0);
    let endianness = if size(Endianness::Little) == HEADER_SIZE as i32 {
        Some(Endianness::Little)
    } else if size(Endianness::Big) == HEADER_SIZE as i32 {
        Some(Endianness::Big)
    } else if kind.is_some() {
        // Plausible magic with a damaged size field: fall back on dim[0].
        [Endianness::Little, Endianness::Big]
            .into_iter()
            .find(|&e| (1..=7).contains(&Codec(e).i16(bytes, 40)))
    } else {
        None
    };
    match (kind, endianness) {
        (Some(k), Some(e)) => Ok((k, e)),
        (None, Some(e)) => Ok((FormatKind::Analyze75, e)),
        _ => Err(IoError::UnrecognizedFormat),
    }
}

impl VolumeHeader {
    pub fn new(format: FormatKind, dims: &[usize], datatype: DataType) -> Self {
        let mut pixdim = [0.0f32; 8];
        pixdim[..5].copy_from_slice(&[1.0; 5]);
        Self {
            format,
            endianness: Endianness::Little,
            dims: dims.to_vec(),
            datatype,
            pixdim,
            scale_slope: 1.0,
            scale_intercept: 0.0,
            vox_offset: if format == FormatKind::NiftiSingle { NIFTI_SINGLE_OFFSET } else { 0 },
            transform: SpatialTransform::default(),
            description: String::new(),
            opaque: Box::new([0u8; HEADER_SIZE]),
        }
    }

    /// A header describing `volume` with its voxel sizes and time step.
    pub fn for_volume(volume: &Volume4D, format: FormatKind, datatype: DataType) -> Self {
        let mut h = Self::new(format, &volume.extents(), datatype);
        h.set_voxel_size(volume.voxel_size);
        h.pixdim[4] = volume.time_step as f32;
        h
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        [self.pixdim[1] as f64, self.pixdim[2] as f64, self.pixdim[3] as f64]
    }

    pub fn set_voxel_size(&mut self, size: [f64; 3]) {
        for (p, s) in self.pixdim[1..4].iter_mut().zip(size) {
            *p = s as f32;
        }
    }

    pub fn time_step(&self) -> f64 {
        self.pixdim[4] as f64
    }

    /// Extents padded with ones to four dimensions.
    pub fn extents4(&self) -> [usize; 4] {
        let mut e = [1; 4];
        e[..self.dims.len()].copy_from_slice(&self.dims);
        e
    }

    pub fn sample_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn payload_bytes(&self) -> usize {
        self.sample_count() * self.datatype.bytes()
    }

    /// Header bytes that are not decoded into fields.
    pub fn opaque_bytes(&self) -> &[u8; HEADER_SIZE] {
        &self.opaque
    }

    /// Replaces the opaque bytes; decoded field ranges are ignored.
    pub fn set_opaque_bytes(&mut self, bytes: &[u8; HEADER_SIZE]) {
        self.opaque = mask_modeled(bytes, self.format);
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.len() > 4 {
            return Err(IoError::UnsupportedDimensions(format!(
                "{} dimensions, 1 to 4 supported",
                self.dims.len()
            )));
        }
        if self.dims.iter().any(|&d| d == 0 || d > i16::MAX as usize) {
            return Err(IoError::InvalidHeader(format!("extents {:?} out of range", self.dims)));
        }
        if self.format == FormatKind::NiftiSingle && self.vox_offset < HEADER_SIZE {
            return Err(IoError::InvalidHeader(format!(
                "vox_offset {} lies inside the header",
                self.vox_offset
            )));
        }
        if self.vox_offset as f32 as usize != self.vox_offset {
            return Err(IoError::InvalidHeader("vox_offset not representable".into()));
        }
        if self.description.len() > 80 || self.description.bytes().any(|b| b == 0) {
            return Err(IoError::InvalidHeader(
                "description must be at most 80 bytes without NUL".into(),
            ));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<[u8; HEADER_SIZE]> {
        self.validate()?;
        let c = Codec(self.endianness);
        let mut b = *self.opaque;
        if !self.format.is_nifti() && (&b[344..348] == MAGIC_SINGLE || &b[344..348] == MAGIC_PAIR) {
            b[344..348].fill(0);
        }
        c.put_i32(&mut b, 0, HEADER_SIZE as i32);
        c.put_i16(&mut b, 40, self.dims.len() as i16);
        for i in 0..7 {
            let d = self.dims.get(i).copied().unwrap_or(1) as i16;
            c.put_i16(&mut b, 42 + 2 * i, d);
        }
        c.put_i16(&mut b, 70, self.datatype.code());
        c.put_i16(&mut b, 72, (self.datatype.bytes() * 8) as i16);
        for (i, &p) in self.pixdim.iter().enumerate() {
            c.put_f32(&mut b, 76 + 4 * i, p);
        }
        c.put_f32(&mut b, 108, self.vox_offset as f32);
        c.put_f32(&mut b, 112, self.scale_slope);
        c.put_f32(&mut b, 116, self.scale_intercept);
        b[148..148 + self.description.len()].copy_from_slice(self.description.as_bytes());
        if self.format.is_nifti() {
            let t = &self.transform;
            c.put_i16(&mut b, 252, t.qform_code);
            c.put_i16(&mut b, 254, t.sform_code);
            for i in 0..3 {
                c.put_f32(&mut b, 256 + 4 * i, t.quatern[i]);
                c.put_f32(&mut b, 268 + 4 * i, t.qoffset[i]);
                for j in 0..4 {
                    c.put_f32(&mut b, 280 + 16 * i + 4 * j, t.srow[i][j]);
                }
            }
            let magic = if self.format == FormatKind::NiftiSingle { MAGIC_SINGLE } else { MAGIC_PAIR };
            b[344..348].copy_from_slice(magic);
        }
        Ok(b)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let (format, endianness) = detect_format(bytes)?;
        let c = Codec(endianness);
        let ndim = c.i16(bytes, 40);
        if !(1..=7).contains(&ndim) {
            return Err(IoError::InvalidHeader(format!("dim[0] = {ndim}")));
        }
        let all: Vec<i16> = (0..ndim as usize).map(|i| c.i16(bytes, 42 + 2 * i)).collect();
        if all.iter().any(|&d| d < 1) {
            return Err(IoError::InvalidHeader(format!("non-positive extent in {all:?}")));
        }
        if all.len() > 4 && all[4..].iter().any(|&d| d != 1) {
            return Err(IoError::UnsupportedDimensions(format!("extents {all:?}")));
        }
        let dims: Vec<usize> = all.iter().take(4).map(|&d| d as usize).collect();
        let datatype = DataType::from_code(c.i16(bytes, 70))?;
        let bitpix = c.i16(bytes, 72);
        if bitpix as usize != datatype.bytes() * 8 {
            return Err(IoError::InvalidHeader(format!(
                "bitpix {bitpix} disagrees with datatype {}",
                datatype.name()
            )));
        }
        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = c.f32(bytes, 76 + 4 * i);
        }
        let offset = c.f32(bytes, 108);
        if !(offset >= 0.0) || offset.fract() != 0.0 {
            return Err(IoError::InvalidHeader(format!("vox_offset {offset}")));
        }
        let vox_offset = offset as usize;
        if format == FormatKind::NiftiSingle && vox_offset < HEADER_SIZE {
            return Err(IoError::InvalidHeader(format!("vox_offset {vox_offset} inside header")));
        }
        let descrip = &bytes[148..228];
        let end = descrip.iter().position(|&b| b == 0).unwrap_or(descrip.len());
        let description = String::from_utf8_lossy(&descrip[..end]).into_owned();
        let mut transform = SpatialTransform::default();
        if format.is_nifti() {
            transform.qform_code = c.i16(bytes, 252);
            transform.sform_code = c.i16(bytes, 254);
            for i in 0..3 {
                transform.quatern[i] = c.f32(bytes, 256 + 4 * i);
                transform.qoffset[i] = c.f32(bytes, 268 + 4 * i);
                for j in 0..4 {
                    transform.srow[i][j] = c.f32(bytes, 280 + 16 * i + 4 * j);
                }
            }
        }
        Ok(Self {
            format,
            endianness,
            dims,
            datatype,
            pixdim,
            scale_slope: c.f32(bytes, 112),
            scale_intercept: c.f32(bytes, 116),
            vox_offset,
            transform,
            description,
            opaque: mask_modeled(bytes, format),
        })
    }

    /// `name: value` pairs for every decoded field, in a fixed order.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let t = &self.transform;
        let mut out = vec![
            ("format", self.format.name().to_string()),
            ("endianness", self.endianness.name().to_string()),
            ("ndim", self.dims.len().to_string()),
            ("dims", self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")),
            ("datatype", format!("{} ({})", self.datatype.name(), self.datatype.code())),
            ("bitpix", (self.datatype.bytes() * 8).to_string()),
            ("voxel_size", list(&self.pixdim[1..4])),
            ("time_step", self.pixdim[4].to_string()),
            ("pixdim", list(&self.pixdim)),
            ("scale_slope", self.scale_slope.to_string()),
            ("scale_intercept", self.scale_intercept.to_string()),
            ("vox_offset", self.vox_offset.to_string()),
            ("description", self.description.clone()),
        ];
        if self.format.is_nifti() {
            out.extend([
                ("qform_code", t.qform_code.to_string()),
                ("sform_code", t.sform_code.to_string()),
                ("quatern_bcd", list(&t.quatern)),
                ("qoffset_xyz", list(&t.qoffset)),
                ("srow_x", list(&t.srow[0])),
                ("srow_y", list(&t.srow[1])),
                ("srow_z", list(&t.srow[2])),
            ]);
        }
        out
    }
}

/// Header and image paths of a two-file volume.
pub fn pair_paths(path: &Path) -> (PathBuf, PathBuf) {
    match path.extension().and_then(|e| e.to_str()) {
        Some("hdr") | Some("img") => (path.with_extension("hdr"), path.with_extension("img")),
        _ => {
            let mut hdr = path.as_os_str().to_owned();
            hdr.push(".hdr");
            let mut img = path.as_os_str().to_owned();
            img.push(".img");
            (hdr.into(), img.into())
        }
    }
}

fn header_path(path: &Path) -> PathBuf {
    if path.extension().and_then(|e| e.to_str()) == Some("img") {
        path.with_extension("hdr")
    } else {
        path.to_path_buf()
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| IoError::io(path, e))
}

fn read_prefix(path: &Path, len: usize) -> Result<Vec<u8>> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut buf = Vec::with_capacity(len);
    f.by_ref()
        .take(len as u64)
        .read_to_end(&mut buf)
        .map_err(|e| IoError::io(path, e))?;
    Ok(buf)
}

/// Format and byte order of the volume at `path` (an `.img` path is
/// redirected to its `.hdr`).
pub fn detect_format_path(path: &Path) -> Result<(FormatKind, Endianness)> {
    detect_format(&read_prefix(&header_path(path), HEADER_SIZE)?)
}

pub fn read_header(path: &Path) -> Result<VolumeHeader> {
    VolumeHeader::decode(&read_prefix(&header_path(path), HEADER_SIZE)?)
}

fn decode_samples(header: &VolumeHeader, data: &[u8]) -> Vec<f64> {
    let c = Codec(header.endianness);
    let width = header.datatype.bytes();
    let raw = data.chunks_exact(width).map(|b| match header.datatype {
        DataType::U8 => b[0] as f64,
        DataType::I16 => c.i16(b, 0) as f64,
        DataType::I32 => c.i32(b, 0) as f64,
        DataType::F32 => c.f32(b, 0) as f64,
        DataType::F64 => c.f64(b, 0),
    });
    // A zero slope means "no scaling" in both formats.
    if header.scale_slope != 0.0 {
        let (s, i) = (header.scale_slope as f64, header.scale_intercept as f64);
        raw.map(|v| v * s + i).collect()
    } else {
        raw.collect()
    }
}

pub fn read_volume(path: &Path) -> Result<(Volume4D, VolumeHeader)> {
    let header = read_header(path)?;
    let (data_path, bytes) = match header.format {
        FormatKind::NiftiSingle => (path.to_path_buf(), read_file(path)?),
        _ => {
            let (_, img) = pair_paths(path);
            let bytes = read_file(&img)?;
            (img, bytes)
        }
    };
    let expected = header.payload_bytes();
    let available = bytes.len().saturating_sub(header.vox_offset);
    if available < expected {
        return Err(IoError::TruncatedData {
            expected,
            found: available,
        });
    }
    if available > expected {
        return Err(IoError::SizeMismatch(format!(
            "{}: {available} data bytes for {expected} declared",
            data_path.display()
        )));
    }
    let samples = decode_samples(&header, &bytes[header.vox_offset..]);
    let volume = Volume4D::new(header.extents4(), samples)?
        .with_geometry(header.voxel_size(), header.time_step());
    Ok((volume, header))
}

fn encode_samples(header: &VolumeHeader, volume: &Volume4D) -> Result<Vec<u8>> {
    let c = Codec(header.endianness);
    let dt = header.datatype;
    let width = dt.bytes();
    let mut out = vec![0u8; volume.samples().len() * width];
    let (slope, inter) = (header.scale_slope as f64, header.scale_intercept as f64);
    for (chunk, &v) in out.chunks_exact_mut(width).zip(volume.samples()) {
        let stored = if slope != 0.0 { (v - inter) / slope } else { v };
        if let Some((lo, hi)) = dt.integer_range() {
            let r = stored.round();
            if !(lo..=hi).contains(&r) {
                return Err(IoError::ValueOutOfRange {
                    value: v,
                    datatype: dt.name(),
                });
            }
            match dt {
                DataType::U8 => chunk[0] = r as u8,
                DataType::I16 => c.put_i16(chunk, 0, r as i16),
                _ => c.put_i32(chunk, 0, r as i32),
            }
        } else if dt == DataType::F32 {
            let f = stored as f32;
            if f.is_infinite() {
                return Err(IoError::ValueOutOfRange {
                    value: v,
                    datatype: dt.name(),
                });
            }
            c.put_f32(chunk, 0, f);
        } else {
            c.put_f64(chunk, 0, stored);
        }
    }
    Ok(out)
}

fn check_shape(header: &VolumeHeader, volume: &Volume4D) -> Result<()> {
    if header.extents4() != volume.extents() {
        return Err(IoError::HeaderVolumeMismatch(format!(
            "header extents {:?} vs volume extents {:?}",
            header.dims,
            volume.extents()
        )));
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

/// Writes `volume` in the container named by `header.format`. Returns
/// warnings about information the container cannot hold.
pub fn write_volume(path: &Path, volume: &Volume4D, header: &VolumeHeader) -> Result<Vec<String>> {
    match header.format {
        FormatKind::Analyze75 => write_analyze(path, volume, header),
        FormatKind::NiftiSingle => write_nifti(path, volume, header, true).map(|_| Vec::new()),
        FormatKind::NiftiPair => write_nifti(path, volume, header, false).map(|_| Vec::new()),
    }
}

/// Writes a NIFTI-1 volume, as one `.nii` file when `single`, otherwise as
/// a `.hdr`/`.img` pair.
pub fn write_nifti(path: &Path, volume: &Volume4D, header: &VolumeHeader, single: bool) -> Result<()> {
    let mut h = header.clone();
    h.format = if single { FormatKind::NiftiSingle } else { FormatKind::NiftiPair };
    if single && h.vox_offset < NIFTI_SINGLE_OFFSET {
        h.vox_offset = NIFTI_SINGLE_OFFSET;
    }
    check_shape(&h, volume)?;
    let head = h.encode()?;
    let data = encode_samples(&h, volume)?;
    if single {
        let mut bytes = Vec::with_capacity(h.vox_offset + data.len());
        bytes.extend_from_slice(&head);
        // Extension flag (no extensions) and padding up to the data.
        bytes.resize(h.vox_offset, 0);
        bytes.extend_from_slice(&data);
        write_file(path, &bytes)
    } else {
        let (hdr, img) = pair_paths(path);
        write_file(&hdr, &head)?;
        let mut bytes = vec![0u8; h.vox_offset];
        bytes.extend_from_slice(&data);
        write_file(&img, &bytes)
    }
}

pub fn write_analyze(path: &Path, volume: &Volume4D, header: &VolumeHeader) -> Result<Vec<String>> {
    let mut h = header.clone();
    h.format = FormatKind::Analyze75;
    let mut warnings = Vec::new();
    if h.transform != SpatialTransform::default() {
        warnings.push("orientation parameters dropped: ANALYZE 7.5 has no qform/sform".to_string());
        h.transform = SpatialTransform::default();
    }
    if h.scale_intercept != 0.0 {
        warnings.push("scale intercept stored in an unused ANALYZE field; other readers may ignore it".to_string());
    }
    check_shape(&h, volume)?;
    let head = h.encode()?;
    let data = encode_samples(&h, volume)?;
    let (hdr, img) = pair_paths(path);
    write_file(&hdr, &head)?;
    let mut bytes = vec![0u8; h.vox_offset];
    bytes.extend_from_slice(&data);
    write_file(&img, &bytes)?;
    Ok(warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_volume() -> Volume4D {
        let samples: Vec<f64> = (0..2 * 3 * 4 * 5).map(|i| (i % 17) as f64 - 3.0).collect();
        Volume4D::new([2, 3, 4, 5], samples).unwrap().with_geometry([2.0, 2.5, 3.0], 2.0)
    }

    #[test]
    fn header_round_trip_all_formats() {
        let dir = tempfile::tempdir().unwrap();
        let vol = sample_volume();
        for format in [FormatKind::NiftiSingle, FormatKind::NiftiPair, FormatKind::Analyze75] {
            for endianness in [Endianness::Little, Endianness::Big] {
                let mut h = VolumeHeader::for_volume(&vol, format, DataType::I16);
                h.endianness = endianness;
                h.description = "round trip".into();
                let path = dir.path().join(format!("v_{}_{}", format.name(), endianness.name()));
                let path = path.with_extension(format.extension());
                write_volume(&path, &vol, &h).unwrap();
                assert_eq!(detect_format_path(&path).unwrap(), (format, endianness));
                let (back, hb) = read_volume(&path).unwrap();
                assert_eq!(hb, h);
                assert_eq!(back, vol);
            }
        }
    }

    #[test]
    fn swapped_size_field_reports_big_endian() {
        let mut bytes = [0u8; HEADER_SIZE];
        bytes[..4].copy_from_slice(&348i32.to_be_bytes());
        assert_eq!(detect_format(&bytes).unwrap(), (FormatKind::Analyze75, Endianness::Big));
        bytes[344..348].copy_from_slice(b"ni1\0");
        assert_eq!(detect_format(&bytes).unwrap(), (FormatKind::NiftiPair, Endianness::Big));
        let junk = [7u8; HEADER_SIZE];
        assert!(matches!(detect_format(&junk), Err(IoError::UnrecognizedFormat)));
        assert!(matches!(detect_format(&bytes[..100]), Err(IoError::TruncatedHeader(100))));
    }

    #[test]
    fn complex_datatype_is_rejected() {
        let h = VolumeHeader::new(FormatKind::NiftiSingle, &[2, 2], DataType::F32);
        let mut bytes = h.encode().unwrap();
        bytes[70..72].copy_from_slice(&32i16.to_le_bytes());
        assert!(matches!(VolumeHeader::decode(&bytes), Err(IoError::UnsupportedDatatype(32))));
    }

    #[test]
    fn opaque_bytes_survive() {
        let mut h = VolumeHeader::new(FormatKind::NiftiSingle, &[2, 2, 1, 1], DataType::U8);
        let mut raw = [0u8; HEADER_SIZE];
        raw[4..14].copy_from_slice(b"dsr-opaque");
        raw[328..335].copy_from_slice(b"intent!");
        h.set_opaque_bytes(&raw);
        let bytes = h.encode().unwrap();
        let back = VolumeHeader::decode(&bytes).unwrap();
        assert_eq!(&back.opaque_bytes()[4..14], b"dsr-opaque");
        assert_eq!(&back.opaque_bytes()[328..335], b"intent!");
        assert_eq!(back, h);
    }

    #[test]
    fn scaling_and_zero_slope() {
        let dir = tempfile::tempdir().unwrap();
        let vol = Volume4D::new([2, 2, 1, 1], vec![1.5, 2.0, 2.5, 3.0]).unwrap();
        let mut h = VolumeHeader::for_volume(&vol, FormatKind::NiftiSingle, DataType::I16);
        h.scale_slope = 0.5;
        h.scale_intercept = 1.0;
        let p = dir.path().join("s.nii");
        write_volume(&p, &vol, &h).unwrap();
        assert_eq!(read_volume(&p).unwrap().0, vol);
        h.scale_slope = 0.0;
        h.scale_intercept = 0.0;
        let q = dir.path().join("z.nii");
        write_volume(&q, &vol, &h).unwrap();
        let (back, _) = read_volume(&q).unwrap();
        assert_eq!(back.samples(), &[2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn truncated_and_oversized_payloads() {
        let dir = tempfile::tempdir().unwrap();
        let vol = sample_volume();
        let h = VolumeHeader::for_volume(&vol, FormatKind::NiftiSingle, DataType::F32);
        let p = dir.path().join("t.nii");
        write_volume(&p, &vol, &h).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_volume(&p), Err(IoError::TruncatedData { .. })));
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0; 8]);
        fs::write(&p, &longer).unwrap();
        assert!(matches!(read_volume(&p), Err(IoError::SizeMismatch(_))));
    }

    #[test]
    fn out_of_range_integer_samples() {
        let dir = tempfile::tempdir().unwrap();
        let vol = Volume4D::new([1, 1, 1, 2], vec![300.0, -1.0]).unwrap();
        let h = VolumeHeader::for_volume(&vol, FormatKind::NiftiSingle, DataType::U8);
        assert!(matches!(
            write_volume(&dir.path().join("o.nii"), &vol, &h),
            Err(IoError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn analyze_warns_about_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let vol = sample_volume();
        let mut h = VolumeHeader::for_volume(&vol, FormatKind::Analyze75, DataType::F64);
        h.transform.qform_code = 1;
        let w = write_analyze(&dir.path().join("a.hdr"), &vol, &h).unwrap();
        assert_eq!(w.len(), 1);
        let (_, back) = read_volume(&dir.path().join("a.img")).unwrap();
        assert_eq!(back.format, FormatKind::Analyze75);
        assert_eq!(back.transform, SpatialTransform::default());
    }
}
