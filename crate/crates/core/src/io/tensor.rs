//! Binary tensor container.
//!
//! A fixed 64-byte header followed by the raw little-endian values in
//! row-major order:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `RLTENSR\0` |
//! | 8 | 1 | format version (1) |
//! | 9 | 1 | dtype code, see [`DType`] |
//! | 10 | 1 | rank, 1..=6 |
//! | 11 | 1 | order flag, 0 = row-major |
//! | 12 | 4 | reserved, zero |
//! | 16 | 48 | six `u64` dims; entries past `rank` are zero |

use std::path::Path;

use ndarray::{Array2, Array3, ArrayD, IxDyn};

use crate::encode::{RaeTensor, RaedTensor};
use crate::error::{Error, Result};
use crate::fog::DepthImage;

pub const MAGIC: [u8; 8] = *b"RLTENSR\0";
pub const HEADER_LEN: usize = 64;
pub const VERSION: u8 = 1;
pub const MAX_RANK: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32 = 1,
    F64 = 2,
    U8 = 3,
    U16 = 4,
    I32 = 5,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::U8 => 1,
            DType::U16 => 2,
            DType::F32 | DType::I32 => 4,
            DType::F64 => 8,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            1 => DType::F32,
            2 => DType::F64,
            3 => DType::U8,
            4 => DType::U16,
            5 => DType::I32,
            other => return Err(Error::MalformedTensor(format!("unknown dtype code {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    U16(Vec<u16>),
    I32(Vec<i32>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
            TensorData::U8(_) => DType::U8,
            TensorData::U16(_) => DType::U16,
            TensorData::I32(_) => DType::I32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
            TensorData::U16(v) => v.len(),
            TensorData::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::MalformedTensor(format!("rank {} outside 1..={MAX_RANK}", dims.len())));
        }
        let n = element_count(&dims)?;
        if n != data.len() {
            return Err(Error::MalformedTensor(format!("dims {dims:?} need {n} values, got {}", data.len())));
        }
        Ok(Tensor { dims, data })
    }

    pub fn from_f32(array: ArrayD<f32>) -> Self {
        let dims = array.shape().to_vec();
        Tensor { dims, data: TensorData::F32(array.as_standard_layout().iter().copied().collect()) }
    }

    pub fn from_f64(array: ArrayD<f64>) -> Self {
        let dims = array.shape().to_vec();
        Tensor { dims, data: TensorData::F64(array.as_standard_layout().iter().copied().collect()) }
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> ArrayD<f64> {
        let values: Vec<f64> = match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
            TensorData::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::U16(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::I32(v) => v.iter().map(|&x| f64::from(x)).collect(),
        };
        ArrayD::from_shape_vec(IxDyn(&self.dims), values).expect("dims validated at construction")
    }

    pub fn into_f32(self) -> Result<ArrayD<f32>> {
        match self.data {
            TensorData::F32(v) => Ok(ArrayD::from_shape_vec(IxDyn(&self.dims), v).expect("dims validated")),
            other => Err(Error::MalformedTensor(format!("expected f32 data, got {:?}", other.dtype()))),
        }
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::MalformedTensor(format!("dims {dims:?} overflow")))
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedTensor(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let (header, body) = bytes.split_at(HEADER_LEN);
    if header[..8] != MAGIC {
        return Err(Error::MalformedTensor("bad magic".into()));
    }
    if header[8] != VERSION {
        return Err(Error::MalformedTensor(format!("unsupported version {}", header[8])));
    }
    let dtype = DType::from_code(header[9])?;
    let rank = header[10] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::MalformedTensor(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    if header[11] != 0 {
        return Err(Error::MalformedTensor(format!("unsupported order flag {}", header[11])));
    }
    if header[12..16] != [0; 4] {
        return Err(Error::MalformedTensor("reserved header bytes are not zero".into()));
    }
    let mut dims = Vec::with_capacity(rank);
    for k in 0..MAX_RANK {
        let off = 16 + 8 * k;
        let d = u64::from_le_bytes(header[off..off + 8].try_into().expect("8-byte slice"));
        if k < rank {
            dims.push(usize::try_from(d).map_err(|_| Error::MalformedTensor(format!("dim {d} too large")))?);
        } else if d != 0 {
            return Err(Error::MalformedTensor(format!("dim slot {k} beyond rank {rank} is non-zero")));
        }
    }
    let n = element_count(&dims)?;
    let expected =
        n.checked_mul(dtype.size()).ok_or_else(|| Error::MalformedTensor(format!("dims {dims:?} overflow")))?;
    if body.len() != expected {
        return Err(Error::MalformedTensor(format!(
            "dims {dims:?} of {dtype:?} need {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let data = match dtype {
        DType::F32 => {
            TensorData::F32(body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        DType::F64 => {
            TensorData::F64(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        }
        DType::U8 => TensorData::U8(body.to_vec()),
        DType::U16 => {
            TensorData::U16(body.chunks_exact(2).map(|c| u16::from_le_bytes(c.try_into().unwrap())).collect())
        }
        DType::I32 => {
            TensorData::I32(body.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
        }
    };
    Ok(Tensor { dims, data })
}

pub fn encode(tensor: &Tensor) -> Vec<u8> {
    let dtype = tensor.data.dtype();
    let mut out = Vec::with_capacity(HEADER_LEN + tensor.data.len() * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[VERSION, dtype as u8, tensor.dims.len() as u8, 0, 0, 0, 0, 0]);
    for k in 0..MAX_RANK {
        let d = tensor.dims.get(k).copied().unwrap_or(0) as u64;
        out.extend_from_slice(&d.to_le_bytes());
    }
    match &tensor.data {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::U8(v) => out.extend_from_slice(v),
        TensorData::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    decode(&super::read_bytes(path)?)
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    super::write_bytes(path, &encode(tensor))
}

/// Decodes a `2×D×A×R` f32 cube (power, elevation index).
pub fn decode_raed(bytes: &[u8]) -> Result<RaedTensor> {
    let tensor = decode(bytes)?;
    if tensor.dims.len() != 4 || tensor.dims[0] != 2 {
        return Err(Error::MalformedTensor(format!("RAED cube must be 2×D×A×R, got {:?}", tensor.dims)));
    }
    let array = tensor.into_f32()?.into_dimensionality::<ndarray::Ix4>().expect("rank checked");
    RaedTensor::from_channels(array.view())
}

pub fn encode_raed(raed: &RaedTensor) -> Vec<u8> {
    let (d, a, r) = raed.power.dim();
    let mut values = Vec::with_capacity(2 * d * a * r);
    values.extend(raed.power.iter().copied());
    values.extend(raed.elevation.iter().map(|&e| f32::from(e)));
    encode(&Tensor { dims: vec![2, d, a, r], data: TensorData::F32(values) })
}

pub fn read_raed(path: &Path) -> Result<RaedTensor> {
    decode_raed(&super::read_bytes(path)?)
}

/// RAE volumes are stored as `R×A×E` f32.
pub fn write_rae(path: &Path, rae: &RaeTensor) -> Result<()> {
    let values: Vec<f32> = rae.power.iter().map(|&v| v as f32).collect();
    let tensor = Tensor { dims: rae.power.shape().to_vec(), data: TensorData::F32(values) };
    write_tensor(path, &tensor)
}

pub fn read_rae(path: &Path, normalized: bool) -> Result<RaeTensor> {
    let tensor = read_tensor(path)?;
    if tensor.dims.len() != 3 {
        return Err(Error::MalformedTensor(format!("RAE volume must be rank 3, got {:?}", tensor.dims)));
    }
    let power: Array3<f64> = tensor.to_f64().into_dimensionality().expect("rank checked");
    Ok(RaeTensor { power, normalized })
}

/// Depth maps are rank-2 `H×W` float tensors in meters.
pub fn decode_depth(bytes: &[u8]) -> Result<DepthImage> {
    let tensor = decode(bytes)?;
    if tensor.dims.len() != 2 || !matches!(tensor.data.dtype(), DType::F32 | DType::F64) {
        return Err(Error::MalformedTensor(format!(
            "depth map must be a rank-2 float tensor, got {:?} {:?}",
            tensor.data.dtype(),
            tensor.dims
        )));
    }
    let (h, w) = (tensor.dims[0], tensor.dims[1]);
    let (h32, w32) = match (u32::try_from(h), u32::try_from(w)) {
        (Ok(h), Ok(w)) => (h, w),
        _ => return Err(Error::MalformedTensor(format!("depth map {h}x{w} too large"))),
    };
    DepthImage::new(w32, h32, tensor.to_f64().into_raw_vec_and_offset().0)
}

pub fn read_depth(path: &Path) -> Result<DepthImage> {
    decode_depth(&super::read_bytes(path)?)
}

pub fn write_depth(path: &Path, depth: &DepthImage) -> Result<()> {
    let values: Vec<f32> = depth.depths.iter().map(|&d| d as f32).collect();
    let tensor = Tensor { dims: vec![depth.height as usize, depth.width as usize], data: TensorData::F32(values) };
    write_tensor(path, &tensor)
}

/// Row-major `H×W` view of a depth map.
pub fn depth_as_array(depth: &DepthImage) -> Array2<f64> {
    Array2::from_shape_vec((depth.height as usize, depth.width as usize), depth.depths.clone())
        .expect("depth image length validated")
}
