//! Conversions between interleaved images and NCHW tensors.

use candle_core::{DType, Device, Tensor};
use svbrdf_core::Image;

use crate::error::Result;

/// `(1, C, H, W)` tensor holding `img`.
pub fn image_to_tensor(img: &Image, dtype: DType, device: &Device) -> Result<Tensor> {
    let (w, h, c) = img.shape();
    let hwc = Tensor::from_slice(img.data(), (h, w, c), device)?;
    Ok(hwc.permute((2, 0, 1))?.unsqueeze(0)?.to_dtype(dtype)?.contiguous()?)
}

/// First batch element of an NCHW tensor (or a CHW tensor) as an image.
pub fn tensor_to_image(t: &Tensor) -> Result<Image> {
    let t = if t.rank() == 4 { t.get(0)? } else { t.clone() };
    let (c, h, w) = t.dims3()?;
    let data = t
        .permute((1, 2, 0))?
        .to_dtype(DType::F32)?
        .flatten_all()?
        .to_vec1::<f32>()?;
    Ok(Image::new(w, h, c, data)?)
}

/// Scalar value of a one-element tensor.
pub fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.flatten_all()?.to_vec1::<f64>()?[0])
}
