//! Vector-valued convolutional layers and split max-pooling.
//!
//! Images are `height × width × channels` grids of algebra elements; 1-D
//! signals use `height = 1` with a `1 × w` kernel. Cross-correlation is
//! "valid" (no padding): each output axis has `(input − kernel) / stride + 1`
//! positions.
//!
//! The real image `φ(x)` interleaves coordinates into the channel axis:
//! real channel `c·n + k` holds coordinate `k` of channel `c`. With that
//! layout `φ` leaves the underlying buffer untouched.

use nalgebra::DMatrix;
use rand::Rng;

use crate::activation::SplitActivation;
use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::linalg::{kron, matmul};
use crate::vmatrix::VMatrix;

/// `(height, width)` pair used for kernels, strides and pooling windows.
pub type Size2 = (usize, usize);

/// Vector-valued image, data laid out as `[((y·W + x)·C + c)·n + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VImage {
    algebra: Algebra,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Real image, data laid out as `[(y·W + x)·C + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

/// Real filter bank, data laid out as `[((qy·kw + qx)·C_in + c)·C_out + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFilterBank {
    pub kernel: Size2,
    pub in_channels: usize,
    pub out_channels: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    algebra: Algebra,
    kernel: Size2,
    in_channels: usize,
    filters: usize,
    /// `W(q, c, k)` at `[((q·C + c)·K + k)·n ..]` with `q = qy·kw + qx`.
    weights: Vec<f64>,
    bias: VMatrix,
    stride: Size2,
    activation: SplitActivation,
}

fn output_extent(input: usize, window: usize, stride: usize, axis: &str) -> Result<usize> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidArgument(format!(
            "{axis}: window and stride must be positive"
        )));
    }
    if input < window {
        return Err(Error::shape(format!(
            "{axis}: input extent {input} is smaller than window {window}"
        )));
    }
    Ok((input - window) / stride + 1)
}

impl RealImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(RealImage {
            height,
            width,
            channels,
            data,
        })
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

impl VImage {
    pub fn new(
        algebra: &Algebra,
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        let expected = height * width * channels * algebra.dim();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data".into()));
        }
        Ok(VImage {
            algebra: algebra.clone(),
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(algebra: &Algebra, height: usize, width: usize, channels: usize) -> Self {
        VImage {
            algebra: algebra.clone(),
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels * algebra.dim()],
        }
    }

    pub fn random<R: Rng + ?Sized>(
        algebra: &Algebra,
        height: usize,
        width: usize,
        channels: usize,
        rng: &mut R,
    ) -> Self {
        let data = (0..height * width * channels * algebra.dim())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        VImage {
            algebra: algebra.clone(),
            height,
            width,
            channels,
            data,
        }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Coordinates of pixel `(y, x)` in channel `c`.
    pub fn pixel(&self, y: usize, x: usize, c: usize) -> &[f64] {
        let n = self.algebra.dim();
        let start = ((y * self.width + x) * self.channels + c) * n;
        &self.data[start..start + n]
    }

    fn pixel_mut(&mut self, y: usize, x: usize, c: usize) -> &mut [f64] {
        let n = self.algebra.dim();
        let start = ((y * self.width + x) * self.channels + c) * n;
        &mut self.data[start..start + n]
    }

    /// `φ(x)`: a real image with `n·C` channels.
    pub fn phi(&self) -> RealImage {
        RealImage {
            height: self.height,
            width: self.width,
            channels: self.channels * self.algebra.dim(),
            data: self.data.clone(),
        }
    }

    pub fn unphi(algebra: &Algebra, image: &RealImage) -> Result<Self> {
        let n = algebra.dim();
        if !image.channels.is_multiple_of(n) {
            return Err(Error::shape(format!(
                "{} channels are not divisible by the algebra dimension {n}",
                image.channels
            )));
        }
        VImage::new(
            algebra,
            image.height,
            image.width,
            image.channels / n,
            image.data.clone(),
        )
    }
}

impl ConvLayer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        algebra: &Algebra,
        kernel: Size2,
        in_channels: usize,
        filters: usize,
        weights: Vec<f64>,
        bias: VMatrix,
        stride: Size2,
        activation: SplitActivation,
    ) -> Result<Self> {
        if kernel.0 == 0 || kernel.1 == 0 {
            return Err(Error::InvalidArgument(
                "kernel extents must be positive".into(),
            ));
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        let expected = kernel.0 * kernel.1 * in_channels * filters * algebra.dim();
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: weights.len(),
            });
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter weights".into()));
        }
        if bias.algebra() != algebra {
            return Err(Error::AlgebraMismatch);
        }
        if bias.shape() != (filters, 1) {
            return Err(Error::shape(format!("bias must be {filters}x1")));
        }
        Ok(ConvLayer {
            algebra: algebra.clone(),
            kernel,
            in_channels,
            filters,
            weights,
            bias,
            stride,
            activation,
        })
    }

    /// Weight coordinates uniform in `[-s, s]` with `s = 1/√(n·C·kh·kw)`,
    /// bias coordinates uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(
        algebra: &Algebra,
        kernel: Size2,
        in_channels: usize,
        filters: usize,
        stride: Size2,
        activation: SplitActivation,
        rng: &mut R,
    ) -> Result<Self> {
        let n = algebra.dim();
        let fan_in = (n * in_channels * kernel.0 * kernel.1).max(1) as f64;
        let s = 1.0 / fan_in.sqrt();
        let weights = (0..kernel.0 * kernel.1 * in_channels * filters * n)
            .map(|_| rng.random_range(-s..=s))
            .collect();
        let bias = VMatrix::random(algebra, filters, 1, rng);
        Self::new(
            algebra,
            kernel,
            in_channels,
            filters,
            weights,
            bias,
            stride,
            activation,
        )
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn kernel(&self) -> Size2 {
        self.kernel
    }

    pub fn stride(&self) -> Size2 {
        self.stride
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn bias(&self) -> &VMatrix {
        &self.bias
    }

    pub fn activation(&self) -> SplitActivation {
        self.activation
    }

    /// `W(q, c, k)` for kernel offset `(qy, qx)`.
    pub fn weight(&self, qy: usize, qx: usize, c: usize, k: usize) -> &[f64] {
        let n = self.algebra.dim();
        let q = qy * self.kernel.1 + qx;
        let start = ((q * self.in_channels + c) * self.filters + k) * n;
        &self.weights[start..start + n]
    }

    pub fn output_size(&self, height: usize, width: usize) -> Result<Size2> {
        Ok((
            output_extent(height, self.kernel.0, self.stride.0, "height")?,
            output_extent(width, self.kernel.1, self.stride.1, "width")?,
        ))
    }

    fn check_input(&self, x: &VImage) -> Result<Size2> {
        if x.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        if x.channels() != self.in_channels {
            return Err(Error::DimensionMismatch {
                expected: self.in_channels,
                found: x.channels(),
            });
        }
        self.output_size(x.height(), x.width())
    }

    /// Nested-loop evaluation of `ψ(Σ_c Σ_q W(q,c,k)·x(p·S + q, c) + b_k)`.
    pub fn forward_direct(&self, x: &VImage) -> Result<VImage> {
        let (oh, ow) = self.check_input(x)?;
        let n = self.algebra.dim();
        let (kh, kw) = self.kernel;
        let mut out = VImage::zeros(&self.algebra, oh, ow, self.filters);
        let mut acc = vec![0.0; n];
        for oy in 0..oh {
            for ox in 0..ow {
                for k in 0..self.filters {
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    for c in 0..self.in_channels {
                        for qy in 0..kh {
                            for qx in 0..kw {
                                let px =
                                    x.pixel(oy * self.stride.0 + qy, ox * self.stride.1 + qx, c);
                                self.algebra
                                    .multiply_into(self.weight(qy, qx, c, k), px, &mut acc);
                            }
                        }
                    }
                    let b = self.bias.entry(k, 0);
                    let dst = out.pixel_mut(oy, ox, k);
                    for ((d, a), bk) in dst.iter_mut().zip(&acc).zip(b) {
                        *d = self.activation.real(a + bk);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Real filters `Σ_ℓ W_ℓ ⊗ P_{ℓ:}ᵀ`, the Kronecker product taken over the
    /// (filter, channel) axes at every kernel offset.
    pub fn real_filters(&self) -> RealFilterBank {
        let n = self.algebra.dim();
        let (kh, kw) = self.kernel;
        let (c_in, c_out) = (self.in_channels * n, self.filters * n);
        let factors = self.algebra.left_factors();
        let mut data = vec![0.0; kh * kw * c_in * c_out];
        for qy in 0..kh {
            for qx in 0..kw {
                let q = qy * kw + qx;
                let mut block = DMatrix::zeros(c_out, c_in);
                for (l, factor) in factors.iter().enumerate() {
                    let component = DMatrix::from_fn(self.filters, self.in_channels, |k, c| {
                        self.weight(qy, qx, c, k)[l]
                    });
                    block += kron(&component, factor);
                }
                for ci in 0..c_in {
                    for co in 0..c_out {
                        data[(q * c_in + ci) * c_out + co] = block[(co, ci)];
                    }
                }
            }
        }
        RealFilterBank {
            kernel: self.kernel,
            in_channels: c_in,
            out_channels: c_out,
            data,
        }
    }

    /// Real-valued emulation: one real cross-correlation with `n·C` input and
    /// `n·K` output channels, plus `φ(b)`, then `ψ_R`.
    pub fn forward_emulated(&self, xr: &RealImage) -> Result<RealImage> {
        let n = self.algebra.dim();
        if xr.channels != self.in_channels * n {
            return Err(Error::DimensionMismatch {
                expected: self.in_channels * n,
                found: xr.channels,
            });
        }
        let mut out = real_cross_correlation(xr, &self.real_filters(), self.stride)?;
        let bias = self.bias.data();
        for px in out.data.chunks_mut(out.channels) {
            for (v, b) in px.iter_mut().zip(bias) {
                *v += b;
            }
        }
        self.activation.apply_in_place(&mut out.data);
        Ok(out)
    }
}

/// Valid real cross-correlation via im2col and a matrix product.
pub fn real_cross_correlation(
    x: &RealImage,
    filters: &RealFilterBank,
    stride: Size2,
) -> Result<RealImage> {
    if x.channels != filters.in_channels {
        return Err(Error::DimensionMismatch {
            expected: filters.in_channels,
            found: x.channels,
        });
    }
    let (kh, kw) = filters.kernel;
    let oh = output_extent(x.height, kh, stride.0, "height")?;
    let ow = output_extent(x.width, kw, stride.1, "width")?;
    let taps = kh * kw;
    let cols = x.channels * taps;

    // column index: channel-major, then kernel offset
    let patches = DMatrix::from_fn(oh * ow, cols, |pos, col| {
        let (oy, ox) = (pos / ow, pos % ow);
        let (c, q) = (col / taps, col % taps);
        let (qy, qx) = (q / kw, q % kw);
        x.at(oy * stride.0 + qy, ox * stride.1 + qx, c)
    });
    let kernel = DMatrix::from_fn(cols, filters.out_channels, |col, co| {
        let (c, q) = (col / taps, col % taps);
        filters.data[(q * filters.in_channels + c) * filters.out_channels + co]
    });
    let y = matmul(&patches, &kernel)?;
    let mut data = Vec::with_capacity(oh * ow * filters.out_channels);
    for pos in 0..oh * ow {
        for co in 0..filters.out_channels {
            data.push(y[(pos, co)]);
        }
    }
    RealImage::new(oh, ow, filters.out_channels, data)
}

/// Max-pooling with the coordinatewise (marginal) ordering: each coordinate
/// of each channel is pooled independently.
pub fn split_maxpool(x: &VImage, window: Size2, stride: Size2) -> Result<VImage> {
    let oh = output_extent(x.height, window.0, stride.0, "height")?;
    let ow = output_extent(x.width, window.1, stride.1, "width")?;
    let n = x.algebra.dim();
    let mut out = VImage::zeros(&x.algebra, oh, ow, x.channels);
    for oy in 0..oh {
        for ox in 0..ow {
            for c in 0..x.channels {
                let mut best = vec![f64::NEG_INFINITY; n];
                for wy in 0..window.0 {
                    for wx in 0..window.1 {
                        let px = x.pixel(oy * stride.0 + wy, ox * stride.1 + wx, c);
                        for (b, v) in best.iter_mut().zip(px) {
                            *b = b.max(*v);
                        }
                    }
                }
                out.pixel_mut(oy, ox, c).copy_from_slice(&best);
            }
        }
    }
    Ok(out)
}
