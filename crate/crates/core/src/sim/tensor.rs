use serde::{Deserialize, Serialize};

/// Dense `channels x height x width` map, row-major per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == channels * height * width).then_some(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn add_assign(&mut self, other: &FeatureMap) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Mean over each channel.
    pub fn channel_means(&self) -> Vec<f64> {
        let plane = self.plane() as f64;
        self.data
            .chunks(self.plane())
            .map(|c| c.iter().sum::<f64>() / plane)
            .collect()
    }
}

/// Conv weights laid out `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvKernel {
    pub out_channels: usize,
    pub in_channels: usize,
    pub size: usize,
    pub data: Vec<f64>,
}

impl ConvKernel {
    pub fn zeros(out_channels: usize, in_channels: usize, size: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            size,
            data: vec![0.0; out_channels * in_channels * size * size],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.size * self.size
    }

    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.data[((o * self.in_channels + i) * self.size + ky) * self.size + kx]
    }

    /// Adds `scale * conv(input)` into `out` (same padding, stride 1).
    pub fn accumulate(&self, input: &FeatureMap, scale: f64, out: &mut [f64]) {
        debug_assert_eq!(input.channels, self.in_channels);
        let (h, w) = (input.height, input.width);
        debug_assert_eq!(out.len(), self.out_channels * h * w);
        let pad = self.size / 2;
        for o in 0..self.out_channels {
            let out_plane = &mut out[o * h * w..(o + 1) * h * w];
            for i in 0..self.in_channels {
                let in_plane = &input.data[i * h * w..(i + 1) * h * w];
                for ky in 0..self.size {
                    // rows where y + ky - pad lands inside the input
                    let y_lo = pad.saturating_sub(ky);
                    let y_hi = (h + pad).saturating_sub(ky).min(h);
                    for kx in 0..self.size {
                        let wgt = scale * self.weight(o, i, ky, kx);
                        if wgt == 0.0 {
                            continue;
                        }
                        let x_lo = pad.saturating_sub(kx);
                        let x_hi = (w + pad).saturating_sub(kx).min(w);
                        for y in y_lo..y_hi {
                            let src_row = (y + ky - pad) * w;
                            let dst_row = y * w;
                            for x in x_lo..x_hi {
                                out_plane[dst_row + x] += wgt * in_plane[src_row + x + kx - pad];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Non-overlapping average pooling; trailing rows/columns that do not fill a
/// window are dropped.
pub fn avg_pool(input: &FeatureMap, factor: usize) -> FeatureMap {
    if factor == 1 {
        return input.clone();
    }
    let (h, w) = (input.height / factor, input.width / factor);
    let mut out = FeatureMap::zeros(input.channels, h, w);
    let norm = (factor * factor) as f64;
    for c in 0..input.channels {
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0.0;
                for dy in 0..factor {
                    for dx in 0..factor {
                        sum += input.get(c, y * factor + dy, x * factor + dx);
                    }
                }
                out.data[(c * h + y) * w + x] = sum / norm;
            }
        }
    }
    out
}
