//! Binary foreground masks and their cleanup: 3x3 median filtering and
//! morphological closing with a square structuring element.

/// Row-major binary image, `true` = foreground.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ForegroundMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl ForegroundMask {
    /// All-background mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Panics if `bits.len() != width * height`.
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask bit count does not match dims");
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// True when every foreground pixel of `self` is also foreground in `other`.
    pub fn is_subset_of(&self, other: &ForegroundMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// 3x3 majority filter. Borders replicate the nearest edge pixel.
pub fn median3x3(mask: &ForegroundMask) -> ForegroundMask {
    let (w, h) = mask.dims();
    let mut out = ForegroundMask::new(w, h);
    if w == 0 || h == 0 {
        return out;
    }
    let mut column_sums = vec![0u8; w];
    for y in 0..h {
        let above = mask.row(y.saturating_sub(1));
        let here = mask.row(y);
        let below = mask.row((y + 1).min(h - 1));
        for x in 0..w {
            column_sums[x] = above[x] as u8 + here[x] as u8 + below[x] as u8;
        }
        let out_row = &mut out.bits[y * w..(y + 1) * w];
        for x in 0..w {
            let left = column_sums[x.saturating_sub(1)];
            let right = column_sums[(x + 1).min(w - 1)];
            out_row[x] = left + column_sums[x] + right >= 5;
        }
    }
    out
}

/// Morphological closing with a 3x3 square, applied `times` times.
pub fn close(mask: &ForegroundMask, times: usize) -> ForegroundMask {
    close_with_kernel(mask, 3, times)
}

/// Closing (dilate then erode) with a `kernel × kernel` square, applied
/// `times` times. `kernel` must be odd.
///
/// The image is treated as embedded in an unbounded all-false plane: the
/// dilation may spill past the border and the erosion sees that spill, so the
/// result is extensive and idempotent right up to the edges.
pub fn close_with_kernel(mask: &ForegroundMask, kernel: usize, times: usize) -> ForegroundMask {
    assert!(kernel % 2 == 1, "structuring element size must be odd");
    let mut current = mask.clone();
    for _ in 0..times {
        current = close_once(&current, kernel / 2);
    }
    current
}

fn close_once(mask: &ForegroundMask, radius: usize) -> ForegroundMask {
    let (w, h) = mask.dims();
    if radius == 0 || w == 0 || h == 0 {
        return mask.clone();
    }
    let pw = w + 2 * radius;
    let ph = h + 2 * radius;
    let mut padded = vec![false; pw * ph];
    for y in 0..h {
        let dst = (y + radius) * pw + radius;
        padded[dst..dst + w].copy_from_slice(mask.row(y));
    }

    let dilated = square_filter(&padded, pw, ph, radius, Reduce::Any);
    let eroded = square_filter(&dilated, pw, ph, radius, Reduce::All);

    let mut out = ForegroundMask::new(w, h);
    for y in 0..h {
        let src = (y + radius) * pw + radius;
        out.bits[y * w..(y + 1) * w].copy_from_slice(&eroded[src..src + w]);
    }
    out
}

#[derive(Clone, Copy)]
enum Reduce {
    Any,
    All,
}

/// Separable square-window OR/AND. Windows are clipped to the buffer.
fn square_filter(src: &[bool], w: usize, _h: usize, radius: usize, reduce: Reduce) -> Vec<bool> {
    let horizontal = row_pass(src, w, radius, reduce);
    column_pass(&horizontal, w, radius, reduce)
}

fn combine(acc: &mut [bool], other: &[bool], reduce: Reduce) {
    match reduce {
        Reduce::Any => acc.iter_mut().zip(other).for_each(|(a, &b)| *a |= b),
        Reduce::All => acc.iter_mut().zip(other).for_each(|(a, &b)| *a &= b),
    }
}

/// Combines each row with itself shifted by up to `radius` either way.
fn row_pass(src: &[bool], w: usize, radius: usize, reduce: Reduce) -> Vec<bool> {
    let mut out = src.to_vec();
    for (row, out_row) in src.chunks_exact(w).zip(out.chunks_exact_mut(w)) {
        for d in 1..=radius.min(w.saturating_sub(1)) {
            combine(&mut out_row[d..], &row[..w - d], reduce);
            combine(&mut out_row[..w - d], &row[d..], reduce);
        }
    }
    out
}

/// Combines each row with the rows up to `radius` above and below.
fn column_pass(src: &[bool], w: usize, radius: usize, reduce: Reduce) -> Vec<bool> {
    let mut out = src.to_vec();
    let len = src.len();
    for d in 1..=radius {
        let shift = d * w;
        if shift >= len {
            break;
        }
        combine(&mut out[shift..], &src[..len - shift], reduce);
        combine(&mut out[..len - shift], &src[shift..], reduce);
    }
    out
}
