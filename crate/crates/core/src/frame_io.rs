//! Frame sequences in and masks, detection records and annotated frames out.
//!
//! Inputs are directories of binary PPM (P6) or PNG files, ordered by file
//! name, or a headerless RGB24 stream whose dimensions come from the caller.
//! Masks are written as binary PGM (P5) with foreground 255 and background 0.
//! Detections are newline-delimited JSON, one record per processed frame.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::BBox;
use crate::mask_ops::ForegroundMask;
use crate::tracker::Track;

/// 8-bit RGB triple.
pub type Rgb = [u8; 3];

/// Smallest accepted frame side, in pixels.
pub const MIN_FRAME_SIDE: usize = 16;

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("no decodable frames in {0}")]
    EmptySequence(PathBuf),
    #[error("frame {index} is {found:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("frame dimensions {0}x{1} are below the {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE} minimum")]
    InvalidDims(usize, usize),
    #[error("pixel buffer holds {found} pixels, expected {expected}")]
    PixelCount { expected: usize, found: usize },
    #[error("detection record for frame {next} follows frame {prev}")]
    FrameOrder { prev: usize, next: usize },
    #[error("malformed detection record on line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, FrameIoError>;

/// One RGB video frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    index: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize, index: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(FrameIoError::InvalidDims(width, height));
        }
        if pixels.len() != width * height {
            return Err(FrameIoError::PixelCount {
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            index,
            pixels,
        })
    }

    /// Frame filled with a single color.
    pub fn filled(width: usize, height: usize, index: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, index, vec![color; width * height])
    }

    /// Builds a frame from interleaved RGB bytes.
    pub fn from_rgb_bytes(width: usize, height: usize, index: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(FrameIoError::PixelCount {
                expected: width * height,
                found: bytes.len() / 3,
            });
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, index, pixels)
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

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: Rgb) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }
}

// ---------------------------------------------------------------------------
// Sequences

/// Where a sequence comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SequenceDescriptor {
    /// Directory of `.ppm` / `.png` files, read in lexicographic name order.
    Directory(PathBuf),
    /// Headerless interleaved RGB24 stream.
    Raw {
        path: PathBuf,
        width: usize,
        height: usize,
    },
}

#[derive(Clone, Debug)]
enum SourceKind {
    Files(Vec<PathBuf>),
    Raw { path: PathBuf, frame_count: usize },
}

/// An opened, validated frame sequence with constant dimensions.
#[derive(Clone, Debug)]
pub struct SequenceSource {
    kind: SourceKind,
    width: usize,
    height: usize,
}

/// Opens a sequence and checks that every frame shares the first frame's
/// dimensions. Only headers are read here; pixel data is decoded lazily.
pub fn open_sequence(descriptor: &SequenceDescriptor) -> Result<SequenceSource> {
    match descriptor {
        SequenceDescriptor::Directory(dir) => open_directory(dir),
        SequenceDescriptor::Raw {
            path,
            width,
            height,
        } => open_raw(path, *width, *height),
    }
}

fn open_directory(dir: &Path) -> Result<SequenceSource> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && frame_format(p).is_some())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(FrameIoError::EmptySequence(dir.to_path_buf()));
    }

    let mut expected = None;
    for (index, path) in paths.iter().enumerate() {
        let dims = probe_dims(path)?;
        match expected {
            None => {
                if dims.0 < MIN_FRAME_SIDE || dims.1 < MIN_FRAME_SIDE {
                    return Err(FrameIoError::InvalidDims(dims.0, dims.1));
                }
                expected = Some(dims);
            }
            Some(e) if e != dims => {
                return Err(FrameIoError::DimensionMismatch {
                    index,
                    expected: e,
                    found: dims,
                })
            }
            Some(_) => {}
        }
    }
    let (width, height) = expected.expect("at least one frame");
    Ok(SequenceSource {
        kind: SourceKind::Files(paths),
        width,
        height,
    })
}

fn open_raw(path: &Path, width: usize, height: usize) -> Result<SequenceSource> {
    if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
        return Err(FrameIoError::InvalidDims(width, height));
    }
    let len = fs::metadata(path)?.len() as usize;
    let frame_bytes = width * height * 3;
    if len % frame_bytes != 0 {
        return Err(FrameIoError::Decode {
            path: path.to_path_buf(),
            reason: format!("stream length {len} is not a multiple of the {frame_bytes}-byte frame"),
        });
    }
    if len == 0 {
        return Err(FrameIoError::EmptySequence(path.to_path_buf()));
    }
    Ok(SequenceSource {
        kind: SourceKind::Raw {
            path: path.to_path_buf(),
            frame_count: len / frame_bytes,
        },
        width,
        height,
    })
}

impl SequenceSource {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            SourceKind::Files(paths) => paths.len(),
            SourceKind::Raw { frame_count, .. } => *frame_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates frames in index order, decoding each on demand.
    pub fn frames(&self) -> Result<FrameIter<'_>> {
        let raw = match &self.kind {
            SourceKind::Raw { path, .. } => Some(BufReader::new(File::open(path)?)),
            SourceKind::Files(_) => None,
        };
        Ok(FrameIter {
            source: self,
            next: 0,
            raw,
        })
    }
}

/// Single-consumer iterator over a [`SequenceSource`].
pub struct FrameIter<'a> {
    source: &'a SequenceSource,
    next: usize,
    raw: Option<BufReader<File>>,
}

impl Iterator for FrameIter<'_> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.source.len() {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let (w, h) = self.source.dims();
        let frame = match &self.source.kind {
            SourceKind::Files(paths) => read_frame_file(&paths[index], index),
            SourceKind::Raw { .. } => {
                let reader = self.raw.as_mut().expect("raw reader opened");
                let mut buf = vec![0u8; w * h * 3];
                reader
                    .read_exact(&mut buf)
                    .map_err(FrameIoError::from)
                    .and_then(|_| Frame::from_rgb_bytes(w, h, index, &buf))
            }
        };
        Some(frame.and_then(|f| {
            if f.dims() == (w, h) {
                Ok(f)
            } else {
                Err(FrameIoError::DimensionMismatch {
                    index,
                    expected: (w, h),
                    found: f.dims(),
                })
            }
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.source.len() - self.next;
        (left, Some(left))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FrameFormat {
    Ppm,
    Png,
}

fn frame_format(path: &Path) -> Option<FrameFormat> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "ppm" => Some(FrameFormat::Ppm),
        "png" => Some(FrameFormat::Png),
        _ => None,
    }
}

fn decode_error(path: &Path, reason: impl ToString) -> FrameIoError {
    FrameIoError::Decode {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn probe_dims(path: &Path) -> Result<(usize, usize)> {
    let mut reader = BufReader::new(File::open(path)?);
    match frame_format(path) {
        Some(FrameFormat::Ppm) => {
            let header = read_pnm_header(&mut reader).map_err(|e| decode_error(path, e))?;
            if header.magic != *b"P6" {
                return Err(decode_error(path, "not a binary PPM (P6)"));
            }
            Ok((header.width, header.height))
        }
        Some(FrameFormat::Png) => {
            let decoder = png::Decoder::new(reader);
            let png_reader = decoder.read_info().map_err(|e| decode_error(path, e))?;
            let info = png_reader.info();
            Ok((info.width as usize, info.height as usize))
        }
        None => Err(decode_error(path, "unsupported extension")),
    }
}

/// Reads one frame file (PPM or PNG, chosen by extension).
pub fn read_frame_file(path: &Path, index: usize) -> Result<Frame> {
    let file = BufReader::new(File::open(path)?);
    let (w, h, bytes) = match frame_format(path) {
        Some(FrameFormat::Ppm) => read_ppm(file).map_err(|e| decode_error(path, e))?,
        Some(FrameFormat::Png) => decode_png(file).map_err(|e| decode_error(path, e))?,
        None => return Err(decode_error(path, "unsupported extension")),
    };
    Frame::from_rgb_bytes(w, h, index, &bytes)
}

// ---------------------------------------------------------------------------
// PNM

struct PnmHeader {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
}

fn read_pnm_header<R: BufRead>(reader: &mut R) -> std::result::Result<PnmHeader, String> {
    let mut magic = [0u8; 2];
    reader.read_exact(&mut magic).map_err(|e| e.to_string())?;
    let width = read_pnm_token(reader)?;
    let height = read_pnm_token(reader)?;
    let maxval = read_pnm_token(reader)?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    Ok(PnmHeader {
        magic,
        width,
        height,
        maxval,
    })
}

/// Reads one decimal header field, skipping whitespace and `#` comments, and
/// consumes the single whitespace byte that terminates it.
fn read_pnm_token<R: BufRead>(reader: &mut R) -> std::result::Result<usize, String> {
    let mut byte = [0u8; 1];
    let next = |reader: &mut R, byte: &mut [u8; 1]| -> std::result::Result<u8, String> {
        reader
            .read_exact(byte)
            .map_err(|_| "truncated header".to_string())?;
        Ok(byte[0])
    };
    let mut c = next(reader, &mut byte)?;
    loop {
        if c == b'#' {
            while c != b'\n' {
                c = next(reader, &mut byte)?;
            }
        } else if c.is_ascii_whitespace() {
            c = next(reader, &mut byte)?;
        } else {
            break;
        }
    }
    let mut value: usize = 0;
    while c.is_ascii_digit() {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((c - b'0') as usize))
            .ok_or("header value overflow")?;
        c = next(reader, &mut byte)?;
    }
    if !c.is_ascii_whitespace() {
        return Err(format!("unexpected byte {c:#04x} in header"));
    }
    Ok(value)
}

/// Decodes a binary PPM into `(width, height, rgb_bytes)`. Samples are
/// rescaled to 0..=255 when `maxval < 255`.
pub fn read_ppm<R: Read>(reader: R) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut reader = BufReader::new(reader);
    let header = read_pnm_header(&mut reader)?;
    if header.magic != *b"P6" {
        return Err("not a binary PPM (P6)".into());
    }
    let mut data = vec![0u8; header.width * header.height * 3];
    reader
        .read_exact(&mut data)
        .map_err(|_| "truncated pixel data".to_string())?;
    rescale(&mut data, header.maxval);
    Ok((header.width, header.height, data))
}

fn rescale(data: &mut [u8], maxval: usize) {
    if maxval != 255 {
        for v in data {
            *v = ((*v as usize * 255 + maxval / 2) / maxval).min(255) as u8;
        }
    }
}

pub fn write_ppm<W: Write>(frame: &Frame, writer: W) -> io::Result<()> {
    let mut writer = BufWriter::new(writer);
    write!(writer, "P6\n{} {}\n255\n", frame.width(), frame.height())?;
    writer.write_all(&frame.to_rgb_bytes())?;
    writer.flush()
}

/// Writes a mask as binary PGM: foreground 255, background 0.
pub fn write_mask<W: Write>(mask: &ForegroundMask, writer: W) -> io::Result<()> {
    let mut writer = BufWriter::new(writer);
    write!(writer, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    let body: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    writer.write_all(&body)?;
    writer.flush()
}

pub fn write_mask_file(mask: &ForegroundMask, path: &Path) -> io::Result<()> {
    write_mask(mask, File::create(path)?)
}

/// Reads a binary PGM mask; any nonzero sample is foreground.
pub fn read_mask<R: Read>(reader: R) -> std::result::Result<ForegroundMask, String> {
    let mut reader = BufReader::new(reader);
    let header = read_pnm_header(&mut reader)?;
    if header.magic != *b"P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let mut data = vec![0u8; header.width * header.height];
    reader
        .read_exact(&mut data)
        .map_err(|_| "truncated pixel data".to_string())?;
    Ok(ForegroundMask::from_bits(
        header.width,
        header.height,
        data.into_iter().map(|v| v != 0).collect(),
    ))
}

// ---------------------------------------------------------------------------
// PNG

fn decode_png<R: BufRead + io::Seek>(
    reader: R,
) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or("png output buffer size overflow")?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let rgb = match info.color_type {
        png::ColorType::Rgb => buf.to_vec(),
        png::ColorType::Rgba => buf
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => {
            buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect()
        }
        png::ColorType::Indexed => return Err("indexed png not expanded".into()),
    };
    Ok((w, h, rgb))
}

pub fn write_png<W: Write>(frame: &Frame, writer: W) -> io::Result<()> {
    let mut encoder = png::Encoder::new(
        BufWriter::new(writer),
        frame.width() as u32,
        frame.height() as u32,
    );
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(io::Error::other)?;
    writer
        .write_image_data(&frame.to_rgb_bytes())
        .map_err(io::Error::other)?;
    writer.finish().map_err(io::Error::other)
}

/// Copy of `frame` with each box drawn as a 1-pixel red outline.
pub fn annotate(frame: &Frame, boxes: &[BBox]) -> Frame {
    const RED: Rgb = [255, 0, 0];
    let mut out = frame.clone();
    let (w, h) = frame.dims();
    for b in boxes {
        if b.w == 0 || b.h == 0 || b.x >= w || b.y >= h {
            continue;
        }
        let x1 = (b.right() - 1).min(w - 1);
        let y1 = (b.bottom() - 1).min(h - 1);
        for x in b.x..=x1 {
            out.set(x, b.y, RED);
            out.set(x, y1, RED);
        }
        for y in b.y..=y1 {
            out.set(b.x, y, RED);
            out.set(x1, y, RED);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Detection records

/// One labeled box inside a [`DetectionRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub id: u64,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoxRecord {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x, self.y, self.w, self.h)
    }
}

/// `{"frame":N,"boxes":[{"id":..,"x":..,"y":..,"w":..,"h":..}]}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: usize,
    pub boxes: Vec<BoxRecord>,
}

impl DetectionRecord {
    /// Record for `tracks`, boxes sorted by ascending id.
    pub fn from_tracks<'a>(frame: usize, tracks: impl IntoIterator<Item = &'a Track>) -> Self {
        let mut boxes: Vec<BoxRecord> = tracks
            .into_iter()
            .map(|t| BoxRecord {
                id: t.id,
                x: t.bbox.x,
                y: t.bbox.y,
                w: t.bbox.w,
                h: t.bbox.h,
            })
            .collect();
        boxes.sort_by_key(|b| b.id);
        Self { frame, boxes }
    }

    pub fn bboxes(&self) -> Vec<BBox> {
        self.boxes.iter().map(BoxRecord::bbox).collect()
    }
}

/// Appends detection records to a sink, enforcing strictly increasing frames.
pub struct DetectionWriter<W: Write> {
    sink: W,
    last_frame: Option<usize>,
}

impl<W: Write> DetectionWriter<W> {
    pub fn new(sink: W) -> Self {
        Self {
            sink,
            last_frame: None,
        }
    }

    pub fn write_detections(&mut self, frame_index: usize, tracks: &[&Track]) -> Result<()> {
        self.write_record(&DetectionRecord::from_tracks(frame_index, tracks.iter().copied()))
    }

    pub fn write_record(&mut self, record: &DetectionRecord) -> Result<()> {
        if let Some(prev) = self.last_frame {
            if record.frame <= prev {
                return Err(FrameIoError::FrameOrder {
                    prev,
                    next: record.frame,
                });
            }
        }
        let line = serde_json::to_string(record).map_err(|source| FrameIoError::Record {
            line: 0,
            source,
        })?;
        self.sink.write_all(line.as_bytes())?;
        self.sink.write_all(b"\n")?;
        self.last_frame = Some(record.frame);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.sink.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Parses newline-delimited detection records; blank lines are skipped.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|source| FrameIoError::Record { line: i + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_records_file(path: &Path) -> Result<Vec<DetectionRecord>> {
    read_records(BufReader::new(File::open(path)?))
}
