//! ROI image loading (binary PGM, PNG) and labeled dataset enumeration.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Width and height of the finger-vein ROI the defaults are tuned for.
pub const ROI_DIMS: (usize, usize) = (370, 130);

/// What to do when a loaded image does not have the configured ROI size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoiHandling {
    /// Keep whatever size the file has.
    #[default]
    Keep,
    /// Reject images of any other size.
    Strict(usize, usize),
    /// Center-crop larger images; reject smaller ones.
    CenterCrop(usize, usize),
    /// Bilinear resample to the target size.
    Resize(usize, usize),
}

fn unsupported(offset: usize, reason: impl Into<String>) -> Error {
    Error::UnsupportedFormat {
        offset,
        reason: reason.into(),
    }
}

/// Decodes a binary (P5) PGM with maxval 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(unsupported(0, "not a binary PGM (missing P5 magic)"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(unsupported(start, format!("expected {name}")));
        }
        fields[i] = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| unsupported(start, format!("{name} out of range")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(unsupported(
            pos,
            format!("maxval {maxval} (only 255 supported)"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(unsupported(pos, "zero image dimension"));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(unsupported(pos, "missing whitespace after header"));
    }
    pos += 1;
    let need = width
        .checked_mul(height)
        .ok_or_else(|| unsupported(pos, "dimensions overflow"))?;
    if bytes.len() - pos < need {
        return Err(unsupported(
            bytes.len(),
            format!("truncated raster: {} of {need} bytes", bytes.len() - pos),
        ));
    }
    GrayImage::from_u8(width, height, &bytes[pos..pos + need])
}

/// Encodes as binary PGM with intensity `round(255 * p)`.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.to_u8());
    out
}

pub fn save_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Decodes a PNG; color images are converted with Rec. 601 luma weights.
pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| unsupported(0, format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| unsupported(0, "png: image too large"))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| unsupported(0, format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];
    let channels = info.color_type.samples();
    let stride = info.line_size;
    let mut pixels = Vec::with_capacity(w * h);
    for row in data.chunks_exact(stride).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            let v = match channels {
                1 | 2 => f64::from(px[0]),
                _ => 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]),
            };
            pixels.push((v / 255.0).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(w, h, pixels)
}

fn apply_roi(image: GrayImage, roi: RoiHandling) -> Result<GrayImage> {
    let (w, h) = (image.width(), image.height());
    match roi {
        RoiHandling::Keep => Ok(image),
        RoiHandling::Strict(ew, eh) if (w, h) == (ew, eh) => Ok(image),
        RoiHandling::Strict(ew, eh) => Err(Error::WrongDimensions {
            expected_w: ew,
            expected_h: eh,
            width: w,
            height: h,
        }),
        RoiHandling::CenterCrop(ew, eh) if w >= ew && h >= eh => image.center_crop(ew, eh),
        RoiHandling::CenterCrop(ew, eh) => Err(Error::WrongDimensions {
            expected_w: ew,
            expected_h: eh,
            width: w,
            height: h,
        }),
        RoiHandling::Resize(ew, eh) => image.resize_bilinear(ew, eh),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

pub fn load_image(path: &Path, roi: RoiHandling) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    let image = match extension(path).as_deref() {
        Some("pgm") => decode_pgm(&bytes)?,
        Some("png") => decode_png(&bytes)?,
        _ if bytes.starts_with(b"P5") => decode_pgm(&bytes)?,
        _ if bytes.starts_with(b"\x89PNG") => decode_png(&bytes)?,
        _ => {
            return Err(unsupported(
                0,
                format!("unrecognized image file {}", path.display()),
            ))
        }
    };
    apply_roi(image, roi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetLayout {
    /// `root/<subject>/<finger>/<sample>.pgm`
    #[default]
    Nested,
    /// `root/<subject>_<finger>_<sample>.pgm`
    Flat,
}

impl std::str::FromStr for DatasetLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nested" => Ok(DatasetLayout::Nested),
            "flat" => Ok(DatasetLayout::Flat),
            other => Err(Error::InvalidParameter(format!(
                "unknown dataset layout `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    /// Subject and finger; each finger is its own class.
    pub class_id: String,
    pub sample_id: String,
    /// Path relative to the dataset root.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub layout: DatasetLayout,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetIndex {
    pub fn class_count(&self) -> usize {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.class_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn full_path(&self, entry: &DatasetEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Cache form: one `class_id<TAB>sample_id<TAB>relative_path` per line.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.class_id, e.sample_id, e.path.display()))
            .collect()
    }

    pub fn from_text(root: &Path, layout: DatasetLayout, text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, line)| {
                let parts: Vec<&str> = line.split('\t').collect();
                if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
                    return Err(Error::malformed(
                        i + 1,
                        "entry",
                        "expected class<TAB>sample<TAB>path",
                    ));
                }
                Ok(DatasetEntry {
                    class_id: parts[0].to_string(),
                    sample_id: parts[1].to_string(),
                    path: PathBuf::from(parts[2]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        finish_index(root, layout, entries)
    }
}

fn is_image(path: &Path) -> bool {
    matches!(extension(path).as_deref(), Some("pgm" | "png"))
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    paths.sort_by(|a, b| {
        a.as_os_str()
            .as_encoded_bytes()
            .cmp(b.as_os_str().as_encoded_bytes())
    });
    Ok(paths)
}

fn name_of(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Enumerates a labeled dataset in byte-wise lexicographic path order.
pub fn index_dataset(root: &Path, layout: DatasetLayout) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("dataset root {} is not a directory", root.display()),
        )));
    }
    let mut entries = Vec::new();
    match layout {
        DatasetLayout::Nested => {
            for subject in sorted_dir(root)?.into_iter().filter(|p| p.is_dir()) {
                for finger in sorted_dir(&subject)?.into_iter().filter(|p| p.is_dir()) {
                    for file in sorted_dir(&finger)?
                        .into_iter()
                        .filter(|p| p.is_file() && is_image(p))
                    {
                        entries.push(DatasetEntry {
                            class_id: format!("{}/{}", name_of(&subject), name_of(&finger)),
                            sample_id: stem_of(&file),
                            path: file.strip_prefix(root).unwrap_or(&file).to_path_buf(),
                        });
                    }
                }
            }
        }
        DatasetLayout::Flat => {
            for file in sorted_dir(root)?
                .into_iter()
                .filter(|p| p.is_file() && is_image(p))
            {
                let stem = stem_of(&file);
                let mut parts = stem.rsplitn(3, '_');
                let (Some(sample), Some(finger), Some(subject)) =
                    (parts.next(), parts.next(), parts.next())
                else {
                    continue;
                };
                entries.push(DatasetEntry {
                    class_id: format!("{subject}_{finger}"),
                    sample_id: sample.to_string(),
                    path: file.strip_prefix(root).unwrap_or(&file).to_path_buf(),
                });
            }
        }
    }
    finish_index(root, layout, entries)
}

fn finish_index(
    root: &Path,
    layout: DatasetLayout,
    mut entries: Vec<DatasetEntry>,
) -> Result<DatasetIndex> {
    if entries.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    entries.sort_by(|a, b| {
        a.path
            .as_os_str()
            .as_encoded_bytes()
            .cmp(b.path.as_os_str().as_encoded_bytes())
    });
    let mut keys: Vec<(&str, &str)> = entries
        .iter()
        .map(|e| (e.class_id.as_str(), e.sample_id.as_str()))
        .collect();
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateEntry {
            class_id: w[0].0.to_string(),
            sample_id: w[0].1.to_string(),
        });
    }
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        layout,
        entries,
    })
}
