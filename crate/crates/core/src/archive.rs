//! On-disk descriptor formats.
//!
//! A descriptor record is little-endian binary:
//!
//! ```text
//! "HPGR"  u16 version
//! u32 blocks_x  u32 blocks_y  u32 block_len
//! u32 cell_w  u32 cell_h  u32 block_w  u32 block_h  u32 stride  f64 epsilon  u8 bins_mode
//! [u8; 32] prior_id
//! f64 * (blocks_x * blocks_y * block_len)
//! ```
//!
//! An archive wraps labeled records: `"HPGA" u16 version u32 count`, then per
//! entry `u32 len + class_id`, `u32 len + sample_id`, and one record.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::descriptor::{BinsMode, Descriptor, GridConfig, Layout};
use crate::error::{Error, Result};

const RECORD_MAGIC: &[u8; 4] = b"HPGR";
const ARCHIVE_MAGIC: &[u8; 4] = b"HPGA";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDescriptor {
    pub class_id: String,
    pub sample_id: String,
    pub descriptor: Descriptor,
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| Error::InvalidParameter(format!("{v} does not fit in a u32 field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    put_u32(out, s.len())?;
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

pub fn encode_descriptor(d: &Descriptor, out: &mut Vec<u8>) -> Result<()> {
    if d.values.len() != d.layout.len() {
        return Err(Error::DimensionMismatch(format!(
            "descriptor has {} values, layout needs {}",
            d.values.len(),
            d.layout.len()
        )));
    }
    out.extend_from_slice(RECORD_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(out, d.layout.blocks_x)?;
    put_u32(out, d.layout.blocks_y)?;
    put_u32(out, d.layout.block_len)?;
    let g = &d.grid;
    for v in [g.cell_w, g.cell_h, g.block_w, g.block_h, g.stride] {
        put_u32(out, v)?;
    }
    out.extend_from_slice(&g.epsilon.to_le_bytes());
    out.push(match g.bins {
        BinsMode::Selected => 0,
        BinsMode::Full => 1,
    });
    out.extend_from_slice(&d.prior_id);
    for v in &d.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

/// Cursor over a byte buffer that reports the failing offset.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::UnsupportedFormat {
                offset: self.pos,
                reason: format!("truncated while reading {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let at = self.pos;
        if self.take(4, "magic")? != magic {
            return Err(Error::UnsupportedFormat {
                offset: at,
                reason: format!("expected magic {:?}", String::from_utf8_lossy(magic)),
            });
        }
        let at = self.pos;
        let version = u16::from_le_bytes(self.take(2, "version")?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::UnsupportedFormat {
                offset: at,
                reason: format!("unsupported version {version}"),
            });
        }
        Ok(())
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)?;
        let at = self.pos;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::UnsupportedFormat {
            offset: at,
            reason: format!("{what} is not UTF-8"),
        })
    }

    fn descriptor(&mut self) -> Result<Descriptor> {
        self.magic(RECORD_MAGIC)?;
        let layout = Layout {
            blocks_x: self.u32("blocks_x")?,
            blocks_y: self.u32("blocks_y")?,
            block_len: self.u32("block_len")?,
        };
        let mut grid = GridConfig {
            cell_w: self.u32("cell_w")?,
            cell_h: self.u32("cell_h")?,
            block_w: self.u32("block_w")?,
            block_h: self.u32("block_h")?,
            stride: self.u32("stride")?,
            epsilon: self.f64("epsilon")?,
            bins: BinsMode::Selected,
        };
        let at = self.pos;
        grid.bins = match self.take(1, "bins_mode")?[0] {
            0 => BinsMode::Selected,
            1 => BinsMode::Full,
            other => {
                return Err(Error::UnsupportedFormat {
                    offset: at,
                    reason: format!("unknown bins mode {other}"),
                })
            }
        };
        grid.validate().map_err(|e| Error::UnsupportedFormat {
            offset: at,
            reason: e.to_string(),
        })?;
        let prior_id: [u8; 32] = self.take(32, "prior_id")?.try_into().unwrap();
        let n = layout.len();
        let raw = self.take(n * 8, "values")?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Descriptor {
            values,
            layout,
            grid,
            prior_id,
        })
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::UnsupportedFormat {
                offset: self.pos,
                reason: "trailing bytes".into(),
            });
        }
        Ok(())
    }
}

pub fn decode_descriptor(bytes: &[u8]) -> Result<Descriptor> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let d = r.descriptor()?;
    r.finish()?;
    Ok(d)
}

pub fn encode_archive(entries: &[LabeledDescriptor]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(ARCHIVE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, entries.len())?;
    for e in entries {
        put_str(&mut out, &e.class_id)?;
        put_str(&mut out, &e.sample_id)?;
        encode_descriptor(&e.descriptor, &mut out)?;
    }
    Ok(out)
}

pub fn decode_archive(bytes: &[u8]) -> Result<Vec<LabeledDescriptor>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.magic(ARCHIVE_MAGIC)?;
    let count = r.u32("count")?;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        entries.push(LabeledDescriptor {
            class_id: r.string("class_id")?,
            sample_id: r.string("sample_id")?,
            descriptor: r.descriptor()?,
        });
    }
    r.finish()?;
    Ok(entries)
}

pub fn write_archive(path: &Path, entries: &[LabeledDescriptor]) -> Result<()> {
    fs::write(path, encode_archive(entries)?)?;
    Ok(())
}

pub fn read_archive(path: &Path) -> Result<Vec<LabeledDescriptor>> {
    decode_archive(&fs::read(path)?)
}

/// One descriptor per row: `class_id,sample_id,v0,v1,...` with values
/// printed in shortest round-trip form.
pub fn to_csv(entries: &[LabeledDescriptor]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = write!(out, "{},{}", e.class_id, e.sample_id);
        for v in &e.descriptor.values {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(values: Vec<f64>, bins: BinsMode) -> Descriptor {
        Descriptor {
            layout: Layout {
                blocks_x: 1,
                blocks_y: values.len(),
                block_len: 1,
            },
            values,
            grid: GridConfig {
                bins,
                ..GridConfig::default()
            },
            prior_id: [0xab; 32],
        }
    }

    #[test]
    fn record_header_layout() {
        let mut buf = Vec::new();
        encode_descriptor(&sample(vec![0.5, 0.25], BinsMode::Full), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"HPGR");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(buf.len(), 6 + 12 + 20 + 8 + 1 + 32 + 16);
        assert_eq!(&buf[buf.len() - 8..], &0.25f64.to_le_bytes());
    }

    #[test]
    fn truncated_and_bad_magic() {
        let mut buf = Vec::new();
        encode_descriptor(&sample(vec![0.5, 0.25], BinsMode::Selected), &mut buf).unwrap();
        match decode_descriptor(&buf[..buf.len() - 3]) {
            Err(Error::UnsupportedFormat { offset, .. }) => assert_eq!(offset, buf.len() - 16),
            other => panic!("{other:?}"),
        }
        buf[0] = b'X';
        assert!(matches!(
            decode_descriptor(&buf),
            Err(Error::UnsupportedFormat { offset: 0, .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let e = LabeledDescriptor {
            class_id: "s1_f2".into(),
            sample_id: "03".into(),
            descriptor: sample(vec![0.5, 0.1], BinsMode::Selected),
        };
        assert_eq!(to_csv(&[e]), "s1_f2,03,0.5,0.1\n");
    }

    proptest! {
        #[test]
        fn archive_round_trip(
            rows in prop::collection::vec(
                ("[a-z0-9_]{1,8}", "[0-9]{1,3}", prop::collection::vec(0.0f64..1.0, 1..20), any::<bool>()),
                0..6,
            )
        ) {
            let entries: Vec<LabeledDescriptor> = rows
                .into_iter()
                .map(|(c, s, v, full)| LabeledDescriptor {
                    class_id: c,
                    sample_id: s,
                    descriptor: sample(v, if full { BinsMode::Full } else { BinsMode::Selected }),
                })
                .collect();
            let bytes = encode_archive(&entries).unwrap();
            prop_assert_eq!(decode_archive(&bytes).unwrap(), entries);
        }
    }
}
