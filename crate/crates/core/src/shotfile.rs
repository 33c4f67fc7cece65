//! RASEHET1 binary shot files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "RASEHET1"
//! version    u32      1
//! sample_rate f64     Hz
//! n_shots    u32
//! n_samples  u32
//! n_windows  u32
//! windows    n_windows × (label: 16 bytes zero-padded ASCII, start: u64, end: u64)
//! payload    n_shots × n_samples × (re: f64, im: f64), shot-major
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::analysis::ShotSource;
use crate::error::{Error, Result};
use crate::sequence::{HeterodyneRecord, Timeline, Window, WindowKind};

pub const MAGIC: &[u8; 8] = b"RASEHET1";
pub const FORMAT_VERSION: u32 = 1;
const FIXED_HEADER: u64 = 8 + 4 + 8 + 4 + 4 + 4;
const WINDOW_ENTRY: u64 = 16 + 8 + 8;
const LABEL_LEN: usize = 16;
const SAMPLE_BYTES: u64 = 16;

fn header_len(n_windows: u64) -> u64 {
    FIXED_HEADER + n_windows * WINDOW_ENTRY
}

fn encode_header(timeline: &Timeline, n_shots: u32) -> Result<Vec<u8>> {
    let n_samples = u32::try_from(timeline.n_samples())
        .map_err(|_| Error::Config("record length exceeds u32".into()))?;
    let mut out = Vec::with_capacity(header_len(timeline.windows().len() as u64) as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&timeline.sample_rate().to_le_bytes());
    out.extend_from_slice(&n_shots.to_le_bytes());
    out.extend_from_slice(&n_samples.to_le_bytes());
    out.extend_from_slice(&(timeline.windows().len() as u32).to_le_bytes());
    for w in timeline.windows() {
        let mut label = [0u8; LABEL_LEN];
        let text = w.kind.label().as_bytes();
        label[..text.len()].copy_from_slice(text);
        out.extend_from_slice(&label);
        out.extend_from_slice(&(w.start as u64).to_le_bytes());
        out.extend_from_slice(&(w.end as u64).to_le_bytes());
    }
    Ok(out)
}

/// Append-only writer; shots must arrive in index order.
pub struct ShotWriter {
    out: BufWriter<File>,
    path: PathBuf,
    n_samples: usize,
    expected: usize,
    written: usize,
    buffer: Vec<u8>,
}

impl ShotWriter {
    pub fn create(path: impl AsRef<Path>, timeline: &Timeline, n_shots: usize) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let n = u32::try_from(n_shots).map_err(|_| Error::Config("n_shots exceeds u32".into()))?;
        let header = encode_header(timeline, n)?;
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::with_capacity(1 << 20, file);
        out.write_all(&header).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out,
            path,
            n_samples: timeline.n_samples(),
            expected: n_shots,
            written: 0,
            buffer: Vec::with_capacity(timeline.n_samples() * SAMPLE_BYTES as usize),
        })
    }

    pub fn write_shot(&mut self, shot: &HeterodyneRecord) -> Result<()> {
        if shot.samples.len() != self.n_samples {
            return Err(Error::Config(format!(
                "shot {} has {} samples, file expects {}",
                shot.shot_index,
                shot.samples.len(),
                self.n_samples
            )));
        }
        if self.written == self.expected {
            return Err(Error::Config(format!("file already holds {} shots", self.expected)));
        }
        self.buffer.clear();
        for s in &shot.samples {
            self.buffer.extend_from_slice(&s.re.to_le_bytes());
            self.buffer.extend_from_slice(&s.im.to_le_bytes());
        }
        self.out
            .write_all(&self.buffer)
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::Config(format!(
                "header announces {} shots but {} were written",
                self.expected, self.written
            )));
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        self.out
            .get_ref()
            .sync_all()
            .map_err(|e| Error::io(&self.path, e))
    }
}

/// Write every shot of `source` in index order.
pub fn write_shot_file<S: ShotSource + ?Sized>(path: impl AsRef<Path>, source: &S) -> Result<()> {
    let timeline = source.timeline();
    let mut writer = ShotWriter::create(path, &timeline, source.n_shots())?;
    for i in 0..source.n_shots() {
        writer.write_shot(&source.shot(i)?)?;
    }
    writer.finish()
}

/// Read-only view of a shot file; shots are read by index at fixed offsets,
/// so concurrent readers need no coordination.
#[derive(Debug)]
pub struct ShotFile {
    file: File,
    path: PathBuf,
    timeline: Arc<Timeline>,
    n_shots: usize,
    payload_offset: u64,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!("header ends inside {what}"),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl ShotFile {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let actual = file.metadata().map_err(|e| Error::io(&path, e))?.len();

        let mut fixed = vec![0u8; FIXED_HEADER as usize];
        let got = read_up_to(&mut file, &mut fixed).map_err(|e| Error::io(&path, e))?;
        let mut cur = Cursor {
            bytes: &fixed[..got],
            pos: 0,
        };
        let magic = cur.take(8, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {:?}, expected \"RASEHET1\"", String::from_utf8_lossy(magic)),
            });
        }
        let version = cur.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format {
                offset: 8,
                message: format!("unsupported format version {version}"),
            });
        }
        let sample_rate = cur.f64("sample rate")?;
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Format {
                offset: 12,
                message: format!("sample rate {sample_rate} is not positive"),
            });
        }
        let n_shots = cur.u32("shot count")? as usize;
        let n_samples = cur.u32("sample count")? as usize;
        let n_windows = cur.u32("window count")? as u64;

        let table_len = n_windows * WINDOW_ENTRY;
        let mut table = vec![0u8; table_len.min(actual) as usize];
        let got = read_up_to(&mut file, &mut table).map_err(|e| Error::io(&path, e))?;
        if (got as u64) < table_len {
            return Err(Error::Format {
                offset: FIXED_HEADER + got as u64,
                message: format!("window table ends early ({n_windows} windows announced)"),
            });
        }
        let mut cur = Cursor { bytes: &table, pos: 0 };
        let mut windows = Vec::with_capacity(n_windows as usize);
        for k in 0..n_windows {
            let offset = FIXED_HEADER + k * WINDOW_ENTRY;
            let raw = cur.take(LABEL_LEN, "window label")?;
            let text_len = raw.iter().position(|&b| b == 0).unwrap_or(LABEL_LEN);
            if raw[text_len..].iter().any(|&b| b != 0) || !raw[..text_len].is_ascii() {
                return Err(Error::Format {
                    offset,
                    message: "window label is not zero-padded ASCII".into(),
                });
            }
            let label = std::str::from_utf8(&raw[..text_len]).expect("ascii");
            let kind: WindowKind = label.parse().map_err(|_| Error::Format {
                offset,
                message: format!("unknown window label '{label}'"),
            })?;
            let start = cur.u64("window start")? as usize;
            let end = cur.u64("window end")? as usize;
            windows.push(Window { kind, start, end });
        }
        let timeline = Timeline::new(sample_rate, n_samples, windows).map_err(|e| Error::Format {
            offset: FIXED_HEADER,
            message: format!("invalid window table: {e}"),
        })?;

        let payload_offset = header_len(n_windows);
        let expected = payload_offset + (n_shots as u64) * (n_samples as u64) * SAMPLE_BYTES;
        if actual < expected {
            return Err(Error::Truncated { expected, actual });
        }
        if actual > expected {
            return Err(Error::Format {
                offset: expected,
                message: format!("{} trailing bytes after the payload", actual - expected),
            });
        }
        Ok(Self {
            file,
            path,
            timeline: Arc::new(timeline),
            n_shots,
            payload_offset,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn timeline_ref(&self) -> &Arc<Timeline> {
        &self.timeline
    }

    pub fn read_shot(&self, index: usize) -> Result<HeterodyneRecord> {
        if index >= self.n_shots {
            return Err(Error::Config(format!(
                "shot {index} out of range (file holds {})",
                self.n_shots
            )));
        }
        let n = self.timeline.n_samples();
        let stride = n as u64 * SAMPLE_BYTES;
        let mut bytes = vec![0u8; stride as usize];
        self.file
            .read_exact_at(&mut bytes, self.payload_offset + index as u64 * stride)
            .map_err(|e| Error::io(&self.path, e))?;
        let samples = bytes
            .chunks_exact(SAMPLE_BYTES as usize)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(HeterodyneRecord {
            samples,
            sample_rate: self.timeline.sample_rate(),
            timeline: Arc::clone(&self.timeline),
            shot_index: index,
        })
    }

    pub fn read_all(&self) -> Result<Vec<HeterodyneRecord>> {
        (0..self.n_shots).map(|i| self.read_shot(i)).collect()
    }
}

impl ShotSource for ShotFile {
    fn timeline(&self) -> Arc<Timeline> {
        Arc::clone(&self.timeline)
    }

    fn n_shots(&self) -> usize {
        self.n_shots
    }

    fn shot(&self, index: usize) -> Result<HeterodyneRecord> {
        self.read_shot(index)
    }
}

fn read_up_to(file: &mut File, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{SequenceConfig, Synthesizer};

    fn small() -> Synthesizer {
        let cfg = SequenceConfig {
            n_shots: 3,
            n_modes: 1,
            ..SequenceConfig::default()
        };
        Synthesizer::new(&cfg).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.rasehet");
        let synth = small();
        write_shot_file(&path, &synth).unwrap();
        let file = ShotFile::open(&path).unwrap();
        assert_eq!(**file.timeline_ref(), **synth.timeline());
        for i in 0..3 {
            let a = file.read_shot(i).unwrap();
            let b = synth.shot(i);
            assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.re.to_bits() == y.re.to_bits()
                && x.im.to_bits() == y.im.to_bits()));
        }
    }

    #[test]
    fn truncation_reports_byte_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.rasehet");
        write_shot_file(&path, &small()).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        let f = std::fs::OpenOptions::new().write(true).open(&path).unwrap();
        f.set_len(len - 5).unwrap();
        match ShotFile::open(&path) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, len);
                assert_eq!(actual, len - 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic_names_offset_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"NOTRASE!aaaaaaaaaaaaaaaaaaaaaaaa").unwrap();
        assert!(matches!(ShotFile::open(&path), Err(Error::Format { offset: 0, .. })));
    }
}
