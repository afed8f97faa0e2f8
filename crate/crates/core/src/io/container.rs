//! Little-endian frame container.
//!
//! Header: magic `SBTH`, u32 version, u32 n_bins, f64 f_start, f64 f_step.
//! Each frame: f64 t, u32 n_averages, n_bins × f64 psd. Frame metadata
//! (scheme, drive, cryostat temperature) lives in the run manifest.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::spectral::{FrameMeta, GridSpec, SpectrumFrame};

pub const MAGIC: [u8; 4] = *b"SBTH";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 28;

pub fn frame_len(n_bins: usize) -> u64 {
    12 + 8 * n_bins as u64
}

fn data(offset: u64, message: impl Into<String>) -> Error {
    Error::Data { offset, message: message.into() }
}

/// Writes to a temporary file in the target directory and renames on `finish`.
pub struct ContainerWriter {
    out: BufWriter<NamedTempFile>,
    path: PathBuf,
    grid: GridSpec,
    last_t: f64,
    frames: u64,
}

impl ContainerWriter {
    pub fn create(path: &Path, grid: GridSpec) -> Result<Self> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let tmp = NamedTempFile::new_in(dir)?;
        let mut out = BufWriter::with_capacity(1 << 20, tmp);
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(grid.n_bins as u32).to_le_bytes())?;
        out.write_all(&grid.f_start.to_le_bytes())?;
        out.write_all(&grid.f_step.to_le_bytes())?;
        Ok(ContainerWriter { out, path: path.to_path_buf(), grid, last_t: f64::NEG_INFINITY, frames: 0 })
    }

    pub fn write_frame(&mut self, frame: &SpectrumFrame) -> Result<()> {
        if frame.grid != self.grid || frame.psd.len() != self.grid.n_bins {
            return Err(Error::Domain("frame grid differs from the container grid".into()));
        }
        if !(frame.t > self.last_t) {
            return Err(Error::Domain(format!("frame time {} does not follow {}", frame.t, self.last_t)));
        }
        self.out.write_all(&frame.t.to_le_bytes())?;
        self.out.write_all(&frame.n_averages.to_le_bytes())?;
        for v in &frame.psd {
            self.out.write_all(&v.to_le_bytes())?;
        }
        self.last_t = frame.t;
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn finish(self) -> Result<u64> {
        let tmp = self.out.into_inner().map_err(|e| Error::Io(e.into_error().to_string()))?;
        super::table::persist_temp(tmp, &self.path)?;
        Ok(self.frames)
    }
}

/// Writes every frame of `frames` and returns the count.
pub fn write_container<I>(path: &Path, grid: GridSpec, frames: I) -> Result<u64>
where
    I: IntoIterator<Item = Result<SpectrumFrame>>,
{
    let mut w = ContainerWriter::create(path, grid)?;
    for f in frames {
        w.write_frame(&f?)?;
    }
    w.finish()
}

/// Streaming reader; stops at the first malformed frame with its byte offset.
pub struct ContainerReader<R: Read> {
    input: R,
    grid: GridSpec,
    meta: FrameMeta,
    offset: u64,
    last_t: f64,
    done: bool,
    buf: Vec<u8>,
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

impl ContainerReader<BufReader<File>> {
    pub fn open(path: &Path, meta: FrameMeta) -> Result<Self> {
        let f = File::open(path).map_err(|e| data(0, format!("cannot open {}: {e}", path.display())))?;
        Self::new(BufReader::with_capacity(1 << 20, f), meta)
    }
}

impl<R: Read> ContainerReader<R> {
    pub fn new(mut input: R, meta: FrameMeta) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN as usize];
        let got = read_full(&mut input, &mut h)?;
        if got < 4 || h[..4] != MAGIC {
            return Err(data(0, "not a frame container (bad magic)"));
        }
        if got < h.len() {
            return Err(data(got as u64, "truncated header"));
        }
        let version = u32::from_le_bytes(h[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(data(4, format!("unsupported container version {version}")));
        }
        let n_bins = u32::from_le_bytes(h[8..12].try_into().expect("4 bytes")) as usize;
        let f_start = f64::from_le_bytes(h[12..20].try_into().expect("8 bytes"));
        let f_step = f64::from_le_bytes(h[20..28].try_into().expect("8 bytes"));
        let grid = GridSpec::new(n_bins, f_start, f_step).map_err(|e| data(8, format!("invalid grid: {e}")))?;
        Ok(ContainerReader {
            input,
            grid,
            meta,
            offset: HEADER_LEN,
            last_t: f64::NEG_INFINITY,
            done: false,
            buf: vec![0; frame_len(n_bins) as usize],
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn read_frame(&mut self) -> Result<Option<SpectrumFrame>> {
        let start = self.offset;
        let got = read_full(&mut self.input, &mut self.buf)?;
        if got == 0 {
            return Ok(None);
        }
        if got < self.buf.len() {
            return Err(data(start, format!("truncated frame: {got} of {} bytes", self.buf.len())));
        }
        let b = &self.buf;
        let t = f64::from_le_bytes(b[0..8].try_into().expect("8 bytes"));
        if !t.is_finite() || !(t > self.last_t) {
            return Err(data(start, format!("frame time {t} is not after {}", self.last_t)));
        }
        let n_averages = u32::from_le_bytes(b[8..12].try_into().expect("4 bytes"));
        if n_averages == 0 {
            return Err(data(start + 8, "frame has zero averages"));
        }
        let mut psd = Vec::with_capacity(self.grid.n_bins);
        for (i, c) in b[12..].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(c.try_into().expect("8 bytes"));
            if !(v.is_finite() && v >= 0.0) {
                return Err(data(start + 12 + 8 * i as u64, format!("invalid power spectral density {v}")));
            }
            psd.push(v);
        }
        self.offset += self.buf.len() as u64;
        self.last_t = t;
        Ok(Some(SpectrumFrame { t, grid: self.grid, psd, n_averages, meta: self.meta }))
    }
}

impl<R: Read> Iterator for ContainerReader<R> {
    type Item = Result<SpectrumFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_frame() {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn read_container(path: &Path, meta: FrameMeta) -> Result<Vec<SpectrumFrame>> {
    ContainerReader::open(path, meta)?.collect()
}

/// Checks every frame and returns (grid, frame count, first t, last t).
pub fn scan_container(path: &Path, meta: FrameMeta) -> Result<(GridSpec, u64, f64, f64)> {
    let mut r = ContainerReader::open(path, meta)?;
    let grid = r.grid();
    let (mut n, mut first, mut last) = (0u64, f64::NAN, f64::NAN);
    for f in &mut r {
        let f = f?;
        if n == 0 {
            first = f.t;
        }
        last = f.t;
        n += 1;
    }
    Ok((grid, n, first, last))
}

/// Lossless columnar text: one line per frame, `t n_averages psd...`.
pub fn export_text<I, W>(grid: GridSpec, frames: I, mut out: W) -> Result<u64>
where
    I: IntoIterator<Item = Result<SpectrumFrame>>,
    W: Write,
{
    writeln!(out, "# frame export v{VERSION}")?;
    writeln!(out, "# n_bins = {}", grid.n_bins)?;
    writeln!(out, "# f_start = {:?}", grid.f_start)?;
    writeln!(out, "# f_step = {:?}", grid.f_step)?;
    writeln!(out, "# columns: t n_averages psd[0..n_bins]")?;
    let mut n = 0;
    let mut line = String::new();
    for f in frames {
        let f = f?;
        line.clear();
        line.push_str(&format!("{:?}\t{}", f.t, f.n_averages));
        for v in &f.psd {
            line.push('\t');
            line.push_str(&format!("{v:?}"));
        }
        writeln!(out, "{line}")?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

/// Inverse of [`export_text`].
pub fn import_text(text: &str, meta: FrameMeta) -> Result<Vec<SpectrumFrame>> {
    let mut hdr = [None::<f64>; 3];
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                let slot = match k.trim() {
                    "n_bins" => 0,
                    "f_start" => 1,
                    "f_step" => 2,
                    _ => continue,
                };
                hdr[slot] = v.trim().parse().ok();
            }
            continue;
        }
        let (Some(n), Some(a), Some(d)) = (hdr[0], hdr[1], hdr[2]) else {
            return Err(Error::Data { offset: i as u64, message: "text export lacks its grid header".into() });
        };
        let grid = GridSpec::new(n as usize, a, d)?;
        let mut cols = line.split('\t');
        let bad = || Error::Data { offset: i as u64, message: format!("malformed line {}", i + 1) };
        let t: f64 = cols.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let n_averages: u32 = cols.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let psd = cols.map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        if psd.len() != grid.n_bins {
            return Err(bad());
        }
        frames.push(SpectrumFrame { t, grid, psd, n_averages, meta });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optomech::Scheme;

    fn meta() -> FrameMeta {
        FrameMeta { scheme: Scheme::RedDetuned, n_cav: 300.0, t_cryo: 0.1 }
    }

    fn frames(n: usize) -> (GridSpec, Vec<SpectrumFrame>) {
        let grid = GridSpec::new(64, 15.0e6, 13.125).unwrap();
        let fs = (0..n)
            .map(|k| SpectrumFrame {
                t: (k + 1) as f64,
                grid,
                psd: (0..64).map(|i| 100.0 + (i * k) as f64 * 0.1 + 1.0 / 3.0).collect(),
                n_averages: 10,
                meta: meta(),
            })
            .collect();
        (grid, fs)
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.sbth");
        let (grid, fs) = frames(5);
        assert_eq!(write_container(&path, grid, fs.iter().cloned().map(Ok)).unwrap(), 5);
        let back = read_container(&path, meta()).unwrap();
        assert_eq!(back, fs);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len() as u64, HEADER_LEN + 5 * frame_len(64));
        assert_eq!(&bytes[..4], b"SBTH");

        // truncated third frame
        let cut = (HEADER_LEN + 2 * frame_len(64) + 100) as usize;
        std::fs::write(&path, &bytes[..cut]).unwrap();
        match read_container(&path, meta()) {
            Err(Error::Data { offset, .. }) => assert_eq!(offset, HEADER_LEN + 2 * frame_len(64)),
            other => panic!("{other:?}"),
        }
        // NaN inside frame 1, bin 3
        let mut b = bytes.clone();
        let at = (HEADER_LEN + frame_len(64) + 12 + 24) as usize;
        b[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        std::fs::write(&path, &b).unwrap();
        match read_container(&path, meta()) {
            Err(Error::Data { offset, .. }) => assert_eq!(offset, at as u64),
            other => panic!("{other:?}"),
        }
        let mut b = bytes.clone();
        b[0] = b'X';
        std::fs::write(&path, &b).unwrap();
        assert!(matches!(read_container(&path, meta()), Err(Error::Data { offset: 0, .. })));
    }

    #[test]
    fn text_export_is_lossless() {
        let (grid, fs) = frames(3);
        let mut buf = Vec::new();
        export_text(grid, fs.iter().cloned().map(Ok), &mut buf).unwrap();
        let back = import_text(std::str::from_utf8(&buf).unwrap(), meta()).unwrap();
        assert_eq!(back, fs);
    }

    #[test]
    fn writer_rejects_out_of_order() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, mut fs) = frames(2);
        fs[1].t = fs[0].t;
        let path = dir.path().join("x.sbth");
        assert!(write_container(&path, grid, fs.into_iter().map(Ok)).is_err());
        assert!(!path.exists());
    }
}
