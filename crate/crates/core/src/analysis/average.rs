//! Fully overlapping boxcar averaging of frame streams.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::spectral::SpectrumFrame;

/// Number of frames in a window of `window` seconds at cadence `frame_dt`.
pub fn window_frames(window: f64, frame_dt: f64) -> Result<usize> {
    if !(frame_dt > 0.0) {
        return Err(Error::Domain(format!("frame_dt must be > 0, got {frame_dt}")));
    }
    let k = (window / frame_dt).round();
    if !(k >= 1.0) || window < frame_dt * (1.0 - 1e-9) {
        return Err(Error::Domain(format!("window {window} s is shorter than the frame spacing {frame_dt} s")));
    }
    Ok(k as usize)
}

/// Streaming trailing-window mean. Each output is stamped with the time of
/// the newest frame and carries the summed average count.
#[derive(Debug, Clone)]
pub struct SlidingAverager {
    len: usize,
    buf: VecDeque<SpectrumFrame>,
    sum: Vec<f64>,
    pushes_since_resum: usize,
}

impl SlidingAverager {
    pub fn new(len: usize) -> Self {
        SlidingAverager { len: len.max(1), buf: VecDeque::with_capacity(len + 1), sum: Vec::new(), pushes_since_resum: 0 }
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn push(&mut self, frame: SpectrumFrame) -> Result<Option<SpectrumFrame>> {
        if self.len == 1 {
            return Ok(Some(frame));
        }
        if let Some(first) = self.buf.front() {
            if first.grid != frame.grid {
                return Err(Error::Data { offset: 0, message: format!("grid changed at t = {} s", frame.t) });
            }
        } else {
            self.sum = vec![0.0; frame.psd.len()];
        }
        for (s, v) in self.sum.iter_mut().zip(&frame.psd) {
            *s += v;
        }
        self.buf.push_back(frame);
        if self.buf.len() > self.len {
            let old = self.buf.pop_front().expect("non-empty");
            for (s, v) in self.sum.iter_mut().zip(&old.psd) {
                *s -= v;
            }
            self.pushes_since_resum += 1;
            // bound the rounding drift of the running sum
            if self.pushes_since_resum >= 4096 {
                self.resum();
            }
        }
        if self.buf.len() < self.len {
            return Ok(None);
        }
        let newest = self.buf.back().expect("non-empty");
        let inv = 1.0 / self.len as f64;
        Ok(Some(SpectrumFrame {
            t: newest.t,
            grid: newest.grid,
            psd: self.sum.iter().map(|s| (s * inv).max(0.0)).collect(),
            n_averages: self.buf.iter().map(|f| f.n_averages).sum(),
            meta: newest.meta,
        }))
    }

    fn resum(&mut self) {
        self.sum.iter_mut().for_each(|s| *s = 0.0);
        for f in &self.buf {
            for (s, v) in self.sum.iter_mut().zip(&f.psd) {
                *s += v;
            }
        }
        self.pushes_since_resum = 0;
    }
}

/// Cadence of a frame sequence, checked to be uniform.
pub fn frame_spacing(frames: &[SpectrumFrame]) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::Domain("need at least two frames to infer the cadence".into()));
    }
    let dt = frames[1].t - frames[0].t;
    if !(dt > 0.0) {
        return Err(Error::Data { offset: 0, message: "timestamps are not increasing".into() });
    }
    for (i, w) in frames.windows(2).enumerate() {
        let d = w[1].t - w[0].t;
        if (d - dt).abs() > 1e-6 * dt {
            return Err(Error::Data { offset: i as u64 + 1, message: format!("non-uniform cadence at frame {}", i + 1) });
        }
    }
    Ok(dt)
}

/// Sliding average over a trailing window of `window` seconds.
pub fn sliding_average(frames: &[SpectrumFrame], window: f64) -> Result<Vec<SpectrumFrame>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let dt = if frames.len() == 1 { window } else { frame_spacing(frames)? };
    let len = window_frames(window, dt)?;
    if len > frames.len() {
        return Err(Error::Domain(format!(
            "window of {len} frames exceeds the acquisition of {} frames",
            frames.len()
        )));
    }
    let mut avg = SlidingAverager::new(len);
    let mut out = Vec::with_capacity(frames.len() + 1 - len);
    for f in frames {
        if let Some(a) = avg.push(f.clone())? {
            out.push(a);
        }
    }
    Ok(out)
}
