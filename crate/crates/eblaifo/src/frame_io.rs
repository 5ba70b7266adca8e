//! Frame ingestion and event/metric serialization.
//!
//! Input frames are binary PPM (P6, 8-bit). Event streams use the "EVB1"
//! container: a 16-byte little-endian header followed by one signed byte per
//! pixel, row-major, frame-major. Metrics go to CSV with six significant
//! digits per value.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::event_core::{EventFrame, RgbFrame};

pub const EVB_MAGIC: &[u8; 4] = b"EVB1";
pub const EVB_HEADER_LEN: usize = 16;

/// Parse a binary PPM (P6, maxval 255) into an RGB frame scaled to [0,1].
pub fn read_ppm(path: &Path) -> Result<RgbFrame> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e.to_string()))?;
    parse_ppm(&bytes).map_err(|msg| Error::file(path, msg))
}

fn parse_ppm(bytes: &[u8]) -> std::result::Result<RgbFrame, String> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> std::result::Result<String, String> {
        // Skip whitespace and '#' comments between header tokens.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PPM header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(bytes)? != "P6" {
        return Err("not a binary PPM (P6) file".into());
    }
    let width: usize = token(bytes)?.parse().map_err(|_| "bad width")?;
    let height: usize = token(bytes)?.parse().map_err(|_| "bad height")?;
    let maxval: usize = token(bytes)?.parse().map_err(|_| "bad maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}, expected 255"));
    }
    pos += 1; // single whitespace byte after maxval
    let need = width * height * 3;
    if bytes.len() < pos + need {
        return Err(format!(
            "payload truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        ));
    }
    let data = bytes[pos..pos + need]
        .iter()
        .map(|b| *b as f64 / 255.0)
        .collect();
    RgbFrame::new(height, width, data).map_err(|e| e.to_string())
}

/// Write a frame as binary PPM, quantizing each channel to 8 bits.
pub fn write_ppm(frame: &RgbFrame, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(frame.data.len() + 32);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", frame.width, frame.height).as_bytes());
    out.extend(
        frame
            .data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out).map_err(|e| Error::file(path, e.to_string()))
}

/// Read every `.ppm` in a directory, sorted lexicographically by filename.
pub fn read_frame_sequence(dir: &Path) -> Result<Vec<RgbFrame>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::file(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "ppm").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::file(dir, "no frames found"));
    }
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let f = read_ppm(p)?;
        if let Some(first) = frames.first() {
            let first: &RgbFrame = first;
            if f.height != first.height || f.width != first.width {
                return Err(Error::file(
                    p,
                    format!(
                        "dimension mismatch: {}x{} vs {}x{}",
                        f.height, f.width, first.height, first.width
                    ),
                ));
            }
        }
        frames.push(f);
    }
    Ok(frames)
}

/// Encode an event stream as EVB1 bytes.
pub fn encode_events(events: &[EventFrame]) -> Result<Vec<u8>> {
    let first = events
        .first()
        .ok_or_else(|| Error::validation("empty event stream"))?;
    let (h, w) = (first.height, first.width);
    if h > u16::MAX as usize || w > u16::MAX as usize {
        return Err(Error::validation("frame dimensions exceed u16"));
    }
    for (k, e) in events.iter().enumerate() {
        if e.height != h || e.width != w {
            return Err(Error::shape(format!("event frame {k} has inconsistent shape")));
        }
    }
    let mut out = Vec::with_capacity(EVB_HEADER_LEN + events.len() * h * w);
    out.extend_from_slice(EVB_MAGIC);
    out.extend_from_slice(&(h as u16).to_le_bytes());
    out.extend_from_slice(&(w as u16).to_le_bytes());
    out.extend_from_slice(&(events.len() as u32).to_le_bytes());
    out.push(0u8); // encoding 0 = signed-byte ternary
    out.extend_from_slice(&[0u8; 3]);
    for e in events {
        out.extend(e.data.iter().map(|v| *v as u8));
    }
    Ok(out)
}

/// Decode EVB1 bytes back into an event stream.
pub fn decode_events(bytes: &[u8]) -> Result<Vec<EventFrame>> {
    if bytes.len() < EVB_HEADER_LEN {
        return Err(Error::Decode {
            offset: bytes.len(),
            message: "header truncated".into(),
        });
    }
    if &bytes[0..4] != EVB_MAGIC {
        return Err(Error::Decode {
            offset: 0,
            message: "bad magic".into(),
        });
    }
    let h = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let w = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let count = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    let encoding = bytes[12];
    if encoding != 0 {
        return Err(Error::Decode {
            offset: 12,
            message: format!("unknown encoding {encoding}"),
        });
    }
    let expected = EVB_HEADER_LEN + count * h * w;
    if bytes.len() != expected {
        return Err(Error::Decode {
            offset: bytes.len().min(expected),
            message: format!("payload length {} != declared {}", bytes.len(), expected),
        });
    }
    let mut frames = Vec::with_capacity(count);
    for k in 0..count {
        let start = EVB_HEADER_LEN + k * h * w;
        let mut data = Vec::with_capacity(h * w);
        for (i, b) in bytes[start..start + h * w].iter().enumerate() {
            let v = *b as i8;
            if !matches!(v, -1 | 0 | 1) {
                return Err(Error::Decode {
                    offset: start + i,
                    message: format!("out-of-range event byte 0x{b:02x}"),
                });
            }
            data.push(v);
        }
        frames.push(EventFrame {
            height: h,
            width: w,
            data,
        });
    }
    Ok(frames)
}

pub fn write_events(events: &[EventFrame], path: &Path) -> Result<()> {
    let bytes = encode_events(events)?;
    fs::write(path, bytes).map_err(|e| Error::file(path, e.to_string()))
}

pub fn read_events(path: &Path) -> Result<Vec<EventFrame>> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e.to_string()))?;
    decode_events(&bytes)
}

/// One metrics record; `eval_return` is present on evaluation rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub step: u64,
    pub episode_return: f64,
    pub discriminator_loss: f64,
    pub critic_loss: f64,
    pub eval_return: Option<f64>,
}

pub const METRICS_HEADER: &str = "step,episode_return,discriminator_loss,critic_loss,eval_return";

/// Format with 6 significant digits in plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Trim trailing zeros but keep at least one digit after the point.
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

fn metrics_line(r: &RunMetrics) -> String {
    format!(
        "{},{},{},{},{}",
        r.step,
        format_sig6(r.episode_return),
        format_sig6(r.discriminator_loss),
        format_sig6(r.critic_loss),
        r.eval_return.map(format_sig6).unwrap_or_default()
    )
}

/// Write a full metrics file (header + one line per record).
pub fn write_metrics_csv(rows: &[RunMetrics], path: &Path) -> Result<()> {
    for w in rows.windows(2) {
        if w[1].step < w[0].step {
            return Err(Error::validation("metric steps must be nondecreasing"));
        }
    }
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&metrics_line(r));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::file(path, e.to_string()))
}

/// Incremental metrics writer honoring the single-writer contract.
pub struct MetricsWriter {
    file: fs::File,
    last_step: Option<u64>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut file = fs::File::create(path).map_err(|e| Error::file(path, e.to_string()))?;
        writeln!(file, "{METRICS_HEADER}")?;
        Ok(MetricsWriter {
            file,
            last_step: None,
        })
    }

    pub fn append(&mut self, r: &RunMetrics) -> Result<()> {
        if let Some(last) = self.last_step {
            if r.step < last {
                return Err(Error::validation("metric steps must be nondecreasing"));
            }
        }
        self.last_step = Some(r.step);
        writeln!(self.file, "{}", metrics_line(r))?;
        Ok(())
    }
}

/// Read back a metrics CSV written by this module.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<RunMetrics>> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        _ => return Err(Error::file(path, "bad metrics header")),
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::file(path, format!("bad column count on line {}", ln + 2)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::file(path, format!("bad number {s:?} on line {}", ln + 2)))
        };
        rows.push(RunMetrics {
            step: parts[0]
                .parse()
                .map_err(|_| Error::file(path, format!("bad step on line {}", ln + 2)))?,
            episode_return: parse(parts[1])?,
            discriminator_loss: parse(parts[2])?,
            critic_loss: parse(parts[3])?,
            eval_return: if parts[4].is_empty() {
                None
            } else {
                Some(parse(parts[4])?)
            },
        });
    }
    Ok(rows)
}
