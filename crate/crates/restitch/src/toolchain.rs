//! External media toolchain invocation.
//!
//! All media work is delegated to an ffmpeg-compatible toolchain run as a
//! subprocess. Binary locations come from `RESTITCH_FFMPEG` /
//! `RESTITCH_FFPROBE` (or the plain `FFMPEG` / `FFPROBE` variables), falling
//! back to `ffmpeg` / `ffprobe` on PATH.

use std::ffi::OsStr;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::manifest::Resolution;

pub const FFMPEG_ENV: &str = "RESTITCH_FFMPEG";
pub const FFPROBE_ENV: &str = "RESTITCH_FFPROBE";

type CommandSink = Arc<Mutex<Box<dyn Write + Send>>>;

/// Handle to the ffmpeg/ffprobe pair, shareable across worker threads.
#[derive(Clone)]
pub struct Toolchain {
    ffmpeg: PathBuf,
    ffprobe: PathBuf,
    command_log: Option<CommandSink>,
}

impl std::fmt::Debug for Toolchain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Toolchain")
            .field("ffmpeg", &self.ffmpeg)
            .field("ffprobe", &self.ffprobe)
            .finish_non_exhaustive()
    }
}

fn env_or(var: &str, fallback_var: &str, default: &str) -> PathBuf {
    std::env::var_os(var)
        .or_else(|| std::env::var_os(fallback_var))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(default))
}

impl Toolchain {
    pub fn new(ffmpeg: impl Into<PathBuf>, ffprobe: impl Into<PathBuf>) -> Self {
        Toolchain {
            ffmpeg: ffmpeg.into(),
            ffprobe: ffprobe.into(),
            command_log: None,
        }
    }

    /// Locate the toolchain from the environment and verify it runs.
    pub fn discover() -> Result<Self> {
        let tc = Toolchain::new(
            env_or(FFMPEG_ENV, "FFMPEG", "ffmpeg"),
            env_or(FFPROBE_ENV, "FFPROBE", "ffprobe"),
        );
        tc.check_runnable(&tc.ffmpeg)?;
        tc.check_runnable(&tc.ffprobe)?;
        Ok(tc)
    }

    fn check_runnable(&self, bin: &Path) -> Result<()> {
        Command::new(bin)
            .arg("-version")
            .output()
            .map_err(|e| Error::Toolchain {
                tool: bin.display().to_string(),
                message: format!(
                    "cannot execute ({e}); install it or point {FFMPEG_ENV}/{FFPROBE_ENV} at the binaries"
                ),
            })?;
        Ok(())
    }

    /// Mirror every toolchain command line into the given sink.
    pub fn with_command_log(mut self, sink: CommandSink) -> Self {
        self.command_log = Some(sink);
        self
    }

    pub fn ffmpeg_path(&self) -> &Path {
        &self.ffmpeg
    }

    fn log_command(&self, bin: &Path, args: &[String]) {
        if let Some(sink) = &self.command_log {
            if let Ok(mut w) = sink.lock() {
                let _ = writeln!(w, "{} {}", bin.display(), args.join(" "));
            }
        }
    }

    /// Run ffmpeg with the given arguments (quiet, overwrite allowed).
    pub fn run_ffmpeg<I, S>(&self, args: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let mut full: Vec<String> = vec![
            "-hide_banner".into(),
            "-nostdin".into(),
            "-loglevel".into(),
            "error".into(),
            "-y".into(),
        ];
        full.extend(
            args.into_iter()
                .map(|a| a.as_ref().to_string_lossy().into_owned()),
        );
        self.log_command(&self.ffmpeg, &full);
        let output = Command::new(&self.ffmpeg).args(&full).output().map_err(|e| {
            Error::Toolchain {
                tool: self.ffmpeg.display().to_string(),
                message: format!("cannot execute: {e}"),
            }
        })?;
        if !output.status.success() {
            return Err(Error::Toolchain {
                tool: "ffmpeg".into(),
                message: format!(
                    "exit {}: {}",
                    output.status.code().unwrap_or(-1),
                    stderr_tail(&output.stderr)
                ),
            });
        }
        Ok(())
    }

    /// Run ffprobe and return stdout.
    pub fn run_ffprobe<I, S>(&self, args: I) -> Result<String>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let mut full: Vec<String> = vec!["-v".into(), "error".into()];
        full.extend(
            args.into_iter()
                .map(|a| a.as_ref().to_string_lossy().into_owned()),
        );
        self.log_command(&self.ffprobe, &full);
        let output = Command::new(&self.ffprobe).args(&full).output().map_err(|e| {
            Error::Toolchain {
                tool: self.ffprobe.display().to_string(),
                message: format!("cannot execute: {e}"),
            }
        })?;
        if !output.status.success() {
            return Err(Error::Toolchain {
                tool: "ffprobe".into(),
                message: format!(
                    "exit {}: {}",
                    output.status.code().unwrap_or(-1),
                    stderr_tail(&output.stderr)
                ),
            });
        }
        Ok(String::from_utf8_lossy(&output.stdout).into_owned())
    }

    /// Container duration in milliseconds.
    pub fn probe_duration_ms(&self, path: &Path) -> Result<f64> {
        let out = self.run_ffprobe([
            "-show_entries".as_ref(),
            "format=duration".as_ref(),
            "-of".as_ref(),
            "csv=p=0".as_ref(),
            path.as_os_str(),
        ])?;
        let text = out.trim().trim_end_matches(',');
        let seconds: f64 = text.parse().map_err(|_| Error::Toolchain {
            tool: "ffprobe".into(),
            message: format!("unparseable duration {text:?} for {}", path.display()),
        })?;
        Ok(seconds * 1000.0)
    }

    /// Width, height and frame rate of the first video stream.
    pub fn probe_video_stream(&self, path: &Path) -> Result<VideoStreamInfo> {
        let out = self.run_ffprobe([
            "-select_streams".as_ref(),
            "v:0".as_ref(),
            "-show_entries".as_ref(),
            "stream=width,height,r_frame_rate".as_ref(),
            "-of".as_ref(),
            "csv=p=0".as_ref(),
            path.as_os_str(),
        ])?;
        let line = out.lines().next().unwrap_or("").trim().trim_end_matches(',');
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 3 {
            return Err(Error::Toolchain {
                tool: "ffprobe".into(),
                message: format!("no video stream info in {:?} for {}", line, path.display()),
            });
        }
        let parse_u32 = |s: &str, what: &str| -> Result<u32> {
            s.parse().map_err(|_| Error::Toolchain {
                tool: "ffprobe".into(),
                message: format!("unparseable {what} {s:?} for {}", path.display()),
            })
        };
        let width = parse_u32(parts[0], "width")?;
        let height = parse_u32(parts[1], "height")?;
        let fps = parts[2].parse::<Fps>()?;
        Ok(VideoStreamInfo {
            resolution: Resolution::new(width, height),
            fps,
        })
    }

    /// Decode the video stream and count its frames.
    pub fn count_video_frames(&self, path: &Path) -> Result<u64> {
        let out = self.run_ffprobe([
            "-select_streams".as_ref(),
            "v:0".as_ref(),
            "-count_frames".as_ref(),
            "-show_entries".as_ref(),
            "stream=nb_read_frames".as_ref(),
            "-of".as_ref(),
            "csv=p=0".as_ref(),
            path.as_os_str(),
        ])?;
        let text = out.trim().trim_end_matches(',');
        text.parse().map_err(|_| Error::Toolchain {
            tool: "ffprobe".into(),
            message: format!(
                "could not count frames of {} (got {text:?})",
                path.display()
            ),
        })
    }

    /// Decode the video stream and report each frame's dimensions, in order.
    pub fn probe_frame_dimensions(&self, path: &Path) -> Result<Vec<Resolution>> {
        let out = self.run_ffprobe([
            "-select_streams".as_ref(),
            "v:0".as_ref(),
            "-show_entries".as_ref(),
            "frame=width,height".as_ref(),
            "-of".as_ref(),
            "csv=p=0".as_ref(),
            path.as_os_str(),
        ])?;
        let mut sizes = Vec::new();
        for line in out.lines() {
            let mut it = line.split(',').filter(|t| !t.trim().is_empty());
            let (Some(w), Some(h)) = (it.next(), it.next()) else {
                continue;
            };
            let (Ok(w), Ok(h)) = (w.trim().parse(), h.trim().parse()) else {
                continue;
            };
            sizes.push(Resolution::new(w, h));
        }
        if sizes.is_empty() {
            return Err(Error::Toolchain {
                tool: "ffprobe".into(),
                message: format!("no decodable video frames in {}", path.display()),
            });
        }
        Ok(sizes)
    }

    /// Whether the file has an audio stream.
    pub fn has_audio_stream(&self, path: &Path) -> Result<bool> {
        let out = self.run_ffprobe([
            "-select_streams".as_ref(),
            "a".as_ref(),
            "-show_entries".as_ref(),
            "stream=codec_type".as_ref(),
            "-of".as_ref(),
            "csv=p=0".as_ref(),
            path.as_os_str(),
        ])?;
        Ok(out.lines().any(|l| l.trim().trim_end_matches(',') == "audio"))
    }
}

fn stderr_tail(stderr: &[u8]) -> String {
    let text = String::from_utf8_lossy(stderr);
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.len().saturating_sub(8);
    lines[start..].join(" | ")
}

/// Video stream facts needed for planning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoStreamInfo {
    pub resolution: Resolution,
    pub fps: Fps,
}

/// A rational frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fps {
    pub num: u32,
    pub den: u32,
}

impl Fps {
    pub fn new(num: u32, den: u32) -> Self {
        Fps { num, den }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn frame_period_ms(self) -> f64 {
        1000.0 * self.den as f64 / self.num as f64
    }

    /// Nearest whole number of frames covering `ms` at this rate.
    pub fn frames_for_ms(self, ms: u64) -> u64 {
        (ms as f64 * self.num as f64 / (self.den as f64 * 1000.0)).round() as u64
    }

    /// Presentation time of frame `n` in seconds.
    pub fn frame_time_s(self, n: u64) -> f64 {
        n as f64 * self.den as f64 / self.num as f64
    }
}

impl std::fmt::Display for Fps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for Fps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Toolchain {
            tool: "ffprobe".into(),
            message: format!("unparseable frame rate {s:?}"),
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let num = n.trim().parse().map_err(|_| bad())?;
                let den = d.trim().parse().map_err(|_| bad())?;
                if den == 0 || num == 0 {
                    return Err(bad());
                }
                Ok(Fps { num, den })
            }
            None => {
                let num = s.trim().parse().map_err(|_| bad())?;
                if num == 0 {
                    return Err(bad());
                }
                Ok(Fps { num, den: 1 })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fps_arithmetic() {
        let fps = Fps::new(24, 1);
        assert_eq!(fps.frames_for_ms(2000), 48);
        assert_eq!(fps.frames_for_ms(20), 0);
        assert!((fps.frame_period_ms() - 41.666_666).abs() < 1e-3);
        let ntsc = Fps::new(30000, 1001);
        assert!((ntsc.as_f64() - 29.97).abs() < 0.01);
    }

    #[test]
    fn fps_parsing() {
        assert_eq!("24/1".parse::<Fps>().unwrap(), Fps::new(24, 1));
        assert_eq!("30000/1001".parse::<Fps>().unwrap(), Fps::new(30000, 1001));
        assert_eq!("25".parse::<Fps>().unwrap(), Fps::new(25, 1));
        assert!("0/0".parse::<Fps>().is_err());
        assert!("x".parse::<Fps>().is_err());
    }

    #[test]
    fn discover_reports_missing_binary() {
        let tc = Toolchain::new("/nonexistent/ffmpeg-bin", "/nonexistent/ffprobe-bin");
        let err = tc.check_runnable(Path::new("/nonexistent/ffmpeg-bin")).unwrap_err();
        assert!(err.to_string().contains("RESTITCH_FFMPEG"));
    }
}
