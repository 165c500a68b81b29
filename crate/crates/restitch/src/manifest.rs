//! DASH manifest (MPD) parsing for the full profile, the encoding-ladder
//! model, and per-representation segment URL resolution.
//!
//! Only static, single-period manifests with per-segment addressing
//! (`SegmentList` or `SegmentTemplate` with `$Number$`) are in scope.
//! Byte-range addressing and non-full profiles are rejected explicitly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::log_io::VideoLog;

/// A frame size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub fn new(width: u32, height: u32) -> Self {
        Resolution { width, height }
    }

    pub fn pixel_area(self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Config(format!("invalid resolution {s:?}: expected WxH")))?;
        let width = w
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid resolution width in {s:?}")))?;
        let height = h
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid resolution height in {s:?}")))?;
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("resolution {s:?} must be positive")));
        }
        Ok(Resolution { width, height })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediaKind {
    Video,
    Audio,
}

/// One rung of the encoding ladder (or one audio track).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representation {
    pub id: String,
    /// Average encoding bitrate in kbps.
    pub bitrate_kbps: u32,
    pub width: u32,
    pub height: u32,
    pub media_kind: MediaKind,
}

impl Representation {
    pub fn video(id: impl Into<String>, bitrate_kbps: u32, width: u32, height: u32) -> Self {
        Representation {
            id: id.into(),
            bitrate_kbps,
            width,
            height,
            media_kind: MediaKind::Video,
        }
    }

    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.width, self.height)
    }
}

/// The video encoding ladder: representations in strictly ascending bitrate
/// order with non-decreasing pixel area.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ladder {
    representations: Vec<Representation>,
}

impl Ladder {
    pub fn new(mut representations: Vec<Representation>) -> Result<Self> {
        if representations.is_empty() {
            return Err(Error::Manifest("ladder has no representations".into()));
        }
        representations.sort_by_key(|r| r.bitrate_kbps);
        for pair in representations.windows(2) {
            if pair[1].bitrate_kbps == pair[0].bitrate_kbps {
                return Err(Error::Manifest(format!(
                    "ladder bitrates must be strictly ascending: {} kbps appears twice",
                    pair[0].bitrate_kbps
                )));
            }
            if pair[1].resolution().pixel_area() < pair[0].resolution().pixel_area() {
                return Err(Error::Manifest(format!(
                    "ladder resolutions must be non-decreasing by pixel area: \
                     {} ({} kbps) follows {} ({} kbps)",
                    pair[1].resolution(),
                    pair[1].bitrate_kbps,
                    pair[0].resolution(),
                    pair[0].bitrate_kbps,
                )));
            }
        }
        for r in &representations {
            if r.bitrate_kbps == 0 {
                return Err(Error::Manifest("ladder bitrate must be positive".into()));
            }
            if r.media_kind == MediaKind::Video && (r.width == 0 || r.height == 0) {
                return Err(Error::Manifest(format!(
                    "video representation {:?} has no resolution",
                    r.id
                )));
            }
        }
        Ok(Ladder { representations })
    }

    /// The thirteen-rung ladder of the public 4K DASH dataset, 235 kbps at
    /// 320x146 up to 40 Mbps at 3840x2160. Handy for simulation defaults and
    /// tests; real runs normally take the ladder from a manifest.
    pub fn reference() -> Self {
        let rungs: [(u32, u32, u32); 13] = [
            (235, 320, 146),
            (375, 384, 174),
            (560, 512, 234),
            (750, 512, 234),
            (1050, 640, 292),
            (1750, 720, 328),
            (2350, 1280, 582),
            (3000, 1280, 582),
            (3850, 1920, 1080),
            (4300, 1920, 1080),
            (15000, 3840, 2160),
            (25000, 3840, 2160),
            (40000, 3840, 2160),
        ];
        let reps = rungs
            .iter()
            .map(|&(kbps, w, h)| Representation::video(format!("{kbps}kbps"), kbps, w, h))
            .collect();
        Ladder::new(reps).expect("reference ladder is valid")
    }

    pub fn representations(&self) -> &[Representation] {
        &self.representations
    }

    pub fn bitrates_kbps(&self) -> Vec<u32> {
        self.representations.iter().map(|r| r.bitrate_kbps).collect()
    }

    pub fn lowest(&self) -> &Representation {
        &self.representations[0]
    }

    pub fn highest(&self) -> &Representation {
        self.representations.last().unwrap()
    }

    /// Heights present in the ladder, ascending, deduplicated.
    pub fn heights(&self) -> Vec<u32> {
        let mut hs: Vec<u32> = self.representations.iter().map(|r| r.height).collect();
        hs.sort_unstable();
        hs.dedup();
        hs
    }
}

/// Resolved segment addressing for every representation in a manifest.
///
/// URLs are stored as written in the document (joined with any `BaseURL`
/// elements); relative URLs are resolved against the manifest location at
/// download time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestIndex {
    /// representation-id → ordered segment URLs.
    pub video_urls: BTreeMap<String, Vec<String>>,
    pub audio_urls: BTreeMap<String, Vec<String>>,
    /// representation-id → initialization segment URL.
    pub init_urls: BTreeMap<String, String>,
    pub segment_duration_ms: u64,
    /// Audio representation chosen for muxing: the highest audio bitrate.
    pub preferred_audio: Option<String>,
}

/// Parse a DASH MPD document into the encoding ladder and the URL index.
pub fn parse_manifest(document: &str) -> Result<(Ladder, ManifestIndex)> {
    let doc = roxmltree::Document::parse(document)
        .map_err(|e| Error::Manifest(format!("malformed XML: {e}")))?;
    let mpd = doc.root_element();
    if mpd.tag_name().name() != "MPD" {
        return Err(Error::Manifest(format!(
            "root element is <{}>, expected <MPD>",
            mpd.tag_name().name()
        )));
    }

    let profiles = mpd.attribute("profiles").unwrap_or("");
    if !profiles.split(',').any(|p| p.trim().contains(":profile:full:")) {
        return Err(Error::UnsupportedProfile {
            found: if profiles.is_empty() {
                "(none)".into()
            } else {
                profiles.into()
            },
        });
    }
    if mpd.attribute("type").unwrap_or("static") == "dynamic" {
        return Err(Error::Manifest(
            "dynamic (live) manifests are not supported".into(),
        ));
    }

    let presentation_ms = mpd
        .attribute("mediaPresentationDuration")
        .map(parse_iso8601_duration_ms)
        .transpose()?;

    let mpd_base = child_base_url(&mpd, "");
    let periods: Vec<_> = mpd
        .children()
        .filter(|n| n.is_element() && n.tag_name().name() == "Period")
        .collect();
    if periods.len() != 1 {
        return Err(Error::Manifest(format!(
            "expected exactly one Period, found {}",
            periods.len()
        )));
    }
    let period = periods[0];
    let period_base = child_base_url(&period, &mpd_base);

    let mut video_reps = Vec::new();
    let mut audio_reps = Vec::new();
    let mut video_urls = BTreeMap::new();
    let mut audio_urls = BTreeMap::new();
    let mut init_urls = BTreeMap::new();
    let mut video_segment_duration: Option<u64> = None;

    for set in period
        .children()
        .filter(|n| n.is_element() && n.tag_name().name() == "AdaptationSet")
    {
        let kind = match adaptation_kind(&set) {
            Some(k) => k,
            None => continue, // subtitles and other non-AV sets are out of scope
        };
        let set_base = child_base_url(&set, &period_base);
        let set_template = find_child(&set, "SegmentTemplate");
        let set_list = find_child(&set, "SegmentList");

        for rep in set
            .children()
            .filter(|n| n.is_element() && n.tag_name().name() == "Representation")
        {
            reject_byte_range(&rep)?;
            let id = rep
                .attribute("id")
                .ok_or_else(|| Error::Manifest("Representation without id".into()))?
                .to_string();
            let bandwidth_bps: u64 = rep
                .attribute("bandwidth")
                .ok_or_else(|| {
                    Error::Manifest(format!("representation {id:?} has no bandwidth"))
                })?
                .parse()
                .map_err(|_| Error::Manifest(format!("bad bandwidth on {id:?}")))?;
            let bitrate_kbps = ((bandwidth_bps + 500) / 1000) as u32;
            let attr_u32 = |name: &str| -> Option<u32> {
                rep.attribute(name)
                    .or_else(|| set.attribute(name))
                    .and_then(|v| v.parse().ok())
            };
            let width = attr_u32("width").unwrap_or(0);
            let height = attr_u32("height").unwrap_or(0);

            let rep_base = child_base_url(&rep, &set_base);
            let addressing = find_child(&rep, "SegmentList")
                .or(set_list)
                .map(Addressing::List)
                .or_else(|| {
                    find_child(&rep, "SegmentTemplate")
                        .or(set_template)
                        .map(Addressing::Template)
                });
            let resolved = match addressing {
                Some(a) => resolve_addressing(&a, &id, bandwidth_bps, &rep_base, presentation_ms)?,
                None => {
                    // SegmentBase-only representations are byte-range addressed.
                    if find_child(&rep, "SegmentBase").is_some() {
                        return Err(Error::ByteRangeAddressing(format!(
                            "representation {id:?} uses SegmentBase"
                        )));
                    }
                    return Err(Error::Manifest(format!(
                        "representation {id:?} has no segment addressing"
                    )));
                }
            };

            init_urls.insert(id.clone(), resolved.init_url);
            match kind {
                MediaKind::Video => {
                    if let Some(d) = resolved.segment_duration_ms {
                        let prev = video_segment_duration.replace(d);
                        if let Some(p) = prev {
                            if p != d {
                                return Err(Error::Manifest(format!(
                                    "video representations declare different segment durations \
                                     ({p} ms vs {d} ms)"
                                )));
                            }
                        }
                    }
                    video_urls.insert(id.clone(), resolved.segment_urls);
                    video_reps.push(Representation {
                        id,
                        bitrate_kbps,
                        width,
                        height,
                        media_kind: MediaKind::Video,
                    });
                }
                MediaKind::Audio => {
                    audio_urls.insert(id.clone(), resolved.segment_urls);
                    audio_reps.push(Representation {
                        id,
                        bitrate_kbps,
                        width,
                        height,
                        media_kind: MediaKind::Audio,
                    });
                }
            }
        }
    }

    if video_reps.is_empty() {
        return Err(Error::Manifest("manifest has no video representations".into()));
    }
    let segment_duration_ms = video_segment_duration.ok_or_else(|| {
        Error::Manifest("manifest declares no segment duration for video".into())
    })?;

    check_equal_lengths(&video_urls, "video")?;
    check_equal_lengths(&audio_urls, "audio")?;

    let preferred_audio = audio_reps
        .iter()
        .max_by_key(|r| r.bitrate_kbps)
        .map(|r| r.id.clone());

    let ladder = Ladder::new(video_reps)?;
    Ok((
        ladder,
        ManifestIndex {
            video_urls,
            audio_urls,
            init_urls,
            segment_duration_ms,
            preferred_audio,
        },
    ))
}

/// Find the ladder entry matching a logged rep level exactly (kbps).
pub fn resolve_representation(ladder: &Ladder, rep_level: u32) -> Result<&Representation> {
    ladder
        .representations()
        .iter()
        .find(|r| r.bitrate_kbps == rep_level)
        .ok_or_else(|| {
            let below = ladder
                .representations()
                .iter()
                .rev()
                .find(|r| r.bitrate_kbps < rep_level);
            let above = ladder
                .representations()
                .iter()
                .find(|r| r.bitrate_kbps > rep_level);
            let nearest = match (below, above) {
                (Some(b), Some(a)) => format!("{} and {} kbps", b.bitrate_kbps, a.bitrate_kbps),
                (Some(b), None) => format!("{} kbps", b.bitrate_kbps),
                (None, Some(a)) => format!("{} kbps", a.bitrate_kbps),
                (None, None) => "none".into(),
            };
            Error::UnknownBitrate { rep_level, nearest }
        })
}

/// The resolution of maximal pixel area among representations used by the
/// log. Equal areas are broken by greater width.
pub fn highest_resolution(log: &VideoLog, ladder: &Ladder) -> Result<Resolution> {
    let mut best: Option<Resolution> = None;
    for rep_level in log.distinct_rep_levels() {
        let res = resolve_representation(ladder, rep_level)?.resolution();
        best = Some(match best {
            None => res,
            Some(b) if (res.pixel_area(), res.width) > (b.pixel_area(), b.width) => res,
            Some(b) => b,
        });
    }
    best.ok_or_else(|| Error::Manifest("log uses no representations".into()))
}

// ---- XML helpers ----

enum Addressing<'a, 'input> {
    List(roxmltree::Node<'a, 'input>),
    Template(roxmltree::Node<'a, 'input>),
}

struct ResolvedAddressing {
    init_url: String,
    segment_urls: Vec<String>,
    segment_duration_ms: Option<u64>,
}

fn find_child<'a, 'input>(
    node: &roxmltree::Node<'a, 'input>,
    name: &str,
) -> Option<roxmltree::Node<'a, 'input>> {
    node.children()
        .find(|n| n.is_element() && n.tag_name().name() == name)
}

fn child_base_url(node: &roxmltree::Node, parent: &str) -> String {
    match find_child(node, "BaseURL").and_then(|n| n.text()) {
        Some(text) => join_url(parent, text.trim()),
        None => parent.to_string(),
    }
}

/// RFC-3986-flavoured relative join, kept string-level so that the result can
/// itself still be relative to the manifest location.
fn join_url(base: &str, rel: &str) -> String {
    if rel.contains("://") || rel.starts_with('/') || base.is_empty() {
        return rel.to_string();
    }
    match base.rfind('/') {
        Some(pos) => format!("{}{}", &base[..=pos], rel),
        None => rel.to_string(),
    }
}

fn adaptation_kind(set: &roxmltree::Node) -> Option<MediaKind> {
    let content_type = set.attribute("contentType").unwrap_or("");
    let mime = set.attribute("mimeType").unwrap_or("");
    if content_type == "video" || mime.starts_with("video/") {
        Some(MediaKind::Video)
    } else if content_type == "audio" || mime.starts_with("audio/") {
        Some(MediaKind::Audio)
    } else if content_type.is_empty() && mime.is_empty() {
        // fall back to the first Representation's mimeType
        set.children()
            .filter(|n| n.is_element() && n.tag_name().name() == "Representation")
            .find_map(|r| {
                let m = r.attribute("mimeType")?;
                if m.starts_with("video/") {
                    Some(MediaKind::Video)
                } else if m.starts_with("audio/") {
                    Some(MediaKind::Audio)
                } else {
                    None
                }
            })
    } else {
        None
    }
}

fn reject_byte_range(rep: &roxmltree::Node) -> Result<()> {
    for node in rep.descendants().filter(|n| n.is_element()) {
        let name = node.tag_name().name();
        if name == "SegmentBase" && node.attribute("indexRange").is_some() {
            return Err(Error::ByteRangeAddressing(format!(
                "representation {:?} declares SegmentBase@indexRange",
                rep.attribute("id").unwrap_or("?")
            )));
        }
        if name == "SegmentURL" && node.attribute("mediaRange").is_some() {
            return Err(Error::ByteRangeAddressing(format!(
                "representation {:?} declares SegmentURL@mediaRange",
                rep.attribute("id").unwrap_or("?")
            )));
        }
        if (name == "SegmentList" || name == "SegmentTemplate")
            && node.attribute("indexRange").is_some()
        {
            return Err(Error::ByteRangeAddressing(format!(
                "representation {:?} declares indexRange",
                rep.attribute("id").unwrap_or("?")
            )));
        }
        if name == "Initialization" && node.attribute("range").is_some() {
            return Err(Error::ByteRangeAddressing(format!(
                "representation {:?} declares Initialization@range",
                rep.attribute("id").unwrap_or("?")
            )));
        }
    }
    Ok(())
}

fn segment_duration_ms_of(node: &roxmltree::Node) -> Result<Option<u64>> {
    let duration: Option<u64> = node
        .attribute("duration")
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Manifest(format!("bad duration attribute {v:?}")))
        })
        .transpose()?;
    let timescale: u64 = node
        .attribute("timescale")
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Manifest(format!("bad timescale attribute {v:?}")))
        })
        .transpose()?
        .unwrap_or(1);
    if timescale == 0 {
        return Err(Error::Manifest("timescale must be positive".into()));
    }
    Ok(duration.map(|d| d * 1000 / timescale))
}

fn resolve_addressing(
    addressing: &Addressing,
    rep_id: &str,
    bandwidth_bps: u64,
    base: &str,
    presentation_ms: Option<u64>,
) -> Result<ResolvedAddressing> {
    match addressing {
        Addressing::List(list) => {
            let init = find_child(list, "Initialization")
                .and_then(|n| n.attribute("sourceURL"))
                .ok_or_else(|| {
                    Error::Manifest(format!(
                        "representation {rep_id:?}: SegmentList without Initialization sourceURL"
                    ))
                })?;
            let urls: Vec<String> = list
                .children()
                .filter(|n| n.is_element() && n.tag_name().name() == "SegmentURL")
                .map(|n| {
                    n.attribute("media").map(|m| join_url(base, m)).ok_or_else(|| {
                        Error::Manifest(format!(
                            "representation {rep_id:?}: SegmentURL without media attribute"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if urls.is_empty() {
                return Err(Error::Manifest(format!(
                    "representation {rep_id:?}: SegmentList has no SegmentURL entries"
                )));
            }
            Ok(ResolvedAddressing {
                init_url: join_url(base, init),
                segment_urls: urls,
                segment_duration_ms: segment_duration_ms_of(list)?,
            })
        }
        Addressing::Template(tpl) => {
            let media = tpl.attribute("media").ok_or_else(|| {
                Error::Manifest(format!(
                    "representation {rep_id:?}: SegmentTemplate without media"
                ))
            })?;
            if media.contains("$Time$") {
                return Err(Error::Manifest(format!(
                    "representation {rep_id:?}: $Time$-based templates are not supported"
                )));
            }
            let init = tpl.attribute("initialization").ok_or_else(|| {
                Error::Manifest(format!(
                    "representation {rep_id:?}: SegmentTemplate without initialization"
                ))
            })?;
            let seg_ms = segment_duration_ms_of(tpl)?.ok_or_else(|| {
                Error::Manifest(format!(
                    "representation {rep_id:?}: SegmentTemplate without duration"
                ))
            })?;
            let presentation = presentation_ms.ok_or_else(|| {
                Error::Manifest(
                    "template addressing needs MPD@mediaPresentationDuration to count segments"
                        .into(),
                )
            })?;
            let count = presentation.div_ceil(seg_ms);
            let start: u64 = tpl
                .attribute("startNumber")
                .map(|v| {
                    v.parse()
                        .map_err(|_| Error::Manifest(format!("bad startNumber {v:?}")))
                })
                .transpose()?
                .unwrap_or(1);
            let urls = (start..start + count)
                .map(|n| {
                    expand_template(media, rep_id, bandwidth_bps, Some(n))
                        .map(|u| join_url(base, &u))
                })
                .collect::<Result<_>>()?;
            Ok(ResolvedAddressing {
                init_url: join_url(base, &expand_template(init, rep_id, bandwidth_bps, None)?),
                segment_urls: urls,
                segment_duration_ms: Some(seg_ms),
            })
        }
    }
}

/// Expand `$RepresentationID$`, `$Bandwidth$`, `$Number$` (with optional
/// `%0Nd` width) and `$$` in a segment template.
fn expand_template(
    template: &str,
    rep_id: &str,
    bandwidth_bps: u64,
    number: Option<u64>,
) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('$') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let end = after
            .find('$')
            .ok_or_else(|| Error::Manifest(format!("unterminated $ in template {template:?}")))?;
        let token = &after[..end];
        match token {
            "" => out.push('$'),
            "RepresentationID" => out.push_str(rep_id),
            "Bandwidth" => out.push_str(&bandwidth_bps.to_string()),
            _ if token == "Number" || token.starts_with("Number%") => {
                let n = number.ok_or_else(|| {
                    Error::Manifest(format!("$Number$ not allowed in template {template:?}"))
                })?;
                if let Some(fmt) = token.strip_prefix("Number%") {
                    let width: usize = fmt
                        .strip_prefix('0')
                        .and_then(|f| f.strip_suffix('d'))
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| {
                            Error::Manifest(format!("unsupported number format %{fmt}"))
                        })?;
                    out.push_str(&format!("{n:0width$}"));
                } else {
                    out.push_str(&n.to_string());
                }
            }
            other => {
                return Err(Error::Manifest(format!(
                    "unsupported template identifier ${other}$"
                )))
            }
        }
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Parse an ISO 8601 duration (`PT12M34.5S` style) into milliseconds.
fn parse_iso8601_duration_ms(s: &str) -> Result<u64> {
    let body = s
        .strip_prefix("PT")
        .or_else(|| s.strip_prefix("P0DT"))
        .ok_or_else(|| Error::Manifest(format!("unsupported duration format {s:?}")))?;
    let mut ms = 0f64;
    let mut acc = String::new();
    for c in body.chars() {
        match c {
            '0'..='9' | '.' => acc.push(c),
            'H' | 'M' | 'S' => {
                let v: f64 = acc
                    .parse()
                    .map_err(|_| Error::Manifest(format!("bad duration component in {s:?}")))?;
                ms += v * match c {
                    'H' => 3_600_000.0,
                    'M' => 60_000.0,
                    _ => 1000.0,
                };
                acc.clear();
            }
            _ => return Err(Error::Manifest(format!("bad duration character in {s:?}"))),
        }
    }
    if !acc.is_empty() {
        return Err(Error::Manifest(format!("trailing digits in duration {s:?}")));
    }
    Ok(ms.round() as u64)
}

fn check_equal_lengths(urls: &BTreeMap<String, Vec<String>>, kind: &str) -> Result<()> {
    let mut lens = urls.values().map(|v| v.len());
    if let Some(first) = lens.next() {
        if lens.any(|l| l != first) {
            return Err(Error::Manifest(format!(
                "{kind} representations have differing segment counts"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_io::SegmentRecord;

    fn minimal_list_mpd() -> String {
        let mut reps = String::new();
        for (id, bw, w, h) in [("v235", 235000, 320, 146), ("v2350", 2350000, 1280, 582)] {
            let urls: String = (1..=4)
                .map(|n| format!(r#"<SegmentURL media="{id}/seg-{n}.m4s"/>"#))
                .collect();
            reps.push_str(&format!(
                r#"<Representation id="{id}" bandwidth="{bw}" width="{w}" height="{h}">
                     <SegmentList duration="4" timescale="1">
                       <Initialization sourceURL="{id}/init.mp4"/>
                       {urls}
                     </SegmentList>
                   </Representation>"#
            ));
        }
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<MPD xmlns="urn:mpeg:dash:schema:mpd:2011" profiles="urn:mpeg:dash:profile:full:2011"
     type="static" mediaPresentationDuration="PT16S" minBufferTime="PT4S">
  <Period>
    <AdaptationSet contentType="video" mimeType="video/mp4">{reps}</AdaptationSet>
    <AdaptationSet contentType="audio" mimeType="audio/mp4">
      <Representation id="a128" bandwidth="128000">
        <SegmentList duration="4" timescale="1">
          <Initialization sourceURL="audio/init.mp4"/>
          <SegmentURL media="audio/seg-1.m4s"/><SegmentURL media="audio/seg-2.m4s"/>
          <SegmentURL media="audio/seg-3.m4s"/><SegmentURL media="audio/seg-4.m4s"/>
        </SegmentList>
      </Representation>
    </AdaptationSet>
  </Period>
</MPD>"#
        )
    }

    #[test]
    fn minimal_fixture_two_reps_four_segments() {
        let (ladder, index) = parse_manifest(&minimal_list_mpd()).unwrap();
        assert_eq!(ladder.representations().len(), 2);
        assert_eq!(index.video_urls.len(), 2);
        for urls in index.video_urls.values() {
            assert_eq!(urls.len(), 4);
        }
        assert_eq!(index.segment_duration_ms, 4000);
        assert_eq!(index.preferred_audio.as_deref(), Some("a128"));
        assert_eq!(index.init_urls["v235"], "v235/init.mp4");
    }

    #[test]
    fn parse_is_deterministic() {
        let doc = minimal_list_mpd();
        let a = parse_manifest(&doc).unwrap();
        let b = parse_manifest(&doc).unwrap();
        assert_eq!(a, b);
    }

    fn thirteen_rung_mpd() -> String {
        let rungs: [(u32, u32, u32); 13] = [
            (235, 320, 146),
            (375, 384, 174),
            (560, 512, 234),
            (750, 512, 234),
            (1050, 640, 292),
            (1750, 720, 328),
            (2350, 1280, 582),
            (3000, 1280, 582),
            (3850, 1920, 1080),
            (4300, 1920, 1080),
            (15000, 3840, 2160),
            (25000, 3840, 2160),
            (40000, 3840, 2160),
        ];
        let reps: String = rungs
            .iter()
            .map(|&(kbps, w, h)| {
                format!(
                    r#"<Representation id="r{kbps}" bandwidth="{}" width="{w}" height="{h}">
                         <SegmentTemplate media="r{kbps}/seg-$Number$.m4s"
                                          initialization="r{kbps}/init.mp4"
                                          duration="4" timescale="1" startNumber="1"/>
                       </Representation>"#,
                    kbps as u64 * 1000
                )
            })
            .collect();
        format!(
            r#"<MPD profiles="urn:mpeg:dash:profile:full:2011" type="static"
                 mediaPresentationDuration="PT20S">
                 <Period><AdaptationSet contentType="video" mimeType="video/mp4">{reps}</AdaptationSet></Period>
               </MPD>"#
        )
    }

    #[test]
    fn thirteen_rung_ladder_parses() {
        let (ladder, index) = parse_manifest(&thirteen_rung_mpd()).unwrap();
        assert_eq!(ladder.representations().len(), 13);
        assert_eq!(ladder.lowest().bitrate_kbps, 235);
        assert_eq!(ladder.lowest().resolution(), Resolution::new(320, 146));
        assert_eq!(ladder.highest().bitrate_kbps, 40000);
        assert_eq!(ladder.highest().resolution(), Resolution::new(3840, 2160));
        // template expanded: 20 s of 4 s segments = 5 per rep
        assert_eq!(index.video_urls["r235"].len(), 5);
        assert_eq!(index.video_urls["r235"][0], "r235/seg-1.m4s");
    }

    #[test]
    fn byte_range_is_rejected() {
        let doc = r#"<MPD profiles="urn:mpeg:dash:profile:full:2011" type="static">
          <Period><AdaptationSet contentType="video" mimeType="video/mp4">
            <Representation id="v" bandwidth="235000" width="320" height="146">
              <SegmentList duration="4">
                <Initialization sourceURL="init.mp4"/>
                <SegmentURL media="all.mp4" mediaRange="0-999"/>
              </SegmentList>
            </Representation>
          </AdaptationSet></Period></MPD>"#;
        assert!(matches!(
            parse_manifest(doc),
            Err(Error::ByteRangeAddressing(_))
        ));
    }

    #[test]
    fn non_full_profile_is_rejected() {
        let doc = minimal_list_mpd().replace(
            "urn:mpeg:dash:profile:full:2011",
            "urn:mpeg:dash:profile:isoff-on-demand:2011",
        );
        match parse_manifest(&doc) {
            Err(Error::UnsupportedProfile { found }) => {
                assert!(found.contains("on-demand"));
            }
            other => panic!("expected unsupported profile, got {other:?}"),
        }
    }

    #[test]
    fn dynamic_manifest_is_rejected() {
        let doc = minimal_list_mpd().replace(r#"type="static""#, r#"type="dynamic""#);
        assert!(matches!(parse_manifest(&doc), Err(Error::Manifest(_))));
    }

    #[test]
    fn resolve_representation_exact_match() {
        let ladder = Ladder::reference();
        assert_eq!(
            resolve_representation(&ladder, 235).unwrap().resolution(),
            Resolution::new(320, 146)
        );
        assert_eq!(
            resolve_representation(&ladder, 40000).unwrap().resolution(),
            Resolution::new(3840, 2160)
        );
        match resolve_representation(&ladder, 300) {
            Err(Error::UnknownBitrate { rep_level, nearest }) => {
                assert_eq!(rep_level, 300);
                assert!(nearest.contains("235") && nearest.contains("375"));
            }
            other => panic!("expected unknown bitrate, got {other:?}"),
        }
    }

    fn log_with_levels(levels: &[u32]) -> VideoLog {
        let records = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| SegmentRecord::new(i as u64 + 1, l, 0))
            .collect();
        VideoLog::new(records, "test.log").unwrap()
    }

    #[test]
    fn highest_resolution_picks_max_area() {
        let ladder = Ladder::reference();
        assert_eq!(
            highest_resolution(&log_with_levels(&[235, 2350]), &ladder).unwrap(),
            Resolution::new(1280, 582)
        );
        assert_eq!(
            highest_resolution(&log_with_levels(&[560]), &ladder).unwrap(),
            Resolution::new(512, 234)
        );
        assert_eq!(
            highest_resolution(&log_with_levels(&[3850, 4300]), &ladder).unwrap(),
            Resolution::new(1920, 1080)
        );
    }

    #[test]
    fn highest_resolution_dominates_all_segments() {
        let ladder = Ladder::reference();
        let log = log_with_levels(&[235, 1050, 3000, 375]);
        let top = highest_resolution(&log, &ladder).unwrap();
        for rec in log.records() {
            let res = resolve_representation(&ladder, rec.rep_level)
                .unwrap()
                .resolution();
            assert!(top.pixel_area() >= res.pixel_area());
        }
    }

    #[test]
    fn ladder_rejects_duplicate_bitrate() {
        let reps = vec![
            Representation::video("a", 235, 320, 146),
            Representation::video("b", 235, 384, 174),
        ];
        assert!(Ladder::new(reps).is_err());
    }

    #[test]
    fn ladder_rejects_area_regression() {
        let reps = vec![
            Representation::video("a", 235, 1280, 582),
            Representation::video("b", 375, 320, 146),
        ];
        assert!(Ladder::new(reps).is_err());
    }

    #[test]
    fn template_expansion() {
        assert_eq!(
            expand_template("$RepresentationID$/seg-$Number$.m4s", "v1", 1000, Some(7)).unwrap(),
            "v1/seg-7.m4s"
        );
        assert_eq!(
            expand_template("chunk-$Number%05d$.m4s", "v1", 1000, Some(42)).unwrap(),
            "chunk-00042.m4s"
        );
        assert_eq!(
            expand_template("$$-$Bandwidth$", "v1", 235000, None).unwrap(),
            "$-235000"
        );
    }

    #[test]
    fn iso8601_durations() {
        assert_eq!(parse_iso8601_duration_ms("PT16S").unwrap(), 16000);
        assert_eq!(parse_iso8601_duration_ms("PT1M30S").unwrap(), 90000);
        assert_eq!(parse_iso8601_duration_ms("PT0.5S").unwrap(), 500);
        assert_eq!(parse_iso8601_duration_ms("PT1H").unwrap(), 3_600_000);
        assert!(parse_iso8601_duration_ms("16S").is_err());
    }

    #[test]
    fn base_url_joining() {
        assert_eq!(join_url("http://h/p/", "seg.m4s"), "http://h/p/seg.m4s");
        assert_eq!(join_url("http://h/p/x.mpd", "seg.m4s"), "http://h/p/seg.m4s");
        assert_eq!(join_url("", "seg.m4s"), "seg.m4s");
        assert_eq!(join_url("dir/", "http://abs/seg.m4s"), "http://abs/seg.m4s");
    }
}
