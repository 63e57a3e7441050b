//! Input parsing: WAV audio, f0 tracks, and dialog annotations.
//!
//! All loaders are pure readers; the returned structures are immutable and
//! validated on construction. Annotation invariants are checked by
//! [`DialogAnnotation::new`] and never silently repaired.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::IngestError;

/// Track sample rate shared by f0 and energy contours, in Hz.
pub const TRACK_RATE: f64 = 100.0;

/// Mono audio signal with amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    /// Samples per second.
    pub rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, rate: u32) -> Self {
        assert!(rate > 0, "waveform rate must be positive");
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Waveform { samples, rate }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }
}

/// Physical unit of a sampled contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackUnit {
    Hertz,
    Semitone,
    Rms,
}

/// Uniformly sampled scalar contour (f0 or energy) with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrack {
    pub values: Vec<f64>,
    /// Samples per second.
    pub rate: f64,
    /// Same length as `values`; `false` marks voiceless or removed samples.
    pub valid: Vec<bool>,
    pub unit: TrackUnit,
}

impl SampledTrack {
    pub fn new(values: Vec<f64>, rate: f64, valid: Vec<bool>, unit: TrackUnit) -> Self {
        assert!(rate > 0.0, "track rate must be positive");
        assert_eq!(values.len(), valid.len(), "mask length mismatch");
        debug_assert!(values
            .iter()
            .zip(&valid)
            .all(|(v, &ok)| !ok || v.is_finite()));
        SampledTrack {
            values,
            rate,
            valid,
            unit,
        }
    }

    /// All-valid track from plain values.
    pub fn from_values(values: Vec<f64>, rate: f64, unit: TrackUnit) -> Self {
        let valid = vec![true; values.len()];
        SampledTrack::new(values, rate, valid, unit)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `i` in seconds.
    pub fn time_of(&self, i: usize) -> f64 {
        i as f64 / self.rate
    }

    /// Nearest sample index for time `t`, clamped to the track.
    pub fn index_of(&self, t: f64) -> usize {
        let i = (t * self.rate).round();
        (i.max(0.0) as usize).min(self.len().saturating_sub(1))
    }

    /// Half-open sample index range covering `[start, end)` seconds.
    pub fn index_range(&self, start: f64, end: f64) -> std::ops::Range<usize> {
        let a = ((start * self.rate).ceil().max(0.0)) as usize;
        let b = ((end * self.rate).ceil().max(0.0)) as usize;
        a.min(self.len())..b.min(self.len())
    }

    /// Values of the valid samples.
    pub fn valid_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.valid)
            .filter_map(|(&v, &ok)| ok.then_some(v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "f",
            Gender::Male => "m",
        }
    }

    pub fn parse(code: &str) -> Result<Self, IngestError> {
        match code {
            "f" => Ok(Gender::Female),
            "m" => Ok(Gender::Male),
            other => Err(IngestError::UnknownGender {
                code: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Describer,
    Follower,
}

impl Role {
    pub fn code(self) -> &'static str {
        match self {
            Role::Describer => "d",
            Role::Follower => "f",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Speaker {
    pub id: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub task_id: String,
    pub start: f64,
    pub end: f64,
    /// Speaker id of the describer; all other speakers are followers.
    pub describer: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub speaker: String,
    pub task: String,
    pub start: f64,
    pub end: f64,
    /// Ordinal in the session-wide onset ordering.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub speaker: String,
    pub start: f64,
    pub end: f64,
    pub text: String,
}

/// Speakers, tasks, turns, and words of one session on a shared timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogAnnotation {
    pub session_id: String,
    pub speakers: Vec<Speaker>,
    pub tasks: Vec<Task>,
    pub turns: Vec<Turn>,
    pub words: Vec<Word>,
}

impl DialogAnnotation {
    /// Builds the annotation, sorts turns/words by onset, assigns turn
    /// indices, and enforces all structural invariants.
    pub fn new(
        session_id: String,
        speakers: Vec<Speaker>,
        tasks: Vec<Task>,
        mut turns: Vec<Turn>,
        mut words: Vec<Word>,
    ) -> Result<Self, IngestError> {
        turns.sort_by(|a, b| a.start.total_cmp(&b.start));
        for (i, t) in turns.iter_mut().enumerate() {
            t.index = i;
        }
        words.sort_by(|a, b| a.start.total_cmp(&b.start));
        let ann = DialogAnnotation {
            session_id,
            speakers,
            tasks,
            turns,
            words,
        };
        ann.validate()?;
        Ok(ann)
    }

    fn validate(&self) -> Result<(), IngestError> {
        for task in &self.tasks {
            if task.end <= task.start {
                return Err(IngestError::EmptyInterval {
                    start: task.start,
                    end: task.end,
                });
            }
            if self.speaker(&task.describer).is_none() {
                return Err(IngestError::UnknownSpeaker {
                    id: task.describer.clone(),
                });
            }
        }
        for turn in &self.turns {
            if turn.end <= turn.start {
                return Err(IngestError::EmptyInterval {
                    start: turn.start,
                    end: turn.end,
                });
            }
            if self.speaker(&turn.speaker).is_none() {
                return Err(IngestError::UnknownSpeaker {
                    id: turn.speaker.clone(),
                });
            }
            let task = self
                .tasks
                .iter()
                .find(|t| t.task_id == turn.task)
                .ok_or_else(|| IngestError::UnknownTask {
                    id: turn.task.clone(),
                })?;
            if turn.start < task.start || turn.end > task.end {
                return Err(IngestError::TurnOutsideTask {
                    speaker: turn.speaker.clone(),
                    task: turn.task.clone(),
                    start: turn.start,
                    end: turn.end,
                });
            }
        }
        // Turns must not overlap per speaker (turns are onset-sorted).
        for speaker in &self.speakers {
            let mut prev_end = f64::NEG_INFINITY;
            let mut prev_start = f64::NEG_INFINITY;
            for turn in self.turns.iter().filter(|t| t.speaker == speaker.id) {
                if turn.start < prev_end {
                    return Err(IngestError::OverlappingTurns {
                        speaker: speaker.id.clone(),
                        t0: prev_start,
                        t1: turn.start,
                    });
                }
                prev_end = turn.end;
                prev_start = turn.start;
            }
        }
        const SLACK: f64 = 1e-9;
        for word in &self.words {
            if word.end <= word.start {
                return Err(IngestError::EmptyInterval {
                    start: word.start,
                    end: word.end,
                });
            }
            let nested = self.turns.iter().any(|t| {
                t.speaker == word.speaker
                    && word.start >= t.start - SLACK
                    && word.end <= t.end + SLACK
            });
            if !nested {
                return Err(IngestError::WordOutsideTurn {
                    speaker: word.speaker.clone(),
                    start: word.start,
                    end: word.end,
                });
            }
        }
        Ok(())
    }

    pub fn speaker(&self, id: &str) -> Option<&Speaker> {
        self.speakers.iter().find(|s| s.id == id)
    }

    pub fn gender_of(&self, speaker_id: &str) -> Option<Gender> {
        self.speaker(speaker_id).map(|s| s.gender)
    }

    /// Role of a speaker within a task.
    pub fn role_of(&self, speaker_id: &str, task_id: &str) -> Option<Role> {
        let task = self.tasks.iter().find(|t| t.task_id == task_id)?;
        self.speaker(speaker_id)?;
        Some(if task.describer == speaker_id {
            Role::Describer
        } else {
            Role::Follower
        })
    }

    /// Words of `speaker_id` nested in `[start, end]`, onset-sorted.
    pub fn words_in(&self, speaker_id: &str, start: f64, end: f64) -> Vec<&Word> {
        const SLACK: f64 = 1e-9;
        self.words
            .iter()
            .filter(|w| w.speaker == speaker_id && w.start >= start - SLACK && w.end <= end + SLACK)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// WAV

const WAV_HEADER_LEN: usize = 44;

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, detail: impl Into<String>) -> IngestError {
    IngestError::MalformedHeader {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Loads channel 0 of a 16-bit linear PCM WAV file.
///
/// Samples are scaled to [-1, 1] by dividing by 32768; the rate is read from
/// the header.
pub fn load_waveform(path: impl AsRef<Path>) -> Result<Waveform, IngestError> {
    load_waveform_channel(path, 0)
}

/// Loads one channel of a 16-bit linear PCM WAV file.
pub fn load_waveform_channel(
    path: impl AsRef<Path>,
    channel: usize,
) -> Result<Waveform, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.is_empty() {
        return Err(IngestError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    if bytes.len() < WAV_HEADER_LEN {
        return Err(malformed(path, "file shorter than a RIFF/WAVE header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(malformed(path, "missing RIFF magic"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(malformed(path, "missing WAVE form type"));
    }

    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);

    // Walk the chunk list for fmt and data.
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<(usize, usize)> = None; // offset, len
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(pos + 4) as usize;
        let body = pos + 8;
        if body + size > bytes.len() {
            return Err(malformed(
                path,
                format!(
                    "chunk {:?} overruns file",
                    String::from_utf8_lossy(id)
                ),
            ));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed(path, "fmt chunk shorter than 16 bytes"));
                }
                fmt = Some((
                    u16_at(body),
                    u16_at(body + 2),
                    u32_at(body + 4),
                    u16_at(body + 14),
                ));
            }
            b"data" => data = Some((body, size)),
            _ => {}
        }
        pos = body + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| malformed(path, "no fmt chunk"))?;
    if format != 1 {
        return Err(IngestError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("format tag {format}, only 1 (PCM) supported"),
        });
    }
    if bits != 16 {
        return Err(IngestError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("{bits}-bit samples, only 16-bit supported"),
        });
    }
    if channels == 0 || rate == 0 {
        return Err(malformed(path, "zero channel count or sample rate"));
    }
    if channel >= channels as usize {
        return Err(IngestError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("channel {channel} requested, file has {channels}"),
        });
    }
    let (off, len) = data.ok_or_else(|| malformed(path, "no data chunk"))?;
    if len == 0 {
        return Err(malformed(path, "empty data chunk"));
    }
    let frame = 2 * channels as usize;
    if len % frame != 0 {
        return Err(malformed(path, "data chunk not a whole number of frames"));
    }
    let n = len / frame;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let b = off + i * frame + 2 * channel;
        let s = i16::from_le_bytes([bytes[b], bytes[b + 1]]);
        samples.push(f32::from(s) / 32768.0);
    }
    Ok(Waveform::new(samples, rate))
}

/// Writes a mono 16-bit PCM WAV file. Amplitudes are clamped to [-1, 1].
pub fn write_waveform(path: impl AsRef<Path>, w: &Waveform) -> Result<(), IngestError> {
    let path = path.as_ref();
    let n = w.samples.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.rate.to_le_bytes());
    out.extend_from_slice(&(w.rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &w.samples {
        let v = (f64::from(s) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// f0 track

/// Loads a two-column f0 track (`<time>\t<hz>`, 0 Hz = voiceless) and asserts
/// it onto the 100 Hz grid.
pub fn load_f0_track(path: impl AsRef<Path>) -> Result<SampledTrack, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim().is_empty() {
        return Err(IngestError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (t, v) = match (cols.next(), cols.next()) {
            (Some(t), Some(v)) => (t, v),
            _ => {
                return Err(IngestError::Syntax {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    detail: "expected two columns: time and f0".into(),
                })
            }
        };
        let parse = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| IngestError::Syntax {
                path: path.to_path_buf(),
                line: lineno + 1,
                detail: format!("cannot parse {what} {s:?}"),
            })
        };
        let t = parse(t, "time")?;
        let v = parse(v, "f0")?;
        if !t.is_finite() || !v.is_finite() || v < 0.0 {
            return Err(IngestError::Syntax {
                path: path.to_path_buf(),
                line: lineno + 1,
                detail: "time and f0 must be finite, f0 non-negative".into(),
            });
        }
        if let Some(&last) = times.last() {
            if t <= last {
                return Err(IngestError::NonMonotone {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                });
            }
        }
        times.push(t);
        values.push(v);
    }
    if times.len() < 2 {
        return Err(IngestError::Syntax {
            path: path.to_path_buf(),
            line: 1,
            detail: "f0 track needs at least two samples".into(),
        });
    }
    let expected_dt = 1.0 / TRACK_RATE;
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if (dt - expected_dt).abs() > 0.01 * expected_dt {
        return Err(IngestError::BadRate {
            path: path.to_path_buf(),
            found: 1.0 / dt,
            required: TRACK_RATE,
        });
    }
    let valid: Vec<bool> = values.iter().map(|&v| v > 0.0).collect();
    Ok(SampledTrack::new(values, TRACK_RATE, valid, TrackUnit::Hertz))
}

/// Writes an f0 track in the ingest format; invalid samples are written as 0.
pub fn write_f0_track(path: impl AsRef<Path>, track: &SampledTrack) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..track.len() {
        let v = if track.valid[i] { track.values[i] } else { 0.0 };
        out.push_str(&format!("{:.3}\t{}\n", track.time_of(i), v));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// Annotation

/// Loads a tab-separated annotation tier file.
///
/// Line types: `SPK <id> <f|m>`, `TASK <id> <start> <end> <describer> <score>`,
/// `TURN <spk> <task> <start> <end>`, `WORD <spk> <start> <end> <text>`.
pub fn load_annotation(
    path: impl AsRef<Path>,
    session_id: &str,
) -> Result<DialogAnnotation, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim().is_empty() {
        return Err(IngestError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let mut speakers = Vec::new();
    let mut tasks = Vec::new();
    let mut turns = Vec::new();
    let mut words = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let syntax = |detail: String| IngestError::Syntax {
            path: path.to_path_buf(),
            line: lineno + 1,
            detail,
        };
        let num = |s: &str, what: &str| -> Result<f64, IngestError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(format!("cannot parse {what} {s:?}")))
        };
        match cols[0] {
            "SPK" => {
                if cols.len() != 3 {
                    return Err(syntax("SPK needs: id, gender".into()));
                }
                speakers.push(Speaker {
                    id: cols[1].to_string(),
                    gender: Gender::parse(cols[2])?,
                });
            }
            "TASK" => {
                if cols.len() != 6 {
                    return Err(syntax(
                        "TASK needs: id, start, end, describer, score".into(),
                    ));
                }
                tasks.push(Task {
                    task_id: cols[1].to_string(),
                    start: num(cols[2], "start")?,
                    end: num(cols[3], "end")?,
                    describer: cols[4].to_string(),
                    score: num(cols[5], "score")?,
                });
            }
            "TURN" => {
                if cols.len() != 5 {
                    return Err(syntax("TURN needs: speaker, task, start, end".into()));
                }
                turns.push(Turn {
                    speaker: cols[1].to_string(),
                    task: cols[2].to_string(),
                    start: num(cols[3], "start")?,
                    end: num(cols[4], "end")?,
                    index: 0,
                });
            }
            "WORD" => {
                if cols.len() != 5 {
                    return Err(syntax("WORD needs: speaker, start, end, text".into()));
                }
                words.push(Word {
                    speaker: cols[1].to_string(),
                    start: num(cols[2], "start")?,
                    end: num(cols[3], "end")?,
                    text: cols[4].to_string(),
                });
            }
            other => return Err(syntax(format!("unknown line type {other:?}"))),
        }
    }
    DialogAnnotation::new(session_id.to_string(), speakers, tasks, turns, words)
}

/// Writes an annotation in the ingest format (times with 3 decimals).
pub fn write_annotation(
    path: impl AsRef<Path>,
    ann: &DialogAnnotation,
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let res: std::io::Result<()> = (|| {
        for s in &ann.speakers {
            writeln!(out, "SPK\t{}\t{}", s.id, s.gender.code())?;
        }
        for t in &ann.tasks {
            writeln!(
                out,
                "TASK\t{}\t{:.3}\t{:.3}\t{}\t{}",
                t.task_id, t.start, t.end, t.describer, t.score
            )?;
        }
        for t in &ann.turns {
            writeln!(
                out,
                "TURN\t{}\t{}\t{:.3}\t{:.3}",
                t.speaker, t.task, t.start, t.end
            )?;
        }
        for w in &ann.words {
            writeln!(out, "WORD\t{}\t{:.3}\t{:.3}\t{}", w.speaker, w.start, w.end, w.text)?;
        }
        Ok(())
    })();
    res.map_err(|e| io_err(path, e))?;
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Loads the f0 track and annotation of one session channel together.
pub fn load_tracks_and_annotation(
    f0_path: impl AsRef<Path>,
    ann_path: impl AsRef<Path>,
    session_id: &str,
) -> Result<(SampledTrack, DialogAnnotation), IngestError> {
    let track = load_f0_track(f0_path)?;
    let ann = load_annotation(ann_path, session_id)?;
    Ok((track, ann))
}
