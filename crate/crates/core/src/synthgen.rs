//! Synthetic dyad generator with controllable entrainment.
//!
//! Dyads are built from per-speaker baseline distributions for f0 level,
//! accent size, energy, and syllable rate. The responder's target feature can
//! be coupled to the initiator's previous turn (proximity or synchrony mode)
//! or pushed away from it (disentrain mode). Tracks are synthesized directly:
//! f0 at 100 Hz as register lines plus accent bumps, and a 16 kHz
//! amplitude-modulated 1 kHz carrier whose syllable bursts drive energy and
//! nucleus detection. Everything is deterministic given the seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{IngestError, SynthError};
use crate::ingest::{
    self, DialogAnnotation, Gender, SampledTrack, Speaker, Task, TrackUnit, Turn, Waveform, Word,
    TRACK_RATE,
};

/// Entrainment coupling injected into the responder's target feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntrainMode {
    None,
    Proximity,
    Synchrony,
    Disentrain,
}

impl EntrainMode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => EntrainMode::None,
            "proximity" => EntrainMode::Proximity,
            "synchrony" => EntrainMode::Synchrony,
            "disentrain" => EntrainMode::Disentrain,
            _ => return None,
        })
    }
}

/// Feature whose per-turn value the coupling manipulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetFeature {
    /// Register level in semitones over the speaker base (drives gnl_f0.med).
    F0Median,
    /// Syllable rate in Hz (drives rhy_en.syl.rate).
    SyllableRate,
    /// Carrier amplitude (drives gnl_en.med).
    EnergyMedian,
}

impl TargetFeature {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "f0_median" => TargetFeature::F0Median,
            "syllable_rate" => TargetFeature::SyllableRate,
            "energy_median" => TargetFeature::EnergyMedian,
            _ => return None,
        })
    }
}

/// Baseline feature distributions of one synthetic speaker.
#[derive(Debug, Clone)]
pub struct SpeakerProfile {
    pub id: String,
    pub gender: Gender,
    /// Speaker floor frequency; semitone levels are relative to it.
    pub f0_base_hz: f64,
    /// Mean and spread of the per-turn register level, semitones.
    pub f0_level_mean_st: f64,
    pub f0_level_sd_st: f64,
    /// Accent bump height, semitones.
    pub f0_range_st: f64,
    /// Mean and spread of the per-turn carrier amplitude, in [0, 1].
    pub energy_mean: f64,
    pub energy_sd: f64,
    /// Mean and spread of the per-turn syllable rate, Hz.
    pub syl_rate_hz: f64,
    pub syl_rate_sd: f64,
}

impl SpeakerProfile {
    pub fn standard(id: &str, gender: Gender) -> Self {
        let f0_base_hz = match gender {
            Gender::Female => 180.0,
            Gender::Male => 110.0,
        };
        SpeakerProfile {
            id: id.to_string(),
            gender,
            f0_base_hz,
            f0_level_mean_st: 6.0,
            f0_level_sd_st: 2.5,
            f0_range_st: 3.0,
            energy_mean: 0.5,
            energy_sd: 0.12,
            syl_rate_hz: 4.0,
            syl_rate_sd: 0.3,
        }
    }
}

/// Full generator configuration for one dyad.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub session_id: String,
    pub speakers: [SpeakerProfile; 2],
    pub n_turns: usize,
    pub n_tasks: usize,
    /// Uniform turn duration range, seconds.
    pub turn_dur: (f64, f64),
    /// Uniform pause range between turns, seconds.
    pub pause_dur: (f64, f64),
    pub entrain_mode: EntrainMode,
    /// Coupling gain in [0, 1].
    pub entrain_gain: f64,
    pub target: TargetFeature,
    pub audio_rate: u32,
    pub seed: u64,
}

impl SynthConfig {
    /// A mixed-gender dyad with moderate defaults.
    pub fn standard(session_id: &str, seed: u64) -> Self {
        SynthConfig {
            session_id: session_id.to_string(),
            speakers: [
                SpeakerProfile::standard(&format!("{session_id}_A"), Gender::Female),
                SpeakerProfile::standard(&format!("{session_id}_B"), Gender::Male),
            ],
            n_turns: 40,
            n_tasks: 4,
            turn_dur: (1.4, 2.4),
            pause_dur: (0.4, 0.8),
            entrain_mode: EntrainMode::None,
            entrain_gain: 0.0,
            target: TargetFeature::F0Median,
            audio_rate: 16000,
            seed: 0,
        }
        .with_seed(seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.entrain_gain) {
            return Err(SynthError::InvalidConfig(format!(
                "gain {} outside [0, 1]",
                self.entrain_gain
            )));
        }
        if self.n_turns < 4 {
            return Err(SynthError::InvalidConfig(format!(
                "n_turns {} below 4",
                self.n_turns
            )));
        }
        if self.n_tasks == 0 || self.n_tasks > self.n_turns / 2 {
            return Err(SynthError::InvalidConfig(
                "n_tasks must be in 1..=n_turns/2".into(),
            ));
        }
        if self.turn_dur.0 <= 0.0
            || self.turn_dur.1 < self.turn_dur.0
            || self.pause_dur.0 < 0.0
            || self.pause_dur.1 < self.pause_dur.0
        {
            return Err(SynthError::InvalidConfig("bad duration ranges".into()));
        }
        if self.audio_rate <= 8000 {
            return Err(SynthError::InvalidConfig(
                "audio rate must exceed 8000 Hz".into(),
            ));
        }
        Ok(())
    }
}

/// Per-turn ground truth of the generator.
#[derive(Debug, Clone)]
pub struct TurnTruth {
    pub turn_index: usize,
    pub speaker: String,
    /// Register level over the speaker base, semitones.
    pub f0_level_st: f64,
    pub syl_rate: f64,
    pub energy: f64,
}

/// One speaker channel: f0 track and audio.
#[derive(Debug, Clone)]
pub struct SynthChannel {
    pub f0: SampledTrack,
    pub audio: Waveform,
    /// Ideal (noise-free) energy envelope at the track rate.
    pub ideal_energy: SampledTrack,
}

/// A generated dyad.
#[derive(Debug, Clone)]
pub struct SynthDyad {
    pub annotation: DialogAnnotation,
    pub channels: BTreeMap<String, SynthChannel>,
    pub truth: Vec<TurnTruth>,
}

struct TurnPlan {
    speaker: usize,
    task: usize,
    start: f64,
    end: f64,
    level_st: f64,
    syl_rate: f64,
    energy: f64,
    words: Vec<(f64, f64)>,
    bursts: Vec<f64>,
    accents: Vec<f64>,
}

/// Generates one dyad. Deterministic given the config seed.
pub fn generate_dyad(cfg: &SynthConfig) -> Result<SynthDyad, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let level_draw = [
        Normal::new(cfg.speakers[0].f0_level_mean_st, cfg.speakers[0].f0_level_sd_st).unwrap(),
        Normal::new(cfg.speakers[1].f0_level_mean_st, cfg.speakers[1].f0_level_sd_st).unwrap(),
    ];
    let rate_draw = [
        Normal::new(cfg.speakers[0].syl_rate_hz, cfg.speakers[0].syl_rate_sd).unwrap(),
        Normal::new(cfg.speakers[1].syl_rate_hz, cfg.speakers[1].syl_rate_sd).unwrap(),
    ];
    let energy_draw = [
        Normal::new(cfg.speakers[0].energy_mean, cfg.speakers[0].energy_sd).unwrap(),
        Normal::new(cfg.speakers[1].energy_mean, cfg.speakers[1].energy_sd).unwrap(),
    ];

    let turns_per_task = cfg.n_turns.div_ceil(cfg.n_tasks);
    let mut plans: Vec<TurnPlan> = Vec::with_capacity(cfg.n_turns);
    let mut cursor = 0.5;
    let mut prev_target: Option<f64> = None;

    for k in 0..cfg.n_turns {
        let speaker = k % 2;
        let task = (k / turns_per_task).min(cfg.n_tasks - 1);
        let dur = rng.gen_range(cfg.turn_dur.0..=cfg.turn_dur.1);
        let start = cursor;
        let end = start + dur;
        cursor = end + rng.gen_range(cfg.pause_dur.0..=cfg.pause_dur.1);

        let mut level = level_draw[speaker].sample(&mut rng).clamp(1.0, 16.0);
        let mut rate = rate_draw[speaker].sample(&mut rng).clamp(2.5, 6.0);
        let mut energy = energy_draw[speaker].sample(&mut rng).clamp(0.15, 0.85);

        // Couple the responder's target feature to the initiator's previous
        // turn value.
        let own = match cfg.target {
            TargetFeature::F0Median => level,
            TargetFeature::SyllableRate => rate,
            TargetFeature::EnergyMedian => energy,
        };
        let own_mean = match cfg.target {
            TargetFeature::F0Median => cfg.speakers[speaker].f0_level_mean_st,
            TargetFeature::SyllableRate => cfg.speakers[speaker].syl_rate_hz,
            TargetFeature::EnergyMedian => cfg.speakers[speaker].energy_mean,
        };
        let other_mean = match cfg.target {
            TargetFeature::F0Median => cfg.speakers[1 - speaker].f0_level_mean_st,
            TargetFeature::SyllableRate => cfg.speakers[1 - speaker].syl_rate_hz,
            TargetFeature::EnergyMedian => cfg.speakers[1 - speaker].energy_mean,
        };
        let g = cfg.entrain_gain;
        let coupled = match (cfg.entrain_mode, prev_target) {
            (EntrainMode::None, _) | (_, None) => own,
            (EntrainMode::Proximity, Some(prev)) => (1.0 - g) * own + g * prev,
            (EntrainMode::Synchrony, Some(prev)) => {
                own_mean + (1.0 - g) * (own - own_mean) + g * (prev - other_mean)
            }
            (EntrainMode::Disentrain, Some(prev)) => own + g * (own - prev),
        };
        prev_target = Some(coupled);
        match cfg.target {
            TargetFeature::F0Median => level = coupled.clamp(0.5, 20.0),
            TargetFeature::SyllableRate => rate = coupled.clamp(2.0, 7.0),
            TargetFeature::EnergyMedian => energy = coupled.clamp(0.05, 0.95),
        }

        // Word tier: a duration mixture guaranteeing both accent seed
        // classes, with occasional IPU-splitting gaps.
        let mut words = Vec::new();
        let mut t = start + 0.02;
        while t < end - 0.15 {
            let u: f64 = rng.gen();
            let wdur = if u < 0.30 {
                rng.gen_range(0.08..0.13)
            } else if u < 0.45 {
                rng.gen_range(0.65..0.85)
            } else {
                rng.gen_range(0.20..0.45)
            };
            let wend = (t + wdur).min(end - 0.01);
            if wend - t >= 0.05 {
                words.push((t, wend));
            }
            let gap = if rng.gen::<f64>() < 0.15 {
                rng.gen_range(0.12..0.22)
            } else {
                rng.gen_range(0.01..0.08)
            };
            t = wend + gap;
        }
        if words.is_empty() {
            words.push((start + 0.02, end - 0.02));
        }

        // Syllable bursts on a turn-level grid at the syllable period, so
        // the per-turn count recovers the configured rate.
        let mut bursts = Vec::new();
        let mut bt = start + 0.5 / rate;
        while bt < end - 0.05 {
            bursts.push(bt);
            bt += 1.0 / rate;
        }
        // Accent bumps on a subset of bursts; the first burst of the turn
        // always carries one so every turn has a local pitch event.
        let mut accents = Vec::new();
        for (i, &b) in bursts.iter().enumerate() {
            if i == 0 || rng.gen::<f64>() < 0.35 {
                accents.push(b);
            }
        }

        plans.push(TurnPlan {
            speaker,
            task,
            start,
            end,
            level_st: level,
            syl_rate: rate,
            energy,
            words,
            bursts,
            accents,
        });
    }
    let total_dur = cursor + 0.5;

    // Annotation.
    let speakers: Vec<Speaker> = cfg
        .speakers
        .iter()
        .map(|p| Speaker {
            id: p.id.clone(),
            gender: p.gender,
        })
        .collect();
    let mut tasks = Vec::new();
    for ti in 0..cfg.n_tasks {
        let members: Vec<&TurnPlan> = plans.iter().filter(|p| p.task == ti).collect();
        if members.is_empty() {
            continue;
        }
        let start = members.first().unwrap().start - 0.2;
        let end = members.last().unwrap().end + 0.2;
        tasks.push(Task {
            task_id: format!("t{ti}"),
            start,
            end,
            describer: cfg.speakers[ti % 2].id.clone(),
            score: (50.0 + 5.0 * (ti as f64 % 7.0)) - (ti as f64 * 1.5),
        });
    }
    let turns: Vec<Turn> = plans
        .iter()
        .map(|p| Turn {
            speaker: cfg.speakers[p.speaker].id.clone(),
            task: format!("t{}", p.task),
            start: p.start,
            end: p.end,
            index: 0,
        })
        .collect();
    let words: Vec<Word> = plans
        .iter()
        .flat_map(|p| {
            let spk = cfg.speakers[p.speaker].id.clone();
            p.words.iter().enumerate().map(move |(i, &(s, e))| Word {
                speaker: spk.clone(),
                start: s,
                end: e,
                text: format!("w{i}"),
            })
        })
        .collect();
    let annotation = DialogAnnotation::new(
        cfg.session_id.clone(),
        speakers,
        tasks,
        turns,
        words,
    )
    .map_err(|e| SynthError::InvalidConfig(format!("generated annotation invalid: {e}")))?;

    // Tracks.
    let n_track = (total_dur * TRACK_RATE).ceil() as usize;
    let n_audio = (total_dur * f64::from(cfg.audio_rate)).ceil() as usize;
    let mut channels = BTreeMap::new();
    for (s, profile) in cfg.speakers.iter().enumerate() {
        let mut f0 = vec![0.0f64; n_track];
        let mut envelope = vec![0.0f64; n_track];
        let mut audio = vec![0.0f32; n_audio];
        for plan in plans.iter().filter(|p| p.speaker == s) {
            render_turn(
                plan,
                profile,
                &mut f0,
                &mut envelope,
                &mut audio,
                cfg.audio_rate,
            );
        }
        let valid: Vec<bool> = f0.iter().map(|&v| v > 0.0).collect();
        channels.insert(
            profile.id.clone(),
            SynthChannel {
                f0: SampledTrack::new(f0, TRACK_RATE, valid, TrackUnit::Hertz),
                audio: Waveform::new(audio, cfg.audio_rate),
                ideal_energy: SampledTrack::from_values(envelope, TRACK_RATE, TrackUnit::Rms),
            },
        );
    }

    let truth: Vec<TurnTruth> = annotation
        .turns
        .iter()
        .map(|t| {
            // Plans and annotation turns share the onset ordering.
            let plan = plans
                .iter()
                .find(|p| (p.start - t.start).abs() < 1e-9)
                .expect("every turn has a plan");
            TurnTruth {
                turn_index: t.index,
                speaker: t.speaker.clone(),
                f0_level_st: plan.level_st,
                syl_rate: plan.syl_rate,
                energy: plan.energy,
            }
        })
        .collect();

    Ok(SynthDyad {
        annotation,
        channels,
        truth,
    })
}

/// Raised-cosine burst envelope around `center` with the given half width.
fn burst_env(t: f64, center: f64, half: f64) -> f64 {
    let d = (t - center).abs();
    if d >= half {
        0.0
    } else {
        0.5 * (1.0 + (PI * d / half).cos())
    }
}

fn render_turn(
    plan: &TurnPlan,
    profile: &SpeakerProfile,
    f0: &mut [f64],
    envelope: &mut [f64],
    audio: &mut [f32],
    audio_rate: u32,
) {
    // f0: per word, a register line with mild declination plus accent bumps;
    // voiceless outside words.
    let i0 = (plan.start * TRACK_RATE).ceil() as usize;
    let i1 = ((plan.end * TRACK_RATE).floor() as usize).min(f0.len() - 1);
    let turn_span = plan.end - plan.start;
    for i in i0..=i1 {
        let t = i as f64 / TRACK_RATE;
        let voiced = plan.words.iter().any(|&(ws, we)| t >= ws && t <= we);
        if !voiced {
            continue;
        }
        let declination = -1.0 * (t - plan.start) / turn_span;
        let mut st = plan.level_st + declination;
        for &a in &plan.accents {
            st += profile.f0_range_st * burst_env(t, a, 0.12);
        }
        f0[i] = profile.f0_base_hz * (st / 12.0).exp2();
    }

    // Audio and ideal envelope: syllable bursts on a 1 kHz carrier with a
    // low voiced floor across the turn. Word gaps gate only the f0 voicing;
    // the energy carrier runs through so nucleus counts follow the grid.
    let burst_half = 0.45 / plan.syl_rate;
    let a0 = (plan.start * f64::from(audio_rate)).ceil() as usize;
    let a1 = ((plan.end * f64::from(audio_rate)).floor() as usize).min(audio.len() - 1);
    for i in a0..=a1 {
        let t = i as f64 / f64::from(audio_rate);
        let mut env = 0.04 * plan.energy;
        for &b in &plan.bursts {
            env += plan.energy * burst_env(t, b, burst_half);
        }
        let env = env.min(0.98);
        audio[i] = (env * (2.0 * PI * 1000.0 * t).sin()) as f32;
    }
    for i in i0..=i1 {
        let t = i as f64 / TRACK_RATE;
        let mut env = 0.04 * plan.energy;
        for &b in &plan.bursts {
            env += plan.energy * burst_env(t, b, burst_half);
        }
        envelope[i] = env.min(0.98);
    }
}

/// File names of one written session.
#[derive(Debug, Clone)]
pub struct SessionPaths {
    pub annotation: PathBuf,
    /// (speaker id, f0 path, wav path) per channel.
    pub channels: Vec<(String, PathBuf, PathBuf)>,
}

/// Writes a dyad in the exact ingest formats under `dir`.
pub fn write_session(dyad: &SynthDyad, dir: impl AsRef<Path>) -> Result<SessionPaths, IngestError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| IngestError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let annotation = dir.join("annotation.tsv");
    ingest::write_annotation(&annotation, &dyad.annotation)?;
    let mut channels = Vec::new();
    for (spk, ch) in &dyad.channels {
        let f0_path = dir.join(format!("{spk}.f0"));
        let wav_path = dir.join(format!("{spk}.wav"));
        ingest::write_f0_track(&f0_path, &ch.f0)?;
        ingest::write_waveform(&wav_path, &ch.audio)?;
        channels.push((spk.clone(), f0_path, wav_path));
    }
    Ok(SessionPaths {
        annotation,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util;

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SynthConfig::standard("s1", 99);
        let a = generate_dyad(&cfg).unwrap();
        let b = generate_dyad(&cfg).unwrap();
        assert_eq!(a.annotation, b.annotation);
        for (spk, ch) in &a.channels {
            let other = &b.channels[spk];
            assert_eq!(ch.f0, other.f0);
            assert_eq!(ch.audio, other.audio);
        }
    }

    #[test]
    fn annotation_passes_ingest_invariants_via_files() {
        let cfg = SynthConfig::standard("s1", 5);
        let dyad = generate_dyad(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_session(&dyad, dir.path()).unwrap();
        let ann = ingest::load_annotation(&paths.annotation, "s1").unwrap();
        assert_eq!(ann.turns.len(), cfg.n_turns);
        for (_, f0_path, wav_path) in &paths.channels {
            let track = ingest::load_f0_track(f0_path).unwrap();
            assert_eq!(track.rate, 100.0);
            let wav = ingest::load_waveform(wav_path).unwrap();
            assert_eq!(wav.rate, 16000);
        }
    }

    #[test]
    fn gain_zero_leaves_neighbors_uncorrelated() {
        // Correlation between initiator and responder levels over many
        // adjacent turns stays small without coupling.
        let mut cfg = SynthConfig::standard("s1", 11);
        cfg.n_turns = 500;
        cfg.n_tasks = 10;
        cfg.turn_dur = (0.8, 1.2);
        let dyad = generate_dyad(&cfg).unwrap();
        let levels: Vec<f64> = dyad.truth.iter().map(|t| t.f0_level_st).collect();
        let prev: Vec<f64> = levels[..levels.len() - 1].to_vec();
        let cur: Vec<f64> = levels[1..].to_vec();
        let r = util::pearson(&prev, &cur).unwrap();
        assert!(r.abs() < 0.1, "|r| = {r}");
    }

    #[test]
    fn gain_one_proximity_copies_previous_value() {
        let mut cfg = SynthConfig::standard("s1", 3);
        cfg.entrain_mode = EntrainMode::Proximity;
        cfg.entrain_gain = 1.0;
        let dyad = generate_dyad(&cfg).unwrap();
        for w in dyad.truth.windows(2) {
            assert!(
                (w[1].f0_level_st - w[0].f0_level_st).abs() < 1e-9,
                "proximity gain 1 must copy the previous level"
            );
        }
    }

    #[test]
    fn disentrain_pushes_away() {
        let mut cfg = SynthConfig::standard("s1", 7);
        cfg.entrain_mode = EntrainMode::Disentrain;
        cfg.entrain_gain = 1.0;
        cfg.n_turns = 200;
        cfg.n_tasks = 8;
        cfg.turn_dur = (0.8, 1.2);
        let dyad = generate_dyad(&cfg).unwrap();
        let neutral = generate_dyad(&SynthConfig {
            entrain_mode: EntrainMode::None,
            ..cfg.clone()
        })
        .unwrap();
        let mean_gap = |d: &SynthDyad| {
            let mut acc = 0.0;
            let mut n = 0;
            for w in d.truth.windows(2) {
                acc += (w[1].f0_level_st - w[0].f0_level_st).abs();
                n += 1;
            }
            acc / n as f64
        };
        assert!(mean_gap(&dyad) > mean_gap(&neutral));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SynthConfig::standard("s1", 1);
        cfg.entrain_gain = 1.5;
        assert!(matches!(generate_dyad(&cfg), Err(SynthError::InvalidConfig(_))));
        let mut cfg = SynthConfig::standard("s1", 1);
        cfg.n_turns = 3;
        assert!(generate_dyad(&cfg).is_err());
    }

    #[test]
    fn word_tier_produces_both_seed_classes() {
        let cfg = SynthConfig::standard("s1", 13);
        let dyad = generate_dyad(&cfg).unwrap();
        let long = dyad
            .annotation
            .words
            .iter()
            .filter(|w| w.end - w.start > 0.6)
            .count();
        let short = dyad
            .annotation
            .words
            .iter()
            .filter(|w| w.end - w.start < 0.15)
            .count();
        assert!(long >= 2, "need long-word seeds, got {long}");
        assert!(short >= 2, "need short-word seeds, got {short}");
    }
}
