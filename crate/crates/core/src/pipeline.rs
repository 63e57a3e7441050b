//! End-to-end orchestration: per-session analysis from raw tracks to turn
//! features, corpus-level pairing and distances, and the statistics stage.
//!
//! All operations are pure; callers may process sessions in parallel. Any
//! randomness flows from explicit seeds, with per-session substreams derived
//! from the session id, so results do not depend on scheduling.

use std::collections::BTreeMap;

use crate::dsp;
use crate::entrain::{
    self, build_profile, DistanceRecord, ProfileTable, TurnPair,
};
use crate::error::Error;
use crate::features::{
    self, RhythmFeatures, TurnFeatures, TurnStylization,
};
use crate::ingest::{DialogAnnotation, SampledTrack, TrackUnit, Waveform};
use crate::stats::{self, HarvestRow, Level, PairingTest};
use crate::structure::{self, AccentModel, Ipu, NucleusParams, SyllableNucleus, SyllableSample};
use crate::styl::{self, AccentShape, RegisterFit};
use crate::util;

/// Pipeline parameters with published defaults.
#[derive(Debug, Clone)]
pub struct Params {
    /// IPU pause threshold, seconds.
    pub pause_threshold: f64,
    pub nucleus: NucleusParams,
    /// Minimum word duration seeding the accented class, seconds.
    pub accent_t_a: f64,
    /// Maximum word duration seeding the non-accented class, seconds.
    pub accent_t_na: f64,
    /// Distance-quotient percentile separating accented candidates.
    pub accent_percentile: f64,
    /// Local pitch event stylization window, seconds.
    pub accent_window: f64,
    /// Register analysis window and step, seconds.
    pub register_window: f64,
    pub register_step: f64,
    /// Minimum inter-onset interval of non-adjacent pairs, seconds.
    pub min_inter_onset: f64,
    /// Rhythm band half width around the syllable rate, Hz.
    pub rhythm_band: f64,
    /// Upper frequency bound of the rhythm spectrum, Hz.
    pub rhythm_cutoff: f64,
    /// Smooth turn-transition latency half interval, seconds.
    pub smooth_interval: f64,
    /// Significance level for harvest membership.
    pub alpha: f64,
    /// Whether outlier removal precedes gap interpolation.
    pub outliers_before_interpolation: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            pause_threshold: 0.100,
            nucleus: NucleusParams::default(),
            accent_t_a: 0.6,
            accent_t_na: 0.15,
            accent_percentile: 82.0,
            accent_window: 0.300,
            register_window: 0.050,
            register_step: 0.010,
            min_inter_onset: 15.0,
            rhythm_band: 1.0,
            rhythm_cutoff: 10.0,
            smooth_interval: 0.5,
            alpha: 0.05,
            outliers_before_interpolation: true,
        }
    }
}

/// Raw inputs of one speaker channel.
#[derive(Debug, Clone)]
pub struct ChannelInput {
    pub f0: SampledTrack,
    pub audio: Waveform,
}

/// Raw inputs of one session.
#[derive(Debug, Clone)]
pub struct SessionInput {
    pub annotation: DialogAnnotation,
    /// Keyed by speaker id; speakers without a channel yield all-null rows.
    pub channels: BTreeMap<String, ChannelInput>,
}

/// Per-speaker analysis products kept for debugging and tests.
#[derive(Debug, Clone)]
pub struct SpeakerAnalysis {
    pub speaker: String,
    /// Preprocessed semitone contour and its base value in Hz.
    pub semitones: SampledTrack,
    pub semitone_base: f64,
    pub energy: SampledTrack,
    pub nuclei: Vec<SyllableNucleus>,
    /// (time, accented) per word-initial candidate syllable.
    pub accent_events: Vec<(f64, bool)>,
}

/// Products of one analyzed session.
#[derive(Debug, Clone)]
pub struct SessionAnalysis {
    pub session_id: String,
    pub features: Vec<TurnFeatures>,
    pub speakers: Vec<SpeakerAnalysis>,
    pub accent_model: Option<AccentModel>,
}

struct Candidate {
    speaker: String,
    time: f64,
    shape: AccentShape,
    inter_nucleus: f64,
    word_duration: f64,
    word_initial: bool,
    turn_index: usize,
}

fn candidate_features(c: &Candidate, dur_z: f64) -> Vec<f64> {
    let mut v = vec![f64::NAN; 11];
    if let Some(poly) = c.shape.poly {
        v[..4].copy_from_slice(&poly);
    }
    if let Some(reg) = &c.shape.register {
        v[4] = reg.lev.c0;
        v[5] = reg.lev.c1;
        v[6] = reg.rng.c0;
        v[7] = reg.rng.c1;
    }
    if let Some((lev, rng)) = c.shape.gestalt {
        v[8] = lev;
        v[9] = rng;
    }
    v[10] = dur_z;
    v
}

/// Runs the full per-session chain: preprocessing, prosodic structure,
/// stylization, and turn feature assembly.
pub fn analyze_session(input: &SessionInput, params: &Params) -> Result<SessionAnalysis, Error> {
    let ann = &input.annotation;
    let ipus = structure::segment_ipus(ann, params.pause_threshold);

    let mut speaker_data: BTreeMap<String, SpeakerAnalysis> = BTreeMap::new();
    let mut phrase_fits: BTreeMap<String, Vec<(Ipu, Option<RegisterFit>)>> = BTreeMap::new();
    let mut residuals: BTreeMap<String, SampledTrack> = BTreeMap::new();

    for (speaker, channel) in &input.channels {
        // Contour preprocessing. The published order question (outliers vs.
        // interpolation first) is a config switch.
        let f0 = if params.outliers_before_interpolation {
            dsp::interpolate_gaps(&dsp::remove_outliers(&channel.f0))?
        } else {
            dsp::remove_outliers(&dsp::interpolate_gaps(&channel.f0)?)
        };
        let smoothed = dsp::savgol_smooth(&f0)?;
        let (semitones, base) = dsp::to_semitones(&smoothed)?;

        let energy = dsp::rms_energy(&channel.audio);
        let bp = dsp::bandpass(&channel.audio)?;
        let own_ipus: Vec<Ipu> = ipus
            .iter()
            .filter(|i| &i.speaker == speaker)
            .cloned()
            .collect();
        let nuclei = structure::detect_syllable_nuclei(&bp, &own_ipus, &params.nucleus);

        // Phrase register per IPU and the midline-subtracted residual.
        let mut fits = Vec::new();
        let mut residual = semitones.clone();
        for ipu in &own_ipus {
            let fit = styl::fit_register(
                &semitones,
                ipu.start,
                ipu.end,
                params.register_window,
                params.register_step,
            );
            if let Some(fit) = &fit {
                for i in residual.index_range(ipu.start, ipu.end) {
                    residual.values[i] -= fit.midline_at(residual.time_of(i));
                }
            }
            fits.push((ipu.clone(), fit));
        }

        phrase_fits.insert(speaker.clone(), fits);
        residuals.insert(speaker.clone(), residual);
        speaker_data.insert(
            speaker.clone(),
            SpeakerAnalysis {
                speaker: speaker.clone(),
                semitones,
                semitone_base: base,
                energy,
                nuclei,
                accent_events: Vec::new(),
            },
        );
    }

    // Accent candidates: the first nucleus of each word, stylized against
    // its IPU's phrase register.
    let mut candidates: Vec<Candidate> = Vec::new();
    for word in &ann.words {
        let Some(data) = speaker_data.get(&word.speaker) else {
            continue;
        };
        let Some(first) = data
            .nuclei
            .iter()
            .find(|n| n.time >= word.start && n.time <= word.end)
        else {
            continue;
        };
        let fits = &phrase_fits[&word.speaker];
        let Some((ipu, fit)) = fits
            .iter()
            .find(|(ipu, _)| first.time >= ipu.start && first.time <= ipu.end)
        else {
            continue;
        };
        let next_in_ipu = data
            .nuclei
            .iter()
            .find(|n| n.time > first.time && n.time <= ipu.end)
            .map(|n| n.time);
        let inter_nucleus = next_in_ipu.unwrap_or(ipu.end) - first.time;
        let shape = match fit {
            Some(fit) => styl::stylize_accent(
                &data.semitones,
                &residuals[&word.speaker],
                fit,
                first.time,
                params.accent_window,
                params.register_window,
                params.register_step,
                ipu.start,
                ipu.end,
            ),
            None => AccentShape {
                time: first.time,
                poly: None,
                register: None,
                gestalt: None,
            },
        };
        candidates.push(Candidate {
            speaker: word.speaker.clone(),
            time: first.time,
            shape,
            inter_nucleus,
            word_duration: word.end - word.start,
            word_initial: true,
            turn_index: ipu.turn_index,
        });
    }
    candidates.sort_by(|a, b| a.time.total_cmp(&b.time));

    // Inter-nucleus duration z-scores per speaker.
    let mut dur_z: Vec<f64> = vec![f64::NAN; candidates.len()];
    for (speaker, _) in &input.channels {
        let ixs: Vec<usize> = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| &c.speaker == speaker)
            .map(|(i, _)| i)
            .collect();
        let durs: Vec<f64> = ixs.iter().map(|&i| candidates[i].inter_nucleus).collect();
        let (Some(m), Some(sd)) = (util::mean(&durs), util::pop_std(&durs)) else {
            continue;
        };
        for &i in &ixs {
            dur_z[i] = if sd > 0.0 {
                (candidates[i].inter_nucleus - m) / sd
            } else {
                0.0
            };
        }
    }

    // Bootstrap and classify. The model pools both speakers of the session.
    let samples: Vec<SyllableSample> = candidates
        .iter()
        .zip(&dur_z)
        .map(|(c, &z)| SyllableSample {
            features: candidate_features(c, z),
            word_duration: c.word_duration,
            word_initial: c.word_initial,
        })
        .collect();
    let mut flags = vec![false; candidates.len()];
    let mut accent_model = None;
    if !candidates.is_empty() {
        let model = structure::bootstrap_accent_model(
            &samples,
            params.accent_t_a,
            params.accent_t_na,
            params.accent_percentile,
        )?;
        let vectors: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
        flags = structure::classify_accents(&model, &vectors);
        accent_model = Some(model);
    }
    for (c, &accented) in candidates.iter().zip(&flags) {
        if let Some(data) = speaker_data.get_mut(&c.speaker) {
            data.accent_events.push((c.time, accented));
        }
    }

    // Turn features.
    let mut rows = Vec::new();
    for turn in &ann.turns {
        let role = ann
            .role_of(&turn.speaker, &turn.task)
            .expect("validated annotation");
        let gender = ann.gender_of(&turn.speaker).expect("validated annotation");
        let tf = TurnFeatures::new(
            ann.session_id.clone(),
            turn.speaker.clone(),
            turn.task.clone(),
            turn.index,
            role,
            gender,
        );
        let Some(data) = speaker_data.get(&turn.speaker) else {
            rows.push(tf);
            continue;
        };
        let f0_turn: Vec<f64> = data.semitones.index_range(turn.start, turn.end)
            .map(|i| data.semitones.values[i])
            .collect();
        let energy_turn: Vec<f64> = data
            .energy
            .index_range(turn.start, turn.end)
            .map(|i| data.energy.values[i])
            .collect();
        let turn_fits: Vec<Option<RegisterFit>> = phrase_fits[&turn.speaker]
            .iter()
            .filter(|(ipu, _)| ipu.turn_index == turn.index)
            .map(|(_, f)| f.clone())
            .collect();
        let accents: Vec<AccentShape> = candidates
            .iter()
            .zip(&flags)
            .filter(|(c, _)| c.turn_index == turn.index && c.speaker == turn.speaker)
            .filter(|(_, &f)| f)
            .map(|(c, _)| c.shape.clone())
            .collect();
        let nucleus_count = data
            .nuclei
            .iter()
            .filter(|n| n.time >= turn.start && n.time <= turn.end)
            .count();
        let rhythm: RhythmFeatures = features::rhythm_features(
            &SampledTrack::from_values(energy_turn.clone(), 100.0, TrackUnit::Rms),
            &SampledTrack::from_values(f0_turn.clone(), 100.0, TrackUnit::Semitone),
            nucleus_count,
            turn.end - turn.start,
            params.rhythm_band,
            params.rhythm_cutoff,
        );
        let styl_in = TurnStylization {
            phrase_fits: &turn_fits,
            accents: &accents,
        };
        rows.push(features::assemble_turn_features(
            tf,
            &energy_turn,
            &f0_turn,
            &styl_in,
            &rhythm,
        ));
    }

    Ok(SessionAnalysis {
        session_id: ann.session_id.clone(),
        features: rows,
        speakers: speaker_data.into_values().collect(),
        accent_model,
    })
}

/// FNV-1a hash for deriving per-session seed substreams.
pub fn session_seed(base: u64, session_id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in session_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    base ^ h
}

/// Pairing plus distance computation over analyzed sessions. Local pairs use
/// per-session seed substreams; global pairing draws from one corpus-level
/// stream.
pub fn corpus_distances(
    sessions: &[(DialogAnnotation, Vec<TurnFeatures>)],
    params: &Params,
    seed: u64,
) -> Result<(Vec<TurnPair>, Vec<DistanceRecord>), Error> {
    let mut pairs = Vec::new();
    for (ann, _) in sessions {
        pairs.extend(entrain::pair_local(
            ann,
            params.min_inter_onset,
            session_seed(seed, &ann.session_id),
        ));
    }
    if sessions.len() >= 2 {
        let annotations: Vec<DialogAnnotation> =
            sessions.iter().map(|(a, _)| a.clone()).collect();
        match entrain::pair_global(&annotations, session_seed(seed, "corpus-global")) {
            Ok(global) => pairs.extend(global),
            Err(e) => return Err(e.into()),
        }
    }

    let all_features: Vec<TurnFeatures> = sessions
        .iter()
        .flat_map(|(_, f)| f.iter().cloned())
        .collect();
    let means = entrain::speaker_feature_means(&all_features);
    let by_turn: BTreeMap<(String, usize), &TurnFeatures> = all_features
        .iter()
        .map(|tf| ((tf.session.clone(), tf.turn_index), tf))
        .collect();

    let mut records = Vec::new();
    for (i, pair) in pairs.iter().enumerate() {
        let initiator = by_turn
            .get(&(pair.initiator_session.clone(), pair.initiator_turn))
            .expect("every turn has a feature row");
        let responder = by_turn
            .get(&(pair.responder_session.clone(), pair.responder_turn))
            .expect("every turn has a feature row");
        records.extend(entrain::distances(i, pair, initiator, responder, &means));
    }
    Ok((pairs, records))
}

/// Full statistics products of one run.
#[derive(Debug, Clone)]
pub struct StatsOutput {
    pub local_tests: Vec<PairingTest>,
    pub global_tests: Vec<PairingTest>,
    pub harvest_local: Vec<HarvestRow>,
    pub harvest_global: Vec<HarvestRow>,
    pub profile: ProfileTable,
}

/// Runs tests for both levels, harvests, and builds the profile table.
pub fn run_statistics(
    pairs: &[TurnPair],
    records: &[DistanceRecord],
    params: &Params,
    seed: u64,
) -> StatsOutput {
    let local_tests = stats::run_level_tests(pairs, records, Level::Local, 0.05, seed);
    let global_tests = stats::run_level_tests(pairs, records, Level::Global, 0.05, seed);
    let harvest_local = stats::harvest(&local_tests, params.alpha);
    let harvest_global = stats::harvest(&global_tests, params.alpha);
    let profile = build_profile(pairs, records);
    StatsOutput {
        local_tests,
        global_tests,
        harvest_local,
        harvest_global,
        profile,
    }
}
