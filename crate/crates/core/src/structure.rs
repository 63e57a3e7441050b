//! Prosodic structure: inter-pausal units, syllable nucleus detection, and
//! the bootstrapped nearest-centroid pitch accent classifier.

use crate::error::StructureError;
use crate::ingest::{DialogAnnotation, Waveform};
use crate::util;

/// Inter-pausal unit: a stretch of speech bounded by silent gaps of at least
/// the pause threshold, used as the prosodic phrase proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct Ipu {
    pub speaker: String,
    pub start: f64,
    pub end: f64,
    pub turn_index: usize,
}

/// Detected syllable nucleus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyllableNucleus {
    pub time: f64,
    /// RMS(analysis window) / RMS(reference window) at the detection step.
    pub energy_ratio: f64,
}

/// Parameters of the energy-based nucleus detector.
#[derive(Debug, Clone, Copy)]
pub struct NucleusParams {
    /// Analysis window length, seconds.
    pub wa: f64,
    /// Reference window length, seconds.
    pub wr: f64,
    /// Analysis-over-reference RMS factor.
    pub v: f64,
    /// Fraction of the per-IPU maximum RMS a candidate must reach.
    pub x: f64,
    /// Step between window placements, seconds.
    pub step: f64,
}

impl Default for NucleusParams {
    fn default() -> Self {
        NucleusParams {
            wa: 0.05,
            wr: 0.11,
            v: 1.1,
            x: 0.1,
            step: 0.05,
        }
    }
}

/// Groups each turn's words into inter-pausal units: consecutive words merge
/// while their silent gap stays below `pause_threshold`, and split otherwise.
pub fn segment_ipus(ann: &DialogAnnotation, pause_threshold: f64) -> Vec<Ipu> {
    let mut ipus = Vec::new();
    for turn in &ann.turns {
        let words = ann.words_in(&turn.speaker, turn.start, turn.end);
        if words.is_empty() {
            continue;
        }
        let mut start = words[0].start;
        let mut end = words[0].end;
        for w in &words[1..] {
            if w.start - end < pause_threshold {
                end = w.end;
            } else {
                ipus.push(Ipu {
                    speaker: turn.speaker.clone(),
                    start,
                    end,
                    turn_index: turn.index,
                });
                start = w.start;
                end = w.end;
            }
        }
        ipus.push(Ipu {
            speaker: turn.speaker.clone(),
            start,
            end,
            turn_index: turn.index,
        });
    }
    ipus
}

/// Plain RMS over the window of `len_s` seconds centered at `center_s`,
/// zero-padded outside the signal.
fn window_rms(w: &Waveform, center_s: f64, len_s: f64) -> f64 {
    let rate = f64::from(w.rate);
    let mut len = (len_s * rate).round() as usize;
    if len % 2 == 0 {
        len += 1;
    }
    let center = (center_s * rate).round() as isize;
    let half = (len / 2) as isize;
    let n = w.samples.len() as isize;
    let mut acc = 0.0f64;
    for i in (center - half)..=(center + half) {
        if i >= 0 && i < n {
            let s = f64::from(w.samples[i as usize]);
            acc += s * s;
        }
    }
    (acc / len as f64).sqrt()
}

/// Detects syllable nuclei on the band-pass filtered signal.
///
/// Analysis and reference windows share a midpoint and move in `step`
/// increments through each IPU. A step qualifies when
/// `RMS(wa) > RMS(wr) * v` and `RMS(wa) > RMS_max * x`, with `RMS_max` the
/// per-IPU maximum of `RMS(wa)`. Runs of adjacent qualifying steps collapse
/// to the step with maximal analysis RMS.
pub fn detect_syllable_nuclei(
    bp: &Waveform,
    ipus: &[Ipu],
    params: &NucleusParams,
) -> Vec<SyllableNucleus> {
    let mut nuclei = Vec::new();
    for ipu in ipus {
        let mut steps = Vec::new();
        let mut t = ipu.start;
        while t <= ipu.end + 1e-9 {
            let rms_a = window_rms(bp, t, params.wa);
            let rms_r = window_rms(bp, t, params.wr);
            steps.push((t, rms_a, rms_r));
            t += params.step;
        }
        let rms_max = steps.iter().map(|s| s.1).fold(0.0f64, f64::max);
        if rms_max <= 0.0 {
            continue;
        }
        let qualifies = |s: &(f64, f64, f64)| s.1 > s.2 * params.v && s.1 > rms_max * params.x;

        let mut run: Option<(f64, f64, f64)> = None; // best (time, rms_a, ratio) of open run
        for s in &steps {
            if qualifies(s) {
                let ratio = if s.2 > 0.0 { s.1 / s.2 } else { f64::INFINITY };
                match run {
                    Some((_, best, _)) if best >= s.1 => {}
                    _ => run = Some((s.0, s.1, ratio)),
                }
            } else if let Some((time, _, ratio)) = run.take() {
                nuclei.push(SyllableNucleus {
                    time,
                    energy_ratio: ratio,
                });
            }
        }
        if let Some((time, _, ratio)) = run {
            nuclei.push(SyllableNucleus {
                time,
                energy_ratio: ratio,
            });
        }
    }
    nuclei.sort_by(|a, b| a.time.total_cmp(&b.time));
    nuclei
}

/// One syllable observation entering accent model bootstrap.
#[derive(Debug, Clone)]
pub struct SyllableSample {
    /// Stylization feature vector; `NaN` marks missing dimensions.
    pub features: Vec<f64>,
    /// Duration of the carrier word, seconds.
    pub word_duration: f64,
    /// Whether this syllable is word-initial.
    pub word_initial: bool,
}

/// Bootstrapped nearest-centroid accent classifier.
#[derive(Debug, Clone)]
pub struct AccentModel {
    pub centroid_0: Vec<f64>,
    pub centroid_1: Vec<f64>,
    /// Per-feature weights from the mean seed-cluster silhouette, >= 0.
    pub weights: Vec<f64>,
    /// Percentile of the distance quotient above which items are accented.
    pub percentile: f64,
}

/// Replaces NaN dimensions by the per-dimension mean over the set.
fn impute(vectors: &mut [Vec<f64>]) {
    if vectors.is_empty() {
        return;
    }
    let dims = vectors[0].len();
    for d in 0..dims {
        let present: Vec<f64> = vectors
            .iter()
            .map(|v| v[d])
            .filter(|v| v.is_finite())
            .collect();
        let fill = util::mean(&present).unwrap_or(0.0);
        for v in vectors.iter_mut() {
            if !v[d].is_finite() {
                v[d] = fill;
            }
        }
    }
}

/// Mean silhouette coefficient of the two seed clusters along one feature
/// dimension. Points in singleton clusters score 0.
fn silhouette_1d(c0: &[f64], c1: &[f64]) -> f64 {
    let coeff = |own: &[f64], other: &[f64], v: f64| -> f64 {
        if own.len() < 2 {
            return 0.0;
        }
        // The sum over `own` includes |v - v| = 0, hence the n - 1 divisor.
        let a = own.iter().map(|&u| (u - v).abs()).sum::<f64>() / (own.len() - 1) as f64;
        let b = other.iter().map(|&u| (u - v).abs()).sum::<f64>() / other.len() as f64;
        let m = a.max(b);
        if m == 0.0 {
            0.0
        } else {
            (b - a) / m
        }
    };
    let mut total = 0.0;
    for &v in c0 {
        total += coeff(c0, c1, v);
    }
    for &v in c1 {
        total += coeff(c1, c0, v);
    }
    total / (c0.len() + c1.len()) as f64
}

/// Bootstraps the accent model from duration-based seed classes.
///
/// Word-initial syllables of words longer than `t_a` seed class 1 (accented);
/// all syllables of words shorter than `t_na` seed class 0. Feature weights
/// are the non-negative mean silhouettes of the seed clustering per feature.
pub fn bootstrap_accent_model(
    samples: &[SyllableSample],
    t_a: f64,
    t_na: f64,
    percentile: f64,
) -> Result<AccentModel, StructureError> {
    let mut vecs: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    impute(&mut vecs);

    let mut seed0 = Vec::new();
    let mut seed1 = Vec::new();
    for (s, v) in samples.iter().zip(&vecs) {
        if s.word_duration > t_a && s.word_initial {
            seed1.push(v.clone());
        } else if s.word_duration < t_na {
            seed0.push(v.clone());
        }
    }
    if seed1.is_empty() {
        return Err(StructureError::EmptySeed { class: "accented" });
    }
    if seed0.is_empty() {
        return Err(StructureError::EmptySeed {
            class: "non-accented",
        });
    }

    let dims = vecs[0].len();
    let centroid = |seed: &[Vec<f64>]| -> Vec<f64> {
        (0..dims)
            .map(|d| seed.iter().map(|v| v[d]).sum::<f64>() / seed.len() as f64)
            .collect()
    };
    let centroid_0 = centroid(&seed0);
    let centroid_1 = centroid(&seed1);

    let weights: Vec<f64> = (0..dims)
        .map(|d| {
            let c0: Vec<f64> = seed0.iter().map(|v| v[d]).collect();
            let c1: Vec<f64> = seed1.iter().map(|v| v[d]).collect();
            silhouette_1d(&c0, &c1).max(0.0)
        })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(StructureError::ZeroWeights);
    }

    Ok(AccentModel {
        centroid_0,
        centroid_1,
        weights,
        percentile,
    })
}

fn weighted_distance(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((&x, &y), &w)| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Assigns accent flags to candidate feature vectors.
///
/// Each candidate's distance quotient `q = d0 / d1` (weighted Euclidean
/// distances to the two centroids) is compared against the model percentile
/// of all candidates' quotients; `q` strictly above the threshold or infinite
/// (`d1 == 0`) is accented. Missing dimensions are imputed by candidate-set
/// means first.
pub fn classify_accents(model: &AccentModel, candidates: &[Vec<f64>]) -> Vec<bool> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let mut vecs = candidates.to_vec();
    impute(&mut vecs);
    let quotients: Vec<f64> = vecs
        .iter()
        .map(|v| {
            let d0 = weighted_distance(&model.weights, v, &model.centroid_0);
            let d1 = weighted_distance(&model.weights, v, &model.centroid_1);
            if d1 == 0.0 {
                f64::INFINITY
            } else {
                d0 / d1
            }
        })
        .collect();
    let threshold = util::percentile(&quotients, model.percentile).unwrap();
    quotients
        .iter()
        .map(|&q| q.is_infinite() || q > threshold)
        .collect()
}
