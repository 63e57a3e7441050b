//! The 37-feature turn vector across six feature sets.
//!
//! Sets: general energy and f0 statistics (gnl_en, gnl_f0), first/last phrase
//! register (phrase), first/last local pitch event shape and register (acc),
//! and rhythm (rhy_en, rhy_f0).

use std::fmt::Write as _;
use std::path::Path;

use crate::dsp;
use crate::error::IngestError;
use crate::ingest::{Gender, Role, SampledTrack};
use crate::styl::{AccentShape, RegisterFit};
use crate::util;

/// Feature set grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureSet {
    GnlEn,
    GnlF0,
    Phrase,
    Acc,
    RhyEn,
    RhyF0,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::GnlEn => "gnl_en",
            FeatureSet::GnlF0 => "gnl_f0",
            FeatureSet::Phrase => "phrase",
            FeatureSet::Acc => "acc",
            FeatureSet::RhyEn => "rhy_en",
            FeatureSet::RhyF0 => "rhy_f0",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gnl_en" => FeatureSet::GnlEn,
            "gnl_f0" => FeatureSet::GnlF0,
            "phrase" => FeatureSet::Phrase,
            "acc" => FeatureSet::Acc,
            "rhy_en" => FeatureSet::RhyEn,
            "rhy_f0" => FeatureSet::RhyF0,
            _ => return None,
        })
    }

    pub fn all() -> [FeatureSet; 6] {
        [
            FeatureSet::GnlEn,
            FeatureSet::GnlF0,
            FeatureSet::Phrase,
            FeatureSet::Acc,
            FeatureSet::RhyEn,
            FeatureSet::RhyF0,
        ]
    }
}

/// Turn-initial or turn-final event position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    First,
    Last,
}

/// Definition of one feature slot.
#[derive(Debug, Clone, Copy)]
pub struct FeatureDef {
    pub name: &'static str,
    pub set: FeatureSet,
    /// Position within the turn, for phrase/acc features only.
    pub position: Option<Position>,
}

macro_rules! fdef {
    ($name:literal, $set:ident) => {
        FeatureDef {
            name: $name,
            set: FeatureSet::$set,
            position: None,
        }
    };
    ($name:literal, $set:ident, $pos:ident) => {
        FeatureDef {
            name: $name,
            set: FeatureSet::$set,
            position: Some(Position::$pos),
        }
    };
}

/// All 37 features in canonical column order.
pub const FEATURES: [FeatureDef; 37] = [
    fdef!("gnl_en.max", GnlEn),
    fdef!("gnl_en.med", GnlEn),
    fdef!("gnl_en.sd", GnlEn),
    fdef!("gnl_f0.max", GnlF0),
    fdef!("gnl_f0.med", GnlF0),
    fdef!("gnl_f0.sd", GnlF0),
    fdef!("phrase.rng.c0.F", Phrase, First),
    fdef!("phrase.rng.c0.L", Phrase, Last),
    fdef!("phrase.rng.c1.F", Phrase, First),
    fdef!("phrase.rng.c1.L", Phrase, Last),
    fdef!("phrase.lev.c0.F", Phrase, First),
    fdef!("phrase.lev.c0.L", Phrase, Last),
    fdef!("phrase.lev.c1.F", Phrase, First),
    fdef!("phrase.lev.c1.L", Phrase, Last),
    fdef!("acc.c0.F", Acc, First),
    fdef!("acc.c0.L", Acc, Last),
    fdef!("acc.c1.F", Acc, First),
    fdef!("acc.c1.L", Acc, Last),
    fdef!("acc.c2.F", Acc, First),
    fdef!("acc.c2.L", Acc, Last),
    fdef!("acc.c3.F", Acc, First),
    fdef!("acc.c3.L", Acc, Last),
    fdef!("acc.rng.c0.F", Acc, First),
    fdef!("acc.rng.c0.L", Acc, Last),
    fdef!("acc.rng.c1.F", Acc, First),
    fdef!("acc.rng.c1.L", Acc, Last),
    fdef!("acc.lev.c0.F", Acc, First),
    fdef!("acc.lev.c0.L", Acc, Last),
    fdef!("acc.lev.c1.F", Acc, First),
    fdef!("acc.lev.c1.L", Acc, Last),
    fdef!("acc.gst.lev.F", Acc, First),
    fdef!("acc.gst.lev.L", Acc, Last),
    fdef!("acc.gst.rng.F", Acc, First),
    fdef!("acc.gst.rng.L", Acc, Last),
    fdef!("rhy_en.syl.rate", RhyEn),
    fdef!("rhy_en.syl.prop", RhyEn),
    fdef!("rhy_f0.syl.prop", RhyF0),
];

/// Number of feature slots per turn.
pub const FEATURE_COUNT: usize = FEATURES.len();

/// Index of a feature by its canonical name.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURES.iter().position(|f| f.name == name)
}

/// The 37 features of one turn, each nullable, with the turn identity.
#[derive(Debug, Clone)]
pub struct TurnFeatures {
    pub session: String,
    pub speaker: String,
    pub task: String,
    pub turn_index: usize,
    pub role: Role,
    pub gender: Gender,
    pub values: [Option<f64>; FEATURE_COUNT],
}

impl TurnFeatures {
    pub fn new(
        session: String,
        speaker: String,
        task: String,
        turn_index: usize,
        role: Role,
        gender: Gender,
    ) -> Self {
        TurnFeatures {
            session,
            speaker,
            task,
            turn_index,
            role,
            gender,
            values: [None; FEATURE_COUNT],
        }
    }

    pub fn set(&mut self, name: &str, value: Option<f64>) {
        let i = feature_index(name).unwrap_or_else(|| panic!("unknown feature {name}"));
        self.values[i] = value;
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values[feature_index(name)?]
    }
}

/// max, median, and population standard deviation of a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnlStats {
    pub max: Option<f64>,
    pub med: Option<f64>,
    pub sd: Option<f64>,
}

/// General statistics over the samples of a contour slice.
pub fn gnl_stats(values: &[f64]) -> GnlStats {
    if values.is_empty() {
        return GnlStats {
            max: None,
            med: None,
            sd: None,
        };
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GnlStats {
        max: Some(max),
        med: util::median(values),
        sd: util::pop_std(values),
    }
}

/// Rhythm features of one turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhythmFeatures {
    /// Nuclei per second.
    pub syl_rate: Option<f64>,
    /// Syllable-band weight of the energy contour.
    pub prop_en: Option<f64>,
    /// Syllable-band weight of the f0 contour.
    pub prop_f0: Option<f64>,
}

/// Relative DCT weight of the band `[syl_rate - band, syl_rate + band]` Hz
/// among all coefficients in `(0, cutoff]` Hz, computed on the mean-removed
/// contour (the DC coefficient never enters).
pub fn syllable_band_weight(
    contour: &SampledTrack,
    syl_rate: f64,
    band: f64,
    cutoff: f64,
) -> Option<f64> {
    if contour.len() < 2 {
        return None;
    }
    let m = util::mean(&contour.values)?;
    let centered = SampledTrack::from_values(
        contour.values.iter().map(|v| v - m).collect(),
        contour.rate,
        contour.unit,
    );
    let spec = dsp::dct_spectrum(&centered);
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &c) in spec.coefficients.iter().enumerate() {
        let f = spec.freq_of(k);
        if f <= 0.0 || f > cutoff {
            continue;
        }
        den += c.abs();
        if f >= syl_rate - band && f <= syl_rate + band {
            num += c.abs();
        }
    }
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Rhythm features: syllable rate plus the DCT band weights of the energy
/// and f0 contours within the turn. Band weights are null without nuclei or
/// when the rate reaches the cutoff.
pub fn rhythm_features(
    energy_turn: &SampledTrack,
    f0_turn: &SampledTrack,
    nucleus_count: usize,
    turn_duration: f64,
    band: f64,
    cutoff: f64,
) -> RhythmFeatures {
    assert!(turn_duration > 0.0, "turn duration must be positive");
    let rate = nucleus_count as f64 / turn_duration;
    if nucleus_count == 0 || rate >= cutoff {
        return RhythmFeatures {
            syl_rate: Some(rate),
            prop_en: None,
            prop_f0: None,
        };
    }
    RhythmFeatures {
        syl_rate: Some(rate),
        prop_en: syllable_band_weight(energy_turn, rate, band, cutoff),
        prop_f0: syllable_band_weight(f0_turn, rate, band, cutoff),
    }
}

/// Register and accent inputs for one turn's positional features.
pub struct TurnStylization<'a> {
    /// Register fits of the turn's IPUs, in time order (None = missing fit).
    pub phrase_fits: &'a [Option<RegisterFit>],
    /// Accented local pitch events of the turn, in time order.
    pub accents: &'a [AccentShape],
}

fn fill_register(tf: &mut TurnFeatures, prefix: &str, pos: &str, fit: &RegisterFit) {
    tf.set(&format!("{prefix}.rng.c0.{pos}"), Some(fit.rng.c0));
    tf.set(&format!("{prefix}.rng.c1.{pos}"), Some(fit.rng.c1));
    tf.set(&format!("{prefix}.lev.c0.{pos}"), Some(fit.lev.c0));
    tf.set(&format!("{prefix}.lev.c1.{pos}"), Some(fit.lev.c1));
}

fn fill_accent(tf: &mut TurnFeatures, pos: &str, shape: &AccentShape) {
    if let Some(poly) = shape.poly {
        for (i, &c) in poly.iter().enumerate() {
            tf.set(&format!("acc.c{i}.{pos}"), Some(c));
        }
    }
    if let Some(reg) = &shape.register {
        fill_register(tf, "acc", pos, reg);
    }
    if let Some((lev, rng)) = shape.gestalt {
        tf.set(&format!("acc.gst.lev.{pos}"), Some(lev));
        tf.set(&format!("acc.gst.rng.{pos}"), Some(rng));
    }
}

/// Assembles the 37-slot vector of one turn. A single IPU or accent fills
/// both the F and L slots; missing upstream values stay null.
pub fn assemble_turn_features(
    mut tf: TurnFeatures,
    energy_turn: &[f64],
    f0_turn: &[f64],
    styl: &TurnStylization,
    rhythm: &RhythmFeatures,
) -> TurnFeatures {
    let en = gnl_stats(energy_turn);
    tf.set("gnl_en.max", en.max);
    tf.set("gnl_en.med", en.med);
    tf.set("gnl_en.sd", en.sd);
    let f0 = gnl_stats(f0_turn);
    tf.set("gnl_f0.max", f0.max);
    tf.set("gnl_f0.med", f0.med);
    tf.set("gnl_f0.sd", f0.sd);

    let present: Vec<&RegisterFit> = styl.phrase_fits.iter().flatten().collect();
    if let (Some(first), Some(last)) = (present.first(), present.last()) {
        fill_register(&mut tf, "phrase", "F", first);
        fill_register(&mut tf, "phrase", "L", last);
    }
    if let (Some(first), Some(last)) = (styl.accents.first(), styl.accents.last()) {
        fill_accent(&mut tf, "F", first);
        fill_accent(&mut tf, "L", last);
    }

    tf.set("rhy_en.syl.rate", rhythm.syl_rate);
    tf.set("rhy_en.syl.prop", rhythm.prop_en);
    tf.set("rhy_f0.syl.prop", rhythm.prop_f0);
    tf
}

/// Renders the feature table as CSV: identity columns, then the 37 feature
/// columns with nulls as empty fields.
pub fn features_to_csv(rows: &[TurnFeatures]) -> String {
    let mut out = String::from("session,speaker,task,turn,role,gender");
    for f in &FEATURES {
        out.push(',');
        out.push_str(f.name);
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.session,
            r.speaker,
            r.task,
            r.turn_index,
            r.role.code(),
            r.gender.code()
        );
        for v in &r.values {
            out.push(',');
            if let Some(v) = v {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the feature CSV to a file.
pub fn write_features_csv(
    path: impl AsRef<Path>,
    rows: &[TurnFeatures],
) -> Result<(), IngestError> {
    std::fs::write(path.as_ref(), features_to_csv(rows)).map_err(|e| IngestError::Io {
        path: path.as_ref().to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TrackUnit;
    use crate::styl::fit_register;
    use std::f64::consts::PI;

    #[test]
    fn feature_table_is_complete() {
        assert_eq!(FEATURE_COUNT, 37);
        let count = |s: FeatureSet| FEATURES.iter().filter(|f| f.set == s).count();
        assert_eq!(count(FeatureSet::GnlEn), 3);
        assert_eq!(count(FeatureSet::GnlF0), 3);
        assert_eq!(count(FeatureSet::Phrase), 8);
        assert_eq!(count(FeatureSet::Acc), 20);
        assert_eq!(count(FeatureSet::RhyEn), 2);
        assert_eq!(count(FeatureSet::RhyF0), 1);
        // F/L only on phrase and acc, balanced.
        let firsts = FEATURES
            .iter()
            .filter(|f| f.position == Some(Position::First))
            .count();
        let lasts = FEATURES
            .iter()
            .filter(|f| f.position == Some(Position::Last))
            .count();
        assert_eq!(firsts, 14);
        assert_eq!(lasts, 14);
    }

    #[test]
    fn gnl_stats_hand_values() {
        let s = gnl_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.max, Some(4.0));
        assert_eq!(s.med, Some(2.5));
        assert!((s.sd.unwrap() - 1.25f64.sqrt()).abs() < 1e-12);

        let c = gnl_stats(&[7.0; 5]);
        assert_eq!(c.max, Some(7.0));
        assert_eq!(c.med, Some(7.0));
        assert_eq!(c.sd, Some(0.0));
    }

    #[test]
    fn gnl_stats_order_free() {
        let a = gnl_stats(&[3.0, 1.0, 4.0, 1.0, 5.0]);
        let b = gnl_stats(&[5.0, 4.0, 3.0, 1.0, 1.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn gnl_stats_empty_is_null() {
        let s = gnl_stats(&[]);
        assert!(s.max.is_none() && s.med.is_none() && s.sd.is_none());
    }

    fn cosine_track(freq: f64, dur: f64) -> SampledTrack {
        let n = (dur * 100.0) as usize;
        let values: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / 100.0).cos())
            .collect();
        SampledTrack::from_values(values, 100.0, TrackUnit::Rms)
    }

    #[test]
    fn syllable_rate_is_count_over_duration() {
        let t = cosine_track(4.0, 3.0);
        let r = rhythm_features(&t, &t, 12, 3.0, 1.0, 10.0);
        assert_eq!(r.syl_rate, Some(4.0));
    }

    #[test]
    fn band_weight_concentrates_on_matching_cosine() {
        // 4 Hz cosine with syllable rate 4: nearly all sub-10 Hz weight
        // falls inside [3, 5] Hz.
        let t = cosine_track(4.0, 3.0);
        let r = rhythm_features(&t, &t, 12, 3.0, 1.0, 10.0);
        assert!(r.prop_en.unwrap() >= 0.9, "w = {:?}", r.prop_en);

        // 8 Hz cosine against rate 4: band [3, 5] misses the energy.
        let t8 = cosine_track(8.0, 3.0);
        let r8 = rhythm_features(&t8, &t8, 12, 3.0, 1.0, 10.0);
        assert!(r8.prop_en.unwrap() <= 0.1, "w = {:?}", r8.prop_en);
    }

    #[test]
    fn band_weight_matches_naive_dct_oracle() {
        let t = cosine_track(4.0, 2.56);
        let w = syllable_band_weight(&t, 4.0, 1.0, 10.0).unwrap();
        // Oracle: textbook DCT-II sums on the mean-removed contour.
        let m: f64 = t.values.iter().sum::<f64>() / t.len() as f64;
        let x: Vec<f64> = t.values.iter().map(|v| v - m).collect();
        let n = x.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 1..n {
            let c: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                .sum::<f64>()
                * (2.0 / n as f64).sqrt();
            let f = k as f64 * 100.0 / (2.0 * n as f64);
            if f <= 10.0 {
                den += c.abs();
                if (3.0..=5.0).contains(&f) {
                    num += c.abs();
                }
            }
        }
        assert!((w - num / den).abs() < 1e-9);
    }

    #[test]
    fn band_weight_ignores_dc() {
        let t = cosine_track(4.0, 3.0);
        let shifted = SampledTrack::from_values(
            t.values.iter().map(|v| v + 5.0).collect(),
            100.0,
            TrackUnit::Rms,
        );
        let a = syllable_band_weight(&t, 4.0, 1.0, 10.0).unwrap();
        let b = syllable_band_weight(&shifted, 4.0, 1.0, 10.0).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn no_nuclei_or_fast_rate_nulls_props() {
        let t = cosine_track(4.0, 3.0);
        let none = rhythm_features(&t, &t, 0, 3.0, 1.0, 10.0);
        assert_eq!(none.syl_rate, Some(0.0));
        assert!(none.prop_en.is_none() && none.prop_f0.is_none());

        let fast = rhythm_features(&t, &t, 30, 3.0, 1.0, 10.0);
        assert_eq!(fast.syl_rate, Some(10.0));
        assert!(fast.prop_en.is_none());
    }

    fn base_tf() -> TurnFeatures {
        TurnFeatures::new(
            "s".into(),
            "A".into(),
            "t".into(),
            0,
            Role::Describer,
            Gender::Female,
        )
    }

    #[test]
    fn single_ipu_fills_first_and_last_alike() {
        let track = SampledTrack::from_values(vec![10.0; 100], 100.0, TrackUnit::Semitone);
        let fit = fit_register(&track, 0.0, 1.0, 0.05, 0.01);
        let fits = vec![fit];
        let styl = TurnStylization {
            phrase_fits: &fits,
            accents: &[],
        };
        let rhythm = RhythmFeatures {
            syl_rate: Some(2.0),
            prop_en: None,
            prop_f0: None,
        };
        let tf = assemble_turn_features(base_tf(), &[1.0], &[10.0], &styl, &rhythm);
        assert_eq!(tf.get("phrase.lev.c0.F"), tf.get("phrase.lev.c0.L"));
        assert!(tf.get("phrase.lev.c0.F").is_some());
        // No accents: all 20 acc slots stay null.
        for f in FEATURES.iter().filter(|f| f.set == FeatureSet::Acc) {
            assert!(tf.get(f.name).is_none(), "{} should be null", f.name);
        }
    }

    #[test]
    fn csv_has_37_feature_columns_and_empty_nulls() {
        let tf = base_tf();
        let csv = features_to_csv(&[tf]);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 6 + 37);
        assert!(header.ends_with("rhy_f0.syl.prop"));
        assert!(header.contains("acc.rng.c1.L"));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 6 + 37);
        assert!(row.ends_with(",,"));
    }
}
