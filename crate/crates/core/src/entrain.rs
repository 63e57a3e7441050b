//! Directed turn pairing, proximity/synchrony distances, and entrainment
//! profiles.
//!
//! Pairing is directed at the left dialog context: every pair has an
//! initiating and a responding turn, and distances are attributed to the
//! responder. Local pairing compares adjacent against non-adjacent turns in
//! the same dialog and task; global pairing compares same-dialog against
//! cross-dialog pairs of unrelated speaker pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EntrainError, IngestError};
use crate::features::{TurnFeatures, FEATURES, FEATURE_COUNT};
use crate::ingest::{DialogAnnotation, Gender, Role};

/// Pairing condition of a turn pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairCondition {
    Adjacent,
    NonAdjacent,
    SameDialog,
    DifferentDialog,
}

impl PairCondition {
    pub fn code(self) -> &'static str {
        match self {
            PairCondition::Adjacent => "a",
            PairCondition::NonAdjacent => "na",
            PairCondition::SameDialog => "s",
            PairCondition::DifferentDialog => "u",
        }
    }
}

/// Distance measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    Proximity,
    Synchrony,
}

impl Measure {
    pub fn code(self) -> &'static str {
        match self {
            Measure::Proximity => "prox",
            Measure::Synchrony => "sync",
        }
    }
}

/// One directed turn pair. Role and gender describe the responding speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnPair {
    pub condition: PairCondition,
    pub initiator_session: String,
    pub initiator_turn: usize,
    pub initiator_speaker: String,
    pub responder_session: String,
    pub responder_turn: usize,
    pub responder_speaker: String,
    pub responder_role: Role,
    pub responder_gender: Gender,
}

/// Per-feature distances of one pair; null iff either feature value is null.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRecord {
    /// Index into the pair list this record was computed from.
    pub pair: usize,
    /// Index into [`FEATURES`].
    pub feature: usize,
    pub proximity: Option<f64>,
    pub synchrony: Option<f64>,
}

fn responder_pair(
    ann: &DialogAnnotation,
    condition: PairCondition,
    initiator: &crate::ingest::Turn,
    responder: &crate::ingest::Turn,
) -> TurnPair {
    TurnPair {
        condition,
        initiator_session: ann.session_id.clone(),
        initiator_turn: initiator.index,
        initiator_speaker: initiator.speaker.clone(),
        responder_session: ann.session_id.clone(),
        responder_turn: responder.index,
        responder_speaker: responder.speaker.clone(),
        responder_role: ann
            .role_of(&responder.speaker, &responder.task)
            .expect("validated annotation"),
        responder_gender: ann
            .gender_of(&responder.speaker)
            .expect("validated annotation"),
    }
}

/// Local pairing within one dialog.
///
/// Each turn pairs with the immediately preceding turn when that turn belongs
/// to the other speaker and the same task (adjacent), and with one uniformly
/// drawn earlier other-speaker turn of the same task whose onset lies at
/// least `min_inter_onset` seconds back (non-adjacent), omitted when no
/// candidate qualifies.
pub fn pair_local(ann: &DialogAnnotation, min_inter_onset: f64, seed: u64) -> Vec<TurnPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for (i, turn) in ann.turns.iter().enumerate() {
        if i == 0 {
            continue;
        }
        let prev = &ann.turns[i - 1];
        if prev.task == turn.task && prev.speaker != turn.speaker {
            pairs.push(responder_pair(ann, PairCondition::Adjacent, prev, turn));
        }
        let candidates: Vec<&crate::ingest::Turn> = ann.turns[..i]
            .iter()
            .filter(|t| {
                t.task == turn.task
                    && t.speaker != turn.speaker
                    && turn.start - t.start >= min_inter_onset
            })
            .collect();
        if !candidates.is_empty() {
            let pick = candidates[rng.gen_range(0..candidates.len())];
            pairs.push(responder_pair(ann, PairCondition::NonAdjacent, pick, turn));
        }
    }
    pairs
}

/// Global pairing across a corpus.
///
/// Each turn pairs with a uniformly drawn earlier other-speaker turn of the
/// same dialog and task (same-dialog), and each same-dialog pair is mirrored
/// by one pair whose initiating turn comes from a dialog sharing no speaker
/// with the responder's dialog, keeping both condition counts equal.
pub fn pair_global(corpus: &[DialogAnnotation], seed: u64) -> Result<Vec<TurnPair>, EntrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for (d, ann) in corpus.iter().enumerate() {
        // Turns of dialogs with a speaker set disjoint from this dialog's.
        let unrelated: Vec<(usize, usize)> = corpus
            .iter()
            .enumerate()
            .filter(|(e, other)| {
                *e != d
                    && other
                        .speakers
                        .iter()
                        .all(|s| ann.speaker(&s.id).is_none())
            })
            .flat_map(|(e, other)| other.turns.iter().map(move |t| (e, t.index)))
            .collect();

        for (i, turn) in ann.turns.iter().enumerate() {
            let candidates: Vec<&crate::ingest::Turn> = ann.turns[..i]
                .iter()
                .filter(|t| t.task == turn.task && t.speaker != turn.speaker)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let pick = candidates[rng.gen_range(0..candidates.len())];
            pairs.push(responder_pair(ann, PairCondition::SameDialog, pick, turn));

            if unrelated.is_empty() {
                return Err(EntrainError::NoDisjointDialogs);
            }
            let (e, cross_index) = unrelated[rng.gen_range(0..unrelated.len())];
            let other = &corpus[e];
            let cross = &other.turns[cross_index];
            pairs.push(TurnPair {
                condition: PairCondition::DifferentDialog,
                initiator_session: other.session_id.clone(),
                initiator_turn: cross.index,
                initiator_speaker: cross.speaker.clone(),
                responder_session: ann.session_id.clone(),
                responder_turn: turn.index,
                responder_speaker: turn.speaker.clone(),
                responder_role: ann
                    .role_of(&turn.speaker, &turn.task)
                    .expect("validated annotation"),
                responder_gender: ann.gender_of(&turn.speaker).expect("validated annotation"),
            });
        }
    }
    Ok(pairs)
}

/// Per-speaker within-dialog feature means, keyed by (session, speaker).
pub type SpeakerMeans = BTreeMap<(String, String), [Option<f64>; FEATURE_COUNT]>;

/// Means of each feature over a speaker's turns within their dialog,
/// ignoring nulls.
pub fn speaker_feature_means(features: &[TurnFeatures]) -> SpeakerMeans {
    let mut sums: BTreeMap<(String, String), ([f64; FEATURE_COUNT], [usize; FEATURE_COUNT])> =
        BTreeMap::new();
    for tf in features {
        let key = (tf.session.clone(), tf.speaker.clone());
        let entry = sums
            .entry(key)
            .or_insert(([0.0; FEATURE_COUNT], [0; FEATURE_COUNT]));
        for (i, v) in tf.values.iter().enumerate() {
            if let Some(v) = v {
                entry.0[i] += v;
                entry.1[i] += 1;
            }
        }
    }
    sums.into_iter()
        .map(|(key, (sum, count))| {
            let mut means = [None; FEATURE_COUNT];
            for i in 0..FEATURE_COUNT {
                if count[i] > 0 {
                    means[i] = Some(sum[i] / count[i] as f64);
                }
            }
            (key, means)
        })
        .collect()
}

/// Distances of one pair for every feature: proximity `|x2 - x1|` and
/// synchrony `|(x2 - m2) - (x1 - m1)|` with the speakers' within-dialog
/// means.
pub fn distances(
    pair_index: usize,
    pair: &TurnPair,
    initiator: &TurnFeatures,
    responder: &TurnFeatures,
    means: &SpeakerMeans,
) -> Vec<DistanceRecord> {
    let m1 = means.get(&(
        pair.initiator_session.clone(),
        pair.initiator_speaker.clone(),
    ));
    let m2 = means.get(&(
        pair.responder_session.clone(),
        pair.responder_speaker.clone(),
    ));
    (0..FEATURE_COUNT)
        .map(|f| {
            let (prox, sync) = match (initiator.values[f], responder.values[f]) {
                (Some(x1), Some(x2)) => {
                    let prox = (x2 - x1).abs();
                    let sync = match (m1.and_then(|m| m[f]), m2.and_then(|m| m[f])) {
                        (Some(a), Some(b)) => Some(((x2 - b) - (x1 - a)).abs()),
                        _ => None,
                    };
                    (Some(prox), sync)
                }
                _ => (None, None),
            };
            DistanceRecord {
                pair: pair_index,
                feature: f,
                proximity: prox,
                synchrony: sync,
            }
        })
        .collect()
}

/// Profile cell key: adjacent overall, adjacent by responder type, or one of
/// the two reference conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileCondition {
    AdjacentAll,
    AdjacentBy(Role, Gender),
    NonAdjacent,
    Unrelated,
}

impl ProfileCondition {
    pub fn all() -> [ProfileCondition; 7] {
        [
            ProfileCondition::AdjacentAll,
            ProfileCondition::AdjacentBy(Role::Describer, Gender::Female),
            ProfileCondition::AdjacentBy(Role::Describer, Gender::Male),
            ProfileCondition::AdjacentBy(Role::Follower, Gender::Female),
            ProfileCondition::AdjacentBy(Role::Follower, Gender::Male),
            ProfileCondition::NonAdjacent,
            ProfileCondition::Unrelated,
        ]
    }
}

impl fmt::Display for ProfileCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileCondition::AdjacentAll => f.write_str("a"),
            ProfileCondition::AdjacentBy(r, g) => write!(f, "a_{}_{}", r.code(), g.code()),
            ProfileCondition::NonAdjacent => f.write_str("na"),
            ProfileCondition::Unrelated => f.write_str("u"),
        }
    }
}

/// Mean distance and record count of one profile cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileCell {
    pub mean: Option<f64>,
    pub count: usize,
}

/// Mean distances per feature, measure, and condition.
#[derive(Debug, Clone, Default)]
pub struct ProfileTable {
    pub cells: BTreeMap<(usize, Measure, ProfileCondition), ProfileCell>,
}

impl ProfileTable {
    pub fn cell(&self, feature: usize, measure: Measure, cond: ProfileCondition) -> ProfileCell {
        self.cells
            .get(&(feature, measure, cond))
            .copied()
            .unwrap_or(ProfileCell {
                mean: None,
                count: 0,
            })
    }
}

/// Aggregates distance records into the profile table. Cells without records
/// are marked missing.
pub fn build_profile(pairs: &[TurnPair], records: &[DistanceRecord]) -> ProfileTable {
    let mut acc: BTreeMap<(usize, Measure, ProfileCondition), (f64, usize)> = BTreeMap::new();
    {
        let mut add = |f: usize, m: Measure, c: ProfileCondition, v: f64| {
            let e = acc.entry((f, m, c)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        };
        for rec in records {
            let pair = &pairs[rec.pair];
            let conds: &[ProfileCondition] = match pair.condition {
                PairCondition::Adjacent => &[
                    ProfileCondition::AdjacentAll,
                    ProfileCondition::AdjacentBy(pair.responder_role, pair.responder_gender),
                ],
                PairCondition::NonAdjacent => &[ProfileCondition::NonAdjacent],
                PairCondition::DifferentDialog => &[ProfileCondition::Unrelated],
                PairCondition::SameDialog => &[],
            };
            for &c in conds {
                if let Some(v) = rec.proximity {
                    add(rec.feature, Measure::Proximity, c, v);
                }
                if let Some(v) = rec.synchrony {
                    add(rec.feature, Measure::Synchrony, c, v);
                }
            }
        }
    }
    let mut cells = BTreeMap::new();
    for f in 0..FEATURE_COUNT {
        for m in [Measure::Proximity, Measure::Synchrony] {
            for c in ProfileCondition::all() {
                let cell = match acc.get(&(f, m, c)) {
                    Some(&(sum, count)) => ProfileCell {
                        mean: Some(sum / count as f64),
                        count,
                    },
                    None => ProfileCell {
                        mean: None,
                        count: 0,
                    },
                };
                cells.insert((f, m, c), cell);
            }
        }
    }
    ProfileTable { cells }
}

/// Renders the profile table as CSV: `feature,measure,condition,mean,count`.
pub fn profiles_to_csv(table: &ProfileTable) -> String {
    let mut out = String::from("feature,measure,condition,mean,count\n");
    for ((f, m, c), cell) in &table.cells {
        let _ = write!(out, "{},{},{},", FEATURES[*f].name, m.code(), c);
        if let Some(mean) = cell.mean {
            let _ = write!(out, "{mean}");
        }
        let _ = writeln!(out, ",{}", cell.count);
    }
    out
}

/// Writes the profile CSV to a file.
pub fn write_profiles_csv(path: impl AsRef<Path>, table: &ProfileTable) -> Result<(), IngestError> {
    std::fs::write(path.as_ref(), profiles_to_csv(table)).map_err(|e| IngestError::Io {
        path: path.as_ref().to_path_buf(),
        source: e,
    })
}
