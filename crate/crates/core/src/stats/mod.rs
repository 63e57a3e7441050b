//! Statistics layer: per-feature mixed-effects pairing tests with FDR
//! correction (harvesting), condensation into conditional entrainment
//! probabilities, and task success measures.

pub mod fdr;
pub mod mixed;
pub mod success;

pub use fdr::fdr_correct;
pub use mixed::{fit_mixed, fit_mixed_fixed, permutation_pairing_test, MixedData, MixedFit};
pub use success::{task_success, success_to_csv, write_success_csv, TaskSuccess};

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::entrain::{DistanceRecord, Measure, PairCondition, TurnPair};
use crate::error::IngestError;
use crate::features::{FeatureSet, Position, FEATURES, FEATURE_COUNT};
use crate::ingest::{Gender, Role};

/// Entrainment level a test belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Local,
    Global,
}

impl Level {
    pub fn code(self) -> &'static str {
        match self {
            Level::Local => "local",
            Level::Global => "global",
        }
    }
}

/// Speaker type of Tables-style `role_gender` coding; `None` axes print as
/// `x` (not specified).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeakerType {
    pub role: Option<Role>,
    pub gender: Option<Gender>,
}

impl SpeakerType {
    pub const OVERALL: SpeakerType = SpeakerType {
        role: None,
        gender: None,
    };

    pub fn all() -> [SpeakerType; 9] {
        let roles = [None, Some(Role::Describer), Some(Role::Follower)];
        let genders = [None, Some(Gender::Female), Some(Gender::Male)];
        let mut out = [SpeakerType::OVERALL; 9];
        let mut i = 0;
        for r in roles {
            for g in genders {
                out[i] = SpeakerType { role: r, gender: g };
                i += 1;
            }
        }
        out
    }

    pub fn parse(s: &str) -> Option<SpeakerType> {
        let (r, g) = s.split_once('_')?;
        let role = match r {
            "x" => None,
            "d" => Some(Role::Describer),
            "f" => Some(Role::Follower),
            _ => return None,
        };
        let gender = match g {
            "x" => None,
            "f" => Some(Gender::Female),
            "m" => Some(Gender::Male),
            _ => return None,
        };
        Some(SpeakerType { role, gender })
    }
}

impl fmt::Display for SpeakerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.role.map_or("x", |r| r.code());
        let g = self.gender.map_or("x", |g| g.code());
        write!(f, "{r}_{g}")
    }
}

/// How a pairing p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    MixedWald,
    /// Fallback for singular designs, flagged in output.
    Permutation,
}

/// One pairing test: overall (x_x) or on a role/gender subset.
#[derive(Debug, Clone)]
pub struct PairingTest {
    pub feature: usize,
    pub level: Level,
    pub measure: Measure,
    pub speaker_type: SpeakerType,
    /// Pairing coefficient: negative = smaller distance when paired
    /// (entrainment), positive = disentrainment.
    pub estimate: f64,
    pub raw_p: f64,
    pub adj_p: f64,
    pub method: TestMethod,
}

struct Obs {
    value: f64,
    paired: bool,
    role: Role,
    gender: Gender,
    initiator: String,
    responder: String,
}

fn collect_obs(
    pairs: &[TurnPair],
    records: &[DistanceRecord],
    feature: usize,
    level: Level,
    measure: Measure,
) -> Vec<Obs> {
    let mut obs = Vec::new();
    for rec in records.iter().filter(|r| r.feature == feature) {
        let pair = &pairs[rec.pair];
        let paired = match (level, pair.condition) {
            (Level::Local, PairCondition::Adjacent) => true,
            (Level::Local, PairCondition::NonAdjacent) => false,
            (Level::Global, PairCondition::SameDialog) => true,
            (Level::Global, PairCondition::DifferentDialog) => false,
            _ => continue,
        };
        let value = match measure {
            Measure::Proximity => rec.proximity,
            Measure::Synchrony => rec.synchrony,
        };
        if let Some(value) = value {
            obs.push(Obs {
                value,
                paired,
                role: pair.responder_role,
                gender: pair.responder_gender,
                initiator: pair.initiator_speaker.clone(),
                responder: pair.responder_speaker.clone(),
            });
        }
    }
    obs
}

/// Fixed-effect design over the observations. Role and gender are
/// effect-coded (-0.5/+0.5) so the pairing coefficient is the cell-averaged
/// effect; constant columns are omitted. Returns the design plus the column
/// indices of the pairing-by-role and pairing-by-gender interactions.
fn build_design(obs: &[Obs], with_role: bool, with_gender: bool) -> (DMatrix<f64>, Option<usize>, Option<usize>) {
    let role_varies = with_role && obs.iter().any(|o| o.role != obs[0].role);
    let gender_varies = with_gender && obs.iter().any(|o| o.gender != obs[0].gender);
    let mut role_ix = None;
    let mut gender_ix = None;
    let mut next = 2 + usize::from(role_varies) + usize::from(gender_varies);
    if role_varies {
        role_ix = Some(next);
        next += 1;
    }
    if gender_varies {
        gender_ix = Some(next);
        next += 1;
    }
    let cols = next;
    let x = DMatrix::from_fn(obs.len(), cols, |r, c| {
        let o = &obs[r];
        let p = if o.paired { 1.0 } else { 0.0 };
        let role = if o.role == Role::Follower { 0.5 } else { -0.5 };
        let gender = if o.gender == Gender::Male { 0.5 } else { -0.5 };
        if c == 0 {
            1.0
        } else if c == 1 {
            p
        } else if role_varies && c == 2 {
            role
        } else if gender_varies && c == 2 + usize::from(role_varies) {
            gender
        } else if Some(c) == role_ix {
            p * role
        } else if Some(c) == gender_ix {
            p * gender
        } else {
            0.0
        }
    });
    (x, role_ix, gender_ix)
}

fn level_index(map: &mut BTreeMap<String, usize>, key: &str) -> usize {
    let next = map.len();
    *map.entry(key.to_string()).or_insert(next)
}

/// Fits the pairing model on a set of observations; falls back to the
/// clustered permutation test when the mixed fit is singular. Returns the
/// pairing test plus raw interaction p-values (role, gender) when present.
fn pairing_fit(
    obs: &[Obs],
    with_role: bool,
    with_gender: bool,
    feature: usize,
    level: Level,
    measure: Measure,
    speaker_type: SpeakerType,
    perm_seed: u64,
) -> Option<(PairingTest, Option<f64>, Option<f64>)> {
    let n_paired = obs.iter().filter(|o| o.paired).count();
    if n_paired == 0 || n_paired == obs.len() {
        return None;
    }
    let (x, role_ix, gender_ix) = build_design(obs, with_role, with_gender);
    if obs.len() <= x.ncols() + 1 {
        return None;
    }
    let mut init_levels = BTreeMap::new();
    let mut resp_levels = BTreeMap::new();
    let g1: Vec<usize> = obs
        .iter()
        .map(|o| level_index(&mut init_levels, &o.initiator))
        .collect();
    let g2: Vec<usize> = obs
        .iter()
        .map(|o| level_index(&mut resp_levels, &o.responder))
        .collect();
    let data = MixedData {
        y: obs.iter().map(|o| o.value).collect(),
        x,
        g1,
        g2: g2.clone(),
        n_g1: init_levels.len(),
        n_g2: resp_levels.len(),
    };
    match fit_mixed(&data) {
        Ok(fit) => {
            let test = PairingTest {
                feature,
                level,
                measure,
                speaker_type,
                estimate: fit.beta[1],
                raw_p: fit.wald_p[1],
                adj_p: f64::NAN,
                method: TestMethod::MixedWald,
            };
            let p_role = role_ix.map(|i| fit.wald_p[i]);
            let p_gender = gender_ix.map(|i| fit.wald_p[i]);
            Some((test, p_role, p_gender))
        }
        Err(_) => {
            let paired: Vec<bool> = obs.iter().map(|o| o.paired).collect();
            let y: Vec<f64> = obs.iter().map(|o| o.value).collect();
            let (estimate, p) = permutation_pairing_test(&y, &paired, &g2, 400, perm_seed);
            let test = PairingTest {
                feature,
                level,
                measure,
                speaker_type,
                estimate,
                raw_p: p,
                adj_p: f64::NAN,
                method: TestMethod::Permutation,
            };
            Some((test, None, None))
        }
    }
}

/// Runs the per-feature pairing tests of one level across all features and
/// both measures, with interaction-triggered subset re-tests, and corrects
/// all collected p-values for false discovery rate in one family.
pub fn run_level_tests(
    pairs: &[TurnPair],
    records: &[DistanceRecord],
    level: Level,
    interaction_alpha: f64,
    perm_seed: u64,
) -> Vec<PairingTest> {
    let mut tests = Vec::new();
    for feature in 0..FEATURE_COUNT {
        for measure in [Measure::Proximity, Measure::Synchrony] {
            let obs = collect_obs(pairs, records, feature, level, measure);
            if obs.len() < 8 {
                continue;
            }
            let Some((main, p_role, p_gender)) = pairing_fit(
                &obs,
                true,
                true,
                feature,
                level,
                measure,
                SpeakerType::OVERALL,
                perm_seed,
            ) else {
                continue;
            };
            tests.push(main);

            let role_hit = p_role.is_some_and(|p| p < interaction_alpha);
            let gender_hit = p_gender.is_some_and(|p| p < interaction_alpha);
            if role_hit {
                for role in [Role::Describer, Role::Follower] {
                    let subset: Vec<Obs> = obs
                        .iter()
                        .filter(|o| o.role == role)
                        .map(|o| Obs {
                            value: o.value,
                            paired: o.paired,
                            role: o.role,
                            gender: o.gender,
                            initiator: o.initiator.clone(),
                            responder: o.responder.clone(),
                        })
                        .collect();
                    let st = SpeakerType {
                        role: Some(role),
                        gender: None,
                    };
                    if let Some((t, _, _)) = pairing_fit(
                        &subset, false, true, feature, level, measure, st, perm_seed,
                    ) {
                        tests.push(t);
                    }
                }
            }
            if gender_hit {
                for gender in [Gender::Female, Gender::Male] {
                    let subset: Vec<Obs> = obs
                        .iter()
                        .filter(|o| o.gender == gender)
                        .map(|o| Obs {
                            value: o.value,
                            paired: o.paired,
                            role: o.role,
                            gender: o.gender,
                            initiator: o.initiator.clone(),
                            responder: o.responder.clone(),
                        })
                        .collect();
                    let st = SpeakerType {
                        role: None,
                        gender: Some(gender),
                    };
                    if let Some((t, _, _)) = pairing_fit(
                        &subset, true, false, feature, level, measure, st, perm_seed,
                    ) {
                        tests.push(t);
                    }
                }
            }
            if role_hit || gender_hit {
                for role in [Role::Describer, Role::Follower] {
                    for gender in [Gender::Female, Gender::Male] {
                        let subset: Vec<Obs> = obs
                            .iter()
                            .filter(|o| o.role == role && o.gender == gender)
                            .map(|o| Obs {
                                value: o.value,
                                paired: o.paired,
                                role: o.role,
                                gender: o.gender,
                                initiator: o.initiator.clone(),
                                responder: o.responder.clone(),
                            })
                            .collect();
                        let st = SpeakerType {
                            role: Some(role),
                            gender: Some(gender),
                        };
                        if let Some((t, _, _)) = pairing_fit(
                            &subset, false, false, feature, level, measure, st, perm_seed,
                        ) {
                            tests.push(t);
                        }
                    }
                }
            }
        }
    }
    // One FDR family per level: every conducted test enters.
    let raw: Vec<f64> = tests.iter().map(|t| t.raw_p).collect();
    let adj = fdr_correct(&raw);
    for (t, a) in tests.iter_mut().zip(adj) {
        t.adj_p = a;
    }
    tests
}

/// One harvest row: the speaker types with significant entrainment or
/// disentrainment per measure for one feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestRow {
    pub set: FeatureSet,
    pub feature: String,
    pub entrain_prox: BTreeSet<SpeakerType>,
    pub entrain_sync: BTreeSet<SpeakerType>,
    pub disentrain_prox: BTreeSet<SpeakerType>,
    pub disentrain_sync: BTreeSet<SpeakerType>,
}

impl HarvestRow {
    pub fn empty(set: FeatureSet, feature: &str) -> Self {
        HarvestRow {
            set,
            feature: feature.to_string(),
            entrain_prox: BTreeSet::new(),
            entrain_sync: BTreeSet::new(),
            disentrain_prox: BTreeSet::new(),
            disentrain_sync: BTreeSet::new(),
        }
    }

    fn column(&self, measure: Measure, disentrain: bool) -> &BTreeSet<SpeakerType> {
        match (measure, disentrain) {
            (Measure::Proximity, false) => &self.entrain_prox,
            (Measure::Synchrony, false) => &self.entrain_sync,
            (Measure::Proximity, true) => &self.disentrain_prox,
            (Measure::Synchrony, true) => &self.disentrain_sync,
        }
    }
}

/// Collects the speaker types with significant effects (adjusted p below
/// `alpha`) into one row per feature, split by effect direction.
pub fn harvest(tests: &[PairingTest], alpha: f64) -> Vec<HarvestRow> {
    let mut rows: Vec<HarvestRow> = FEATURES
        .iter()
        .map(|f| HarvestRow::empty(f.set, f.name))
        .collect();
    for t in tests {
        if !(t.adj_p < alpha) || t.estimate == 0.0 {
            continue;
        }
        let row = &mut rows[t.feature];
        let col = match (t.measure, t.estimate > 0.0) {
            (Measure::Proximity, false) => &mut row.entrain_prox,
            (Measure::Synchrony, false) => &mut row.entrain_sync,
            (Measure::Proximity, true) => &mut row.disentrain_prox,
            (Measure::Synchrony, true) => &mut row.disentrain_sync,
        };
        col.insert(t.speaker_type);
    }
    for row in &rows {
        debug_assert!(row.entrain_prox.is_disjoint(&row.disentrain_prox));
        debug_assert!(row.entrain_sync.is_disjoint(&row.disentrain_sync));
    }
    rows
}

/// Grouping axis for condensation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    FeatureSet,
    Position,
    SpeakerType,
}

impl Grouping {
    pub fn code(self) -> &'static str {
        match self {
            Grouping::FeatureSet => "feature_set",
            Grouping::Position => "position",
            Grouping::SpeakerType => "speaker_type",
        }
    }
}

/// Conditional entrainment/disentrainment probabilities of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct CondenseRow {
    pub group: String,
    pub entrain_prox: Option<f64>,
    pub entrain_sync: Option<f64>,
    pub disentrain_prox: Option<f64>,
    pub disentrain_sync: Option<f64>,
}

fn probability<F: Fn(&HarvestRow, Measure, bool) -> bool>(
    rows: &[&HarvestRow],
    evidence: F,
) -> CondenseRow {
    let frac = |measure: Measure, dis: bool| -> Option<f64> {
        if rows.is_empty() {
            return None;
        }
        let hits = rows.iter().filter(|r| evidence(r, measure, dis)).count();
        Some(hits as f64 / rows.len() as f64)
    };
    CondenseRow {
        group: String::new(),
        entrain_prox: frac(Measure::Proximity, false),
        entrain_sync: frac(Measure::Synchrony, false),
        disentrain_prox: frac(Measure::Proximity, true),
        disentrain_sync: frac(Measure::Synchrony, true),
    }
}

/// Conditional probabilities per group: the fraction of the group's features
/// with evidence (at least one speaker type) in each column. For the
/// speaker-type grouping the fraction counts features where that type itself
/// appears; for the position grouping only phrase/acc features with an F/L
/// suffix enter.
pub fn condense(rows: &[HarvestRow], grouping: Grouping) -> Vec<CondenseRow> {
    match grouping {
        Grouping::FeatureSet => FeatureSet::all()
            .iter()
            .map(|&set| {
                let members: Vec<&HarvestRow> = rows.iter().filter(|r| r.set == set).collect();
                let mut row = probability(&members, |r, m, d| !r.column(m, d).is_empty());
                row.group = set.name().to_string();
                row
            })
            .collect(),
        Grouping::Position => [Position::First, Position::Last]
            .iter()
            .map(|&pos| {
                let suffix = match pos {
                    Position::First => ".F",
                    Position::Last => ".L",
                };
                let members: Vec<&HarvestRow> = rows
                    .iter()
                    .filter(|r| {
                        matches!(r.set, FeatureSet::Phrase | FeatureSet::Acc)
                            && r.feature.ends_with(suffix)
                    })
                    .collect();
                let mut row = probability(&members, |r, m, d| !r.column(m, d).is_empty());
                row.group = suffix[1..].to_string();
                row
            })
            .collect(),
        Grouping::SpeakerType => SpeakerType::all()
            .iter()
            .map(|&st| {
                let members: Vec<&HarvestRow> = rows.iter().collect();
                let mut row = probability(&members, |r, m, d| r.column(m, d).contains(&st));
                row.group = st.to_string();
                row
            })
            .collect(),
    }
}

fn format_types(set: &BTreeSet<SpeakerType>) -> String {
    if set.is_empty() {
        "--".to_string()
    } else {
        set.iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Renders harvest rows as CSV: `set,name,prox,sync,dis_prox,dis_sync`,
/// speaker types space-separated, empty cells as `--`.
pub fn harvest_to_csv(rows: &[HarvestRow]) -> String {
    let mut out = String::from("set,name,prox,sync,dis_prox,dis_sync\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.set.name(),
            r.feature,
            format_types(&r.entrain_prox),
            format_types(&r.entrain_sync),
            format_types(&r.disentrain_prox),
            format_types(&r.disentrain_sync),
        );
    }
    out
}

/// Parses a harvest CSV produced by [`harvest_to_csv`] (or transcribed in
/// the same layout).
pub fn parse_harvest_csv(text: &str) -> Result<Vec<HarvestRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(format!("line {}: expected 6 columns", i + 1));
        }
        let set = FeatureSet::parse(cols[0]).ok_or_else(|| format!("line {}: bad set", i + 1))?;
        let parse_set = |s: &str| -> Result<BTreeSet<SpeakerType>, String> {
            if s.trim() == "--" || s.trim().is_empty() {
                return Ok(BTreeSet::new());
            }
            s.split_whitespace()
                .map(|t| {
                    SpeakerType::parse(t).ok_or_else(|| format!("bad speaker type {t:?}"))
                })
                .collect()
        };
        rows.push(HarvestRow {
            set,
            feature: cols[1].to_string(),
            entrain_prox: parse_set(cols[2])?,
            entrain_sync: parse_set(cols[3])?,
            disentrain_prox: parse_set(cols[4])?,
            disentrain_sync: parse_set(cols[5])?,
        });
    }
    Ok(rows)
}

/// Renders condensation rows as CSV.
pub fn condense_to_csv(rows: &[CondenseRow]) -> String {
    let mut out = String::from("group,entrain_prox,entrain_sync,disentrain_prox,disentrain_sync\n");
    for r in rows {
        let cell = |v: Option<f64>| v.map_or(String::new(), |p| format!("{p}"));
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.group,
            cell(r.entrain_prox),
            cell(r.entrain_sync),
            cell(r.disentrain_prox),
            cell(r.disentrain_sync),
        );
    }
    out
}

/// Writes a CSV string to a file.
pub fn write_csv(path: impl AsRef<Path>, csv: &str) -> Result<(), IngestError> {
    std::fs::write(path.as_ref(), csv).map_err(|e| IngestError::Io {
        path: path.as_ref().to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::feature_index;

    fn test_of(feature: &str, measure: Measure, st: &str, estimate: f64, adj_p: f64) -> PairingTest {
        PairingTest {
            feature: feature_index(feature).unwrap(),
            level: Level::Local,
            measure,
            speaker_type: SpeakerType::parse(st).unwrap(),
            estimate,
            raw_p: adj_p / 2.0,
            adj_p,
            method: TestMethod::MixedWald,
        }
    }

    #[test]
    fn no_significant_results_leave_all_sets_empty() {
        let tests = vec![test_of("gnl_f0.med", Measure::Proximity, "x_x", -1.0, 0.2)];
        let rows = harvest(&tests, 0.05);
        assert!(rows.iter().all(|r| r.entrain_prox.is_empty()
            && r.entrain_sync.is_empty()
            && r.disentrain_prox.is_empty()
            && r.disentrain_sync.is_empty()));
    }

    #[test]
    fn significant_overall_effect_enters_x_x() {
        let tests = vec![test_of("gnl_f0.med", Measure::Proximity, "x_x", -1.0, 0.01)];
        let rows = harvest(&tests, 0.05);
        let row = &rows[feature_index("gnl_f0.med").unwrap()];
        assert!(row.entrain_prox.contains(&SpeakerType::OVERALL));
        assert!(row.disentrain_prox.is_empty());
    }

    #[test]
    fn direction_flip_swaps_columns_exactly() {
        let tests = vec![
            test_of("gnl_f0.med", Measure::Proximity, "x_x", -1.0, 0.01),
            test_of("gnl_f0.sd", Measure::Synchrony, "d_f", 0.5, 0.02),
            test_of("acc.c2.L", Measure::Proximity, "f_m", -0.1, 0.04),
        ];
        let flipped: Vec<PairingTest> = tests
            .iter()
            .map(|t| PairingTest {
                estimate: -t.estimate,
                ..t.clone()
            })
            .collect();
        let rows = harvest(&tests, 0.05);
        let rows_f = harvest(&flipped, 0.05);
        for (a, b) in rows.iter().zip(&rows_f) {
            assert_eq!(a.entrain_prox, b.disentrain_prox);
            assert_eq!(a.disentrain_prox, b.entrain_prox);
            assert_eq!(a.entrain_sync, b.disentrain_sync);
            assert_eq!(a.disentrain_sync, b.entrain_sync);
        }
    }

    /// Harvest rows shaped like the local gnl_f0 block of the published
    /// tables: prox evidence on one of three features, sync on all three.
    fn gnl_f0_local_fixture() -> Vec<HarvestRow> {
        let mut rows: Vec<HarvestRow> = FEATURES
            .iter()
            .map(|f| HarvestRow::empty(f.set, f.name))
            .collect();
        let ix = |n: &str| feature_index(n).unwrap();
        let st = |s: &str| SpeakerType::parse(s).unwrap();
        rows[ix("gnl_f0.max")].entrain_sync.extend([st("d_x"), st("d_f")]);
        rows[ix("gnl_f0.med")].entrain_sync.insert(st("d_x"));
        rows[ix("gnl_f0.sd")].entrain_prox.extend([st("x_x"), st("d_f")]);
        rows[ix("gnl_f0.sd")].entrain_sync.extend([st("d_f"), st("f_m")]);
        rows
    }

    #[test]
    fn condense_reproduces_one_third_and_one() {
        let rows = gnl_f0_local_fixture();
        let by_set = condense(&rows, Grouping::FeatureSet);
        let gnl_f0 = by_set.iter().find(|r| r.group == "gnl_f0").unwrap();
        assert_eq!(gnl_f0.entrain_prox, Some(1.0 / 3.0));
        assert_eq!(gnl_f0.entrain_sync, Some(1.0));
        assert_eq!(gnl_f0.disentrain_prox, Some(0.0));
        assert_eq!(gnl_f0.disentrain_sync, Some(0.0));
    }

    #[test]
    fn condense_by_speaker_type_counts_type_membership() {
        let rows = gnl_f0_local_fixture();
        let by_type = condense(&rows, Grouping::SpeakerType);
        let d_f = by_type.iter().find(|r| r.group == "d_f").unwrap();
        // d_f appears in entrain_sync of gnl_f0.max and gnl_f0.sd.
        assert_eq!(d_f.entrain_sync, Some(2.0 / 37.0));
        assert_eq!(d_f.entrain_prox, Some(1.0 / 37.0));
    }

    #[test]
    fn condense_by_position_uses_fl_features_only() {
        let mut rows: Vec<HarvestRow> = FEATURES
            .iter()
            .map(|f| HarvestRow::empty(f.set, f.name))
            .collect();
        let ix = |n: &str| feature_index(n).unwrap();
        rows[ix("acc.c2.L")]
            .entrain_prox
            .insert(SpeakerType::OVERALL);
        let by_pos = condense(&rows, Grouping::Position);
        let f_row = by_pos.iter().find(|r| r.group == "F").unwrap();
        let l_row = by_pos.iter().find(|r| r.group == "L").unwrap();
        // 14 features each carry the F / L suffix.
        assert_eq!(f_row.entrain_prox, Some(0.0));
        assert_eq!(l_row.entrain_prox, Some(1.0 / 14.0));
    }

    #[test]
    fn harvest_csv_roundtrip() {
        let rows = gnl_f0_local_fixture();
        let csv = harvest_to_csv(&rows);
        let parsed = parse_harvest_csv(&csv).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn speaker_type_codes() {
        let all = SpeakerType::all();
        let codes: Vec<String> = all.iter().map(|t| t.to_string()).collect();
        assert_eq!(
            codes,
            ["x_x", "x_f", "x_m", "d_x", "d_f", "d_m", "f_x", "f_f", "f_m"]
        );
        for c in &codes {
            assert_eq!(SpeakerType::parse(c).unwrap().to_string(), *c);
        }
    }
}
