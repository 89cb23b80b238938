//! Dataset manifest: participants, their clips, labels and enrollment dates.
//!
//! The on-disk format is CSV with the header
//!
//! ```text
//! participant_id,clip_id,file_path,task,repetition,label,enrollment_date
//! ```
//!
//! An optional eighth column `excluded` (`true`/`false`) marks clips that
//! failed quality review; excluded clips stay in the manifest but are
//! skipped by training and evaluation. Dates are ISO-8601 (`YYYY-MM-DD`).
//! Task values are `speech`, `sentence`, `word` and `vowel_a` … `vowel_u`.
//!
//! Temporal splits send participants enrolled strictly before the cutoff
//! to train and participants enrolled on or after the cutoff to test.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{self, AudioError};

pub const CSV_HEADER: [&str; 7] = [
    "participant_id",
    "clip_id",
    "file_path",
    "task",
    "repetition",
    "label",
    "enrollment_date",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManifestError {
    #[error("malformed header: expected `{}`, found `{found}`", CSV_HEADER.join(","))]
    MalformedHeader { found: String },
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("duplicate clip id `{0}`")]
    DuplicateClipId(String),
    #[error("row {row}: unknown label `{value}` (expected pass or fail)")]
    UnknownLabel { row: usize, value: String },
    #[error("row {row}: unknown task `{value}`")]
    UnknownTask { row: usize, value: String },
    #[error("participant `{participant}` has conflicting labels")]
    ConflictingLabel { participant: String },
    #[error("participant `{participant}` has conflicting enrollment dates")]
    ConflictingDate { participant: String },
    #[error("row {row}: malformed date `{value}`")]
    MalformedDate { row: usize, value: String },
    #[error("duplicate participant id `{0}`")]
    DuplicateParticipant(String),
    #[error("participant `{0}` has no clips")]
    EmptyParticipant(String),
    #[error("split leaves the {side} side without participants")]
    EmptySplit { side: &'static str },
}

/// Participant-level outcome. `Fail` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Pass,
    Fail,
}

impl Label {
    /// Class index used by the classifier: pass = 0, fail = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Pass => 0,
            Label::Fail => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::Pass),
            1 => Some(Label::Fail),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Fail
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pass => "pass",
            Label::Fail => "fail",
        })
    }
}

impl FromStr for Label {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pass" => Ok(Label::Pass),
            "fail" => Ok(Label::Fail),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vowel {
    A,
    E,
    I,
    O,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 5] = [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U];
}

/// Recording task, covering both the NIHSS speech items and sustained vowels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    NihssSpeech,
    NihssSentence,
    NihssWord,
    Vowel(Vowel),
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Task::NihssSpeech => "speech",
            Task::NihssSentence => "sentence",
            Task::NihssWord => "word",
            Task::Vowel(Vowel::A) => "vowel_a",
            Task::Vowel(Vowel::E) => "vowel_e",
            Task::Vowel(Vowel::I) => "vowel_i",
            Task::Vowel(Vowel::O) => "vowel_o",
            Task::Vowel(Vowel::U) => "vowel_u",
        };
        f.write_str(s)
    }
}

impl FromStr for Task {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s.trim() {
            "speech" => Task::NihssSpeech,
            "sentence" => Task::NihssSentence,
            "word" => Task::NihssWord,
            "vowel_a" => Task::Vowel(Vowel::A),
            "vowel_e" => Task::Vowel(Vowel::E),
            "vowel_i" => Task::Vowel(Vowel::I),
            "vowel_o" => Task::Vowel(Vowel::O),
            "vowel_u" => Task::Vowel(Vowel::U),
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    /// Relative to the manifest's audio root.
    pub file_path: PathBuf,
    pub task: Task,
    pub repetition_index: u32,
    #[serde(default)]
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub label: Label,
    pub enrollment_date: NaiveDate,
    pub clips: Vec<ClipRecord>,
}

impl ParticipantRecord {
    pub fn active_clips(&self) -> impl Iterator<Item = &ClipRecord> {
        self.clips.iter().filter(|c| !c.excluded)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub pass: usize,
    pub fail: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.pass + self.fail
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub participants: Vec<ParticipantRecord>,
    #[serde(default)]
    pub split_cutoff: Option<NaiveDate>,
}

/// One CSV/JSON row, as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub participant_id: String,
    pub clip_id: String,
    pub file_path: String,
    pub task: String,
    pub repetition: String,
    pub label: String,
    pub enrollment_date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

impl Manifest {
    /// Validates the structural invariants and builds a manifest.
    pub fn new(participants: Vec<ParticipantRecord>) -> Result<Self, ManifestError> {
        let mut pids = HashSet::new();
        let mut cids = HashSet::new();
        for p in &participants {
            if !pids.insert(p.participant_id.as_str()) {
                return Err(ManifestError::DuplicateParticipant(
                    p.participant_id.clone(),
                ));
            }
            if p.clips.is_empty() {
                return Err(ManifestError::EmptyParticipant(p.participant_id.clone()));
            }
            for c in &p.clips {
                if !cids.insert(c.clip_id.as_str()) {
                    return Err(ManifestError::DuplicateClipId(c.clip_id.clone()));
                }
            }
        }
        Ok(Self {
            participants,
            split_cutoff: None,
        })
    }

    pub fn label_counts(&self) -> LabelCounts {
        let mut counts = LabelCounts::default();
        for p in &self.participants {
            match p.label {
                Label::Pass => counts.pass += 1,
                Label::Fail => counts.fail += 1,
            }
        }
        counts
    }

    pub fn n_clips(&self) -> usize {
        self.participants.iter().map(|p| p.clips.len()).sum()
    }

    pub fn participant(&self, id: &str) -> Option<&ParticipantRecord> {
        self.participants.iter().find(|p| p.participant_id == id)
    }

    pub fn rows(&self) -> Vec<ManifestRow> {
        let any_excluded = self
            .participants
            .iter()
            .flat_map(|p| &p.clips)
            .any(|c| c.excluded);
        let mut rows = Vec::with_capacity(self.n_clips());
        for p in &self.participants {
            for c in &p.clips {
                rows.push(ManifestRow {
                    participant_id: p.participant_id.clone(),
                    clip_id: c.clip_id.clone(),
                    file_path: c.file_path.to_string_lossy().replace('\\', "/"),
                    task: c.task.to_string(),
                    repetition: c.repetition_index.to_string(),
                    label: p.label.to_string(),
                    enrollment_date: p.enrollment_date.format("%Y-%m-%d").to_string(),
                    excluded: any_excluded.then(|| c.excluded.to_string()),
                });
            }
        }
        rows
    }

    pub fn from_rows(rows: Vec<ManifestRow>) -> Result<Self, ManifestError> {
        let mut order: Vec<String> = Vec::new();
        let mut by_pid: HashMap<String, ParticipantRecord> = HashMap::new();
        let mut clip_ids = HashSet::new();
        for (i, row) in rows.into_iter().enumerate() {
            // 1-based data rows; header is row 0
            let rn = i + 1;
            if row.participant_id.trim().is_empty() || row.clip_id.trim().is_empty() {
                return Err(ManifestError::MalformedRow {
                    row: rn,
                    message: "empty participant_id or clip_id".into(),
                });
            }
            if !clip_ids.insert(row.clip_id.clone()) {
                return Err(ManifestError::DuplicateClipId(row.clip_id));
            }
            let label: Label = row.label.parse().map_err(|_| ManifestError::UnknownLabel {
                row: rn,
                value: row.label.clone(),
            })?;
            let task: Task = row.task.parse().map_err(|_| ManifestError::UnknownTask {
                row: rn,
                value: row.task.clone(),
            })?;
            let date = NaiveDate::parse_from_str(row.enrollment_date.trim(), "%Y-%m-%d").map_err(
                |_| ManifestError::MalformedDate {
                    row: rn,
                    value: row.enrollment_date.clone(),
                },
            )?;
            let repetition_index: u32 =
                row.repetition
                    .trim()
                    .parse()
                    .map_err(|_| ManifestError::MalformedRow {
                        row: rn,
                        message: format!("repetition `{}` is not a small integer", row.repetition),
                    })?;
            let excluded = match row.excluded.as_deref().map(str::trim) {
                None | Some("") | Some("false") | Some("0") => false,
                Some("true") | Some("1") => true,
                Some(other) => {
                    return Err(ManifestError::MalformedRow {
                        row: rn,
                        message: format!("excluded flag `{other}` is not true/false"),
                    })
                }
            };
            let clip = ClipRecord {
                clip_id: row.clip_id,
                file_path: PathBuf::from(row.file_path),
                task,
                repetition_index,
                excluded,
            };
            match by_pid.get_mut(&row.participant_id) {
                Some(p) => {
                    if p.label != label {
                        return Err(ManifestError::ConflictingLabel {
                            participant: row.participant_id,
                        });
                    }
                    if p.enrollment_date != date {
                        return Err(ManifestError::ConflictingDate {
                            participant: row.participant_id,
                        });
                    }
                    p.clips.push(clip);
                }
                None => {
                    order.push(row.participant_id.clone());
                    by_pid.insert(
                        row.participant_id.clone(),
                        ParticipantRecord {
                            participant_id: row.participant_id,
                            label,
                            enrollment_date: date,
                            clips: vec![clip],
                        },
                    );
                }
            }
        }
        let participants = order
            .into_iter()
            .map(|id| by_pid.remove(&id).expect("participant recorded in order"))
            .collect();
        Manifest::new(participants)
    }
}

/// Parses manifest CSV text.
pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ManifestError::MalformedHeader {
            found: e.to_string(),
        })?
        .clone();
    let found: Vec<&str> = headers.iter().collect();
    let ok = found.len() >= CSV_HEADER.len()
        && found[..CSV_HEADER.len()] == CSV_HEADER
        && (found.len() == CSV_HEADER.len()
            || (found.len() == CSV_HEADER.len() + 1 && found[CSV_HEADER.len()] == "excluded"));
    if !ok {
        return Err(ManifestError::MalformedHeader {
            found: found.join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
        rows.push(rec.map_err(|e| ManifestError::MalformedRow {
            row: i + 1,
            message: e.to_string(),
        })?);
    }
    Manifest::from_rows(rows)
}

/// Parses the JSON mirror: an array of row objects with the CSV column names.
pub fn parse_manifest_json(text: &str) -> Result<Manifest, ManifestError> {
    let rows: Vec<ManifestRow> =
        serde_json::from_str(text).map_err(|e| ManifestError::MalformedRow {
            row: e.line(),
            message: e.to_string(),
        })?;
    Manifest::from_rows(rows)
}

/// Serializes to CSV. `parse_manifest(&serialize_manifest(m)) == m` for any
/// valid manifest without a split cutoff.
pub fn serialize_manifest(m: &Manifest) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(Vec::new());
    let rows = m.rows();
    if rows.is_empty() {
        w.write_record(CSV_HEADER).expect("in-memory write");
    }
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn serialize_manifest_json(m: &Manifest) -> String {
    serde_json::to_string_pretty(&m.rows()).expect("rows serialize")
}

/// Splits by enrollment date: strictly before `cutoff` → train, on or after
/// → test. Labels play no role in the assignment.
pub fn split_by_epoch(
    m: &Manifest,
    cutoff: NaiveDate,
) -> Result<(Manifest, Manifest), ManifestError> {
    let (train, test): (Vec<_>, Vec<_>) = m
        .participants
        .iter()
        .cloned()
        .partition(|p| p.enrollment_date < cutoff);
    if train.is_empty() {
        return Err(ManifestError::EmptySplit { side: "train" });
    }
    if test.is_empty() {
        return Err(ManifestError::EmptySplit { side: "test" });
    }
    let wrap = |participants| Manifest {
        participants,
        split_cutoff: Some(cutoff),
    };
    Ok((wrap(train), wrap(test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    MissingFile,
    UnreadableAudio,
    ZeroLengthClip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub clip_id: String,
    pub kind: IssueKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub checked_clips: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks that every non-excluded clip exists under `root` and decodes.
pub fn validate_manifest(m: &Manifest, root: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    for clip in m.participants.iter().flat_map(|p| p.active_clips()) {
        report.checked_clips += 1;
        let path = root.join(&clip.file_path);
        let issue = |kind, detail: String| ValidationIssue {
            clip_id: clip.clip_id.clone(),
            kind,
            detail,
        };
        if !path.is_file() {
            report
                .issues
                .push(issue(IssueKind::MissingFile, path.display().to_string()));
            continue;
        }
        match std::fs::read(&path) {
            Err(e) => report
                .issues
                .push(issue(IssueKind::UnreadableAudio, e.to_string())),
            Ok(bytes) if bytes.is_empty() => report
                .issues
                .push(issue(IssueKind::UnreadableAudio, "file is empty".into())),
            Ok(bytes) => match audio_io::decode_wav(&bytes) {
                Ok(_) => {}
                Err(AudioError::ZeroSamples) => report
                    .issues
                    .push(issue(IssueKind::ZeroLengthClip, "no samples".into())),
                Err(e) => report
                    .issues
                    .push(issue(IssueKind::UnreadableAudio, e.to_string())),
            },
        }
    }
    report
}

/// Participant ids per label, handy for reporting split composition.
pub fn ids_by_label(m: &Manifest) -> BTreeMap<Label, Vec<String>> {
    let mut out: BTreeMap<Label, Vec<String>> = BTreeMap::new();
    for p in &m.participants {
        out.entry(p.label)
            .or_default()
            .push(p.participant_id.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "participant_id,clip_id,file_path,task,repetition,label,enrollment_date\n";

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn two_rows_one_participant() {
        let text = format!(
            "{HEADER}p1,c1,a/c1.wav,vowel_a,1,fail,2022-07-01\np1,c2,a/c2.wav,speech,1,fail,2022-07-01\n"
        );
        let m = parse_manifest(&text).unwrap();
        assert_eq!(m.participants.len(), 1);
        assert_eq!(m.participants[0].clips.len(), 2);
        assert_eq!(m.participants[0].label, Label::Fail);
    }

    #[test]
    fn duplicate_clip_id_rejected() {
        let text = format!(
            "{HEADER}p1,c1,a.wav,word,1,pass,2022-07-01\np2,c1,b.wav,word,1,pass,2022-07-02\n"
        );
        assert_eq!(
            parse_manifest(&text).unwrap_err(),
            ManifestError::DuplicateClipId("c1".into())
        );
    }

    #[test]
    fn row_level_errors() {
        let bad_label = format!("{HEADER}p1,c1,a.wav,word,1,maybe,2022-07-01\n");
        assert!(matches!(
            parse_manifest(&bad_label),
            Err(ManifestError::UnknownLabel { .. })
        ));
        let conflict = format!(
            "{HEADER}p1,c1,a.wav,word,1,pass,2022-07-01\np1,c2,b.wav,word,2,fail,2022-07-01\n"
        );
        assert!(matches!(
            parse_manifest(&conflict),
            Err(ManifestError::ConflictingLabel { .. })
        ));
        let bad_date = format!("{HEADER}p1,c1,a.wav,word,1,pass,07/01/2022\n");
        assert!(matches!(
            parse_manifest(&bad_date),
            Err(ManifestError::MalformedDate { .. })
        ));
        let bad_task = format!("{HEADER}p1,c1,a.wav,vowel_y,1,pass,2022-07-01\n");
        assert!(matches!(
            parse_manifest(&bad_task),
            Err(ManifestError::UnknownTask { .. })
        ));
        assert!(matches!(
            parse_manifest("a,b,c\n"),
            Err(ManifestError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn label_counts_27_fail_41_pass() {
        let mut text = HEADER.to_string();
        for i in 0..68 {
            let label = if i < 27 { "fail" } else { "pass" };
            text.push_str(&format!(
                "p{i},c{i},x{i}.wav,vowel_e,1,{label},2022-09-01\n"
            ));
        }
        let m = parse_manifest(&text).unwrap();
        assert_eq!(m.label_counts(), LabelCounts { pass: 41, fail: 27 });
    }

    #[test]
    fn split_boundaries() {
        let text = format!(
            "{HEADER}a,c1,a.wav,word,1,pass,2023-01-10\nb,c2,b.wav,word,1,fail,2023-01-30\nc,c3,c.wav,word,1,fail,2023-01-24\n"
        );
        let m = parse_manifest(&text).unwrap();
        let (train, test) = split_by_epoch(&m, d("2023-01-24")).unwrap();
        let ids = |m: &Manifest| -> Vec<String> {
            m.participants
                .iter()
                .map(|p| p.participant_id.clone())
                .collect()
        };
        assert_eq!(ids(&train), vec!["a"]);
        // cutoff day itself belongs to test
        assert_eq!(ids(&test), vec!["b", "c"]);
        assert_eq!(
            split_by_epoch(&m, d("2024-01-01")).unwrap_err(),
            ManifestError::EmptySplit { side: "test" }
        );
        assert_eq!(
            split_by_epoch(&m, d("2020-01-01")).unwrap_err(),
            ManifestError::EmptySplit { side: "train" }
        );
    }

    #[test]
    fn excluded_column_round_trips() {
        let text = "participant_id,clip_id,file_path,task,repetition,label,enrollment_date,excluded\n\
             p1,c1,a.wav,vowel_o,1,pass,2022-07-01,true\np1,c2,b.wav,vowel_o,2,pass,2022-07-01,false\n";
        let m = parse_manifest(text).unwrap();
        assert!(m.participants[0].clips[0].excluded);
        assert_eq!(m.participants[0].active_clips().count(), 1);
        assert_eq!(parse_manifest(&serialize_manifest(&m)).unwrap(), m);
    }

    #[test]
    fn json_mirror_matches_csv() {
        let text = format!(
            "{HEADER}p1,c1,a.wav,sentence,1,pass,2022-07-01\np2,c2,b.wav,vowel_u,3,fail,2022-08-01\n"
        );
        let m = parse_manifest(&text).unwrap();
        let json = serialize_manifest_json(&m);
        assert_eq!(parse_manifest_json(&json).unwrap(), m);
    }

    #[test]
    fn validation_flags_missing_and_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let clip = audio_io::AudioClip::new(vec![0.1, -0.2, 0.3], 16000);
        std::fs::write(dir.path().join("good.wav"), audio_io::encode_wav16(&clip)).unwrap();
        std::fs::write(dir.path().join("empty.wav"), b"").unwrap();
        let text = format!(
            "{HEADER}p1,good,good.wav,word,1,pass,2022-07-01\np1,gone,gone.wav,word,2,pass,2022-07-01\np1,empty,empty.wav,word,3,pass,2022-07-01\n"
        );
        let m = parse_manifest(&text).unwrap();
        let report = validate_manifest(&m, dir.path());
        let kinds: Vec<_> = report
            .issues
            .iter()
            .map(|i| (i.clip_id.as_str(), i.kind))
            .collect();
        assert_eq!(
            kinds,
            vec![
                ("gone", IssueKind::MissingFile),
                ("empty", IssueKind::UnreadableAudio)
            ]
        );

        let only_good = format!("{HEADER}p1,good,good.wav,word,1,pass,2022-07-01\n");
        assert!(validate_manifest(&parse_manifest(&only_good).unwrap(), dir.path()).is_clean());
    }

    fn arb_manifest() -> impl Strategy<Value = Manifest> {
        prop::collection::vec((any::<bool>(), 0u32..400, 1usize..4, any::<bool>()), 1..12).prop_map(
            |ps| {
                let base = d("2022-06-01");
                let participants = ps
                    .into_iter()
                    .enumerate()
                    .map(|(i, (fail, day, n, excl))| ParticipantRecord {
                        participant_id: format!("P{i:03}"),
                        label: if fail { Label::Fail } else { Label::Pass },
                        enrollment_date: base + chrono::Days::new(day as u64),
                        clips: (0..n)
                            .map(|k| ClipRecord {
                                clip_id: format!("P{i:03}_{k}"),
                                file_path: PathBuf::from(format!("audio/P{i:03}/{k}.wav")),
                                task: Task::Vowel(Vowel::ALL[k % 5]),
                                repetition_index: k as u32 + 1,
                                excluded: excl && k == 0,
                            })
                            .collect(),
                    })
                    .collect();
                Manifest::new(participants).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn csv_round_trip(m in arb_manifest()) {
            prop_assert_eq!(parse_manifest(&serialize_manifest(&m)).unwrap(), m);
        }

        #[test]
        fn split_partitions_participants(m in arb_manifest(), day in 0u64..400) {
            let cutoff = d("2022-06-01") + chrono::Days::new(day);
            if let Ok((train, test)) = split_by_epoch(&m, cutoff) {
                let a: HashSet<_> = train.participants.iter().map(|p| &p.participant_id).collect();
                let b: HashSet<_> = test.participants.iter().map(|p| &p.participant_id).collect();
                prop_assert!(a.is_disjoint(&b));
                prop_assert_eq!(a.len() + b.len(), m.participants.len());
            }
        }
    }
}
