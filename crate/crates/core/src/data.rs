//! Recordings, windowed segments and datasets.
//!
//! A [`RawRecording`] is windowed by [`segment_recording`] into overlapping
//! [`Segment`]s; a [`Dataset`] is an ordered collection of equal-length segments
//! from one or more subjects.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};

/// Pooled standard deviation below which a subject is treated as constant.
pub const DEGENERATE_STD: f64 = 1e-12;

/// One subject's continuous signal plus the times of self-reported events.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub subject_id: String,
    /// Samples per minute.
    pub sample_rate: usize,
    pub samples: Vec<f64>,
    /// Sorted event offsets in minutes from the start of the recording.
    pub event_times: Vec<f64>,
}

impl RawRecording {
    pub fn new(
        subject_id: impl Into<String>,
        sample_rate: usize,
        samples: Vec<f64>,
        mut event_times: Vec<f64>,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("recording has no samples"));
        }
        event_times.sort_by(f64::total_cmp);
        let rec = RawRecording { subject_id: subject_id.into(), sample_rate, samples, event_times };
        let span = rec.samples.len() as f64 / sample_rate as f64;
        if let Some(&t) = rec.event_times.iter().find(|&&t| !(0.0..span).contains(&t)) {
            return Err(Error::invalid(format!("event at {t} min outside recording of {span} min")));
        }
        Ok(rec)
    }

    /// Whole minutes covered by the recording.
    pub fn duration_minutes(&self) -> usize {
        self.samples.len() / self.sample_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub subject_id: String,
    pub values: Vec<f64>,
    pub label: bool,
    /// Minutes from the start of the recording.
    pub window_start: usize,
}

/// A segment with its label erased, as seen by contrastive pretraining.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSegment {
    pub subject_id: String,
    pub values: Vec<f64>,
    pub window_start: usize,
}

/// Ordered, equal-length segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    segment_len: usize,
    segments: Vec<Segment>,
}

/// Label-free pool used for pretraining.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSet {
    pub segment_len: usize,
    pub segments: Vec<UnlabeledSegment>,
}

impl UnlabeledSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

impl Dataset {
    pub fn new(segment_len: usize, segments: Vec<Segment>) -> Result<Self> {
        if segment_len == 0 {
            return Err(Error::invalid("segment length must be positive"));
        }
        if let Some(s) = segments.iter().find(|s| s.values.len() != segment_len) {
            return Err(Error::ShapeMismatch { expected: segment_len, actual: s.values.len() });
        }
        Ok(Dataset { segment_len, segments })
    }

    /// Build from segments, taking the length from the first one.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        let t = segments.first().ok_or(Error::NoSegments)?.values.len();
        Dataset::new(t, segments)
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn into_segments(self) -> Vec<Segment> {
        self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Subject ids present, sorted.
    pub fn subjects(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.segments.iter().map(|s| s.subject_id.as_str()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.segments.iter().map(|s| s.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.segments.iter().filter(|s| s.label).count()
    }

    /// Segments whose subject is in `subjects`, in dataset order.
    pub fn filter_subjects<S: AsRef<str>>(&self, subjects: &[S]) -> Dataset {
        let keep: BTreeSet<&str> = subjects.iter().map(AsRef::as_ref).collect();
        Dataset {
            segment_len: self.segment_len,
            segments: self
                .segments
                .iter()
                .filter(|s| keep.contains(s.subject_id.as_str()))
                .cloned()
                .collect(),
        }
    }

    pub fn strip_labels(&self) -> UnlabeledSet {
        UnlabeledSet {
            segment_len: self.segment_len,
            segments: self
                .segments
                .iter()
                .map(|s| UnlabeledSegment {
                    subject_id: s.subject_id.clone(),
                    values: s.values.clone(),
                    window_start: s.window_start,
                })
                .collect(),
        }
    }

    /// Concatenate datasets with the same segment length.
    pub fn concat(parts: Vec<Dataset>) -> Result<Dataset> {
        let t = parts.first().ok_or(Error::NoSegments)?.segment_len;
        let mut segments = Vec::new();
        for p in parts {
            if p.segment_len != t {
                return Err(Error::ShapeMismatch { expected: t, actual: p.segment_len });
            }
            segments.extend(p.segments);
        }
        Ok(Dataset { segment_len: t, segments })
    }
}

/// Slide a `window_minutes` window over `rec` with the given stride.
///
/// A window starting at minute `s` is labeled true iff some event time `t`
/// satisfies `s <= t < s + window_minutes`.
pub fn segment_recording(
    rec: &RawRecording,
    window_minutes: usize,
    stride_minutes: usize,
) -> Result<Vec<Segment>> {
    if stride_minutes == 0 {
        return Err(Error::invalid("stride must be positive"));
    }
    if window_minutes == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let duration = rec.duration_minutes();
    if duration < window_minutes {
        return Err(Error::RecordingTooShort { duration, window: window_minutes });
    }
    let t = rec.sample_rate * window_minutes;
    let count = (duration - window_minutes) / stride_minutes + 1;
    let segments = (0..count)
        .map(|j| {
            let start = j * stride_minutes;
            let lo = start as f64;
            let hi = (start + window_minutes) as f64;
            // event_times is sorted: first event at or after the window start.
            let first = rec.event_times.partition_point(|&e| e < lo);
            let label = rec.event_times.get(first).is_some_and(|&e| e < hi);
            let offset = start * rec.sample_rate;
            Segment {
                subject_id: rec.subject_id.clone(),
                values: rec.samples[offset..offset + t].to_vec(),
                label,
                window_start: start,
            }
        })
        .collect();
    Ok(segments)
}

/// Window each recording and collect everything into one dataset.
pub fn segment_cohort(
    recordings: &[RawRecording],
    window_minutes: usize,
    stride_minutes: usize,
) -> Result<Dataset> {
    let mut segments = Vec::new();
    for rec in recordings {
        segments.extend(segment_recording(rec, window_minutes, stride_minutes)?);
    }
    Dataset::from_segments(segments)
}

/// Pooled per-subject z-scoring with the population standard deviation.
///
/// Subjects whose pooled deviation is below [`DEGENERATE_STD`] are mapped to
/// zeros and reported as [`Warning::DegenerateSubject`].
pub fn standardize_per_subject(ds: &Dataset) -> (Dataset, Vec<Warning>) {
    // (count, sum) then sum of squared deviations
    let mut stats: BTreeMap<&str, (usize, f64, f64)> = BTreeMap::new();
    for s in &ds.segments {
        let e = stats.entry(&s.subject_id).or_insert((0, 0.0, 0.0));
        e.0 += s.values.len();
        e.1 += s.values.iter().sum::<f64>();
    }
    let means: BTreeMap<&str, f64> =
        stats.iter().map(|(k, &(n, sum, _))| (*k, sum / n as f64)).collect();
    for s in &ds.segments {
        let mean = means[s.subject_id.as_str()];
        let e = stats.get_mut(s.subject_id.as_str()).expect("subject seen above");
        e.2 += s.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }
    let mut warnings = Vec::new();
    let scale: BTreeMap<&str, (f64, Option<f64>)> = stats
        .iter()
        .map(|(k, &(n, _, ss))| {
            let std = (ss / n as f64).sqrt();
            let inv = if std < DEGENERATE_STD {
                warnings.push(Warning::DegenerateSubject { subject_id: k.to_string() });
                None
            } else {
                Some(std)
            };
            (*k, (means[k], inv))
        })
        .collect();
    let segments = ds
        .segments
        .iter()
        .map(|s| {
            let (mean, std) = scale[s.subject_id.as_str()];
            let values = match std {
                Some(std) => s.values.iter().map(|v| (v - mean) / std).collect(),
                None => vec![0.0; s.values.len()],
            };
            Segment { values, ..s.clone() }
        })
        .collect();
    (Dataset { segment_len: ds.segment_len, segments }, warnings)
}

/// Hold out every segment of `test_subject`.
pub fn split_loso(ds: &Dataset, test_subject: &str) -> Result<(Dataset, Dataset)> {
    if !ds.segments.iter().any(|s| s.subject_id == test_subject) {
        return Err(Error::UnknownSubject(test_subject.to_owned()));
    }
    let (test, train): (Vec<_>, Vec<_>) =
        ds.segments.iter().cloned().partition(|s| s.subject_id == test_subject);
    Ok((
        Dataset { segment_len: ds.segment_len, segments: train },
        Dataset { segment_len: ds.segment_len, segments: test },
    ))
}

/// Which segments feed contrastive pretraining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PretrainPool {
    /// The entire training pool, labels erased.
    #[default]
    FullTrain,
    /// Only segments of subjects that are not in the labeled set.
    UnlabeledOnly,
}

/// Split `train` into a labeled part and a label-free pretraining pool.
pub fn partition_labels<S: AsRef<str>>(
    train: &Dataset,
    labeled_subjects: &[S],
    pool: PretrainPool,
) -> Result<(Dataset, UnlabeledSet)> {
    if labeled_subjects.is_empty() {
        return Err(Error::NoLabeledSubjects);
    }
    let present: BTreeSet<String> = train.subjects().into_iter().collect();
    if let Some(id) = labeled_subjects.iter().find(|id| !present.contains(id.as_ref())) {
        return Err(Error::UnknownSubject(id.as_ref().to_owned()));
    }
    let labeled = train.filter_subjects(labeled_subjects);
    let unlabeled = match pool {
        PretrainPool::FullTrain => train.strip_labels(),
        PretrainPool::UnlabeledOnly => {
            let rest: Vec<String> = present
                .into_iter()
                .filter(|s| !labeled_subjects.iter().any(|l| l.as_ref() == s))
                .collect();
            train.filter_subjects(&rest).strip_labels()
        }
    };
    Ok((labeled, unlabeled))
}

// ---------------------------------------------------------------- CSV format

const FIXED_COLUMNS: [&str; 3] = ["subject_id", "label", "window_start"];

fn format_value(v: f64) -> String {
    // 17 significant digits: exact f64 round trip.
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..ds.segment_len).map(|k| format!("v{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in &ds.segments {
        let mut row = Vec::with_capacity(3 + ds.segment_len);
        row.push(s.subject_id.clone());
        row.push(if s.label { "1" } else { "0" }.to_owned());
        row.push(s.window_start.to_string());
        row.extend(s.values.iter().map(|&v| format_value(v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = r.records();
    let header = match records.next() {
        None => return Err(Error::NoSegments),
        Some(h) => h.map_err(csv_err)?,
    };
    if header.len() < 4 || header.iter().take(3).ne(FIXED_COLUMNS) {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with subject_id,label,window_start,v0".into(),
        });
    }
    let t = header.len() - 3;
    for (k, name) in header.iter().skip(3).enumerate() {
        if name != format!("v{k}") {
            return Err(Error::Parse { line: 1, message: format!("expected column v{k}, found {name:?}") });
        }
    }
    let mut segments = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != t + 3 {
            return Err(Error::Parse {
                line,
                message: format!("row has {} values, expected {t}", rec.len().saturating_sub(3)),
            });
        }
        let label = match &rec[1] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse { line, message: format!("label must be 0 or 1, got {other:?}") }),
        };
        let window_start = rec[2].parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("window_start {:?} is not a non-negative integer", &rec[2]),
        })?;
        let values = rec
            .iter()
            .skip(3)
            .enumerate()
            .map(|(k, cell)| {
                cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("column v{k}: {cell:?} is not a finite number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        segments.push(Segment { subject_id: rec[0].to_owned(), values, label, window_start });
    }
    if segments.is_empty() {
        return Err(Error::NoSegments);
    }
    Dataset::new(t, segments)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}
