//! Labeled segment datasets and their CSV interchange format.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One labeled window of `N` triaxial accelerometer readings.
///
/// Readings are raw integer counts (nominally 12-bit signed at 50 Hz),
/// stored axis-major: `readings[0]` is x, `[1]` y, `[2]` z.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub readings: [Vec<i16>; 3],
    pub label: usize,
    pub animal_id: String,
    pub dataset_id: String,
}

impl Segment {
    /// Samples per axis.
    pub fn len(&self) -> usize {
        self.readings[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, n: usize, c: usize) -> Result<()> {
        if self.readings.iter().any(|a| a.len() != n) {
            return Err(Error::Shape(format!(
                "segment has axis lengths {:?}, expected {n}",
                self.readings.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if self.label >= c {
            return Err(Error::Domain(format!(
                "label {} out of range for {c} classes",
                self.label
            )));
        }
        Ok(())
    }
}

/// An ordered collection of segments sharing a segment length and class set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub segments: Vec<Segment>,
    pub class_names: Vec<String>,
    /// Samples per segment, shared by every segment.
    pub n: usize,
}

impl Dataset {
    pub fn new(segments: Vec<Segment>, class_names: Vec<String>, n: usize) -> Result<Self> {
        let ds = Dataset {
            segments,
            class_names,
            n,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.len() < 2 {
            return Err(Error::Config(
                "dataset needs at least two class names".into(),
            ));
        }
        for seg in &self.segments {
            seg.validate(self.n, self.class_names.len())?;
        }
        Ok(())
    }

    /// Distinct animal ids, in sorted order.
    pub fn animal_ids(&self) -> Vec<String> {
        self.segments
            .iter()
            .map(|s| s.animal_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Segments per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count()];
        for seg in &self.segments {
            counts[seg.label] += 1;
        }
        counts
    }
}

/// Path of the class-name manifest written next to a dataset CSV.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut p = csv_path.as_os_str().to_owned();
    p.push(".classes");
    PathBuf::from(p)
}

/// Write a dataset as CSV plus its class-name manifest.
///
/// The CSV has a header `dataset_id,animal_id,label` followed by the 3N
/// sample columns `x0..x{N-1},y0..y{N-1},z0..z{N-1}`, one row per segment.
/// The manifest holds one class name per line in label order.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    ds.validate()?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "dataset_id".to_string(),
        "animal_id".to_string(),
        "label".to_string(),
    ];
    for axis in ["x", "y", "z"] {
        for i in 0..ds.n {
            header.push(format!("{axis}{i}"));
        }
    }
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(3 + 3 * ds.n);
    for seg in &ds.segments {
        row.clear();
        row.push(seg.dataset_id.clone());
        row.push(seg.animal_id.clone());
        row.push(seg.label.to_string());
        for axis in &seg.readings {
            row.extend(axis.iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    fs::write(manifest_path(path), ds.class_names.join("\n") + "\n")?;
    Ok(())
}

/// Read a dataset CSV and its class-name manifest.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let manifest = manifest_path(path);
    let class_names: Vec<String> = fs::read_to_string(&manifest)
        .map_err(|e| {
            Error::Parse(format!(
                "class manifest {} not readable: {e}",
                manifest.display()
            ))
        })?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();

    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 3 || (header.len() - 3) % 3 != 0 {
        return Err(Error::Parse(format!(
            "expected 3 id columns plus 3N sample columns, got {}",
            header.len()
        )));
    }
    let n = (header.len() - 3) / 3;

    let mut segments = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != 3 + 3 * n {
            return Err(Error::Parse(format!(
                "row {line}: expected {} fields, got {}",
                3 + 3 * n,
                record.len()
            )));
        }
        let label: usize = record[2]
            .parse()
            .map_err(|_| Error::Parse(format!("row {line}: bad label {:?}", &record[2])))?;
        let mut readings: [Vec<i16>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
        for (d, axis) in readings.iter_mut().enumerate() {
            for i in 0..n {
                let field = &record[3 + d * n + i];
                let v: i16 = field.parse().map_err(|_| {
                    Error::Parse(format!("row {line}: bad sample value {field:?}"))
                })?;
                axis.push(v);
            }
        }
        segments.push(Segment {
            readings,
            label,
            animal_id: record[1].to_string(),
            dataset_id: record[0].to_string(),
        });
    }
    Dataset::new(segments, class_names, n)
}
