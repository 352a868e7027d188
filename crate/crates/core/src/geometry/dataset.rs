use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Point;
use crate::error::{Result, SdError};

/// Labeled training or evaluation data. Labels are class numbers `1..=n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    points: Vec<Point>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    /// Points without an id get their row index as id.
    pub fn new(name: impl Into<String>, mut points: Vec<Point>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(SdError::InvalidDataset(format!("{} points but {} labels", points.len(), labels.len())));
        }
        if n_classes == 0 {
            return Err(SdError::InvalidDataset("at least one class is required".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c == 0 || c > n_classes) {
            return Err(SdError::ClassOutOfRange { class: bad, n_classes });
        }
        if let Some(first) = points.first() {
            let dim = first.dim();
            if let Some(p) = points.iter().find(|p| p.dim() != dim) {
                return Err(SdError::DimensionMismatch { expected: dim, actual: p.dim() });
            }
        }
        for (i, p) in points.iter_mut().enumerate() {
            if p.id().is_none() {
                p.set_id(i);
            }
        }
        Ok(LabeledDataset { name: name.into(), points, labels, n_classes })
    }

    /// Number of classes taken as the largest label present.
    pub fn from_labels(name: impl Into<String>, points: Vec<Point>, labels: Vec<usize>) -> Result<Self> {
        let n = labels.iter().copied().max().unwrap_or(0);
        LabeledDataset::new(name, points, labels, n)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Point::dim)
    }

    /// Row indices of the points labeled `class`.
    pub fn class_indices(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, &c)| c == class).map(|(i, _)| i)
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_classes];
        for &c in &self.labels {
            sizes[c - 1] += 1;
        }
        sizes
    }

    /// Every declared class must own at least one point before training.
    pub fn require_all_classes(&self) -> Result<()> {
        match self.class_sizes().iter().position(|&s| s == 0) {
            Some(c) => Err(SdError::EmptyClass { class: c + 1 }),
            None => Ok(()),
        }
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        BoundingBox::of(&self.points)
    }

    /// SHA-256 over ids, exact coordinate bits and labels.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_classes as u64).to_le_bytes());
        for (p, &c) in self.points.iter().zip(&self.labels) {
            h.update((p.id().unwrap_or(usize::MAX) as u64).to_le_bytes());
            h.update((p.dim() as u64).to_le_bytes());
            for x in p.coords() {
                h.update(x.to_bits().to_le_bytes());
            }
            h.update((c as u64).to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

/// Axis-aligned box spanned by a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoundingBox {
    pub fn of(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut min = first.coords().to_vec();
        let mut max = min.clone();
        for p in &points[1..] {
            for (k, &x) in p.coords().iter().enumerate() {
                min[k] = min[k].min(x);
                max[k] = max[k].max(x);
            }
        }
        Some(BoundingBox { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn range(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.min).zip(&self.max).all(|((v, lo), hi)| lo <= v && v <= hi)
    }
}

/// Rows read from a dataset CSV: header row, optional leading `id` column,
/// feature columns, optional trailing `label` column (empty cell = unlabeled).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointTable {
    pub feature_names: Vec<String>,
    pub has_label_column: bool,
    pub points: Vec<Point>,
    pub labels: Vec<Option<usize>>,
    /// 1-based file line of each row, for error messages.
    pub lines: Vec<usize>,
}

impl PointTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        PointTable::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(rdr: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| SdError::Parse { path: source.to_string(), line, message };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
        let headers = match reader.headers() {
            Ok(h) => h.clone(),
            Err(e) => return Err(parse_err(1, e.to_string())),
        };
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Ok(PointTable::default());
        }
        let names: Vec<&str> = headers.iter().collect();
        let has_id = names.first() == Some(&"id");
        let has_label = names.last() == Some(&"label") && names.len() > usize::from(has_id);
        let feat_lo = usize::from(has_id);
        let feat_hi = names.len() - usize::from(has_label);
        if feat_hi <= feat_lo {
            return Err(parse_err(1, "no feature columns in header".into()));
        }
        let mut table = PointTable {
            feature_names: names[feat_lo..feat_hi].iter().map(|s| s.to_string()).collect(),
            has_label_column: has_label,
            ..PointTable::default()
        };
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let mut coords = Vec::with_capacity(feat_hi - feat_lo);
            for (k, cell) in rec.iter().enumerate().take(feat_hi).skip(feat_lo) {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(line, format!("column '{}': not a number: '{cell}'", names[k])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("column '{}': non-finite value", names[k])));
                }
                coords.push(v);
            }
            let mut point = Point::new(coords).map_err(|e| parse_err(line, e.to_string()))?;
            if has_id {
                let id: usize = rec[0]
                    .parse()
                    .map_err(|_| parse_err(line, format!("column 'id': not a non-negative integer: '{}'", &rec[0])))?;
                point.set_id(id);
            }
            let label = if has_label {
                let cell = &rec[names.len() - 1];
                if cell.is_empty() {
                    None
                } else {
                    match cell.parse::<usize>() {
                        Ok(c) if c >= 1 => Some(c),
                        _ => {
                            return Err(parse_err(line, format!("column 'label': expected integer >= 1, got '{cell}'")))
                        }
                    }
                }
            } else {
                None
            };
            table.points.push(point);
            table.labels.push(label);
            table.lines.push(line);
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Requires a `label` column and a label on every row.
    pub fn into_labeled(self, name: &str) -> Result<LabeledDataset> {
        if !self.has_label_column {
            return Err(SdError::InvalidDataset(format!("{name}: missing 'label' column")));
        }
        let mut labels = Vec::with_capacity(self.labels.len());
        for (l, line) in self.labels.iter().zip(&self.lines) {
            match l {
                Some(c) => labels.push(*c),
                None => {
                    return Err(SdError::Parse {
                        path: name.to_string(),
                        line: *line,
                        message: "column 'label' is empty".into(),
                    })
                }
            }
        }
        LabeledDataset::from_labels(name, self.points, labels)
    }
}

/// Writes points (and labels when given) in the dataset CSV layout.
pub fn write_points_csv<W: Write>(out: W, points: &[Point], labels: Option<&[usize]>) -> Result<()> {
    let dim = points.first().map_or(1, Point::dim);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..dim).map(|k| format!("x{k}")));
    header.push("label".into());
    w.write_record(&header).map_err(csv_io)?;
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![p.id().unwrap_or(i).to_string()];
        row.extend(p.coords().iter().map(|x| format!("{x:?}")));
        row.push(labels.map_or(String::new(), |l| l[i].to_string()));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> SdError {
    SdError::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_id_features_and_label() {
        let src = "id,x,y,label\n0,1.5,2,1\n1,3,4,2\n2,0,0,\n";
        let t = PointTable::from_reader(src.as_bytes(), "mem").unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.points[1].coords(), &[3.0, 4.0]);
        assert_eq!(t.points[1].id(), Some(1));
        assert_eq!(t.labels, vec![Some(1), Some(2), None]);
        assert!(t.clone().into_labeled("mem").is_err());
    }

    #[test]
    fn bad_number_names_the_line() {
        let src = "x,label\n1,1\nabc,2\n";
        match PointTable::from_reader(src.as_bytes(), "mem") {
            Err(SdError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("'x'"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let src = "x,y,label\n1,2,1\n1,1\n";
        assert!(matches!(PointTable::from_reader(src.as_bytes(), "mem"), Err(SdError::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_label_column_is_named() {
        let src = "x,y\n1,2\n";
        let err = PointTable::from_reader(src.as_bytes(), "mem").unwrap().into_labeled("mem").unwrap_err();
        assert!(err.to_string().contains("label"));
    }

    #[test]
    fn empty_input_is_empty_table() {
        let t = PointTable::from_reader("".as_bytes(), "mem").unwrap();
        assert!(t.points.is_empty());
        let t = PointTable::from_reader("x,label\n".as_bytes(), "mem").unwrap();
        assert!(t.points.is_empty());
    }

    #[test]
    fn dataset_validates_labels() {
        let pts = vec![Point::new(vec![0.0]).unwrap(), Point::new(vec![1.0]).unwrap()];
        assert!(LabeledDataset::new("d", pts.clone(), vec![1, 3], 2).is_err());
        assert!(LabeledDataset::new("d", pts.clone(), vec![1], 2).is_err());
        let ds = LabeledDataset::new("d", pts, vec![1, 1], 2).unwrap();
        assert!(matches!(ds.require_all_classes(), Err(SdError::EmptyClass { class: 2 })));
        assert_eq!(ds.points()[1].id(), Some(1));
    }

    #[test]
    fn checksum_tracks_content() {
        let pts = vec![Point::new(vec![0.0]).unwrap(), Point::new(vec![1.0]).unwrap()];
        let a = LabeledDataset::new("a", pts.clone(), vec![1, 2], 2).unwrap();
        let b = LabeledDataset::new("b", pts, vec![2, 1], 2).unwrap();
        assert_eq!(a.checksum(), a.clone().checksum());
        assert_ne!(a.checksum(), b.checksum());
    }

    #[test]
    fn write_then_read() {
        let pts = vec![Point::with_id(vec![0.1, -2.0], 0).unwrap(), Point::with_id(vec![3.0, 1e-3], 1).unwrap()];
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &pts, Some(&[1, 2])).unwrap();
        let t = PointTable::from_reader(buf.as_slice(), "mem").unwrap();
        assert_eq!(t.points, pts);
        assert_eq!(t.labels, vec![Some(1), Some(2)]);
    }
}
