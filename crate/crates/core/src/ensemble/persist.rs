//! JSON-lines ensemble files (`.sdm`).
//!
//! Line 1 is a header with the format tag, the training-set checksum and
//! class sizes. Every following line is one model in push order, carrying
//! its region, its target pair, the captured counts and the exact ratings
//! as `"numer/denom"` strings.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Ensemble, TrainingInfo};
use crate::error::{Result, SdError};
use crate::geometry::{Region, WeakModel};
use crate::ratings::{ModelRating, Pair};

pub const FORMAT_TAG: &str = "sdkit-ensemble";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    #[serde(flatten)]
    training: TrainingInfo,
    models: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelLine {
    id: u64,
    pair: [usize; 2],
    captured: Vec<usize>,
    ratings: Vec<String>,
    region: Region,
}

pub fn write_ensemble<W: Write>(ens: &Ensemble, mut out: W) -> Result<()> {
    let header = Header {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        training: ens.training().clone(),
        models: ens.len(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for e in ens.models() {
        let r = &e.rating;
        let line = ModelLine {
            id: e.model.id(),
            pair: [e.pair.i, e.pair.j],
            captured: r.captured_counts().to_vec(),
            ratings: (1..=r.n_classes()).map(|c| r.rating_exact(c).to_string()).collect(),
            region: e.model.region().clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ensemble<R: BufRead>(input: R) -> Result<Ensemble> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| SdError::Format("empty file".into()))?;
    let header: Header =
        serde_json::from_str(&first?).map_err(|e| SdError::Format(format!("line 1: bad header: {e}")))?;
    if header.format != FORMAT_TAG || header.version != FORMAT_VERSION {
        return Err(SdError::Format(format!("unsupported format {} v{}", header.format, header.version)));
    }
    if header.training.class_sizes.len() != header.training.n_classes {
        return Err(SdError::Format("class_sizes length differs from n_classes".into()));
    }
    let mut ens = Ensemble::new(header.training);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fail = |msg: String| SdError::Format(format!("line {lineno}: {msg}"));
        let ml: ModelLine = serde_json::from_str(&line?).map_err(|e| fail(e.to_string()))?;
        let model = WeakModel::from_region(ml.id, ml.region).map_err(|e| fail(e.to_string()))?;
        let rating = ModelRating::from_counts(ml.captured, ens.training().class_sizes.clone())
            .map_err(|e| fail(e.to_string()))?;
        let expected: Vec<String> = (1..=rating.n_classes()).map(|c| rating.rating_exact(c).to_string()).collect();
        if expected != ml.ratings {
            return Err(fail(format!("ratings {:?} disagree with counts {:?}", ml.ratings, expected)));
        }
        let pair = Pair::new(ml.pair[0], ml.pair[1]).map_err(|e| fail(e.to_string()))?;
        ens.push(model, rating, pair).map_err(|e| fail(e.to_string()))?;
    }
    if ens.len() != header.models {
        return Err(SdError::Format(format!("header announces {} models, file has {}", header.models, ens.len())));
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LabeledDataset, Point, RegionPrimitive};

    fn sample() -> Ensemble {
        let pts: Vec<Point> = (0..4).map(|i| Point::scalar(i as f64, Some(i)).unwrap()).collect();
        let ds = LabeledDataset::new("d", pts, vec![1, 1, 2, 2], 2).unwrap();
        let mut ens = Ensemble::for_dataset(&ds);
        ens.set_seed(Some(7));
        let p = Pair::new(1, 2).unwrap();
        ens.push_rated(WeakModel::subset(1, 4, [0, 2]).unwrap(), &ds, p).unwrap();
        ens.push_rated(
            WeakModel::primitive(2, 1, RegionPrimitive::Slab { axis: 0, low: -0.5, high: 1.5 }).unwrap(),
            &ds,
            p,
        )
        .unwrap();
        ens
    }

    #[test]
    fn round_trip() {
        let ens = sample();
        let mut buf = Vec::new();
        write_ensemble(&ens, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().contains("\"dataset_checksum\""));
        assert!(text.contains("\"ratings\":[\"1\",\"0\"]"));
        let back = read_ensemble(buf.as_slice()).unwrap();
        assert_eq!(back, ens);
    }

    #[test]
    fn tampered_rating_is_rejected() {
        let mut buf = Vec::new();
        write_ensemble(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"ratings\":[\"1\",\"0\"]", "\"ratings\":[\"1/2\",\"0\"]");
        let err = read_ensemble(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut buf = Vec::new();
        write_ensemble(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(read_ensemble(cut.as_bytes()).is_err());
        assert!(read_ensemble("".as_bytes()).is_err());
    }
}
