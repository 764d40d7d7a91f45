use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use ndarray_npy::ReadNpyExt;

use crate::error::{Error, Result};
use crate::io::folder::TestEntry;
use crate::io::png::read_gray;
use crate::metrics::{ScoreMap, ScoredSample};

/// One CSV row: `id`, `image_score` (or `score`), optional `map_path`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub score: Option<f64>,
    /// Resolved against the CSV's directory when relative.
    pub map_path: Option<PathBuf>,
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| names.contains(&h.trim()))
}

pub fn read_prediction_rows(path: &Path) -> Result<Vec<PredictionRow>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let id_col = column(&headers, &["id"])
        .ok_or_else(|| Error::InvalidInput(format!("{}: header lacks an `id` column", path.display())))?;
    let score_col = column(&headers, &["image_score", "score"]);
    let map_col = column(&headers, &["map_path"]);
    if score_col.is_none() && map_col.is_none() {
        return Err(Error::InvalidInput(format!(
            "{}: header needs `image_score`/`score` or `map_path`",
            path.display()
        )));
    }
    let base = path.parent().unwrap_or(Path::new("."));

    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |c: Option<usize>| c.and_then(|c| record.get(c)).filter(|s| !s.is_empty());
        let id = record.get(id_col).unwrap_or_default().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::InvalidInput(format!("{}: duplicate id {id}", path.display())));
        }
        let score = field(score_col)
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("{}: row {}: score {s:?} is not a number", path.display(), line + 2))
                })
            })
            .transpose()?;
        let map_path = field(map_col).map(|p| base.join(p));
        if score.is_none() && map_path.is_none() {
            return Err(Error::InvalidInput(format!(
                "{}: row {} ({id}) has neither score nor map",
                path.display(),
                line + 2
            )));
        }
        rows.push(PredictionRow { id, score, map_path });
    }
    Ok(rows)
}

/// Loads an anomaly map from `.npy` (2-D float) or 8-bit PNG and checks its shape.
pub fn load_score_map(path: &Path, expected: (u32, u32)) -> Result<ScoreMap> {
    let map_err = |reason: String| Error::Map { path: path.to_path_buf(), reason };
    let is_npy = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("npy"));
    let (w, h, values) = if is_npy {
        let open = || File::open(path).map_err(|e| Error::io(path, e));
        let arr = match Array2::<f32>::read_npy(open()?) {
            Ok(a) => a,
            Err(_) => Array2::<f64>::read_npy(open()?)
                .map_err(|e| map_err(format!("not a 2-D float32/float64 array: {e}")))?
                .mapv(|v| v as f32),
        };
        let (h, w) = arr.dim();
        (w as u32, h as u32, arr.iter().copied().collect::<Vec<f32>>())
    } else {
        let img = read_gray(path)?;
        let (w, h) = img.dimensions();
        (w, h, img.as_raw().iter().map(|&v| v as f32).collect())
    };
    if (w, h) != expected {
        return Err(map_err(format!("expected shape {}x{} (height x width), found {h}x{w}", expected.1, expected.0)));
    }
    ScoreMap::from_vec(w, h, values)
}

/// Predictions joined to ground truth by id.
#[derive(Clone, Debug)]
pub struct JoinedPredictions {
    pub samples: Vec<ScoredSample>,
    /// Prediction ids with no ground-truth entry.
    pub unmatched_predictions: Vec<String>,
    /// Ground-truth ids with no prediction.
    pub missing_predictions: Vec<String>,
}

/// Reads the CSV and attaches labels, masks and maps from `truth`.
/// Masks are only loaded for rows that carry a map.
pub fn read_predictions(path: &Path, truth: &[TestEntry]) -> Result<JoinedPredictions> {
    let rows = read_prediction_rows(path)?;
    let by_id: BTreeMap<&str, &TestEntry> = truth.iter().map(|e| (e.id.as_str(), e)).collect();
    let predicted: BTreeSet<&str> = rows.iter().map(|r| r.id.as_str()).collect();

    let mut samples = Vec::new();
    let mut unmatched = Vec::new();
    for row in &rows {
        let Some(entry) = by_id.get(row.id.as_str()) else {
            unmatched.push(row.id.clone());
            continue;
        };
        let (anomaly_map, mask) = match &row.map_path {
            None => (None, None),
            Some(map_path) => {
                let dims = image::image_dimensions(&entry.image_path)
                    .map_err(|source| Error::Image { path: entry.image_path.clone(), source })?;
                (Some(load_score_map(map_path, dims)?), entry.load_mask()?)
            }
        };
        samples.push(ScoredSample {
            id: row.id.clone(),
            image_score: row.score,
            label: entry.label,
            anomaly_map,
            mask,
        });
    }
    let missing = truth.iter().filter(|e| !predicted.contains(e.id.as_str())).map(|e| e.id.clone()).collect();
    Ok(JoinedPredictions { samples, unmatched_predictions: unmatched, missing_predictions: missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ImageLabel;
    use ndarray_npy::WriteNpyExt;
    use std::io::Write;

    fn write(path: &Path, text: &str) {
        std::fs::File::create(path).unwrap().write_all(text.as_bytes()).unwrap();
    }

    #[test]
    fn three_rows_one_map() {
        let dir = tempfile::tempdir().unwrap();
        let arr = Array2::<f32>::from_shape_fn((3, 4), |(y, x)| (x + y) as f32);
        arr.write_npy(File::create(dir.path().join("m.npy")).unwrap()).unwrap();
        let csv = dir.path().join("p.csv");
        write(&csv, "id,image_score,map_path\ngood/000,0.1,\ngood/001,0.2,\narea/000,0.9,m.npy\n");
        let rows = read_prediction_rows(&csv).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().filter(|r| r.map_path.is_some()).count(), 1);
        let map = load_score_map(rows[2].map_path.as_ref().unwrap(), (4, 3)).unwrap();
        assert_eq!(map.get(3, 2), 5.0);
    }

    #[test]
    fn duplicate_id_is_listed() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("p.csv");
        write(&csv, "id,score\nx,1\ny,2\nx,3\n");
        let err = read_prediction_rows(&csv).unwrap_err().to_string();
        assert!(err.contains("duplicate id x"), "{err}");
    }

    #[test]
    fn wrong_map_shape_names_file_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.npy");
        Array2::<f64>::zeros((5, 5)).write_npy(File::create(&p).unwrap()).unwrap();
        let err = load_score_map(&p, (256, 256)).unwrap_err().to_string();
        assert!(err.contains("bad.npy") && err.contains("256x256"), "{err}");
    }

    #[test]
    fn join_reports_both_sides() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("p.csv");
        write(&csv, "id,score\ngood/000,0.5\nghost,0.1\n");
        let truth = vec![
            TestEntry { id: "good/000".into(), image_path: "x.png".into(), label: ImageLabel::Good, mask_path: None },
            TestEntry { id: "good/001".into(), image_path: "y.png".into(), label: ImageLabel::Good, mask_path: None },
        ];
        let j = read_predictions(&csv, &truth).unwrap();
        assert_eq!(j.samples.len(), 1);
        assert_eq!(j.unmatched_predictions, vec!["ghost"]);
        assert_eq!(j.missing_predictions, vec!["good/001"]);
    }
}
