use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;

use crate::error::{Error, Result};
use crate::io::png::{read_gray, read_mask, write_gray, write_mask};
use crate::model::{DefectGroup, GroundTruthMask, ImageLabel};

/// A test image as listed on disk; pixels and mask load on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestEntry {
    /// `<group>/<stem>`, e.g. `good/000` or `area/017`.
    pub id: String,
    pub image_path: PathBuf,
    pub label: ImageLabel,
    pub mask_path: Option<PathBuf>,
}

impl TestEntry {
    pub fn load(&self) -> Result<FolderSample> {
        let image = read_gray(&self.image_path)?;
        let mask = self.load_mask()?;
        if let Some(m) = &mask {
            if m.dimensions() != image.dimensions() {
                return Err(Error::Dimension(format!(
                    "{}: mask is {:?}, image is {:?}",
                    self.id,
                    m.dimensions(),
                    image.dimensions()
                )));
            }
        }
        Ok(FolderSample { id: self.id.clone(), image, label: self.label, mask })
    }

    pub fn load_mask(&self) -> Result<Option<GroundTruthMask>> {
        self.mask_path.as_deref().map(read_mask).transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FolderSample {
    pub id: String,
    pub image: GrayImage,
    pub label: ImageLabel,
    pub mask: Option<GroundTruthMask>,
}

/// An MVTec-style split: `train/good`, `test/good`, `test/<group>` and
/// `ground_truth/<group>` with `<stem>_mask.png` or `<stem>.png` masks.
#[derive(Clone, Debug)]
pub struct FolderSplit {
    root: PathBuf,
    train: Vec<PathBuf>,
    test: Vec<TestEntry>,
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn subdirs(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            out.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn find_mask(root: &Path, group: &str, image: &Path) -> Result<PathBuf> {
    let s = stem(image);
    let dir = root.join("ground_truth").join(group);
    let found: Vec<PathBuf> =
        [format!("{s}_mask.png"), format!("{s}.png")].iter().map(|n| dir.join(n)).filter(|p| p.is_file()).collect();
    match found.len() {
        1 => Ok(found.into_iter().next().expect("one element")),
        0 => Err(Error::Layout(format!("no ground-truth mask for {}", image.display()))),
        _ => Err(Error::Layout(format!(
            "{} has two candidate masks: {} and {}",
            image.display(),
            found[0].display(),
            found[1].display()
        ))),
    }
}

/// Scans a split directory. Entries are ordered lexicographically by path.
pub fn read_folder_split(root: &Path) -> Result<FolderSplit> {
    if !root.is_dir() {
        return Err(Error::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory")));
    }
    let test_dir = root.join("test");
    if !test_dir.is_dir() && !root.join("train").is_dir() {
        return Err(Error::Layout(format!("{} has neither train/ nor test/", root.display())));
    }
    let train = list_pngs(&root.join("train").join("good"))?;
    let mut test = Vec::new();
    if test_dir.is_dir() {
        for group in subdirs(&test_dir)? {
            let label = if group == "good" {
                ImageLabel::Good
            } else {
                let g: DefectGroup =
                    group.parse().map_err(|_| Error::Layout(format!("unknown defect group folder test/{group}")))?;
                ImageLabel::Defective(g)
            };
            for image_path in list_pngs(&test_dir.join(&group))? {
                let mask_path = match label {
                    ImageLabel::Good => None,
                    ImageLabel::Defective(_) => Some(find_mask(root, &group, &image_path)?),
                };
                test.push(TestEntry { id: format!("{group}/{}", stem(&image_path)), image_path, label, mask_path });
            }
        }
    }
    Ok(FolderSplit { root: root.to_path_buf(), train, test })
}

impl FolderSplit {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn train_paths(&self) -> &[PathBuf] {
        &self.train
    }

    pub fn test_entries(&self) -> &[TestEntry] {
        &self.test
    }

    pub fn train_images(&self) -> impl Iterator<Item = Result<(String, GrayImage)>> + '_ {
        self.train.iter().map(|p| Ok((format!("good/{}", stem(p)), read_gray(p)?)))
    }

    pub fn test_samples(&self) -> impl Iterator<Item = Result<FolderSample>> + '_ {
        self.test.iter().map(TestEntry::load)
    }

    /// Test image count per folder name (`good`, `area`, ...).
    pub fn test_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.test {
            let key = e.id.split('/').next().unwrap_or_default().to_string();
            *counts.entry(key).or_insert(0) += 1;
        }
        counts
    }
}

/// Writes train images and test samples in the folder layout. Sample ids
/// must be `<group>/<stem>` matching their label.
pub fn write_folder_split(root: &Path, train: &[(String, GrayImage)], test: &[FolderSample]) -> Result<()> {
    for (stem, img) in train {
        write_gray(&root.join("train/good").join(format!("{stem}.png")), img)?;
    }
    for s in test {
        let (group, stem) =
            s.id.split_once('/')
                .ok_or_else(|| Error::InvalidInput(format!("sample id {} is not <group>/<stem>", s.id)))?;
        let expected = match s.label {
            ImageLabel::Good => "good",
            ImageLabel::Defective(g) => g.as_str(),
        };
        if group != expected {
            return Err(Error::InvalidInput(format!("sample {} is labeled {expected}", s.id)));
        }
        write_gray(&root.join("test").join(group).join(format!("{stem}.png")), &s.image)?;
        match (&s.mask, s.label) {
            (Some(mask), ImageLabel::Defective(_)) => {
                write_mask(&root.join("ground_truth").join(group).join(format!("{stem}_mask.png")), mask)?
            }
            (None, ImageLabel::Defective(_)) => {
                return Err(Error::InvalidInput(format!("defective sample {} has no mask", s.id)))
            }
            _ => {}
        }
    }
    Ok(())
}
