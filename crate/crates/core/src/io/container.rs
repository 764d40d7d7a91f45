use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdf5::types::VarLenUnicode;
use hdf5::{Dataset, File, SimpleExtents};
use image::GrayImage;
use ndarray::{s, Array2, Array3};

use crate::error::{Error, Result};
use crate::model::{BinaryMask, ModalityId};
use crate::stream::{CompositionSummary, ItemSource, StreamItem};
use crate::synth::MODEL_VERSION;

pub const IMAGES_DATASET: &str = "syn_stream";
pub const MASKS_DATASET: &str = "ground_truth";
const SIDE: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContainerOptions {
    /// Per-chunk deflate level; `None` stores raw chunks.
    pub deflate: Option<u8>,
}

/// Appends stream items one chunk at a time.
pub struct ContainerWriter {
    path: PathBuf,
    file: File,
    images: Dataset,
    masks: Dataset,
    len: usize,
    last_index: Option<u64>,
    real_rows: Vec<u64>,
    summary: CompositionSummary,
}

fn dataset(file: &File, name: &str, options: ContainerOptions) -> hdf5::Result<Dataset> {
    let builder = file.new_dataset::<u8>().chunk((1, SIDE, SIDE));
    let builder = match options.deflate {
        Some(level) => builder.deflate(level),
        None => builder,
    };
    builder.shape(SimpleExtents::resizable([0, SIDE, SIDE])).create(name)
}

fn str_attr(file: &File, name: &str, value: &str) -> hdf5::Result<()> {
    let v = VarLenUnicode::from_str(value).map_err(|e| hdf5::Error::from(e.to_string()))?;
    file.new_attr::<VarLenUnicode>().shape(()).create(name)?.write_scalar(&v)
}

fn u64_attr(file: &File, name: &str, values: &[u64]) -> hdf5::Result<()> {
    file.new_attr::<u64>().shape(values.len()).create(name)?.write_raw(values)
}

impl ContainerWriter {
    pub fn create(path: &Path, modality: ModalityId, seed: u64, options: ContainerOptions) -> Result<Self> {
        let wrap = |e| Error::container(path, e);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::with_options().with_fcpl(|p| p.obj_track_times(false)).create(path).map_err(wrap)?;
        let images = dataset(&file, IMAGES_DATASET, options).map_err(wrap)?;
        let masks = dataset(&file, MASKS_DATASET, options).map_err(wrap)?;
        str_attr(&file, "modality", modality.key()).map_err(wrap)?;
        file.new_attr::<u64>().shape(()).create("seed").and_then(|a| a.write_scalar(&seed)).map_err(wrap)?;
        u64_attr(&file, "chunk_shape", &[1, SIDE as u64, SIDE as u64]).map_err(wrap)?;
        let compression = match options.deflate {
            Some(level) => format!("deflate-{level}"),
            None => "none".to_string(),
        };
        str_attr(&file, "compression", &compression).map_err(wrap)?;
        str_attr(&file, "synthesis_model", MODEL_VERSION).map_err(wrap)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            images,
            masks,
            len: 0,
            last_index: None,
            real_rows: Vec::new(),
            summary: CompositionSummary::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends one item. Items must arrive in increasing stream index order.
    pub fn push(&mut self, item: &StreamItem) -> Result<()> {
        if self.last_index.is_some_and(|last| item.index <= last) {
            return Err(Error::InvalidInput(format!(
                "item {} written after item {}",
                item.index,
                self.last_index.unwrap_or_default()
            )));
        }
        let (w, h) = (item.patch.width(), item.patch.height());
        if (w as usize, h as usize) != (SIDE, SIDE) {
            return Err(Error::Dimension(format!("item {} is {w}x{h}, the container holds {SIDE}x{SIDE}", item.index)));
        }
        let mask = match &item.mask {
            Some(m) if m.dimensions() != (w, h) => {
                return Err(Error::Dimension(format!("item {} mask is {:?}", item.index, m.dimensions())))
            }
            Some(m) => m.to_gray().into_raw(),
            None => vec![0u8; SIDE * SIDE],
        };
        let pixels = Array2::from_shape_vec((SIDE, SIDE), item.patch.pixels().as_raw().clone())
            .expect("patch buffer matches its dimensions");
        let mask = Array2::from_shape_vec((SIDE, SIDE), mask).expect("mask buffer matches its dimensions");

        let n = self.len;
        let wrap = |e| Error::container(&self.path, e);
        self.images.resize((n + 1, SIDE, SIDE)).map_err(wrap)?;
        self.masks.resize((n + 1, SIDE, SIDE)).map_err(wrap)?;
        self.images.write_slice(&pixels, s![n, .., ..]).map_err(wrap)?;
        self.masks.write_slice(&mask, s![n, .., ..]).map_err(wrap)?;

        if item.source == ItemSource::Real {
            self.real_rows.push(n as u64);
        }
        self.summary.record(item.source, item.label);
        self.len += 1;
        self.last_index = Some(item.index);
        Ok(())
    }

    /// Writes the summary attributes and closes the file. `warnings` are
    /// carried into the stored composition summary.
    pub fn finish(mut self, warnings: &[String]) -> Result<CompositionSummary> {
        let wrap = |e| Error::container(&self.path, e);
        for key in ["fault_free", "synthetic", "real"] {
            self.summary.by_source.entry(key.into()).or_insert(0);
        }
        for key in ["points", "area", "synthetic"] {
            self.summary.by_group.entry(key.into()).or_insert(0);
        }
        self.summary.warnings = warnings.to_vec();
        let json = serde_json::to_string(&self.summary)?;
        str_attr(&self.file, "composition", &json).map_err(wrap)?;
        u64_attr(&self.file, "real_indices", &self.real_rows).map_err(wrap)?;
        self.file.flush().map_err(wrap)?;
        Ok(self.summary)
    }
}

/// Writes a whole epoch in one call.
pub fn write_supervised_container<'a>(
    items: impl IntoIterator<Item = &'a StreamItem>,
    path: &Path,
    modality: ModalityId,
    seed: u64,
    warnings: &[String],
    options: ContainerOptions,
) -> Result<CompositionSummary> {
    let mut writer = ContainerWriter::create(path, modality, seed, options)?;
    for item in items {
        writer.push(item)?;
    }
    writer.finish(warnings)
}

/// Random access to a container written by [`ContainerWriter`].
pub struct ContainerReader {
    path: PathBuf,
    images: Dataset,
    masks: Dataset,
    len: usize,
    pub modality: ModalityId,
    pub seed: u64,
    pub composition: CompositionSummary,
    pub real_indices: Vec<u64>,
}

impl ContainerReader {
    pub fn open(path: &Path) -> Result<Self> {
        let wrap = |e| Error::container(path, e);
        let file = File::open(path).map_err(wrap)?;
        let images = file.dataset(IMAGES_DATASET).map_err(wrap)?;
        let masks = file.dataset(MASKS_DATASET).map_err(wrap)?;
        let shape = images.shape();
        if shape.len() != 3 || shape[1..] != [SIDE, SIDE] || masks.shape() != shape {
            return Err(Error::Dimension(format!(
                "{}: datasets are {:?} and {:?}",
                path.display(),
                shape,
                masks.shape()
            )));
        }
        let text = |name: &str| -> Result<String> {
            let v: VarLenUnicode = file.attr(name).and_then(|a| a.read_scalar()).map_err(wrap)?;
            Ok(v.as_str().to_string())
        };
        let modality = text("modality")?.parse()?;
        let composition = serde_json::from_str(&text("composition")?)?;
        let seed = file.attr("seed").and_then(|a| a.read_scalar::<u64>()).map_err(wrap)?;
        let real_indices = file.attr("real_indices").and_then(|a| a.read_raw::<u64>()).map_err(wrap)?;
        Ok(Self { path: path.to_path_buf(), len: shape[0], images, masks, modality, seed, composition, real_indices })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn item(&self, i: usize) -> Result<(GrayImage, BinaryMask)> {
        if i >= self.len {
            return Err(Error::InvalidInput(format!("item {i} of a {}-item container", self.len)));
        }
        let wrap = |e| Error::container(&self.path, e);
        let px: Array2<u8> = self.images.read_slice_2d(s![i, .., ..]).map_err(wrap)?;
        let mk: Array2<u8> = self.masks.read_slice_2d(s![i, .., ..]).map_err(wrap)?;
        Ok((to_gray(px), BinaryMask::from_gray(&to_gray(mk))))
    }

    pub fn read_all(&self) -> Result<SupervisedContainer> {
        let wrap = |e| Error::container(&self.path, e);
        let mut images = Vec::with_capacity(self.len);
        let mut masks = Vec::with_capacity(self.len);
        if self.len > 0 {
            let px: Array3<u8> = self.images.read().map_err(wrap)?;
            let mk: Array3<u8> = self.masks.read().map_err(wrap)?;
            for i in 0..self.len {
                images.push(to_gray(px.slice(s![i, .., ..]).to_owned()));
                masks.push(BinaryMask::from_gray(&to_gray(mk.slice(s![i, .., ..]).to_owned())));
            }
        }
        Ok(SupervisedContainer {
            modality: self.modality,
            seed: self.seed,
            composition: self.composition.clone(),
            real_indices: self.real_indices.clone(),
            images,
            masks,
        })
    }
}

fn to_gray(a: Array2<u8>) -> GrayImage {
    let (h, w) = a.dim();
    let raw = if a.is_standard_layout() { a.into_raw_vec() } else { a.iter().copied().collect() };
    GrayImage::from_raw(w as u32, h as u32, raw).expect("array shape matches buffer")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedContainer {
    pub modality: ModalityId,
    pub seed: u64,
    pub composition: CompositionSummary,
    pub real_indices: Vec<u64>,
    pub images: Vec<GrayImage>,
    pub masks: Vec<BinaryMask>,
}

impl SupervisedContainer {
    /// Image-level labels: mask nonzero, or flagged as a real defect.
    pub fn labels(&self) -> Vec<bool> {
        let mut labels: Vec<bool> = self.masks.iter().map(|m| !m.is_empty()).collect();
        for &i in &self.real_indices {
            if let Some(l) = labels.get_mut(i as usize) {
                *l = true;
            }
        }
        labels
    }
}

pub fn read_supervised_container(path: &Path) -> Result<SupervisedContainer> {
    ContainerReader::open(path)?.read_all()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DefectGroup, ImageLabel, Origin, Patch};

    fn item(index: u64, source: ItemSource) -> StreamItem {
        let px = GrayImage::from_fn(256, 256, |x, y| image::Luma([((x * 7 + y * 3 + index as u32) % 256) as u8]));
        let patch = Patch::new(px, ModalityId::Asm, Origin::new("t", 0, 0)).unwrap();
        let (mask, label) = match source {
            ItemSource::FaultFree => (Some(BinaryMask::empty(256, 256)), ImageLabel::Good),
            ItemSource::Synthetic => (
                Some(BinaryMask::from_fn(256, 256, |x, y| x / 8 == index as u32 && y < 30)),
                ImageLabel::Defective(DefectGroup::Synthetic),
            ),
            ItemSource::Real => (None, ImageLabel::Defective(DefectGroup::Points)),
        };
        StreamItem { index, patch, mask, label, source }
    }

    #[test]
    fn ten_items_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.hdf5");
        let sources = [ItemSource::FaultFree, ItemSource::Synthetic, ItemSource::Real];
        let items: Vec<StreamItem> = (0..10).map(|i| item(i, sources[i as usize % 3])).collect();
        let summary =
            write_supervised_container(&items, &path, ModalityId::Asm, 7, &[], ContainerOptions::default()).unwrap();
        let back = read_supervised_container(&path).unwrap();
        assert_eq!(back.composition, summary);
        assert_eq!(back.seed, 7);
        assert_eq!(back.modality, ModalityId::Asm);
        assert_eq!(back.real_indices, vec![2, 5, 8]);
        for (i, it) in items.iter().enumerate() {
            assert_eq!(&back.images[i], it.patch.pixels());
            let expected = it.mask.clone().unwrap_or_else(|| BinaryMask::empty(256, 256));
            assert_eq!(back.masks[i], expected);
            assert_eq!(back.labels()[i], it.label.is_defective());
        }
    }

    #[test]
    fn empty_container() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.hdf5");
        write_supervised_container(&[], &path, ModalityId::Lsm1, 0, &[], ContainerOptions::default()).unwrap();
        let r = ContainerReader::open(&path).unwrap();
        assert_eq!(r.len(), 0);
        assert!(r.real_indices.is_empty());
        assert!(r.item(0).is_err());
    }

    #[test]
    fn deflate_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.hdf5");
        let items = vec![item(0, ItemSource::Synthetic), item(3, ItemSource::FaultFree)];
        write_supervised_container(&items, &path, ModalityId::Lsm2, 1, &[], ContainerOptions { deflate: Some(4) })
            .unwrap();
        let r = ContainerReader::open(&path).unwrap();
        assert_eq!(&r.item(1).unwrap().0, items[1].patch.pixels());
    }

    #[test]
    fn out_of_order_and_wrong_size_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut w =
            ContainerWriter::create(&dir.path().join("o.hdf5"), ModalityId::Asm, 0, ContainerOptions::default())
                .unwrap();
        w.push(&item(5, ItemSource::FaultFree)).unwrap();
        assert!(w.push(&item(5, ItemSource::FaultFree)).is_err());
        let small = Patch::new(GrayImage::new(512, 512), ModalityId::Asm, Origin::new("t", 0, 0)).unwrap();
        let bad =
            StreamItem { index: 9, patch: small, mask: None, label: ImageLabel::Good, source: ItemSource::FaultFree };
        assert!(matches!(w.push(&bad), Err(Error::Dimension(_))));
    }
}
