use std::path::{Path, PathBuf};

use lesionkit_core::augment::ProviderErrorKind;
use lesionkit_core::imaging::{convert_colorspace, resize};
use lesionkit_core::segment::{segment_image, SegmentParams};
use lesionkit_core::{
    ColorSpace, DatasetIndex, ImageProvider, Provenance, ProviderError, RasterImage, ResizeFilter,
    Sample,
};

use crate::decode::{decode_rgb, load_mask};

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentConfig {
    pub params: SegmentParams,
    pub mask_dir: PathBuf,
}

impl SegmentConfig {
    /// `<mask_dir>/<parent of image>/<image stem>_mask.png`.
    pub fn mask_path(&self, image: &str) -> PathBuf {
        let rel = Path::new(image);
        let stem = rel
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parent = rel.parent().unwrap_or(Path::new(""));
        self.mask_dir.join(parent).join(format!("{stem}_mask.png"))
    }
}

/// Reads a dataset from disk. `load` yields the decoded (and optionally
/// segmented) image at native resolution; `finish` resizes it to a square
/// of `img_size` and converts the colour space.
#[derive(Clone, Debug)]
pub struct DiskImageProvider {
    root: PathBuf,
    index: DatasetIndex,
    img_size: usize,
    filter: ResizeFilter,
    space: ColorSpace,
    segment: Option<SegmentConfig>,
}

impl DiskImageProvider {
    pub fn new(
        root: &Path,
        index: DatasetIndex,
        img_size: usize,
        filter: ResizeFilter,
        space: ColorSpace,
    ) -> Self {
        Self {
            root: root.to_path_buf(),
            index,
            img_size,
            filter,
            space,
            segment: None,
        }
    }

    pub fn with_segmentation(mut self, cfg: SegmentConfig) -> Self {
        self.segment = Some(cfg);
        self
    }

    pub fn index(&self) -> &DatasetIndex {
        &self.index
    }

    fn provenance(&self, i: usize) -> Provenance {
        Provenance {
            base_index: i,
            source: self.index.records[i].path.clone(),
            transforms: Vec::new(),
        }
    }
}

impl ImageProvider for DiskImageProvider {
    fn len(&self) -> usize {
        self.index.len()
    }

    fn load(&self, index: usize) -> Result<Sample, ProviderError> {
        let record = self
            .index
            .records
            .get(index)
            .ok_or_else(|| ProviderError::out_of_range(index, self.len()))?;
        let provenance = self.provenance(index);
        let fail =
            |msg: String| ProviderError::new(provenance.clone(), ProviderErrorKind::Load(msg));
        let mut image =
            decode_rgb(&self.root.join(&record.path)).map_err(|e| fail(e.to_string()))?;
        if let Some(seg) = &self.segment {
            let mask = load_mask(&seg.mask_path(&record.path)).map_err(|e| fail(e.to_string()))?;
            let (masked, anomalies) =
                segment_image(&image, &mask, &seg.params).map_err(|e| fail(e.to_string()))?;
            if !anomalies.is_empty() {
                log::warn!("{}: mask anomalies {:?}", record.path, anomalies);
            }
            image = masked;
        }
        Ok(Sample {
            image,
            label: record.label,
            provenance,
        })
    }

    fn finish(
        &self,
        image: RasterImage,
        provenance: &Provenance,
    ) -> Result<RasterImage, ProviderError> {
        let sized = resize(&image, self.img_size, self.img_size, self.filter);
        convert_colorspace(&sized, self.space)
            .map_err(|e| ProviderError::new(provenance.clone(), e))
    }
}
