use crate::error::{Error, Result};
use crate::model::BinaryMask;

/// One 8-connected component of a mask, pixels in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub pixels: Vec<(u32, u32)>,
}

impl Region {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let next = parent[i as usize];
        parent[i as usize] = parent[next as usize];
        i = next;
    }
    i
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// 8-connected components, two-pass union-find. Regions are ordered by
/// their first pixel in raster order.
pub fn connected_components(mask: &BinaryMask) -> Vec<Region> {
    let (w, h) = mask.dimensions();
    let mut labels = vec![u32::MAX; (w * h) as usize];
    let mut parent: Vec<u32> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut label = u32::MAX;
            let neighbours = [
                (x.checked_sub(1), Some(y)),
                (x.checked_sub(1), y.checked_sub(1)),
                (Some(x), y.checked_sub(1)),
                ((x + 1 < w).then_some(x + 1), y.checked_sub(1)),
            ];
            for (nx, ny) in neighbours {
                let (Some(nx), Some(ny)) = (nx, ny) else { continue };
                let l = labels[(ny * w + nx) as usize];
                if l == u32::MAX {
                    continue;
                }
                if label == u32::MAX {
                    label = l;
                } else {
                    union(&mut parent, label, l);
                }
            }
            if label == u32::MAX {
                label = parent.len() as u32;
                parent.push(label);
            }
            labels[(y * w + x) as usize] = label;
        }
    }

    let mut slot = vec![usize::MAX; parent.len()];
    let mut regions: Vec<Region> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[(y * w + x) as usize];
            if l == u32::MAX {
                continue;
            }
            let root = find(&mut parent, l) as usize;
            if slot[root] == usize::MAX {
                slot[root] = regions.len();
                regions.push(Region { pixels: Vec::new() });
            }
            regions[slot[root]].pixels.push((x, y));
        }
    }
    regions
}

/// Per-region overlap: the mean, over every connected ground-truth region in
/// the set, of the fraction of that region covered by the prediction.
pub fn pro_score(predictions: &[BinaryMask], masks: &[BinaryMask]) -> Result<f64> {
    if predictions.len() != masks.len() {
        return Err(Error::Dimension(format!("{} predictions for {} masks", predictions.len(), masks.len())));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (pred, mask)) in predictions.iter().zip(masks).enumerate() {
        if pred.dimensions() != mask.dimensions() {
            return Err(Error::Dimension(format!(
                "prediction {i} is {:?}, its mask is {:?}",
                pred.dimensions(),
                mask.dimensions()
            )));
        }
        for region in connected_components(mask) {
            let hit = region.pixels.iter().filter(|&&(x, y)| pred.get(x, y)).count();
            sum += hit as f64 / region.area() as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Undefined("PRO needs at least one ground-truth region".into()));
    }
    Ok(sum / count as f64)
}
