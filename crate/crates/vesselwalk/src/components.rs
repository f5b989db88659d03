//! Connected-component labeling and centerline extraction.

use crate::grid::{BinaryMask, Pixel};

/// Pixel adjacency used when grouping foreground pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// Per-pixel component labels; 0 is background, foreground labels are dense
/// `1..=count` in raster-scan order of first encounter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of foreground components.
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, p: Pixel) -> u32 {
        assert!(
            p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height,
            "pixel {:?} outside {}x{}",
            p,
            self.width,
            self.height
        );
        self.labels[p.y as usize * self.width + p.x as usize]
    }
}

/// Labels connected foreground components with a two-pass union-find sweep.
/// Two foreground pixels share a label iff a connectivity-path of foreground
/// pixels joins them.
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (width, height) = (mask.width(), mask.height());
    let mut provisional = vec![0u32; width * height];
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused; labels start at 1

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    // Pass 1: provisional labels, merging with already-visited neighbors.
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            let p = Pixel::new(x, y);
            if !mask.get(p) {
                continue;
            }
            let idx = y as usize * width + x as usize;
            let mut neighbor_root = 0u32;
            for &(dx, dy) in connectivity.offsets() {
                // only neighbors earlier in raster order carry labels yet
                let q = Pixel::new(x + dx, y + dy);
                if (dy < 0 || (dy == 0 && dx < 0)) && mask.contains(q) && mask.get(q) {
                    let lbl = provisional[q.y as usize * width + q.x as usize];
                    if lbl != 0 {
                        let root = find(&mut parent, lbl);
                        if neighbor_root == 0 {
                            neighbor_root = root;
                        } else if root != neighbor_root {
                            let (a, b) = (neighbor_root.min(root), neighbor_root.max(root));
                            parent[b as usize] = a;
                            neighbor_root = a;
                        }
                    }
                }
            }
            if neighbor_root == 0 {
                let fresh = parent.len() as u32;
                parent.push(fresh);
                provisional[idx] = fresh;
            } else {
                provisional[idx] = neighbor_root;
            }
        }
    }

    // Pass 2: compress to dense labels in raster-scan order of first
    // encounter of each root.
    let mut dense: Vec<u32> = vec![0; parent.len()];
    let mut labels = vec![0u32; width * height];
    let mut count = 0u32;
    for idx in 0..width * height {
        let lbl = provisional[idx];
        if lbl == 0 {
            continue;
        }
        let root = find(&mut parent, lbl);
        if dense[root as usize] == 0 {
            count += 1;
            dense[root as usize] = count;
        }
        labels[idx] = dense[root as usize];
    }

    LabelMap { width, height, labels, count }
}

/// Per-label pixel lists plus the identity of the largest component.
#[derive(Debug, Clone)]
pub struct ComponentIndex {
    /// `pixels[k - 1]` lists the pixels of label `k` in raster order.
    pixels: Vec<Vec<Pixel>>,
    largest: Option<u32>,
}

impl ComponentIndex {
    pub fn label_count(&self) -> u32 {
        self.pixels.len() as u32
    }

    pub fn pixels_of(&self, label: u32) -> &[Pixel] {
        &self.pixels[label as usize - 1]
    }

    pub fn size_of(&self, label: u32) -> usize {
        self.pixels_of(label).len()
    }

    /// Label of the largest component; ties broken by the smallest label id.
    /// `None` when the mask is empty.
    pub fn largest(&self) -> Option<u32> {
        self.largest
    }

    /// Labels sorted by decreasing pixel count, ties by ascending label id.
    pub fn labels_by_size_desc(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = (1..=self.label_count()).collect();
        labels.sort_by_key(|&l| (std::cmp::Reverse(self.size_of(l)), l));
        labels
    }
}

/// Builds the pixel lists for every label of `labels`.
pub fn component_index(labels: &LabelMap) -> ComponentIndex {
    let mut pixels: Vec<Vec<Pixel>> = vec![Vec::new(); labels.count() as usize];
    for y in 0..labels.height() as i32 {
        for x in 0..labels.width() as i32 {
            let lbl = labels.get(Pixel::new(x, y));
            if lbl != 0 {
                pixels[lbl as usize - 1].push(Pixel::new(x, y));
            }
        }
    }
    let largest = (1..=labels.count())
        .max_by_key(|&l| (pixels[l as usize - 1].len(), std::cmp::Reverse(l)));
    ComponentIndex { pixels, largest }
}

/// Zhang-Suen iterative thinning. The output is a subset of the input with
/// per-component 8-connectivity preserved. Compact blobs that the thinning
/// rules would erase entirely are kept as a single representative pixel so
/// the component count never drops.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let (width, height) = (mask.width(), mask.height());
    let labels = label_components(mask, Connectivity::Eight);
    let mut current: Vec<bool> = mask.values().to_vec();
    let at = |v: &[bool], x: i32, y: i32| -> bool {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height
            && v[y as usize * width + x as usize]
    };

    loop {
        let mut changed = false;
        for subiter in 0..2 {
            let mut to_clear = Vec::new();
            for y in 0..height as i32 {
                for x in 0..width as i32 {
                    if !at(&current, x, y) {
                        continue;
                    }
                    // neighbors p2..p9 clockwise from north
                    let p = [
                        at(&current, x, y - 1),
                        at(&current, x + 1, y - 1),
                        at(&current, x + 1, y),
                        at(&current, x + 1, y + 1),
                        at(&current, x, y + 1),
                        at(&current, x - 1, y + 1),
                        at(&current, x - 1, y),
                        at(&current, x - 1, y - 1),
                    ];
                    let b: u32 = p.iter().map(|&v| u32::from(v)).sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (c1, c2) = if subiter == 0 {
                        // p2*p4*p6 == 0 and p4*p6*p8 == 0
                        (p[0] && p[2] && p[4], p[2] && p[4] && p[6])
                    } else {
                        // p2*p4*p8 == 0 and p2*p6*p8 == 0
                        (p[0] && p[2] && p[6], p[0] && p[4] && p[6])
                    };
                    if !c1 && !c2 {
                        to_clear.push(y as usize * width + x as usize);
                    }
                }
            }
            if !to_clear.is_empty() {
                changed = true;
                for idx in to_clear {
                    current[idx] = false;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Restore one pixel for any component the thinning erased outright
    // (small solid blobs have no interior/boundary distinction to stop at).
    let mut survivors = vec![false; labels.count() as usize + 1];
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            if current[y as usize * width + x as usize] {
                survivors[labels.get(Pixel::new(x, y)) as usize] = true;
            }
        }
    }
    if survivors.iter().skip(1).any(|&s| !s) {
        'restore: for y in 0..height as i32 {
            for x in 0..width as i32 {
                let lbl = labels.get(Pixel::new(x, y)) as usize;
                if lbl != 0 && !survivors[lbl] {
                    current[y as usize * width + x as usize] = true;
                    survivors[lbl] = true;
                    if survivors.iter().skip(1).all(|&s| s) {
                        break 'restore;
                    }
                }
            }
        }
    }

    BinaryMask::new(width, height, current).expect("dimensions unchanged")
}
