//! Run-length connected-component labeling.
//!
//! Foreground pixels are first collapsed into horizontal runs. Runs on
//! adjacent rows are merged with a two-pointer sweep into a union-find over
//! run indices, so the whole pass is linear in pixels plus runs. Labels are
//! then assigned densely in row-major first-encounter order.

use crate::bbox::BBox;
use crate::mask_ops::ForegroundMask;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    /// Extra columns of reach when comparing runs on adjacent rows.
    fn slack(self) -> usize {
        match self {
            Connectivity::Four => 0,
            Connectivity::Eight => 1,
        }
    }
}

/// Maximal horizontal stretch of foreground pixels, columns inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Run {
    pub row: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.col_end - self.col_start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// 1-based, dense.
    pub label: u32,
    /// Row-major order.
    pub runs: Vec<Run>,
    pub area: usize,
    pub bbox: BBox,
}

impl Component {
    /// Member pixels as `(x, y)`, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.col_start..=r.col_end).map(move |x| (x, r.row)))
    }

    fn from_runs(label: u32, runs: Vec<Run>) -> Self {
        let mut x0 = usize::MAX;
        let mut x1 = 0;
        let mut area = 0;
        for r in &runs {
            x0 = x0.min(r.col_start);
            x1 = x1.max(r.col_end);
            area += r.len();
        }
        let y0 = runs.first().map_or(0, |r| r.row);
        let y1 = runs.last().map_or(0, |r| r.row);
        Self {
            label,
            area,
            bbox: BBox::from_corners(x0, y0, x1, y1),
            runs,
        }
    }
}

/// Maximal runs of foreground, in row-major order.
pub fn extract_runs(mask: &ForegroundMask) -> Vec<Run> {
    let mut runs = Vec::new();
    for y in 0..mask.height() {
        let row = mask.row(y);
        let mut x = 0;
        while x < row.len() {
            if !row[x] {
                x += 1;
                continue;
            }
            let start = x;
            while x < row.len() && row[x] {
                x += 1;
            }
            runs.push(Run {
                row: y,
                col_start: start,
                col_end: x - 1,
            });
        }
    }
    runs
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len as u32).collect(),
            rank: vec![0; len],
        }
    }

    fn find(&mut self, i: u32) -> u32 {
        let mut root = i;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut i = i;
        while self.parent[i as usize] != root {
            let next = self.parent[i as usize];
            self.parent[i as usize] = root;
            i = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// Labels connected foreground regions.
pub fn label_components(mask: &ForegroundMask, connectivity: Connectivity) -> Vec<Component> {
    let runs = extract_runs(mask);
    if runs.is_empty() {
        return Vec::new();
    }
    let slack = connectivity.slack();
    let mut uf = UnionFind::new(runs.len());

    // [start, end) of the previous row's runs, if that row is directly above.
    let mut prev: Option<(usize, usize, usize)> = None;
    let mut i = 0;
    while i < runs.len() {
        let row = runs[i].row;
        let start = i;
        while i < runs.len() && runs[i].row == row {
            i += 1;
        }
        if let Some((prev_row, p_start, p_end)) = prev {
            if prev_row + 1 == row {
                let mut p = p_start;
                for c in start..i {
                    let cur = runs[c];
                    while p < p_end && runs[p].col_end + slack < cur.col_start {
                        p += 1;
                    }
                    let mut q = p;
                    while q < p_end && runs[q].col_start <= cur.col_end + slack {
                        uf.union(c as u32, q as u32);
                        q += 1;
                    }
                }
            }
        }
        prev = Some((row, start, i));
    }

    let mut label_of_root = vec![0u32; runs.len()];
    let mut grouped: Vec<Vec<Run>> = Vec::new();
    for (idx, run) in runs.iter().enumerate() {
        let root = uf.find(idx as u32) as usize;
        if label_of_root[root] == 0 {
            grouped.push(Vec::new());
            label_of_root[root] = grouped.len() as u32;
        }
        grouped[label_of_root[root] as usize - 1].push(*run);
    }
    grouped
        .into_iter()
        .enumerate()
        .map(|(k, runs)| Component::from_runs(k as u32 + 1, runs))
        .collect()
}

/// Keeps components with `area >= min_area`, relabeled densely in order.
pub fn filter_small(components: Vec<Component>, min_area: usize) -> Vec<Component> {
    components
        .into_iter()
        .filter(|c| c.area >= min_area)
        .enumerate()
        .map(|(k, mut c)| {
            c.label = k as u32 + 1;
            c
        })
        .collect()
}

/// Per-pixel label image (0 = background).
pub fn label_map(components: &[Component], width: usize, height: usize) -> Vec<u32> {
    let mut labels = vec![0u32; width * height];
    for c in components {
        for r in &c.runs {
            labels[r.row * width + r.col_start..=r.row * width + r.col_end].fill(c.label);
        }
    }
    labels
}

/// Mask holding exactly the pixels of `components`.
pub fn components_mask(components: &[Component], width: usize, height: usize) -> ForegroundMask {
    let mut mask = ForegroundMask::new(width, height);
    let bits = mask.bits_mut();
    for c in components {
        for r in &c.runs {
            bits[r.row * width + r.col_start..=r.row * width + r.col_end].fill(true);
        }
    }
    mask
}
