//! Uniform bucket grid over axis-aligned boxes, for candidate queries.

#[derive(Debug, Clone)]
pub struct BoxGrid {
    dim: usize,
    lo: Vec<f64>,
    cell: Vec<f64>,
    counts: Vec<usize>,
    buckets: Vec<Vec<u32>>,
}

pub fn bounding_box(points: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let d = points[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

impl BoxGrid {
    /// Builds a grid holding `boxes[i]` under id `i`.
    pub fn new(dim: usize, boxes: &[(Vec<f64>, Vec<f64>)]) -> Self {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for (a, b) in boxes {
            for i in 0..dim {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        }
        if boxes.is_empty() {
            lo = vec![0.0; dim];
            hi = vec![1.0; dim];
        }
        let per_axis = ((boxes.len().max(1) as f64).powf(1.0 / dim.max(1) as f64).ceil() as usize)
            .clamp(1, 4096);
        let counts = vec![per_axis; dim];
        let cell: Vec<f64> = (0..dim)
            .map(|i| ((hi[i] - lo[i]) / per_axis as f64).max(1e-300))
            .collect();
        let total = counts.iter().product::<usize>().max(1);
        let mut grid = BoxGrid {
            dim,
            lo,
            cell,
            counts,
            buckets: vec![Vec::new(); total],
        };
        for (id, (a, b)) in boxes.iter().enumerate() {
            let cells = grid.cells_overlapping(a, b);
            for c in cells {
                grid.buckets[c].push(id as u32);
            }
        }
        grid
    }

    fn axis_range(&self, i: usize, a: f64, b: f64) -> (usize, usize) {
        let n = self.counts[i] as i64;
        let s = (((a - self.lo[i]) / self.cell[i]).floor() as i64).clamp(0, n - 1);
        let e = (((b - self.lo[i]) / self.cell[i]).floor() as i64).clamp(0, n - 1);
        (s as usize, e as usize)
    }

    fn cells_overlapping(&self, a: &[f64], b: &[f64]) -> Vec<usize> {
        let ranges: Vec<(usize, usize)> = (0..self.dim).map(|i| self.axis_range(i, a[i], b[i])).collect();
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let mut flat = 0;
            for i in 0..self.dim {
                flat = flat * self.counts[i] + idx[i];
            }
            out.push(flat);
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if idx[axis] < ranges[axis].1 {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = ranges[axis].0;
            }
        }
    }

    /// Sorted, deduplicated ids whose buckets overlap the query box (grown by `pad`).
    pub fn query(&self, a: &[f64], b: &[f64], pad: f64) -> Vec<usize> {
        let a: Vec<f64> = a.iter().map(|x| x - pad).collect();
        let b: Vec<f64> = b.iter().map(|x| x + pad).collect();
        let mut out: Vec<usize> = Vec::new();
        for c in self.cells_overlapping(&a, &b) {
            out.extend(self.buckets[c].iter().map(|&i| i as usize));
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
