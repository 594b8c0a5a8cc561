use crate::error::{Error, Result};

/// Rectangular grid of cells with 4-connected neighbourhoods and no wraparound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridTopology {
    width: usize,
    height: usize,
    neighbors: Vec<Vec<usize>>,
}

impl GridTopology {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParams(format!(
                "grid must be non-empty, got {width}x{height}"
            )));
        }
        let mut neighbors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let mut n = Vec::with_capacity(4);
                if y > 0 {
                    n.push((y - 1) * width + x);
                }
                if x > 0 {
                    n.push(y * width + x - 1);
                }
                if x + 1 < width {
                    n.push(y * width + x + 1);
                }
                if y + 1 < height {
                    n.push((y + 1) * width + x);
                }
                neighbors.push(n);
            }
        }
        Ok(GridTopology {
            width,
            height,
            neighbors,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, cell: usize) -> &[usize] {
        &self.neighbors[cell]
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn center(&self) -> usize {
        self.index(self.width / 2, self.height / 2)
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.width.saturating_sub(1) * self.height + self.height.saturating_sub(1) * self.width
    }
}
