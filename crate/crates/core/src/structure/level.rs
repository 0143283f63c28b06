use super::{FractalSpec, Template, UnionFind, VertexRef, Word};
use crate::error::{Error, Result};

/// Upper bound on `k^n * q`, the number of stored cell entries of a level.
pub const MAX_CELL_ENTRIES: u128 = 1 << 26;

#[derive(Debug, Clone, Copy)]
struct Birth {
    level: u8,
    label: u16,
    /// index of the cell at the birth level holding the canonical address
    cell: u32,
}

/// The vertex set `V_n` with the vertex tuple of every level-`n` cell.
///
/// Ids are assigned level by level: the vertices of `V_m` are exactly the
/// ids `0..level_size(m)`, so `V_{m}` embeds into `V_n` as a prefix.
#[derive(Debug, Clone)]
pub struct LevelGraph {
    level: usize,
    k: usize,
    q: usize,
    fixed_letters: Vec<usize>,
    template: Template,
    cells: Vec<u32>,
    level_sizes: Vec<usize>,
    birth: Vec<Birth>,
}

impl LevelGraph {
    pub fn build(spec: &FractalSpec, n: usize) -> Result<Self> {
        let template = spec.validate()?;
        let (k, q) = (spec.letters, spec.boundary);
        let attempted = (k as u128)
            .checked_pow(n as u32)
            .and_then(|c| c.checked_mul(q as u128))
            .unwrap_or(u128::MAX);
        if attempted > MAX_CELL_ENTRIES || n > u8::MAX as usize {
            return Err(Error::Resource {
                level: n,
                attempted,
                limit: MAX_CELL_ENTRIES,
            });
        }
        let interior = template.interior_count();
        let mut cells: Vec<u32> = (0..q as u32).collect();
        let mut level_sizes = vec![q];
        let mut birth: Vec<Birth> = (0..q)
            .map(|b| Birth {
                level: 0,
                label: b as u16,
                cell: 0,
            })
            .collect();
        let mut ids = vec![0u32; template.class_count];
        for m in 1..=n {
            let parents = cells.len() / q;
            let mut next = vec![0u32; parents * k * q];
            let mut next_id = *level_sizes.last().unwrap();
            for u in 0..parents {
                let parent = &cells[u * q..(u + 1) * q];
                ids[..q].copy_from_slice(parent);
                for (c, slot) in ids[q..].iter_mut().enumerate() {
                    *slot = (next_id + c) as u32;
                    let (i, b) = template.min_address[q + c];
                    birth.push(Birth {
                        level: m as u8,
                        label: b as u16,
                        cell: (u * k + i) as u32,
                    });
                }
                next_id += interior;
                for i in 0..k {
                    let child = u * k + i;
                    for (b, &class) in template.cell(i).iter().enumerate() {
                        next[child * q + b] = ids[class];
                    }
                }
            }
            cells = next;
            level_sizes.push(next_id);
        }
        Ok(LevelGraph {
            level: n,
            k,
            q,
            fixed_letters: spec.fixed_letters.clone(),
            template,
            cells,
            level_sizes,
            birth,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn letters(&self) -> usize {
        self.k
    }

    pub fn boundary(&self) -> usize {
        self.q
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    pub fn vertex_count(&self) -> usize {
        self.birth.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / self.q
    }

    /// `|V_m|` for `m <= level`.
    pub fn level_size(&self, m: usize) -> usize {
        self.level_sizes[m]
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    /// Vertex ids of the level-`n` cell with word index `idx`.
    pub fn cell(&self, idx: usize) -> &[u32] {
        &self.cells[idx * self.q..(idx + 1) * self.q]
    }

    /// Vertex ids of the boundary of the level-`m` cell with word index `u`.
    pub fn cell_at(&self, m: usize, u: usize) -> Vec<u32> {
        (0..self.q)
            .map(|b| {
                let mut idx = u;
                for _ in m..self.level {
                    idx = idx * self.k + self.fixed_letters[b];
                }
                self.cells[idx * self.q + b]
            })
            .collect()
    }

    /// Id of the vertex named by `r` (any level `<= n`).
    pub fn id_of(&self, r: &VertexRef) -> Result<u32> {
        let m = r.level();
        if m > self.level {
            return Err(Error::InvalidArgument(format!(
                "address {} is at level {m}, graph is at level {}",
                r.to_text(self.k),
                self.level
            )));
        }
        if r.label >= self.q || r.word.letters().any(|l| l >= self.k) {
            return Err(Error::InvalidArgument(format!(
                "address {} out of range",
                r.to_text(self.k)
            )));
        }
        let mut idx = r.word.index(self.k);
        for _ in m..self.level {
            idx = idx * self.k + self.fixed_letters[r.label];
        }
        Ok(self.cells[idx * self.q + r.label])
    }

    /// The level at which vertex `id` first appears.
    pub fn birth_level(&self, id: u32) -> usize {
        self.birth[id as usize].level as usize
    }

    /// Lexicographically smallest address of `id` at its birth level.
    pub fn canonical_ref(&self, id: u32) -> VertexRef {
        let b = self.birth[id as usize];
        VertexRef::new(
            Word::from_index(b.cell as usize, b.level as usize, self.k),
            b.label as usize,
        )
    }

    /// Word index at the birth level and label of the canonical address.
    pub fn birth_address(&self, id: u32) -> (usize, usize, usize) {
        let b = self.birth[id as usize];
        (b.level as usize, b.cell as usize, b.label as usize)
    }

    /// Whether the union of the cell cliques is connected.
    pub fn is_connected(&self) -> bool {
        self.is_connected_without(None)
    }

    /// Connectivity after deleting one vertex (and its incident clique edges).
    pub fn is_connected_without(&self, removed: Option<u32>) -> bool {
        let n = self.vertex_count();
        let mut uf = UnionFind::new(n);
        for cell in self.cells.chunks(self.q) {
            let mut first = None;
            for &v in cell {
                if Some(v) == removed {
                    continue;
                }
                match first {
                    None => first = Some(v),
                    Some(f) => uf.union(f as usize, v as usize),
                }
            }
        }
        let mut roots = (0..n as u32)
            .filter(|&v| Some(v) != removed)
            .map(|v| uf.find(v as usize));
        match roots.next() {
            None => true,
            Some(r) => roots.all(|x| x == r),
        }
    }
}
