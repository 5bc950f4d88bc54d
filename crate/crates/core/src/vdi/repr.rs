//! Full (fixed `w x h x n_sup` grid) and dense (counts + prefix offsets +
//! packed payload) VDI representations.

use super::segment::Supersegment;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReprError {
    #[error("list {list} holds {count} supersegments, budget is {n_sup}")]
    CountExceedsBudget { list: usize, count: u32, n_sup: usize },
    #[error("payload holds {actual} supersegments, counts sum to {expected}")]
    PayloadLength { expected: usize, actual: usize },
    #[error("list {0} is not depth-sorted")]
    Unsorted(usize),
    #[error("list {0} has populated slots after an empty one")]
    NotPrefix(usize),
    #[error("expected {expected} lists, found {actual}")]
    ListCount { expected: usize, actual: usize },
}

/// `offsets[i] = counts[0] + .. + counts[i-1]`.
pub fn exclusive_prefix_sum(counts: &[u32]) -> Vec<usize> {
    let mut acc = 0usize;
    counts
        .iter()
        .map(|&c| {
            let o = acc;
            acc += c as usize;
            o
        })
        .collect()
}

fn check_sorted(list: &[Supersegment]) -> bool {
    list.iter().all(|s| s.t_front < s.t_back) && list.windows(2).all(|w| w[0].t_back <= w[1].t_front)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VdiFull {
    pub width: u32,
    pub height: u32,
    pub n_sup: usize,
    /// List-major: slot `j` of list `i` is `grid[i * n_sup + j]`.
    pub grid: Vec<Supersegment>,
}

impl VdiFull {
    pub fn empty(width: u32, height: u32, n_sup: usize) -> Self {
        Self { width, height, n_sup, grid: vec![Supersegment::EMPTY; width as usize * height as usize * n_sup] }
    }

    pub fn list_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// All `n_sup` slots of list `i`.
    pub fn slots(&self, i: usize) -> &[Supersegment] {
        &self.grid[i * self.n_sup..(i + 1) * self.n_sup]
    }

    /// Populated supersegments of list `i`.
    pub fn list(&self, i: usize) -> &[Supersegment] {
        let slots = self.slots(i);
        &slots[..slots.iter().take_while(|s| !s.is_empty_slot()).count()]
    }

    /// Writes `list` into the slots of list `i`, zeroing the rest.
    pub fn set_list(&mut self, i: usize, list: &[Supersegment]) {
        assert!(list.len() <= self.n_sup);
        let n = self.n_sup;
        let slots = &mut self.grid[i * n..(i + 1) * n];
        slots[..list.len()].copy_from_slice(list);
        slots[list.len()..].fill(Supersegment::EMPTY);
    }

    pub fn counts(&self) -> Vec<u32> {
        (0..self.list_count()).map(|i| self.list(i).len() as u32).collect()
    }

    pub fn validate(&self) -> Result<(), ReprError> {
        let expected = self.list_count() * self.n_sup;
        if self.grid.len() != expected {
            return Err(ReprError::ListCount { expected, actual: self.grid.len() });
        }
        for i in 0..self.list_count() {
            let n = self.list(i).len();
            if self.slots(i)[n..].iter().any(|s| !s.is_empty_slot()) {
                return Err(ReprError::NotPrefix(i));
            }
            if !check_sorted(self.list(i)) {
                return Err(ReprError::Unsorted(i));
            }
        }
        Ok(())
    }

    /// Bytes of the grid at 24 bytes per slot.
    pub fn payload_bytes(&self) -> usize {
        self.grid.len() * super::SUPERSEGMENT_BYTES
    }

    pub fn densify(&self) -> VdiDense {
        let counts = self.counts();
        let payload = (0..self.list_count()).flat_map(|i| self.list(i).iter().copied()).collect();
        VdiDense::from_parts(self.width, self.height, self.n_sup, counts, payload).expect("a valid full VDI densifies")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VdiDense {
    pub width: u32,
    pub height: u32,
    pub n_sup: usize,
    pub counts: Vec<u32>,
    /// Exclusive prefix sum of `counts`.
    pub offsets: Vec<usize>,
    pub payload: Vec<Supersegment>,
}

impl VdiDense {
    /// Builds and validates a dense VDI, deriving the offsets.
    pub fn from_parts(
        width: u32,
        height: u32,
        n_sup: usize,
        counts: Vec<u32>,
        payload: Vec<Supersegment>,
    ) -> Result<Self, ReprError> {
        let offsets = exclusive_prefix_sum(&counts);
        let v = Self { width, height, n_sup, counts, offsets, payload };
        v.validate()?;
        Ok(v)
    }

    pub fn list_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn list(&self, i: usize) -> &[Supersegment] {
        let o = self.offsets[i];
        &self.payload[o..o + self.counts[i] as usize]
    }

    pub fn validate(&self) -> Result<(), ReprError> {
        let n = self.list_count();
        if self.counts.len() != n {
            return Err(ReprError::ListCount { expected: n, actual: self.counts.len() });
        }
        if let Some((list, &count)) = self.counts.iter().enumerate().find(|(_, &c)| c as usize > self.n_sup) {
            return Err(ReprError::CountExceedsBudget { list, count, n_sup: self.n_sup });
        }
        let expected: usize = self.counts.iter().map(|&c| c as usize).sum();
        if self.payload.len() != expected {
            return Err(ReprError::PayloadLength { expected, actual: self.payload.len() });
        }
        if let Some(i) = (0..n).find(|&i| !check_sorted(self.list(i))) {
            return Err(ReprError::Unsorted(i));
        }
        Ok(())
    }

    /// Bytes of counts plus packed payload.
    pub fn payload_bytes(&self) -> usize {
        self.counts.len() * 4 + self.payload.len() * super::SUPERSEGMENT_BYTES
    }

    pub fn inflate(&self) -> Result<VdiFull, ReprError> {
        self.validate()?;
        let mut full = VdiFull::empty(self.width, self.height, self.n_sup);
        for i in 0..self.list_count() {
            full.set_list(i, self.list(i));
        }
        Ok(full)
    }
}
