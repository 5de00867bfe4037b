use crate::qd::cvt::Centroids;
use crate::{Dataset, Error, Result, Sample};

/// CVT archive holding at most one elite per centroid cell.
#[derive(Clone, Debug)]
pub struct Archive {
    centroids: Centroids,
    cells: Vec<Option<Sample>>,
    occupied: Vec<usize>,
    eval_count: u64,
}

impl Archive {
    pub fn new(centroids: Centroids) -> Self {
        let k = centroids.len();
        Self {
            centroids,
            cells: vec![None; k],
            occupied: Vec::new(),
            eval_count: 0,
        }
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn cells(&self) -> &[Option<Sample>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    /// Indices of occupied cells in ascending order.
    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub(crate) fn add_evals(&mut self, n: u64) {
        self.eval_count += n;
    }

    pub fn elite(&self, cell: usize) -> Option<&Sample> {
        self.cells.get(cell).and_then(Option::as_ref)
    }

    /// Inserts `sample` when its cell is empty or it strictly improves on the
    /// incumbent. Returns whether the archive changed.
    pub fn insert(&mut self, sample: Sample) -> Result<bool> {
        let b = sample
            .behaviour
            .ok_or_else(|| Error::InvalidArgument("sample has no behaviour".into()))?;
        let cell = self.centroids.nearest(&b);
        match &self.cells[cell] {
            Some(incumbent) if sample.fitness <= incumbent.fitness => Ok(false),
            Some(_) => {
                self.cells[cell] = Some(sample);
                Ok(true)
            }
            None => {
                self.cells[cell] = Some(sample);
                let pos = self.occupied.partition_point(|&c| c < cell);
                self.occupied.insert(pos, cell);
                Ok(true)
            }
        }
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        if self.is_empty() {
            return Err(Error::EmptyArchive);
        }
        Dataset::new(
            self.occupied
                .iter()
                .map(|&c| self.cells[c].clone().expect("occupied cell"))
                .collect(),
        )
    }
}

pub fn archive_insert(archive: &mut Archive, sample: Sample) -> Result<bool> {
    archive.insert(sample)
}

pub fn archive_to_dataset(archive: &Archive) -> Result<Dataset> {
    archive.to_dataset()
}
