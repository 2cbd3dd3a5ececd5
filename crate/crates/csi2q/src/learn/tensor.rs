//! Dense row-major tensor of 64-bit floats.

use crate::error::{Error, Result};

/// Shape plus contiguous row-major data. The first dimension is the batch
/// wherever a batch applies.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::invalid(format!(
                "shape {shape:?} implies {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Reinterpret the data with a new shape of identical volume.
    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::invalid(format!(
                "cannot reshape {} elements to {shape:?}",
                self.data.len()
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Leading (batch) dimension.
    pub fn batch(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Elements per batch entry.
    pub fn stride(&self) -> usize {
        self.shape[1..].iter().product()
    }

    /// Borrow one batch entry's slice.
    pub fn sample(&self, b: usize) -> &[f64] {
        let s = self.stride();
        &self.data[b * s..(b + 1) * s]
    }

    pub fn sample_mut(&mut self, b: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.data[b * s..(b + 1) * s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_volume_must_agree() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::from_vec(&[2, 6], (0..12).map(|i| i as f64).collect()).unwrap();
        let r = t.clone().reshaped(&[2, 2, 3]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.reshaped(&[5, 2]).is_err());
    }

    #[test]
    fn sample_views_batch_entries() {
        let t = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.sample(0), &[1.0, 2.0, 3.0]);
        assert_eq!(t.sample(1), &[4.0, 5.0, 6.0]);
    }
}
