use crate::error::{shape, Error, Result};
use crate::tensor::{DenseMatrix, Rng};

/// Ordered, uniquely named parameter matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, DenseMatrix)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: DenseMatrix) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter name {name}"
            )));
        }
        self.entries.push((name, value));
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, value: DenseMatrix) -> Result<Self> {
        self.insert(name, value)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Result<&DenseMatrix> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter named {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut DenseMatrix> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter named {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DenseMatrix)> {
        self.entries.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut DenseMatrix)> {
        self.entries.iter_mut().map(|(n, m)| (n.as_str(), m))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, m)| (n.clone(), DenseMatrix::zeros(m.rows(), m.cols())))
                .collect(),
        }
    }

    /// Same names, order and shapes as `other`.
    pub fn check_aligned(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(shape(op, "parameter counts differ"));
        }
        for ((n1, m1), (n2, m2)) in self.entries.iter().zip(&other.entries) {
            if n1 != n2 || m1.shape() != m2.shape() {
                return Err(shape(
                    op,
                    format!("{n1} {:?} vs {n2} {:?}", m1.shape(), m2.shape()),
                ));
            }
        }
        Ok(())
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, m)| m.rows() * m.cols()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, m)| m.is_finite())
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Glorot/Xavier uniform weights in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut Rng) -> DenseMatrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| rng.uniform_range(-bound, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut p = ParamSet::new();
        p.insert("w", DenseMatrix::zeros(1, 1)).unwrap();
        assert!(p.insert("w", DenseMatrix::zeros(2, 2)).is_err());
        assert!(p.get("missing").is_err());
    }

    #[test]
    fn alignment_check() {
        let a = ParamSet::new()
            .with("w", DenseMatrix::zeros(2, 3))
            .unwrap();
        let b = ParamSet::new()
            .with("w", DenseMatrix::zeros(3, 2))
            .unwrap();
        assert!(a.check_aligned(&a.zeros_like(), "t").is_ok());
        assert!(a.check_aligned(&b, "t").is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = Rng::new(1);
        let w = glorot_uniform(10, 6, &mut rng);
        let bound = (6.0f64 / 16.0).sqrt();
        assert!(w.as_slice().iter().all(|v| v.abs() <= bound));
    }
}
