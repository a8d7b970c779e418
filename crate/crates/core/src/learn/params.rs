use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// A named tensor inside a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Shape manifest of a model's parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    segments: Vec<Segment>,
    total: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor and returns its offset.
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> usize {
        let seg = Segment {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.total,
        };
        self.total += seg.len();
        self.segments.push(seg);
        self.total - self.segments.last().unwrap().len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Segment holding flat index `i`.
    pub fn locate(&self, i: usize) -> Option<&Segment> {
        self.segments.iter().find(|s| s.range().contains(&i))
    }
}

/// Flat parameter vector with its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params<T> {
    pub layout: ParamLayout,
    pub values: Vec<T>,
}

impl<T: Scalar> Params<T> {
    pub fn zeros(layout: ParamLayout) -> Self {
        let values = vec![T::zero(); layout.total()];
        Params { layout, values }
    }

    /// Independent draws from `uniform(-scale, scale)`.
    pub fn uniform(layout: ParamLayout, scale: f64, rng: &mut impl Rng) -> Self {
        let values = (0..layout.total()).map(|_| T::of(rng.gen_range(-scale..scale))).collect();
        Params { layout, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, name: &str) -> &[T] {
        let seg = self.layout.get(name).unwrap_or_else(|| panic!("no parameter segment `{name}`"));
        &self.values[seg.range()]
    }

    pub fn slice_mut(&mut self, name: &str) -> &mut [T] {
        let range = self
            .layout
            .get(name)
            .unwrap_or_else(|| panic!("no parameter segment `{name}`"))
            .range();
        &mut self.values[range]
    }

    /// Fails on the first non-finite gradient entry, naming its segment.
    pub fn check_finite(&self, grads: &[T]) -> Result<()> {
        match grads.iter().position(|g| !g.is_finite()) {
            None => Ok(()),
            Some(i) => {
                let seg = self.layout.locate(i);
                Err(Error::NonFiniteGradient {
                    segment: seg.map(|s| s.name.clone()).unwrap_or_default(),
                    offset: i - seg.map_or(0, |s| s.offset),
                })
            }
        }
    }

    /// Little-endian f64 encoding of the values.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.as_f64().to_le_bytes()).collect()
    }

    pub fn from_le_bytes(layout: ParamLayout, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != layout.total() * 8 {
            return Err(Error::Shape(format!(
                "parameter blob has {} bytes, manifest expects {}",
                bytes.len(),
                layout.total() * 8
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect();
        Ok(Params { layout, values })
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn layout_offsets() {
        let mut l = ParamLayout::new();
        assert_eq!(l.push("a", &[2, 3]), 0);
        assert_eq!(l.push("b", &[4]), 6);
        assert_eq!(l.total(), 10);
        assert_eq!(l.locate(7).unwrap().name, "b");
    }

    #[test]
    fn blob_roundtrip() {
        let mut l = ParamLayout::new();
        l.push("w", &[3, 2]);
        let p: Params<f64> = Params::uniform(l.clone(), 0.05, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(p.values.iter().all(|v| v.abs() < 0.05));
        let back = Params::<f64>::from_le_bytes(l.clone(), &p.to_le_bytes()).unwrap();
        assert_eq!(back, p);
        assert!(Params::<f64>::from_le_bytes(l, &[0u8; 7]).is_err());
    }

    #[test]
    fn non_finite_gradient_is_located() {
        let mut l = ParamLayout::new();
        l.push("a", &[2]);
        l.push("b", &[2]);
        let p: Params<f64> = Params::zeros(l);
        let err = p.check_finite(&[0.0, 0.0, 0.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { ref segment, offset: 1 } if segment == "b"));
    }
}
