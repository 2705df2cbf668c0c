use crate::error::{Error, Result};

/// Dense row-major array of `f64` values with an optional gradient slot.
///
/// Vectors have shape `[n]`, matrices `[rows, cols]`, scalars `[]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != values.len() {
            return Err(Error::Shape { op: "tensor", left: shape, right: vec![values.len()] });
        }
        Ok(Tensor { shape, values, grad: None })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Tensor { shape, values: vec![0.0; numel], grad: None }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: Vec::new(), values: vec![value], grad: None }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Tensor { shape: vec![values.len()], values, grad: None }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], values)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Shape { op: "from_rows", left: vec![rows.len(), cols], right: vec![row.len()] });
            }
            values.extend_from_slice(row);
        }
        Tensor::new(vec![rows.len(), cols], values)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(vec![n, n]);
        for i in 0..n {
            t.values[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.values.len() == 1 && self.shape.iter().all(|&d| d == 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        self.grad = None;
    }

    /// Adds `delta` into the gradient slot, allocating it on first use.
    pub fn accumulate_grad(&mut self, delta: &[f64]) -> Result<()> {
        if delta.len() != self.values.len() {
            return Err(Error::Shape { op: "accumulate_grad", left: self.shape.clone(), right: vec![delta.len()] });
        }
        let grad = self.grad.get_or_insert_with(|| vec![0.0; delta.len()]);
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += d;
        }
        Ok(())
    }

    /// Row `r` of a matrix.
    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.values[r * cols..(r + 1) * cols]
    }

    /// Nested-array view used by the checkpoint format.
    pub fn to_nested(&self) -> serde_json::Value {
        use serde_json::Value;
        match self.shape.len() {
            0 => Value::from(self.values[0]),
            1 => Value::from(self.values.clone()),
            _ => {
                let inner: usize = self.shape[1..].iter().product();
                let sub_shape = self.shape[1..].to_vec();
                Value::Array(
                    self.values
                        .chunks(inner.max(1))
                        .take(self.shape[0])
                        .map(|chunk| {
                            Tensor { shape: sub_shape.clone(), values: chunk.to_vec(), grad: None }.to_nested()
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn from_nested(shape: Vec<usize>, value: &serde_json::Value) -> Result<Self> {
        fn flatten(v: &serde_json::Value, out: &mut Vec<f64>) -> Result<()> {
            match v {
                serde_json::Value::Array(items) => {
                    for item in items {
                        flatten(item, out)?;
                    }
                    Ok(())
                }
                serde_json::Value::Number(n) => {
                    out.push(n.as_f64().ok_or_else(|| Error::Checkpoint(format!("non-finite number {n} in tensor")))?);
                    Ok(())
                }
                other => Err(Error::Checkpoint(format!("expected number or array in tensor, found {other}"))),
            }
        }
        let mut values = Vec::new();
        flatten(value, &mut values)?;
        Tensor::new(shape, values).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

/// Identifier of a parameter tensor within a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named collection of trainable (or frozen) parameter tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    trainable: Vec<bool>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        self.trainable.push(true);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.trainable[id.0]
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.trainable[id.0] = trainable;
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names.iter().zip(&self.tensors).enumerate().map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.zero_grad();
        }
    }

    pub fn total_values(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }
}
