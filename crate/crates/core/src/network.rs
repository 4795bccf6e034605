//! Dense ReLU feed-forward networks with explicit weights.
//!
//! A [`ReluNetwork`] alternates affine maps and componentwise `max(0, ·)`.
//! The final affine map has a single output row and no activation, so a
//! network with hidden widths `[N_1, …, N_L]` stores `L + 1` layers.
//!
//! Weights are stored dense and row-major with shape `(out_dim, in_dim)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One affine map `h ↦ W h + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    /// Builds a layer from a row-major weight buffer of length `rows * cols`.
    pub fn new(rows: usize, cols: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Validation(format!(
                "layer shape {rows}x{cols} has an empty dimension"
            )));
        }
        if weight.len() != rows * cols {
            return Err(Error::Validation(format!(
                "weight buffer has {} entries, expected {rows}x{cols}",
                weight.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::Validation(format!(
                "bias has {} entries, expected {rows}",
                bias.len()
            )));
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite weight or bias".into()));
        }
        Ok(Self {
            rows,
            cols,
            weight,
            bias,
        })
    }

    /// Builds a layer from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("ragged weight matrix".into()));
        }
        let weight = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, weight, bias)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight_at(&self, r: usize, c: usize) -> f64 {
        self.weight[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weight[r * self.cols..(r + 1) * self.cols]
    }

    fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.weight[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, h) in row.iter().zip(input) {
                acc += w * h;
            }
            *o = acc + self.bias[r];
        }
    }
}

/// Hidden-layer widths of a network, e.g. `[2m, 2n + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WidthVec(Vec<usize>);

impl WidthVec {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(Error::Parameter(format!(
                "widthvec must be nonempty with positive entries, got {widths:?}"
            )));
        }
        Ok(Self(widths))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// True when every entry is at most the corresponding entry of `bound`.
    pub fn fits_within(&self, bound: &WidthVec) -> bool {
        self.0.len() == bound.0.len() && self.0.iter().zip(&bound.0).all(|(a, b)| a <= b)
    }

    /// Number of affine parameters of a scalar-output network of this shape.
    pub fn parameter_count(&self, input_dim: usize) -> usize {
        let mut prev = input_dim;
        let mut total = 0;
        for &w in &self.0 {
            total += (prev + 1) * w;
            prev = w;
        }
        total + prev + 1
    }
}

impl std::fmt::Display for WidthVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "]")
    }
}

/// A scalar-output ReLU network.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Reusable buffers for allocation-free evaluation.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ReluNetwork {
    /// Validates the dimension chain and wraps the layers.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Validation("input_dim must be positive".into()));
        }
        let Some(last) = layers.last() else {
            return Err(Error::Validation("network has no layers".into()));
        };
        if last.rows != 1 {
            return Err(Error::Validation(format!(
                "final layer has {} outputs, expected 1",
                last.rows
            )));
        }
        let mut prev = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.cols != prev {
                return Err(Error::Validation(format!(
                    "layer {} takes {} inputs but previous stage produces {prev}",
                    i + 1,
                    layer.cols
                )));
            }
            prev = layer.rows;
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::rows)
            .collect()
    }

    /// Hidden widths as a [`WidthVec`]; `None` for a purely affine network.
    pub fn widthvec(&self) -> Option<WidthVec> {
        WidthVec::new(self.widths()).ok()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(Layer::rows)
            .max()
            .unwrap_or(1)
            .max(self.input_dim)
    }

    pub fn scratch(&self) -> Scratch {
        let w = self.max_width();
        Scratch {
            a: vec![0.0; w],
            b: vec![0.0; w],
        }
    }

    /// Evaluates the network at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::InputShape {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut scratch = self.scratch();
        Ok(self.eval_with(x, &mut scratch))
    }

    /// Evaluates without shape checks. `x` must have `input_dim` entries.
    pub fn eval_with(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        debug_assert_eq!(x.len(), self.input_dim);
        let w = self.max_width();
        if scratch.a.len() < w {
            scratch.a.resize(w, 0.0);
            scratch.b.resize(w, 0.0);
        }
        let Scratch { a, b } = scratch;
        a[..x.len()].copy_from_slice(x);
        let mut width = x.len();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&a[..width], &mut b[..layer.rows]);
            width = layer.rows;
            if i < last {
                for v in &mut b[..width] {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(a, b);
        }
        a[0]
    }

    /// Evaluates a scalar-input network.
    pub fn eval1(&self, x: f64) -> f64 {
        let mut scratch = self.scratch();
        self.eval_with(&[x], &mut scratch)
    }

    /// Returns the network computing `outer(inner(x))`.
    ///
    /// The inner output map and the outer first layer are fused into a single
    /// affine layer, so the hidden widths are `widths(inner) ++ widths(outer)`.
    pub fn compose(outer: &ReluNetwork, inner: &ReluNetwork) -> Result<ReluNetwork> {
        if outer.input_dim != 1 {
            return Err(Error::Composition {
                outer_input: outer.input_dim,
                inner_output: 1,
            });
        }
        let inner_out = inner.layers.last().expect("validated network");
        let outer_in = &outer.layers[0];
        // W = W_outer (r x 1) * W_inner (1 x k); b = W_outer * b_inner + b_outer
        let k = inner_out.cols;
        let mut weight = Vec::with_capacity(outer_in.rows * k);
        let mut bias = Vec::with_capacity(outer_in.rows);
        for r in 0..outer_in.rows {
            let scale = outer_in.weight[r];
            weight.extend(inner_out.weight.iter().map(|w| scale * w));
            bias.push(scale * inner_out.bias[0] + outer_in.bias[r]);
        }
        let fused = Layer::new(outer_in.rows, k, weight, bias)?;
        let mut layers = Vec::with_capacity(inner.layers.len() + outer.layers.len() - 1);
        layers.extend(inner.layers[..inner.layers.len() - 1].iter().cloned());
        layers.push(fused);
        layers.extend(outer.layers[1..].iter().cloned());
        ReluNetwork::new(inner.input_dim, layers)
    }

    /// Returns a network evaluating to `scale * self(x) + shift`.
    ///
    /// Only the output layer changes.
    pub fn affine_post(&self, scale: f64, shift: f64) -> Result<ReluNetwork> {
        if !scale.is_finite() || !shift.is_finite() {
            return Err(Error::Parameter(format!(
                "affine_post needs finite scale/shift, got {scale}, {shift}"
            )));
        }
        let mut out = self.clone();
        let last = out.layers.last_mut().expect("validated network");
        for w in &mut last.weight {
            *w *= scale;
        }
        last.bias[0] = scale * last.bias[0] + shift;
        Ok(out)
    }

    /// Serializes to the JSON interchange document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetworkDoc::from(self)).expect("finite values always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&NetworkDoc::from(self))
            .expect("finite values always serialize")
    }

    pub fn serialize(&self) -> Vec<u8> {
        self.to_json().into_bytes()
    }

    /// Parses and validates an interchange document.
    pub fn deserialize(bytes: &[u8]) -> Result<ReluNetwork> {
        let doc: NetworkDoc =
            serde_json::from_slice(bytes).map_err(|e| parse_error(bytes, &e))?;
        doc.into_network()
    }

    pub fn from_json(text: &str) -> Result<ReluNetwork> {
        Self::deserialize(text.as_bytes())
    }
}

/// Wire form: `{"input_dim": d, "layers": [{"weight": [[..]], "bias": [..]}, ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub input_dim: usize,
    pub layers: Vec<LayerDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl From<&ReluNetwork> for NetworkDoc {
    fn from(net: &ReluNetwork) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerDoc {
                weight: l.weight.chunks(l.cols).map(<[f64]>::to_vec).collect(),
                bias: l.bias.clone(),
            })
            .collect();
        NetworkDoc {
            input_dim: net.input_dim,
            layers,
        }
    }
}

impl NetworkDoc {
    pub fn into_network(self) -> Result<ReluNetwork> {
        let layers = self
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                Layer::from_rows(&l.weight, l.bias)
                    .map_err(|e| Error::Validation(format!("layer {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        ReluNetwork::new(self.input_dim, layers)
    }
}

/// Maps a serde_json error to a byte offset within `bytes`.
pub(crate) fn parse_error(bytes: &[u8], err: &serde_json::Error) -> Error {
    let (line, column) = (err.line(), err.column());
    let mut offset = 0usize;
    if line > 0 {
        let mut seen = 1;
        for (i, b) in bytes.iter().enumerate() {
            if seen == line {
                offset = i;
                break;
            }
            if *b == b'\n' {
                seen += 1;
                offset = i + 1;
            }
        }
        offset = (offset + column.saturating_sub(1)).min(bytes.len());
    }
    Error::Parse {
        offset,
        message: err.to_string(),
    }
}

/// Parses one input vector from a text line: numbers separated by
/// whitespace and/or commas.
pub fn parse_input_line(line: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut start = None;
    let bytes = line.as_bytes();
    for i in 0..=bytes.len() {
        let sep = i == bytes.len() || bytes[i] == b',' || bytes[i].is_ascii_whitespace();
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                let tok = &line[s..i];
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    offset: s,
                    message: format!("not a number: `{tok}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        offset: s,
                        message: format!("non-finite value `{tok}`"),
                    });
                }
                values.push(v);
                start = None;
            }
            _ => {}
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn relu_net() -> ReluNetwork {
        ReluNetwork::new(
            1,
            vec![
                Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
                Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
            ],
        )
        .unwrap()
    }

    fn random_net(rng: &mut ChaCha8Rng, input_dim: usize, widths: &[usize]) -> ReluNetwork {
        let mut layers = Vec::new();
        let mut prev = input_dim;
        for &w in widths.iter().chain(std::iter::once(&1)) {
            let weight = (0..w * prev).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bias = (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect();
            layers.push(Layer::new(w, prev, weight, bias).unwrap());
            prev = w;
        }
        ReluNetwork::new(input_dim, layers).unwrap()
    }

    // Straightforward matrix-chain evaluation with nested vectors.
    fn naive_eval(net: &ReluNetwork, x: &[f64]) -> f64 {
        let mut h: Vec<f64> = x.to_vec();
        let n = net.layers().len();
        for (i, layer) in net.layers().iter().enumerate() {
            let mut next = vec![0.0; layer.rows()];
            for (r, out) in next.iter_mut().enumerate() {
                let mut s = layer.bias()[r];
                for (c, hc) in h.iter().enumerate() {
                    s += layer.weight_at(r, c) * hc;
                }
                *out = if i + 1 < n { s.max(0.0) } else { s };
            }
            h = next;
        }
        h[0]
    }

    #[test]
    fn single_relu_unit() {
        let net = relu_net();
        assert_eq!(net.evaluate(&[-1.0]).unwrap(), 0.0);
        assert_eq!(net.evaluate(&[2.0]).unwrap(), 2.0);
        assert_eq!(net.widths(), vec![1]);
    }

    #[test]
    fn shape_errors() {
        let net = relu_net();
        assert_eq!(
            net.evaluate(&[1.0, 2.0]),
            Err(Error::InputShape {
                expected: 1,
                got: 2
            })
        );
        let bad = ReluNetwork::new(
            2,
            vec![Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap()],
        );
        assert!(matches!(bad, Err(Error::Validation(_))));
        let two_out = ReluNetwork::new(1, vec![Layer::new(2, 1, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap()]);
        assert!(matches!(two_out, Err(Error::Validation(_))));
        assert!(Layer::new(1, 1, vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn evaluation_matches_naive_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = random_net(&mut rng, 3, &[5, 4]);
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let got = net.evaluate(&x).unwrap();
            assert!((got - naive_eval(&net, &x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn compose_matches_sequential_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_net(&mut rng, 1, &[3, 2]);
            let b = random_net(&mut rng, 2, &[4]);
            let ab = ReluNetwork::compose(&a, &b).unwrap();
            assert_eq!(ab.widths(), vec![4, 3, 2]);
            for _ in 0..100 {
                let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let seq = a.eval1(b.evaluate(&x).unwrap());
                assert!((ab.evaluate(&x).unwrap() - seq).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn compose_with_relu_is_identity_on_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_net(&mut rng, 1, &[4]).affine_post(1.0, 0.0).unwrap();
        // Make p nonnegative by wrapping it in a ReLU.
        let p = ReluNetwork::compose(&relu_net(), &p).unwrap();
        let composed = ReluNetwork::compose(&relu_net(), &p).unwrap();
        for i in 0..50 {
            let x = -1.0 + i as f64 * 0.04;
            assert!((composed.eval1(x) - p.eval1(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn compose_rejects_multi_input_outer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_net(&mut rng, 2, &[2]);
        let b = random_net(&mut rng, 1, &[2]);
        assert!(matches!(
            ReluNetwork::compose(&a, &b),
            Err(Error::Composition { .. })
        ));
    }

    #[test]
    fn affine_post_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let net = random_net(&mut rng, 2, &[3]);
        let same = net.affine_post(1.0, 0.0).unwrap();
        let konst = net.affine_post(0.0, 2.5).unwrap();
        let scaled = net.affine_post(-3.0, 0.75).unwrap();
        assert_eq!(same.widths(), net.widths());
        for _ in 0..20 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let v = net.evaluate(&x).unwrap();
            assert_eq!(same.evaluate(&x).unwrap(), v);
            assert_eq!(konst.evaluate(&x).unwrap(), 2.5);
            assert!((scaled.evaluate(&x).unwrap() - (-3.0 * v + 0.75)).abs() <= 1e-12);
        }
        assert!(net.affine_post(f64::INFINITY, 0.0).is_err());
        assert!(net.affine_post(1.0, f64::NAN).is_err());
    }

    #[test]
    fn minimal_document_parses() {
        let doc = r#"{"input_dim":1,"layers":[{"weight":[[1.0]],"bias":[0.0]},{"weight":[[1.0]],"bias":[0.0]}]}"#;
        let net = ReluNetwork::from_json(doc).unwrap();
        assert_eq!(net, relu_net());
        assert_eq!(net.to_json(), doc);
    }

    #[test]
    fn truncated_and_invalid_documents() {
        let doc = relu_net().to_json();
        let cut = &doc.as_bytes()[..doc.len() - 5];
        match ReluNetwork::deserialize(cut) {
            Err(Error::Parse { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
        let chain = r#"{"input_dim":2,"layers":[{"weight":[[1.0]],"bias":[0.0]}]}"#;
        assert!(matches!(
            ReluNetwork::from_json(chain),
            Err(Error::Validation(_))
        ));
        let ragged = r#"{"input_dim":2,"layers":[{"weight":[[1.0,2.0],[1.0]],"bias":[0.0,0.0]},{"weight":[[1.0,1.0]],"bias":[0.0]}]}"#;
        assert!(matches!(
            ReluNetwork::from_json(ragged),
            Err(Error::Validation(_))
        ));
        match ReluNetwork::from_json("{\n  \"input_dim\": x") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 17),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn input_lines() {
        assert_eq!(parse_input_line("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_input_line(" 1, 2\t3 ").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_input_line("").unwrap().is_empty());
        assert_eq!(
            parse_input_line("1 abc"),
            Err(Error::Parse {
                offset: 2,
                message: "not a number: `abc`".into()
            })
        );
        assert!(parse_input_line("inf").is_err());
    }

    #[test]
    fn widthvec_counts() {
        let w = WidthVec::new(vec![4, 5]).unwrap();
        assert_eq!(w.parameter_count(1), 2 * 4 + 5 * 5 + 6);
        assert!(WidthVec::new(vec![]).is_err());
        assert!(WidthVec::new(vec![1, 0]).is_err());
        assert_eq!(w.to_string(), "[4;5]");
        assert!(w.fits_within(&WidthVec::new(vec![4, 6]).unwrap()));
        assert!(!w.fits_within(&WidthVec::new(vec![3, 6]).unwrap()));
    }
}
