use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::autodiff::{ParamId, ParamSet, Tensor};

/// Layer sizes. The defaults are 300-dimensional embeddings and
/// 100-dimensional GRU states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub embed: usize,
    pub hidden: usize,
    pub attention: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            embed: 300,
            hidden: 100,
            attention: 100,
        }
    }
}

/// How a parameter is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Square hidden-to-hidden matrix of a GRU.
    Recurrent,
    Bias,
    /// Any other matrix (embeddings, input and output projections, attention).
    Weight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: [usize; 2],
    pub kind: ParamKind,
}

/// Parameter handles of one GRU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruIds {
    pub w_z: ParamId,
    pub w_r: ParamId,
    pub w_h: ParamId,
    pub u_z: ParamId,
    pub u_r: ParamId,
    pub u_h: ParamId,
    pub b_z: ParamId,
    pub b_r: ParamId,
    pub b_h: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Ids {
    pub embedding: ParamId,
    pub enc_fwd: GruIds,
    pub enc_bwd: GruIds,
    pub dec: GruIds,
    pub att_w: ParamId,
    pub att_u: ParamId,
    pub att_v: ParamId,
    pub init_w: ParamId,
    pub init_b: ParamId,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

/// Every learnable array of the encoder-decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dims: ModelDims,
    vocab_size: usize,
    output_size: usize,
    params: ParamSet,
    ids: Ids,
}

fn gru_layout(prefix: &str, input: usize, hidden: usize, out: &mut Vec<ParamSpec>) {
    let mut push = |n: &str, shape, kind| {
        out.push(ParamSpec {
            name: format!("{prefix}.{n}"),
            shape,
            kind,
        })
    };
    for g in ["z", "r", "h"] {
        push(&format!("w_{g}"), [input, hidden], ParamKind::Weight);
    }
    for g in ["z", "r", "h"] {
        push(&format!("u_{g}"), [hidden, hidden], ParamKind::Recurrent);
    }
    for g in ["z", "r", "h"] {
        push(&format!("b_{g}"), [1, hidden], ParamKind::Bias);
    }
}

impl ModelParams {
    /// Names, shapes and kinds of every parameter, in storage order.
    pub fn layout(dims: ModelDims, vocab_size: usize, output_size: usize) -> Vec<ParamSpec> {
        let ModelDims {
            embed,
            hidden,
            attention,
        } = dims;
        let spec = |name: &str, shape, kind| ParamSpec {
            name: name.to_string(),
            shape,
            kind,
        };
        let mut v = vec![spec("embedding", [vocab_size, embed], ParamKind::Weight)];
        gru_layout("enc_fwd", embed, hidden, &mut v);
        gru_layout("enc_bwd", embed, hidden, &mut v);
        gru_layout("dec", embed + 2 * hidden, hidden, &mut v);
        v.push(spec("att.w", [hidden, attention], ParamKind::Weight));
        v.push(spec("att.u", [2 * hidden, attention], ParamKind::Weight));
        v.push(spec("att.v", [attention, 1], ParamKind::Weight));
        v.push(spec("init.w", [hidden, hidden], ParamKind::Weight));
        v.push(spec("init.b", [1, hidden], ParamKind::Bias));
        v.push(spec("out.w", [hidden, output_size], ParamKind::Weight));
        v.push(spec("out.b", [1, output_size], ParamKind::Bias));
        v
    }

    /// Creates parameters by calling `init` for each entry of the layout.
    pub fn new_with(
        dims: ModelDims,
        vocab_size: usize,
        output_size: usize,
        mut init: impl FnMut(&ParamSpec) -> Tensor,
    ) -> Self {
        let mut params = ParamSet::new();
        for spec in Self::layout(dims, vocab_size, output_size) {
            let t = init(&spec);
            assert_eq!(t.shape(), spec.shape, "initializer shape for {}", spec.name);
            params.add(spec.name, t);
        }
        Self::from_params(dims, vocab_size, output_size, params).expect("layout is consistent")
    }

    /// Wraps an existing parameter set after checking it against the layout.
    pub fn from_params(
        dims: ModelDims,
        vocab_size: usize,
        output_size: usize,
        params: ParamSet,
    ) -> Result<Self, ModelError> {
        let layout = Self::layout(dims, vocab_size, output_size);
        if params.len() != layout.len() {
            return Err(ModelError::Layout {
                name: "*".into(),
                message: format!("expected {} parameters, found {}", layout.len(), params.len()),
            });
        }
        for spec in &layout {
            let id = params.id_of(&spec.name).ok_or_else(|| ModelError::Layout {
                name: spec.name.clone(),
                message: "missing".into(),
            })?;
            let t = params.get(id);
            if t.shape() != spec.shape {
                return Err(ModelError::Layout {
                    name: spec.name.clone(),
                    message: format!("expected shape {:?}, found {:?}", spec.shape, t.shape()),
                });
            }
        }
        let id = |n: &str| params.id_of(n).expect("checked above");
        let gru = |p: &str| GruIds {
            w_z: id(&format!("{p}.w_z")),
            w_r: id(&format!("{p}.w_r")),
            w_h: id(&format!("{p}.w_h")),
            u_z: id(&format!("{p}.u_z")),
            u_r: id(&format!("{p}.u_r")),
            u_h: id(&format!("{p}.u_h")),
            b_z: id(&format!("{p}.b_z")),
            b_r: id(&format!("{p}.b_r")),
            b_h: id(&format!("{p}.b_h")),
        };
        let ids = Ids {
            embedding: id("embedding"),
            enc_fwd: gru("enc_fwd"),
            enc_bwd: gru("enc_bwd"),
            dec: gru("dec"),
            att_w: id("att.w"),
            att_u: id("att.u"),
            att_v: id("att.v"),
            init_w: id("init.w"),
            init_b: id("init.b"),
            out_w: id("out.w"),
            out_b: id("out.b"),
        };
        Ok(ModelParams {
            dims,
            vocab_size,
            output_size,
            params,
            ids,
        })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    pub(crate) fn ids(&self) -> &Ids {
        &self.ids
    }

    /// Handles of the decoder GRU, e.g. to inspect its recurrent matrices.
    pub fn decoder_gru(&self) -> GruIds {
        self.ids.dec
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }
}
