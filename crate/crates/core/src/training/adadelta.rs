use crate::autodiff::{GradStore, ParamSet, Tensor};

/// Running averages of squared gradients and squared updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdadeltaState {
    pub sq_grad: Vec<Tensor>,
    pub sq_update: Vec<Tensor>,
}

impl AdadeltaState {
    pub fn new(params: &ParamSet) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        AdadeltaState {
            sq_grad: zeros.clone(),
            sq_update: zeros,
        }
    }
}

/// One ADADELTA update of every parameter.
pub fn adadelta_step(
    params: &mut ParamSet,
    grads: &GradStore,
    state: &mut AdadeltaState,
    rho: f64,
    eps: f64,
) {
    assert_eq!(grads.len(), params.len(), "one gradient per parameter");
    let per_param = params
        .values_mut()
        .zip(grads.iter())
        .zip(state.sq_grad.iter_mut().zip(state.sq_update.iter_mut()));
    for ((p, g), (eg, ed)) in per_param {
        assert_eq!(p.shape(), g.shape());
        let cells = p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(eg.data_mut().iter_mut().zip(ed.data_mut().iter_mut()));
        for ((x, &g), (eg, ed)) in cells {
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let delta = -((*ed + eps).sqrt() / (*eg + eps).sqrt()) * g;
            *ed = rho * *ed + (1.0 - rho) * delta * delta;
            *x += delta;
        }
    }
}
