use std::cell::{Cell, Ref, RefCell};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Maps the output gradient to one optional gradient per input, given the
/// input values and the output value.
pub(crate) type Backward = Box<dyn Fn(&[&Tensor], &Tensor, &Tensor) -> Result<Vec<Option<Tensor>>>>;

struct Node {
    value: Tensor,
    inputs: Vec<usize>,
    backward: Option<Backward>,
    requires_grad: bool,
}

/// Linear record of executed operations. A tape supports one backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    consumed: Cell<bool>,
}

/// Gradients produced by [`Tape::backward`], indexed by variable.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to the leaf `v`; `None` for
    /// constants, intermediate values, and leaves the loss does not reach.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, inputs: Vec<usize>, backward: Option<Backward>, requires_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            inputs,
            backward,
            requires_grad,
        });
        Var(nodes.len() - 1)
    }

    /// A value that takes no gradient.
    pub fn constant(&self, value: Tensor) -> Var {
        self.push(value, vec![], None, false)
    }

    /// A value whose gradient is collected by `backward`.
    pub fn leaf(&self, value: Tensor) -> Var {
        self.push(value, vec![], None, true)
    }

    pub fn value(&self, v: Var) -> Ref<'_, Tensor> {
        Ref::map(self.nodes.borrow(), |n| &n[v.0].value)
    }

    pub fn shape(&self, v: Var) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    /// Record the result of an operation on `inputs`.
    pub(crate) fn op(&self, inputs: &[Var], value: Tensor, backward: Backward) -> Var {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            inputs.iter().any(|v| nodes[v.0].requires_grad)
        };
        let b = requires_grad.then_some(backward);
        self.push(value, inputs.iter().map(|v| v.0).collect(), b, requires_grad)
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.consumed.replace(true) {
            return Err(Error::Lifecycle("backward already ran on this tape".into()));
        }
        let nodes = self.nodes.borrow();
        let root = nodes
            .get(loss.0)
            .ok_or_else(|| Error::Lifecycle(format!("variable {} is not on this tape", loss.0)))?;
        if root.value.len() != 1 || root.value.is_complex() {
            return Err(Error::Shape(format!(
                "backward needs a real scalar, got shape {:?}",
                root.value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        if !root.requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor::full(root.value.shape(), 1.0));
        for k in (0..=loss.0).rev() {
            let node = &nodes[k];
            let Some(back) = &node.backward else { continue };
            let Some(g) = grads[k].take() else { continue };
            let inputs: Vec<&Tensor> = node.inputs.iter().map(|&i| &nodes[i].value).collect();
            let in_grads = back(&inputs, &node.value, &g)?;
            for (&i, gi) in node.inputs.iter().zip(in_grads) {
                let (Some(gi), true) = (gi, nodes[i].requires_grad) else { continue };
                match &mut grads[i] {
                    Some(acc) => acc.accumulate(&gi)?,
                    slot => *slot = Some(gi),
                }
            }
        }
        for (k, n) in nodes.iter().enumerate() {
            if !n.requires_grad {
                grads[k] = None;
            }
        }
        Ok(Gradients { grads })
    }
}
