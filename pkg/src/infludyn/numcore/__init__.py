"""Minimal differentiable dense-tensor engine."""
from .gradcheck import grad_check
from .optim import Adam, AdamState, adam_step
from .tensor import (
    ACTIVATIONS,
    Tensor,
    activate,
    add,
    as_tensor,
    bce_with_logits,
    concat,
    div,
    dropout,
    elu,
    exp,
    gather_rows,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    ones,
    relu,
    reshape,
    scatter_rows,
    segment_softmax,
    segment_sum,
    sigmoid,
    softmax,
    spmm,
    sub,
    sum,
    tanh,
    tensor,
    transpose,
    zeros,
)
