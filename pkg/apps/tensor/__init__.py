# -*- coding: utf-8 -*-
from apps.tensor.tensor import (
    GradTape, Parameter, Tensor, backward, default_dtype, get_default_dtype, is_grad_enabled, make_result, no_grad,
    reset_tape, set_default_dtype
)
