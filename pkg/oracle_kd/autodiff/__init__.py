from oracle_kd.autodiff.optim import SGD, Adam, NoamSchedule, Optimizer, clip_grad_norm, make_optimizer
from oracle_kd.autodiff.tensor import Tape, Tensor, as_tensor, backward, current_tape, no_grad
