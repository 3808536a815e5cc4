"""Tour of the tensor core: tape recording, gradients, and AdamW.

Run:  python3 demos/01_autodiff_and_optimizer.py
"""

import numpy as np

from fuselink import autodiff as ad
from fuselink.autodiff import Tape, Tensor, backward
from fuselink.optim import AdamWState, adamw_step

rng = np.random.default_rng(0)

# Every value is a rows x cols float64 tensor; vectors are 1xN rows.
w = Tensor(rng.normal(size=(4, 4)), name="w")
x = Tensor(rng.normal(size=(1, 4)), name="x")

# Operations recorded inside a tape can be differentiated afterwards.
with Tape() as tape:
    hidden = ad.matmul(x, w)
    weights = ad.softmax(hidden)
    loss = ad.log_sum_exp(weights)
print(f"tape recorded {len(tape)} primitive operations, loss = {loss.item():.6f}")

grads = backward(tape, loss)
print("d loss / d w, first row:", np.round(grads[w][0], 5))

# Check one entry against a central finite difference.
i, j = 0, 1
h = 1e-5
orig = w.data[i, j]
w.data[i, j] = orig + h
with Tape():
    up = ad.log_sum_exp(ad.softmax(ad.matmul(x, w))).item()
w.data[i, j] = orig - h
with Tape():
    down = ad.log_sum_exp(ad.softmax(ad.matmul(x, w))).item()
w.data[i, j] = orig
fd = (up - down) / (2 * h)
print(f"analytic {grads[w][i, j]:.10f} vs finite difference {fd:.10f}")

# Ten AdamW steps on a quadratic pull the weight toward zero.
scalar = Tensor(np.array([[1.0]]), name="scalar")
params = {"scalar": scalar}
state = AdamWState.for_params(params, lr=0.1, weight_decay=0.0)
trajectory = []
for _ in range(10):
    grad = {"scalar": 2.0 * scalar.data}  # derivative of scalar^2
    adamw_step(params, grad, state)
    trajectory.append(scalar.data[0, 0])
print("AdamW on w^2 from 1.0:", " ".join(f"{v:.3f}" for v in trajectory))
