"""A tour of the autodiff core: tensors, tapes, and gradient checking.

Run: python3 demos/01_autodiff_basics.py
"""

import numpy as np

import layoutkie.autograd as ag
from layoutkie.autograd import Graph, Params, Tensor, backward, grad_check, precision

print("== a tiny model, differentiated by hand-replayed tape ==")
rng = np.random.default_rng(0)

params = Params()
params.add("w", rng.standard_normal((3, 2)) * 0.1)
params.add("b", np.zeros(2))

x = np.array([[1.0, -0.5, 2.0]])
targets = np.array([1])

with Graph() as g:
    logits = ag.add(ag.matmul(Tensor(x), params["w"]), params["b"])
    loss = ag.cross_entropy(logits, targets, np.ones(1))
backward(g, loss)

print(f"loss = {loss.item():.4f} (uniform baseline would be ln 2 = {np.log(2):.4f})")
for name, t in params.items():
    print(f"d loss / d {name}:\n{t.grad}")

print()
print("== the same gradients, verified against central differences ==")
with precision("float64"):
    params64 = Params()
    params64.add("w", rng.standard_normal((3, 2)))
    params64.add("b", rng.standard_normal(2))

    def f():
        logits = ag.add(ag.matmul(Tensor(x), params64["w"]), params64["b"])
        return ag.cross_entropy(logits, targets, np.ones(1))

    err = grad_check(f, params64, rng=rng)
print(f"max relative error vs finite differences: {err:.2e}")

print()
print("== outside a Graph, the same ops run untracked (inference mode) ==")
out = ag.softmax(Tensor([[3.0, 1.0]]))
print(f"softmax([[3, 1]]) = {out.data}, recorded on a tape: {out.node_id is not None}")
