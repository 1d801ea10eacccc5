"""
Tracking a source that switches between models
==============================================

A synthetic sequence is drawn from model 0 for its first half and from
model 1 for its second half. Online gradient descent moves the weights
towards whichever model is currently right; a fixed weight vector cannot.
"""

import math

import numpy as np

from mixcomp import Domain, OgdConfig, run_mix_ogd, step_size
from mixcomp.analysis import best_segmentation, best_single_model, optimal_static_weights
from mixcomp.synth import make_instance

n, m, N, B = 2000, 2, 16, 8
inst = make_instance("switching", n, m, N, B, seed=3, segments=2)

alpha = step_size(3, m, B)
trace = run_mix_ogd(OgdConfig("geo", alpha), inst.x, inst.P)
static = optimal_static_weights("geo", Domain.simplex(), inst.x, inst.P)
idx, best_bits = best_single_model(inst.x, inst.P)

print(f"step size                 {alpha:.5f}")
print(f"OGD total                 {trace.total_bits:10.1f} bits")
print(f"best fixed weights {np.round(static.w, 3)} {static.bits:10.1f} bits")
print(f"best single model ({idx})     {best_bits:10.1f} bits")

# Weight on model 0, sampled along the run.
for k in range(0, n, n // 8):
    print(f"step {k + 1:5d}: w0 = {trace.weights[k, 0]:.3f}")

# The competing scheme picks the best model per segment, paying a fixed
# price per segment. It finds the switch.
seg = best_segmentation(inst.x, inst.P, penalty=B * math.log2(n))
print("segments start at", seg.starts, "with", round(seg.cost, 1), "bits of model cost")
