"""
Linear and geometric mixing of two models
=========================================

Two models predict a four-letter alphabet. We mix them linearly and
geometrically, look at the code lengths and gradients, and reproduce the
case where the geometric mixture is more confident than either model.
"""

import numpy as np

from mixcomp import geo_mix, lin_mix, loss_grad
from mixcomp.analysis import equilibrium_residuals, example1_matrix

np.set_printoptions(precision=4, suppress=True)

# Rows are models, columns are symbols.
P = np.array([[0.70, 0.10, 0.10, 0.10],
              [0.40, 0.40, 0.10, 0.10]])
w = np.array([0.5, 0.5])

print("lin mixture:", lin_mix(w, P))
print("geo mixture:", geo_mix(w, P))

# Code length of symbol 0 under each mixture, and its gradient in the weights.
for kind in ("lin", "geo"):
    p = lin_mix(w, P) if kind == "lin" else geo_mix(w, P)
    print(f"{kind}: -log2 p(0) = {-np.log2(p[0]):.4f} bits, gradient {loss_grad(kind, w, P, 0)}")

# The geometric gradient can be read as an information balance: for each
# model, its code length minus (entropy of the mixture + divergence to it).
print("equilibrium residuals:", equilibrium_residuals(w, P, 0))

# Two models agree on symbol 0 (probability q) and disagree on where the
# rest goes. Their geometric mean puts more than q on symbol 0.
Q = example1_matrix(4, 0.9, 0.2)
print("\nagreeing models:\n", Q)
print("geo(0) =", round(float(geo_mix([0.5, 0.5], Q)[0]), 6), "> q = 0.9")
print("lin(0) =", round(float(lin_mix([0.5, 0.5], Q)[0]), 6))
