"""Tour of the separability metric on hand-built matrices."""
import numpy as np

import weightsep as ws

np.set_printoptions(precision=4, suppress=True)

# orthonormal columns score exactly zero
print("identity:", ws.separability_metric(np.eye(4)))

# scaling breaks orthonormality even though columns stay orthogonal
w = 2.0 * np.eye(2)
print("2*I:", ws.separability_metric(w), "(error matrix below)")
print(ws.error_matrix(w))

# a random matrix lands far from zero; QR pulls it back
rng = np.random.default_rng(0)
w = rng.uniform(-1, 1, size=(12, 5))
q, r = ws.qr_decompose(w)
print("random 12x5:", ws.format_epsilon(ws.separability_metric(w)))
print("its Q factor:", ws.format_epsilon(ws.separability_metric(q)))

# both formulas track each other to machine precision
frob = ws.separability_metric(w)
tr = ws.separability_metric_trace_form(w)
print(f"frobenius form {frob:.12f} vs trace form {tr:.12f}")

# columns must be the long axis; a wide matrix is the caller's mistake
try:
    ws.separability_metric(w.T)
except ws.OrientationError as e:
    print("wide input rejected:", e)
