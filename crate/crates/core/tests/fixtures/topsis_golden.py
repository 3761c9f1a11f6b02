"""Reference TOPSIS closeness for the golden ranking fixture.

Run with `python3 topsis_golden.py > topsis_golden.json`.
"""
import json

import numpy as np

keys = ["a", "b", "c"]
matrix = np.array(
    [
        [1.0, 3_600_000.0, 2.0, 0.2],
        [2.0, 600_000.0, 1.0, 0.6],
        [3.0, 0.0, 4.0, 0.9],
    ]
)
weights = np.array([0.25, 0.25, 0.25, 0.25])
benefit = np.array([False, False, False, True])

norm = np.linalg.norm(matrix, axis=0)
v = matrix / norm * weights
ideal = np.where(benefit, v.max(axis=0), v.min(axis=0))
anti = np.where(benefit, v.min(axis=0), v.max(axis=0))
d_plus = np.linalg.norm(v - ideal, axis=1)
d_minus = np.linalg.norm(v - anti, axis=1)
closeness = d_minus / (d_plus + d_minus)
order = [keys[i] for i in np.argsort(-closeness, kind="stable")]

print(json.dumps({
    "keys": keys,
    "matrix": matrix.tolist(),
    "weights": weights.tolist(),
    "closeness": closeness.tolist(),
    "order": order,
}, indent=2))
