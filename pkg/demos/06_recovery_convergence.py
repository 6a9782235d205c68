"""The recovery family reaches the limiting energy.

Take G = diag(1, 1, 1 + x1^2), the first-order isometry V = (0, 0, x1 x2)
and a smooth in-plane w. The recovery deformation adds corrections in h and
h^2 on top of the Kirchhoff ansatz. Its rescaled energy h^-4 E^h approaches
the limit energy of the matching pair, with a gap shrinking like h^2.
"""

from prestrain import (
    ElasticModel,
    Poly2D,
    PolyVectorField,
    catalog_immersion,
    diag_lambda,
    evaluate_I4,
    recovery_deformation,
    recovery_pair,
)
from prestrain.energy3d import DEFAULT_H_LIST, energy_Eh
from prestrain.grid import Grid2D

model = ElasticModel()
metric = diag_lambda([1, 0, 0, 1, 0, 0])
bundle = catalog_immersion(metric)
grid = Grid2D.square(33)
V = PolyVectorField.vertical([0, 0, 0, 0, 1, 0])
w = (Poly2D([0, 0, 0, 0.1, 0, 0.05]), Poly2D([0, 0, 0, 0, 0.1, 0]))

limit = evaluate_I4(bundle, metric, model, recovery_pair(bundle, V, w, grid))
print("limit energy:", {k: f"{v:.6e}" for k, v in limit.as_dict().items()})
prev = None
for h in DEFAULT_H_LIST:
    u = recovery_deformation(bundle, metric, model, V, w, h, grid=grid)
    gap = abs(energy_Eh(metric, model, u, h, grid) / h**4 - limit.total) / limit.total
    note = "" if prev is None else f"  (ratio {prev / gap:.2f})"
    print(f"h = {h:<10}: relative gap {gap:.3e}{note}")
    prev = gap
