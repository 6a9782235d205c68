"""Watch the 3D energy of the Kirchhoff ansatz y0 + x3 b0 + x3^2/2 d0 decay
like h^4 for G = diag(1, 1, 1 + x1^2), and vanish for an immersible metric."""

from prestrain import ElasticModel, ansatz_kirchhoff, catalog_immersion, diag_lambda, exact_flat, scaling_study
from prestrain.energy3d import energy_Eh

model = ElasticModel()
metric = diag_lambda([1, 0, 0, 1, 0, 0])
table = scaling_study(metric, model, ansatz_kirchhoff(catalog_immersion(metric)))
print(table.to_csv())
print(f"fitted slope {table.fitted_slope:.4f}")

# diag(1, 1, (1 + x1)^2) is realized exactly by wrapping the plate around an
# axis: ((1 + x1) cos x3, -(1 + x1) sin x3, x2).
u = exact_flat((1.0, 0.0))
for h in (0.1, 0.01):
    print(f"exact immersion, h = {h}: E^h = {energy_Eh(u.metric(), model, u, h):.2e}")
