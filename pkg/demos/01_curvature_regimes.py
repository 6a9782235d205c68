"""Which prestrain metrics can a thin plate realize, and at what energy cost?

The six covariant Riemann components of G decide it. If all vanish the
metric is immersible and the energy can be zero. If only the three in-plane
ones vanish the best energy scales like h^4. Otherwise it scales like h^2.
"""

from prestrain import classify_regime, conformal, diag_lambda, identity_metric, polynomial_metric
from prestrain.geometry import COMPONENTS

cases = {
    "identity": identity_metric(),
    "diag(1, 1, (1 + 0.3 x1)^2)": diag_lambda([1, 0.6, 0, 0.09, 0, 0]),
    "diag(1, 1, 1 + x1^2)": diag_lambda([1, 0, 0, 1, 0, 0]),
    "exp(2 x1) Id": conformal([0, 1, 0]),
    "diag(1, 1 + x1^2, 1)": polynomial_metric({(1, 1): [1, 0, 0, 1, 0, 0]}),
}

print(f"{'metric':<28}" + "".join(f"{c:>10}" for c in COMPONENTS) + "   regime")
for name, metric in cases.items():
    rep = classify_regime(metric)
    row = "".join(f"{rep.sup_norms[c]:>10.2e}" for c in COMPONENTS)
    print(f"{name:<28}{row}   {rep.regime.value} (exit code {rep.regime.exit_code})")

# The stretched vertical direction of diag(1, 1, 1 + x1^2) bends the fibres
# without touching the midplane geometry: only R1313 is nonzero, and it is
# -1/(1 + x1^2)^2 (minus half the obstruction tensor).
