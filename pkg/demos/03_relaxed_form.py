"""The relaxed planar form Q_{2,A}.

Minimizing Q3(A^-1 [F | c] A^-1) over the free column c gives a quadratic
form in F. For A = Id it is the familiar plate form
2 mu |sym F|^2 + (2 mu lambdaL / (2 mu + lambdaL)) (tr F)^2.
"""

import numpy as np

from prestrain import ElasticModel, q2_reduced, q2a

model = ElasticModel(mu=1.0, lambdaL=1.0)
value, c = q2a(model, np.eye(3), np.eye(2))
print(f"Q2(Id) = {value:.12f}  (20/3 = {20 / 3:.12f}),  optimal c = {np.round(c, 12)}")

# Stretching only the normal direction leaves the form unchanged.
F = np.array([[0.3, -1.2], [0.4, 0.9]])
for s in (0.25, 4.0):
    print(f"A = diag(1, 1, {s}):  Q_2A / Q2 = {q2a(model, np.diag([1, 1, s]), F)[0] / q2_reduced(model, F):.12f}")

# An isotropic factor A = sqrt(lam) Id enters twice through A^-1 F A^-1, so
# the form picks up lam^-2.
for lam in (0.5, 2.0, 3.0):
    ratio = q2a(model, np.sqrt(lam) * np.eye(3), F)[0] / q2_reduced(model, F)
    print(f"A = sqrt({lam}) Id:  Q_2A / Q2 = {ratio:.12f}   lam^-2 = {lam ** -2:.12f}")
