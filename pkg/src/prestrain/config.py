"""Flat experiment configuration with JSON round-trip and metric/field builders."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .elastic import ElasticModel
from .energy3d import DEFAULT_H_LIST
from .fields import Poly2D, PolyVectorField
from .geometry import (
    conformal,
    diag_lambda,
    identity_metric,
    polynomial_metric,
    read_sampled_csv,
)
from .grid import Grid2D
from .optim import OptimizerOptions

METRIC_KINDS = ("identity", "diag_lambda", "conformal_lambda", "polynomial", "sampled")
ENTRY_ORDER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
MAX_DEGREE = 4


def parse_floats(text) -> list:
    """``"1,0,0.5"`` or a list of numbers to a list of floats."""
    if text is None:
        return None
    if isinstance(text, str):
        text = [t for t in text.replace(" ", "").split(",") if t]
    return [float(t) for t in text]


@dataclass
class ExperimentConfig:
    metric: str = "identity"
    lambda_poly: list | None = None
    f_poly: list | None = None
    entries: list | None = None  # six coefficient lists, G11 G12 G13 G22 G23 G33
    file: str | None = None
    immersion_file: str | None = None
    mu: float = 1.0
    lambdaL: float = 1.0
    grid: int = 33
    n3: int = 6
    tol: float | None = None
    h: float = 0.03125
    h_list: list = field(default_factory=lambda: list(DEFAULT_H_LIST))
    family: str = "kirchhoff"
    gtol: float = 1e-9
    max_iters: int = 5000
    memory: int = 10
    v_poly: list = field(default_factory=lambda: [0.0])
    w1_poly: list = field(default_factory=lambda: [0.0])
    w2_poly: list = field(default_factory=lambda: [0.0])
    V1_poly: list = field(default_factory=lambda: [0.0])
    V2_poly: list = field(default_factory=lambda: [0.0])
    V3_poly: list = field(default_factory=lambda: [0.0])
    A: list = field(default_factory=lambda: [1.0, 0, 0, 0, 1.0, 0, 0, 0, 1.0])
    F: list = field(default_factory=lambda: [1.0, 0, 0, 1.0])

    def __post_init__(self):
        if self.metric not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.metric!r}; choose from {METRIC_KINDS}")
        for name in ("lambda_poly", "f_poly", "h_list", "v_poly", "w1_poly", "w2_poly",
                     "V1_poly", "V2_poly", "V3_poly", "A", "F"):
            setattr(self, name, parse_floats(getattr(self, name)))
        if self.entries is not None:
            self.entries = [parse_floats(e) for e in self.entries]
        self.mu = float(self.mu)
        self.lambdaL = float(self.lambdaL)
        self.grid = int(self.grid)
        self.n3 = int(self.n3)
        self.h = float(self.h)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    # -- builders ------------------------------------------------------------

    def model(self) -> ElasticModel:
        return ElasticModel(self.mu, self.lambdaL)

    def options(self) -> OptimizerOptions:
        return OptimizerOptions(self.gtol, self.max_iters, self.memory)

    def grid2d(self) -> Grid2D:
        return Grid2D.square(self.grid)

    def build_metric(self):
        kind = self.metric
        if kind == "identity":
            return identity_metric()
        if kind == "diag_lambda":
            return diag_lambda(_poly(self.lambda_poly, "lambda_poly"))
        if kind == "conformal_lambda":
            return conformal(_poly(self.f_poly, "f_poly"))
        if kind == "polynomial":
            if not self.entries or len(self.entries) != 6:
                raise ValueError("polynomial metrics need six coefficient lists in 'entries'")
            return polynomial_metric(
                {ij: _poly(c, "entries") for ij, c in zip(ENTRY_ORDER, self.entries)}
            )
        if not self.file:
            raise ValueError("sampled metrics need a file")
        return read_sampled_csv(self.file)

    def V_field(self) -> PolyVectorField:
        return PolyVectorField(
            [_poly(self.V1_poly, "V1_poly"), _poly(self.V2_poly, "V2_poly"), _poly(self.V3_poly, "V3_poly")]
        )


def _poly(coeffs, name) -> Poly2D:
    if coeffs is None:
        raise ValueError(f"missing coefficients for {name}")
    p = Poly2D(coeffs)
    if p.degree > MAX_DEGREE:
        raise ValueError(f"{name}: total degree {p.degree} exceeds {MAX_DEGREE}")
    return p
