"""Contour pieces with Moebius charts onto (-1, 1) and canonical RH problems."""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .chebyshev import cheb_points
from .exceptions import ContourTopologyError, InvalidArgumentError


@dataclass(frozen=True)
class MoebiusMap:
    """M(z) = (a z + b) / (c z + d)."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) == 0:
            raise InvalidArgumentError("degenerate Moebius map (ad - bc = 0)")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def inverse(self):
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * self.d - self.b * self.c) / (self.c * z + self.d) ** 2

    @property
    def is_affine(self):
        return self.c == 0

    @property
    def image_of_infinity(self):
        """M(inf), or None when the map is affine."""
        if self.is_affine:
            return None
        return self.a / self.c

    @classmethod
    def segment(cls, start, end):
        """Affine chart sending start -> -1 and end -> 1."""
        start, end = complex(start), complex(end)
        return cls(2.0, -(start + end), 0.0, end - start)

    @classmethod
    def through(cls, start, mid, end):
        """Chart sending (start, mid, end) -> (-1, 0, 1); circular arcs map to (-1, 1)."""
        a, c, b = complex(start), complex(mid), complex(end)
        A = b - a
        B = b - c
        return cls(A, -A * c, 2 * B - A, A * c - 2 * B * a)


@dataclass(frozen=True)
class ContourComponent:
    """One oriented contour piece.

    The chart maps the piece onto (-1, 1) preserving orientation, so the
    piece runs from ``chart^{-1}(-1)`` to ``chart^{-1}(1)`` and its left (+)
    side corresponds to the upper half of the chart plane.
    """

    chart: MoebiusMap
    degree: int = 32
    start_label: Optional[str] = None
    end_label: Optional[str] = None
    name: str = ""

    @property
    def inverse_chart(self):
        return self.chart.inverse()

    @property
    def start(self):
        return complex(self.inverse_chart(-1.0))

    @property
    def end(self):
        return complex(self.inverse_chart(1.0))

    def endpoint(self, p):
        return self.start if p < 0 else self.end

    def label(self, p):
        return self.start_label if p < 0 else self.end_label

    def points(self, n=None):
        """Mapped collocation points, ordered along the orientation."""
        return self.inverse_chart(cheb_points(self.degree if n is None else n))

    def with_degree(self, n):
        return replace(self, degree=int(n))

    @classmethod
    def segment(cls, start, end, **kw):
        return cls(MoebiusMap.segment(start, end), **kw)

    @classmethod
    def arc(cls, center, radius, angle_start, angle_end, **kw):
        """Circular arc traversed from angle_start to angle_end (either sense)."""
        pts = [center + radius * np.exp(1j * t)
               for t in (angle_start, 0.5 * (angle_start + angle_end), angle_end)]
        return cls(MoebiusMap.through(*pts), **kw)


JumpFunction = Callable[[int, np.ndarray], np.ndarray]


@dataclass
class CanonicalRHProblem:
    """Contour components plus a jump G on each: Psi_+ = Psi_- G, Psi -> I at infinity.

    ``jump(i, z)`` returns an array of shape z.shape + (2, 2) for points z on
    component i.  ``junctions`` maps endpoint labels to their location.
    """

    components: list
    jump: JumpFunction
    junctions: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.check_topology()

    def check_topology(self, tol=1e-12):
        for comp in self.components:
            for p in (-1, 1):
                lab = comp.label(p)
                if lab is None:
                    continue
                if lab not in self.junctions:
                    raise ContourTopologyError(f"{comp.name}: unknown junction label {lab!r}")
                z0 = self.junctions[lab]
                if abs(comp.endpoint(p) - z0) > tol * max(1.0, abs(z0)):
                    raise ContourTopologyError(
                        f"{comp.name}: endpoint {comp.endpoint(p)} does not meet junction {lab!r} at {z0}")
            if comp.start_label is not None and comp.start_label == comp.end_label:
                raise ContourTopologyError(f"{comp.name}: closed components must be split into arcs")

    def incident(self, label):
        """(component index, p) pairs meeting at a junction label."""
        out = []
        for i, comp in enumerate(self.components):
            for p in (-1, 1):
                if comp.label(p) == label:
                    out.append((i, p))
        return out

    def with_degrees(self, degrees):
        if np.isscalar(degrees):
            degrees = [degrees] * len(self.components)
        if len(degrees) != len(self.components):
            raise InvalidArgumentError("one degree per component is required")
        comps = [c.with_degree(n) for c, n in zip(self.components, degrees)]
        return CanonicalRHProblem(comps, self.jump, dict(self.junctions), self.name)

    def jump_at(self, i, z):
        return np.asarray(self.jump(i, np.asarray(z, dtype=complex)), dtype=complex)

    def check_jumps(self, samples=17, tol=1e-12):
        """Sample each jump: finite everywhere and det G bounded away from 0."""
        for i, comp in enumerate(self.components):
            z = comp.points(samples)
            G = self.jump_at(i, z)
            if not np.all(np.isfinite(G)):
                raise InvalidArgumentError(f"non-finite jump on {comp.name}")
            if np.any(np.abs(np.linalg.det(G)) < tol):
                raise InvalidArgumentError(f"singular jump on {comp.name}")

    def junction_product(self, label):
        """Ordered product of jumps met while circling a junction counterclockwise.

        Outgoing components contribute G, incoming ones G^{-1}; the result is
        I when the jumps are consistent at the junction.
        """
        z0 = self.junctions[label]
        entries = []
        for i, p in self.incident(label):
            comp = self.components[i]
            tangent = complex(comp.inverse_chart.deriv(float(p)))
            outward = tangent if p < 0 else -tangent
            G = self.jump_at(i, np.array([z0]))[0]
            M = G if p < 0 else np.linalg.inv(G)
            entries.append((np.angle(outward), M))
        entries.sort(key=lambda e: e[0])
        out = np.eye(2, dtype=complex)
        for _, M in entries:
            out = out @ M
        return out
