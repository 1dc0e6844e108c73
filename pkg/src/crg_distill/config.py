"""Run configuration shared by the CLI, the simulator, and bindings.

``n`` is either an absolute eigenvector count (int >= 1) or a fraction of
the channel count (float in (0, 1), floored to at least 1).  The default
0.5 matches the mid-range plateau of the embedding-size sweep.

A parsed config echoes back byte-identically under serialize/parse, which
the CLI relies on for reproducible reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import BadN
from .losses import LossWeights

_FIELD_ORDER = (
    "alpha",
    "beta",
    "gamma",
    "n",
    "use_spatial_mask",
    "use_channel_mask",
    "use_relation_mask",
    "use_vertex",
    "use_edge",
    "use_spectral",
    "relation_softmax",
    "eigen_selection",
    "spectral_variant",
    "adapter",
    "seed",
    "threads",
    "output",
)


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    n: int | float = 0.5
    use_spatial_mask: bool = True
    use_channel_mask: bool = True
    use_relation_mask: bool = True
    use_vertex: bool = True
    use_edge: bool = True
    use_spectral: bool = True
    relation_softmax: str = "global"
    eigen_selection: str = "largest"
    spectral_variant: str = "vector"
    adapter: str | None = None
    seed: int = 0
    threads: int = 1
    output: str | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if isinstance(self.n, bool) or not isinstance(self.n, (int, float)):
            raise BadN(f"n must be an int count or a float fraction, got {self.n!r}")
        if isinstance(self.n, int):
            if self.n < 1:
                raise BadN(f"count n must be >= 1, got {self.n}")
        elif not 0.0 < self.n < 1.0:
            raise BadN(f"fractional n must lie in (0, 1), got {self.n}")
        if self.relation_softmax not in ("global", "row"):
            raise ValueError(f"relation_softmax must be global|row, got {self.relation_softmax!r}")
        if self.eigen_selection not in ("largest", "smallest"):
            raise ValueError(f"eigen_selection must be largest|smallest, got {self.eigen_selection!r}")
        if self.spectral_variant not in ("vector", "value"):
            raise ValueError(f"spectral_variant must be vector|value, got {self.spectral_variant!r}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")

    @property
    def weights(self) -> LossWeights:
        return LossWeights(self.alpha, self.beta, self.gamma)

    def resolve_n(self, channels: int) -> int:
        """Absolute embedding size for a map with ``channels`` channels."""
        if isinstance(self.n, int):
            return self.n
        return max(1, math.floor(self.n * channels))

    def loss_options(self) -> dict:
        """Keyword arguments for multi_level_loss and the simulator."""
        return {
            "use_vertex": self.use_vertex,
            "use_edge": self.use_edge,
            "use_spectral": self.use_spectral,
            "use_spatial_mask": self.use_spatial_mask,
            "use_channel_mask": self.use_channel_mask,
            "use_relation_mask": self.use_relation_mask,
            "relation_softmax": self.relation_softmax,
            "eigen_selection": self.eigen_selection,
            "spectral_variant": self.spectral_variant,
        }

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _FIELD_ORDER}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)
