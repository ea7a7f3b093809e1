"""Tolerances and budgets shared by every module."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class ToolConfig:
    membership_tol: float = 1e-9
    fiber_tol: float = 1e-7
    max_iter: int = 10000
    extent_cap: float = 1e3
    witness_margin: float = 1e-6
    eps_depth: int = 12
    pairs: int = 200
    scales: int = 3
    seed: int = 42

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "seed":
                if value < 0:
                    raise ValueError("seed must be non-negative")
            elif not value > 0:
                raise ValueError(f"{f.name} must be positive, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def override(self, **changes) -> "ToolConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "ToolConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


DEFAULT = ToolConfig()
