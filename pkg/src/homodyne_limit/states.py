"""Signal states: pure vectors and finite mixtures, plus the JSON state-description format.

Accepted JSON forms::

    {"type": "coherent", "beta": [re, im]}
    {"type": "fock", "n": k}
    {"type": "vector", "amps": [[re, im], ...]}
    {"type": "mixture", "components": [{"weight": w, "state": <state>}, ...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .fock import FockVector, coherent_state, fock_state, vector_state

WEIGHT_TOL = 1e-9


class StateSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SignalStateSpec:
    """A density operator written as sum_j t_j |phi_j><phi_j|."""

    components: tuple[tuple[float, FockVector], ...]
    label: str = ""

    def __post_init__(self):
        if not self.components:
            raise StateSpecError("state needs at least one component")
        weights = [w for w, _ in self.components]
        if any(w <= 0 for w in weights):
            raise StateSpecError("mixture weights must be positive")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise StateSpecError(f"mixture weights sum to {math.fsum(weights)}, not 1")

    @classmethod
    def pure(cls, vec: FockVector, label: str = "") -> "SignalStateSpec":
        return cls(((1.0, vec),), label)

    @classmethod
    def mixture(cls, parts, label: str = "") -> "SignalStateSpec":
        """Mix (weight, SignalStateSpec) pairs, flattening nested mixtures."""
        comps = []
        for w, spec in parts:
            for t, vec in spec.components:
                comps.append((w * t, vec))
        return cls(tuple(comps), label)

    @property
    def is_pure(self) -> bool:
        return len(self.components) == 1

    @property
    def dim(self) -> int:
        return max(vec.dim for _, vec in self.components)

    @property
    def trunc_deficit(self) -> float:
        return math.fsum(w * vec.trunc_deficit for w, vec in self.components)

    def mean_photons(self) -> float:
        return math.fsum(w * vec.mean_photons() for w, vec in self.components)

    def phase_rotated(self, theta: float) -> "SignalStateSpec":
        return SignalStateSpec(
            tuple((w, vec.phase_rotated(theta)) for w, vec in self.components), self.label
        )


def coherent(beta: complex, dim: int | None = None) -> SignalStateSpec:
    beta = complex(beta)
    return SignalStateSpec.pure(coherent_state(beta, dim), label=f"coherent({beta.real:g},{beta.imag:g})")


def fock(n: int, dim: int | None = None) -> SignalStateSpec:
    return SignalStateSpec.pure(fock_state(n, dim), label=f"fock({n})")


def _complex(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    if isinstance(pair, (list, tuple)) and len(pair) == 2:
        return complex(float(pair[0]), float(pair[1]))
    raise StateSpecError(f"expected [re, im], got {pair!r}")


def parse_state(obj, dim: int | None = None) -> SignalStateSpec:
    """Build a SignalStateSpec from a decoded state-description object."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise StateSpecError("state description must be an object with a 'type' field")
    kind = obj["type"]
    label = str(obj.get("name", ""))
    try:
        if kind == "coherent":
            spec = coherent(_complex(obj["beta"]), dim)
        elif kind == "fock":
            n = obj["n"]
            if not isinstance(n, int) or n < 0:
                raise StateSpecError("fock 'n' must be a nonnegative integer")
            spec = fock(n, dim)
        elif kind == "vector":
            amps = [_complex(p) for p in obj["amps"]]
            spec = SignalStateSpec.pure(vector_state(amps, normalize=bool(obj.get("normalize", False))), "vector")
        elif kind == "mixture":
            parts = [(float(c["weight"]), parse_state(c["state"], dim)) for c in obj["components"]]
            spec = SignalStateSpec.mixture(parts, "mixture")
        else:
            raise StateSpecError(f"unknown state type {kind!r}")
    except KeyError as exc:
        raise StateSpecError(f"state of type {kind!r} is missing field {exc}") from None
    except StateSpecError:
        raise
    except ValueError as exc:
        raise StateSpecError(str(exc)) from None
    if label:
        spec = SignalStateSpec(spec.components, label)
    return spec


def load_state(text_or_path: str, dim: int | None = None) -> SignalStateSpec:
    """Parse an inline JSON string or a path to a JSON file."""
    text = text_or_path.strip()
    if not text.startswith("{"):
        text = Path(text_or_path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateSpecError(f"invalid JSON state description: {exc}") from None
    return parse_state(obj, dim)


def load_states(path: str, dim: int | None = None) -> list[SignalStateSpec]:
    """A states file holds a list of descriptions, or {"states": [...]}."""
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        obj = obj.get("states", [obj] if "type" in obj else [])
    if not isinstance(obj, list):
        raise StateSpecError("states file must hold a list of state descriptions")
    specs = []
    for i, item in enumerate(obj):
        spec = parse_state(item, dim)
        if not spec.label:
            spec = SignalStateSpec(spec.components, f"state{i}")
        specs.append(spec)
    return specs
