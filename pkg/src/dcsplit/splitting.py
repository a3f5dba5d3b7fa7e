"""Lie and Strang compositions of the two sub-flow propagators.

One splitting step spans exactly the requested ``dt``; any internal
substepping happens inside the propagators.  The default composition ends
with the reaction flow, which behaves best for relatively large steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .subsolvers import Propagator

__all__ = ["SplittingScheme", "splitting_step", "LIE", "STRANG"]

_ORDER_OF_KIND = {"lie": 1, "strang": 2}


@dataclass(frozen=True)
class SplittingScheme:
    """Composition pattern of the two sub-flows.

    ``order_hat`` is the classical order of the composition: 1 for Lie,
    2 for Strang.
    """

    kind: str = "lie"
    ordering: str = "reaction-last"
    order_hat: int = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in _ORDER_OF_KIND:
            raise ValueError(f"unknown splitting kind {self.kind!r}")
        if self.ordering not in ("reaction-last", "diffusion-last"):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        expected = _ORDER_OF_KIND[self.kind]
        if self.order_hat is None:
            object.__setattr__(self, "order_hat", expected)
        elif self.order_hat != expected:
            raise ValueError(f"order_hat={self.order_hat} inconsistent with kind {self.kind!r}")


LIE = SplittingScheme("lie")
STRANG = SplittingScheme("strang")


def splitting_step(scheme: SplittingScheme, diffusion: Propagator, reaction: Propagator,
                   u0, t0: float, dt: float):
    """One composed step over ``[t0, t0 + dt]``; the rightmost flow acts first."""
    if dt < 0.0:
        raise ValueError("negative splitting step")
    if dt == 0.0:
        return u0.copy()
    first, last = (diffusion, reaction) if scheme.ordering == "reaction-last" else (reaction, diffusion)
    if scheme.kind == "lie":
        return last.advance(first.advance(u0, t0, dt), t0, dt)
    half = 0.5 * dt
    u = last.advance(u0, t0, half)
    u = first.advance(u, t0, dt)
    return last.advance(u, t0 + half, half)
