"""Parameter sets of the reference figure panels 2a ... 7f.

Every panel uses nbar1 = nbar2 = 10 and lambda = 1, so scaled and physical
time coincide.  Modulation frequencies are real multiples of pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import ModelParams

PI = math.pi

# (panel letters for gamma = 0, gamma > 0), shared settings, damping rate
_FAMILIES = {
    "2": (
        [("a", "b", {"mu": 0.0}), ("c", "d", {"mu": 3 * PI}), ("e", "f", {"mu": 10 * PI})],
        0.0005,
    ),
    "3": (
        [("a", "b", {"Delta1": 7.0, "Delta2": 7.0}),
         ("c", "d", {"Delta1": 17.0, "Delta2": 17.0}),
         ("e", "f", {"Delta1": 25.0, "Delta2": 25.0})],
        0.0005,
    ),
    "4": (
        [("a", "b", {"chi1": 0.01, "chi2": 0.01}),
         ("c", "d", {"chi1": 0.2, "chi2": 0.2}),
         ("e", "f", {"chi1": 0.5, "chi2": 0.5})],
        0.0004,
    ),
    "5": (
        [("a", "b", {"mu": 0.0}), ("c", "d", {"mu": 5 * PI}), ("e", "f", {"mu": 10 * PI})],
        0.001,
    ),
    "6": (
        [("a", "b", {"Delta1": 10.0, "Delta2": 10.0}),
         ("c", "d", {"Delta1": 15.0, "Delta2": 15.0}),
         ("e", "f", {"Delta1": 25.0, "Delta2": 25.0})],
        0.001,
    ),
    "7": (
        [("a", "b", {"chi1": 0.01, "chi2": 0.01}),
         ("c", "d", {"chi1": 0.1, "chi2": 0.1}),
         ("e", "f", {"chi1": 0.5, "chi2": 0.5})],
        0.001,
    ),
}

OBSERVABLE = {"2": "W", "3": "W", "4": "W", "5": "C", "6": "C", "7": "C"}


@dataclass(frozen=True)
class FigurePreset:
    id: str
    params: ModelParams

    @property
    def observable(self) -> str:
        return OBSERVABLE[self.id[0]]


def _build() -> dict[str, FigurePreset]:
    table = {}
    base = ModelParams(lambda1=1.0, lambda2=1.0, nbar1=10.0, nbar2=10.0)
    for fig, (rows, gamma) in _FAMILIES.items():
        for free, damped, settings in rows:
            table[fig + free] = FigurePreset(fig + free, replace(base, **settings))
            table[fig + damped] = FigurePreset(
                fig + damped, replace(base, gamma1=gamma, gamma2=gamma, **settings)
            )
    return dict(sorted(table.items()))


PRESETS = _build()


def preset_ids() -> list[str]:
    return list(PRESETS)


def load_preset(preset_id: str, **overrides) -> ModelParams:
    """Model parameters of a figure panel, e.g. ``load_preset("4c")``.

    Keyword overrides (``tau_max=25`` and so on) are applied on top.
    """
    key = preset_id.strip().lower()
    if key not in PRESETS:
        raise KeyError(f"unknown preset {preset_id!r}; expected one of {', '.join(PRESETS)}")
    params = PRESETS[key].params
    return replace(params, **overrides) if overrides else params
