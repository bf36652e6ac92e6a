"""Desk-scale scenario presets.

Every preset uses ``direct`` accuracy with an explicit control loop: the
worst-case constants make ``L`` (and for local circuits ``tau``) far larger
than a desk-scale run needs.
"""

from __future__ import annotations

import copy

from ..errors import ConfigurationError
from .config import ExperimentModel

FIG2_EPS = 0.04
FIG5_EPS = 0.01


def _fig2(n: int) -> dict:
    eps = FIG2_EPS
    return {
        "scenario": "fig2_noise",
        "repetitions": 5,
        "run": {
            "eps": eps,
            "accuracy_mode": "direct",
            "eps_prime": eps / 2,
            "recycling": "last_step",
            "ensemble": {"family": "haar", "n_qudits": n},
        },
        "variants": [
            {"name": "noiseless"},
            {"name": "white_noise", "run": {"oracle": {"channels": [{"kind": "white_noise", "strength": eps / 4}]}}},
            {"name": "amplitude_damping", "run": {"oracle": {"channels": [{"kind": "amplitude_damping", "strength": eps / 4}]}}},
        ],
    }


def _fig3(n: int) -> dict:
    eps = 0.05
    variants = []
    for k in sorted({1, 2, n}):
        for target in ("haar_pure", "ghz"):
            variants.append(
                {
                    "name": f"k{k}_{target}",
                    "run": {"ensemble": {"family": "local_circuit", "n_qudits": n, "locality": k}},
                    "target": {"kind": target},
                }
            )
    return {
        "scenario": "fig3_locality",
        "repetitions": 3,
        "run": {
            "eps": eps,
            "accuracy_mode": "direct",
            "eps_prime": eps / 2,
            "control_loop": 50,
            "max_bases": 1000,
            "ensemble": {"family": "local_circuit", "n_qudits": n, "locality": n},
            "oracle": {"channels": [{"kind": "white_noise", "strength": eps / 4}]},
        },
        "variants": variants,
    }


def _fig5(n: int) -> dict:
    return {
        "scenario": "fig5_few_bases",
        "repetitions": 3,
        "distance_rows": "fresh",
        "run": {
            "eps": FIG5_EPS,
            "accuracy_mode": "direct",
            "recycling": "complete",
            "max_bases": 15,
            "control_loop": 15,
            "oracle": {"channels": [{"kind": "amplitude_damping", "strength": 0.005}]},
        },
        "variants": [{"name": f"n{m}", "run": {"ensemble": {"family": "haar", "n_qudits": m}}} for m in range(min(4, n), n + 1)],
    }


def _custom(n: int) -> dict:
    return {
        "scenario": "custom",
        "repetitions": 1,
        "run": {"eps": 0.05, "accuracy_mode": "direct", "eps_prime": 0.025, "ensemble": {"family": "haar", "n_qudits": n}},
    }


PRESETS = {
    "fig2_noise": (_fig2, 6, "noise robustness: none, white noise and amplitude damping at eps/4"),
    "fig3_locality": (_fig3, 6, "k-local random circuits, k in {1, 2, n}, on Haar and GHZ targets"),
    "fig5_few_bases": (_fig5, 8, "15 Haar bases with complete recycling, n = 4..N, amplitude damping 0.005"),
    "custom": (_custom, 3, "single noiseless run with an exact oracle"),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset_description(name: str) -> str:
    return PRESETS[name][2]


def preset(name: str, n: int | None = None, **overrides) -> ExperimentModel:
    """Build a preset; ``n`` overrides the system size (upper end for ``fig5_few_bases``)."""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    build, default_n, _ = PRESETS[name]
    data = copy.deepcopy(build(n or default_n))
    data.update(overrides)
    return ExperimentModel.model_validate(data)
