"""Named experiment presets in desk-scale and full-scale variants.

Desk presets shrink the full-scale scenarios to N_tx=8, K=12, G=3 and 20
realizations, which keeps the overloaded regime (more users than transmit
antennas) while finishing in minutes. Full-scale presets keep K=60, G=4,
N_tx=12 and 100 realizations and can take many hours.
"""

from __future__ import annotations

import dataclasses

from .config import ConfigError, ScenarioConfig, SweepAxis

PRESET_NAMES = ("fig1", "fig2", "fig3", "fig4", "fig5")

_DESK_BASE = dict(n_tx=8, n_rx=2, num_users=12, num_groups=3, gamma_db=4.0, n_rf=5,
                  n_iter=2, n_rand=100, n_realizations=20, mode="hybrid")
_FULL_BASE = dict(n_tx=12, n_rx=2, num_users=60, num_groups=4, n_realizations=100, mode="both")


def _desk(name: str) -> ScenarioConfig:
    base = dict(_DESK_BASE)
    if name == "fig1":
        base["sweep"] = (SweepAxis("n_rf", (3, 5, 8)),)
    elif name == "fig2":
        # the full-scale study uses 8 of 12 RF chains; 5 of 8 keeps that ratio
        base["sweep"] = (SweepAxis("n_rx", (1, 2)),)
    elif name == "fig3":
        base["sweep"] = (SweepAxis("n_rand_iter", ((1, 2), (25, 2), (100, 2))),)
    elif name == "fig4":
        base.update(n_rx=4)
    elif name == "fig5":
        return _fig5()
    return ScenarioConfig(**base)


def _full(name: str) -> ScenarioConfig:
    base = dict(_FULL_BASE)
    if name == "fig1":
        base.update(gamma_db=4.0, n_rf=8, n_iter=3, n_rand=500,
                    sweep=(SweepAxis("gamma", (4.0, 6.0, 8.0)), SweepAxis("n_rf", tuple(range(5, 12)))))
    elif name == "fig2":
        base.update(gamma_db=5.0, n_rf=8, n_iter=4, n_rand_rule=True,
                    sweep=(SweepAxis("n_rx", (1, 2, 3, 4, 5)),))
    elif name == "fig3":
        pairs = tuple((r, i) for i in (1, 2, 3, 4, 5) for r in (1, 10, 25, 50, 75, 100, 500, 1000))
        base.update(gamma_db=5.0, n_rf=8, n_iter=1, n_rand=1, sweep=(SweepAxis("n_rand_iter", pairs),))
    elif name == "fig4":
        # mean correlation falls as N_rx grows; 4 puts intra near 0.22 and inter near 0.11
        base.update(gamma_db=5.0, n_rf=8, n_rx=4)
    elif name == "fig5":
        return _fig5()
    return ScenarioConfig(**base)


def _fig5() -> ScenarioConfig:
    return ScenarioConfig(n_tx=8, n_rx=2, num_users=4, num_groups=4, n_rf=4, gamma_db=5.0,
                          aod_means=(-60.0, -20.0, 20.0, 60.0), spread_aod=5.0,
                          n_iter=2, n_rand=100, n_realizations=1, mode="hybrid")


def preset(name: str, full_scale: bool = False) -> ScenarioConfig:
    """Return the named preset; ``full_scale`` selects the long-running variant."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"preset: unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")
    return _full(name) if full_scale else _desk(name)


def override(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy of ``cfg`` with ``None``-valued changes ignored."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(cfg, **changes) if changes else cfg
