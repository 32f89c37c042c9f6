"""Run configuration: a YAML file with one block per concern.

Example::

    command: threshold
    output: out/threshold
    potential:
      shape: square
      vb_over_hbar_per_s: 400
      d_um: 5

Values use the physical units named in the keys (1/s, um, cm/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .errors import ConfigError
from .potential import PotentialSpec
from .wavepacket import CondensateParams, Grid

COMMANDS = ("curve", "scan", "fit", "poles", "threshold", "wavepacket")

_BLOCK_KEYS = {
    "curve": {"v_min_cm_per_s", "v_max_cm_per_s", "n_points"},
    "scan": {"depths_per_s", "depth_range_per_s", "window_cm_per_s"},
    "poles": {"vw_start_per_s", "vw_end_per_s", "n_pre", "n_post"},
    "wavepacket": {"condensate", "grid", "dt_s", "ground_dt_s", "snapshot_times_s"},
}
_CONDENSATE_KEYS = {"N": "N", "a_m": "a", "omega_x_per_s": "omega_x", "omega_yz_per_s": "omega_yz",
                    "v0_cm_per_s": "v0", "x_trap_um": "x_trap"}
_GRID_KEYS = {"x_min_um": "x_min", "x_max_um": "x_max", "n": "n"}


@dataclass
class RunConfig:
    command: str
    potential: PotentialSpec
    output: str = "out"
    blocks: dict = field(default_factory=dict)

    def block(self, name: str) -> dict:
        return self.blocks.get(name, {})

    # -- typed accessors --------------------------------------------------------

    def depths(self) -> list[float]:
        b = self.block("scan")
        if "depths_per_s" in b:
            return [float(x) for x in b["depths_per_s"]]
        if "depth_range_per_s" in b:
            r = b["depth_range_per_s"]
            try:
                start, stop, step = (float(r[key]) for key in ("start", "stop", "step"))
            except (KeyError, TypeError) as exc:
                raise ConfigError("scan.depth_range_per_s", "needs start, stop and step") from exc
            return list(np.arange(start, stop + 0.5 * step, step))
        raise ConfigError("scan.depths_per_s", "missing (or give depth_range_per_s)")

    def condensate(self) -> CondensateParams:
        raw = self.block("wavepacket").get("condensate", {})
        return CondensateParams(**_rename(raw, _CONDENSATE_KEYS, "wavepacket.condensate"))

    def grid(self) -> Grid:
        raw = self.block("wavepacket").get("grid", {})
        kw = _rename(raw, _GRID_KEYS, "wavepacket.grid")
        if "n" in kw:
            kw["n"] = int(kw["n"])
        return Grid(**kw)


def _rename(raw: dict, table: dict, where: str) -> dict:
    out = {}
    for key, value in (raw or {}).items():
        if key not in table:
            raise ConfigError(f"{where}.{key}", "unknown key")
        try:
            out[table[key]] = float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.{key}", "expected a number") from exc
    return out


def parse_config(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a mapping")
    allowed = {"command", "output", "potential"} | set(_BLOCK_KEYS)
    for key in data:
        if key not in allowed:
            raise ConfigError(key, "unknown key")
    command = data.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}")
    if "potential" not in data or not isinstance(data["potential"], dict):
        raise ConfigError("potential", "missing potential block")
    spec = PotentialSpec.from_dict(data["potential"])
    blocks = {}
    for name, keys in _BLOCK_KEYS.items():
        block = data.get(name) or {}
        if not isinstance(block, dict):
            raise ConfigError(name, "must be a mapping")
        for key in block:
            if key not in keys:
                raise ConfigError(f"{name}.{key}", "unknown key")
        blocks[name] = block
    cfg = RunConfig(command, spec, str(data.get("output", "out")), blocks)
    # validate the blocks the command needs before any computation
    if command == "wavepacket":
        cfg.condensate()
        cfg.grid()
    if command in ("scan", "fit"):
        cfg.depths()
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from exc
    return parse_config(data)
