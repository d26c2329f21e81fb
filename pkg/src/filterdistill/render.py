"""Deterministic heatmap rendering of filters as binary PPM (P6) images.

Color map is a fixed diverging blue-white-red: with t = clamp(v/vmax, -1, 1),
red = 255 for t >= 0 else round(255*(1+t)); blue = 255 for t <= 0 else
round(255*(1-t)); green = round(255*(1-|t|)). Output bytes depend only on
the bank and the config.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyBank, IoFailure
from .filterbank import FilterBank

VMAX_PER_FILTER = "per_filter_absmax"
VMAX_GLOBAL = "global"


@dataclass(frozen=True)
class RenderConfig:
    cell_pixels: int = 32
    vmax_mode: str = VMAX_PER_FILTER

    def __post_init__(self):
        if self.cell_pixels < 1:
            raise ValueError("cell_pixels must be >= 1")
        if self.vmax_mode not in (VMAX_PER_FILTER, VMAX_GLOBAL):
            raise ValueError(f"unknown vmax_mode {self.vmax_mode!r}")


def render_values(values: np.ndarray, vmax: float, cell_pixels: int) -> bytes:
    if vmax <= 0.0:
        t = np.zeros_like(values)
    else:
        t = np.clip(values / vmax, -1.0, 1.0)
    red = np.where(t >= 0, 255.0, np.round(255.0 * (1.0 + t)))
    blue = np.where(t <= 0, 255.0, np.round(255.0 * (1.0 - t)))
    green = np.round(255.0 * (1.0 - np.abs(t)))
    rgb = np.stack([red, green, blue], axis=-1).astype(np.uint8)
    rgb = np.repeat(np.repeat(rgb, cell_pixels, axis=0), cell_pixels, axis=1)
    h, w = rgb.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes()


def render_bank(bank: FilterBank, config: RenderConfig, out_dir) -> list:
    """One PPM per filter; returns the written paths in bank order."""
    if len(bank) == 0:
        raise EmptyBank("nothing to render")
    out_dir = Path(out_dir)
    if config.vmax_mode == VMAX_GLOBAL:
        global_vmax = float(np.max(np.abs(bank.matrix())))
    paths = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, entry in enumerate(bank):
            vmax = (
                global_vmax
                if config.vmax_mode == VMAX_GLOBAL
                else float(np.max(np.abs(entry.filter.values)))
            )
            data = render_values(entry.filter.values, vmax, config.cell_pixels)
            path = out_dir / (
                f"f{i:04d}_l{entry.layer_index}_c{entry.channel_index}.ppm"
            )
            path.write_bytes(data)
            paths.append(path)
    except OSError as exc:
        raise IoFailure(f"cannot write to {out_dir}: {exc}") from exc
    return paths
