"""Raster output: binary PPM (P6) images of dilatation fields and deformed grids.

The dilatation render maps arg(mu) to hue and |mu|/k to value with full
saturation (HSV); zero fields come out black. The deformed-grid render traces
the images of coordinate lines under a map in black on white. PPM is used
because it is codec-free and bit-exact.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .grid import Field
from .solver import MapField


def write_ppm(rgb: np.ndarray, path) -> str:
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ConfigurationError("write_ppm expects a (H, W, 3) uint8 array")
    height, width = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
    return str(path)


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def render_dilatation(field: Field, path, k: float = 1.0) -> str:
    """|mu| as value, arg(mu) as hue (HSV, S = 1, V = |mu|/k clipped to [0,1])."""
    if field.grid.d != 2:
        raise ConfigurationError("dilatation render requires d = 2")
    mu = field.samples
    hue = (np.angle(mu) / (2 * np.pi)) % 1.0
    val = np.clip(np.abs(mu) / max(k, 1e-300), 0.0, 1.0)
    sat = np.ones_like(val)
    rgb = _hsv_to_rgb(hue, sat, val)
    # image row = decreasing x2, column = increasing x1
    rgb = np.transpose(rgb, (1, 0, 2))[::-1]
    return write_ppm(np.round(rgb * 255.0).astype(np.uint8), path)


def render_deformed_grid(F: MapField, path, window: float = 1.25, lines: int = 17,
                         samples: int = 2048, size: int = 512) -> str:
    """Rasterize the images of coordinate lines under F, black on white."""
    canvas = np.full((size, size), 255, dtype=np.uint8)
    coords = np.linspace(-window, window, lines)
    ts = np.linspace(-window, window, samples)
    pts = []
    for c in coords:
        pts.append(c + 1j * ts)   # vertical line x = c
        pts.append(ts + 1j * c)   # horizontal line y = c
    z = np.concatenate(pts)
    w = F.evaluate(z)
    # view window scaled to the image; out-of-window points dropped
    u = (w.real + window) / (2 * window)
    v = (w.imag + window) / (2 * window)
    keep = (u >= 0) & (u < 1) & (v >= 0) & (v < 1)
    col = np.floor(u[keep] * size).astype(int)
    row = size - 1 - np.floor(v[keep] * size).astype(int)
    canvas[row, col] = 0
    rgb = np.stack([canvas] * 3, axis=-1)
    return write_ppm(rgb, path)
