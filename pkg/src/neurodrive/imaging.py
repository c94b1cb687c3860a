"""Raster helpers: interpolation to fixed-size RGB images, colormaps, PNG io."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DataError

IMAGE_SIDE = 224


def _asset_path(name: str):
    return resources.files("neurodrive.assets").joinpath(name)


def load_colormap(path=None) -> np.ndarray:
    """256x3 uint8 lookup table; defaults to the bundled perceptual map."""
    src = path if path is not None else _asset_path("spectro_colormap_v1.json")
    with open(src) as f:
        table = np.asarray(json.load(f), dtype=np.int64)
    if table.shape != (256, 3) or table.min() < 0 or table.max() > 255:
        raise DataError("colormap must be 256 [r,g,b] triples in 0..255")
    return table.astype(np.uint8)


def apply_colormap(norm: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] through a 256-entry table -> float RGB array."""
    idx = np.clip(np.round(norm * 255.0), 0, 255).astype(np.intp)
    return table[idx].astype(np.float64)


def idw_grid(points: np.ndarray, values: np.ndarray, side: int = 32) -> np.ndarray:
    """Inverse-distance-weighted (power 2) interpolation of scattered values.

    ``points`` are (n, 2) coordinates in [-1, 1]^2 with +y up; the output grid
    row 0 corresponds to y = +1 (image convention).
    """
    centers = -1.0 + 2.0 * (np.arange(side) + 0.5) / side
    gx, gy = np.meshgrid(centers, -centers)  # row 0 at the top (+y)
    dx = gx[..., None] - points[:, 0]
    dy = gy[..., None] - points[:, 1]
    w = 1.0 / (dx * dx + dy * dy + 1e-12)
    return (w * values).sum(axis=-1) / w.sum(axis=-1)


def zoom_bicubic(grid: np.ndarray, side: int = IMAGE_SIDE) -> np.ndarray:
    """Bicubic (order-3 spline) upsample of a square grid to side x side."""
    factor = side / grid.shape[0]
    return ndimage.zoom(grid, factor, order=3, mode="nearest", grid_mode=True)


def resize_bilinear(img: np.ndarray, side: int = IMAGE_SIDE) -> np.ndarray:
    """Bilinear resize of an (h, w, 3) float image to side x side."""
    factors = (side / img.shape[0], side / img.shape[1], 1.0)
    return ndimage.zoom(img, factors, order=1, mode="nearest", grid_mode=True)


def disc_mask(side: int = IMAGE_SIDE) -> np.ndarray:
    """Boolean mask of the disc inscribed in a side x side image."""
    c = (side - 1) / 2.0
    r = side / 2.0
    yy, xx = np.mgrid[0:side, 0:side]
    return (xx - c) ** 2 + (yy - c) ** 2 <= r * r


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Clip to [0, 1], scale to 0..255 and round to uint8."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def to_png_bytes(pixels: np.ndarray) -> bytes:
    """Encode an (h, w, 3) uint8 array as PNG (deterministic for fixed input)."""
    import io

    if pixels.dtype != np.uint8 or pixels.ndim != 3 or pixels.shape[2] != 3:
        raise DataError("expected (h, w, 3) uint8 pixels")
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_png(path, pixels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(to_png_bytes(pixels))
