"""Image -> 4096-dim feature backends.

The deterministic projection backend stands in for the pre-trained networks
the full pipeline would use: it is seeded, pure, and cheap. An adapter for an
external TorchScript model with a declared 4096-wide output is optional.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DataError, DimensionMismatchError
from .imaging import IMAGE_SIDE, resize_bilinear

EMBED_DIM = 4096
_GRAY_SIDE = 32


def prepare_image(img: np.ndarray) -> np.ndarray:
    """Coerce an RGB array to 224x224x3 uint8, resizing bilinearly if needed."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DataError(f"expected (h, w, 3) RGB image, got shape {img.shape}")
    if img.dtype != np.uint8:
        if np.issubdtype(img.dtype, np.floating) and img.max() <= 1.0:
            img = np.round(img * 255.0)
        img = np.clip(img, 0, 255).astype(np.uint8)
    if img.shape[:2] != (IMAGE_SIDE, IMAGE_SIDE):
        img = np.clip(np.round(resize_bilinear(img.astype(np.float64))), 0, 255).astype(np.uint8)
    return img


def validate_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.shape != (IMAGE_SIDE, IMAGE_SIDE, 3) or img.dtype != np.uint8:
        raise DataError(
            f"expected ({IMAGE_SIDE}, {IMAGE_SIDE}, 3) uint8 image, got "
            f"shape {img.shape} dtype {img.dtype}"
        )
    return img


class DeterministicProjectionBackend:
    """Grayscale 32x32 downsample -> fixed seeded random projection -> tanh.

    The projection matrix is 1024x4096 with entries uniform in [-1, 1]/32, so
    outputs stay in tanh's informative range for [0, 1] inputs.
    """

    kind = "deterministic_projection"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self._matrix = rng.uniform(-1.0, 1.0, (_GRAY_SIDE * _GRAY_SIDE, EMBED_DIM)) / 32.0

    def embed(self, image: np.ndarray) -> np.ndarray:
        image = validate_image(image)
        gray = image.mean(axis=2) / 255.0
        block = _GRAY_SIDE
        step = IMAGE_SIDE // block
        coarse = gray.reshape(block, step, block, step).mean(axis=(1, 3))
        return np.tanh(coarse.ravel() @ self._matrix)

    def describe(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "dim": EMBED_DIM}


class TorchScriptBackend:
    """Adapter around a TorchScript module mapping N x 3 x 224 x 224 floats in
    [0, 1] to N x 4096 features.
    """

    kind = "external_model"

    def __init__(self, model_path: str):
        try:
            import torch
        except ImportError as exc:
            raise ConfigError("external_model backend requires torch") from exc
        self._torch = torch
        self.model_path = str(model_path)
        try:
            self._model = torch.jit.load(self.model_path, map_location="cpu")
        except Exception as exc:
            raise DataError(f"cannot load model {self.model_path!r}: {exc}") from exc
        self._model.eval()
        with torch.no_grad():
            out = self._model(torch.zeros(1, 3, IMAGE_SIDE, IMAGE_SIDE))
        if tuple(out.shape) != (1, EMBED_DIM):
            raise DimensionMismatchError(
                f"model must output (N, {EMBED_DIM}), got {tuple(out.shape)}"
            )

    def embed(self, image: np.ndarray) -> np.ndarray:
        image = validate_image(image)
        x = self._torch.from_numpy(
            (image.astype(np.float32) / 255.0).transpose(2, 0, 1)[None]
        )
        with self._torch.no_grad():
            out = self._model(x)
        return out.numpy().astype(np.float64).ravel()

    def describe(self) -> dict:
        return {"kind": self.kind, "model_path": self.model_path, "dim": EMBED_DIM}


def load_backend(config: dict) -> DeterministicProjectionBackend | TorchScriptBackend:
    """Build an embedding backend from {"kind": ..., "seed"|"model_path": ...}."""
    kind = config.get("kind")
    if kind == "deterministic_projection":
        return DeterministicProjectionBackend(seed=config.get("seed", 0))
    if kind == "external_model":
        path = config.get("model_path")
        if not path:
            raise ConfigError("external_model backend needs a model_path")
        return TorchScriptBackend(path)
    raise ConfigError(f"unknown embedding backend kind {kind!r}")


def embed(backend, image: np.ndarray) -> np.ndarray:
    """Embed one image; the result always has exactly 4096 entries."""
    out = np.asarray(backend.embed(image), dtype=np.float64)
    if out.shape != (EMBED_DIM,):
        raise DimensionMismatchError(f"backend returned shape {out.shape}")
    return out
