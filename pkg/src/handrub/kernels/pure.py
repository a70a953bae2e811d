"""Numpy implementations of the per-frame pixel kernels.

These are the fallback used when the compiled extension is unavailable.  Both
backends must agree bit for bit: luma uses half-up integer rounding
(floor(x + 0.5)) and the 32x32 pooling sums integer lumas (exact in float64),
so the only roundings are the two final divisions, performed identically.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def luma_u8(rgb: np.ndarray) -> np.ndarray:
    """Per-pixel luma, uint8, from an (h, w, 3) uint8 RGB array.

    luma = floor(0.299 R + 0.587 G + 0.114 B + 0.5)
    """
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    return (0.299 * r + 0.587 * g + 0.114 * b + 0.5).astype(np.uint8)


def foreground_mask(
    rgb: np.ndarray, reference_luma: float, tolerance: float
) -> np.ndarray:
    """Boolean (h, w) mask: True where |luma - reference| > tolerance."""
    luma = luma_u8(rgb).astype(np.float64)
    return np.abs(luma - float(reference_luma)) > float(tolerance)


def roi_foreground_count(
    mask: np.ndarray, x: int, y: int, w: int, h: int
) -> int:
    """Count of foreground pixels inside the rectangle."""
    return int(np.count_nonzero(mask[y : y + h, x : x + w]))


def gray32_features(rgb: np.ndarray) -> np.ndarray:
    """32x32 block-mean grayscale features, flattened, scaled to [0, 1].

    Blocks use integer edges floor(i*h/32); requires h, w >= 32.
    """
    h, w = rgb.shape[0], rgb.shape[1]
    if h < 32 or w < 32:
        raise ValueError(f"frame {w}x{h} too small for 32x32 features")
    luma = luma_u8(rgb).astype(np.int64)
    out = np.empty(32 * 32, dtype=np.float64)
    for i in range(32):
        y0, y1 = (i * h) // 32, ((i + 1) * h) // 32
        row = luma[y0:y1]
        for j in range(32):
            x0, x1 = (j * w) // 32, ((j + 1) * w) // 32
            block = row[:, x0:x1]
            out[i * 32 + j] = (int(block.sum()) / block.size) / 255.0
    return out
