"""Synthetic frame and dataset generation.

Produces bright-background frames with class-distinct dark geometry so the
vision pipeline and the baseline trainer can be exercised without camera
footage.  Class patterns are separable on purpose; subjects add jitter,
brightness shifts and noise so subject-grouped splits stay meaningful.
"""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from .dataset import ClipEntry, DatasetManifest, save_manifest
from .vision import N_CLASSES

BG_LUMA = 240


def blank_frame(width: int = 64, height: int = 48, value: int = BG_LUMA) -> np.ndarray:
    return np.full((height, width, 3), value, dtype=np.uint8)


def hands_frame(
    width: int = 64, height: int = 48, patch_value: int = 30
) -> np.ndarray:
    """Bright frame with a centered dark patch covering ~25% of the area."""
    frame = blank_frame(width, height)
    x0, x1 = width // 4, 3 * width // 4
    y0, y1 = height // 4, 3 * height // 4
    frame[y0:y1, x0:x1] = patch_value
    return frame


def _class_pattern(
    label: int, width: int, height: int, rng: random.Random, shade: int
) -> np.ndarray:
    """One frame of class ``label``: a dark shape whose geometry encodes the
    class, jittered by a few pixels per frame."""
    frame = np.full((height, width, 3), BG_LUMA, dtype=np.uint8)
    jx = rng.randint(-2, 2)
    jy = rng.randint(-2, 2)
    if label == 0:
        # no-hands: clean background with light noise only
        pass
    elif label == 1:
        # hands-idle: one centered blob
        cx, cy = width // 2 + jx, height // 2 + jy
        frame[cy - 6 : cy + 6, cx - 8 : cx + 8] = shade
    else:
        # rub steps 2..8: k vertical bars, k = label
        k = label
        bar_w = max(2, width // (2 * k + 1))
        for i in range(k):
            x0 = (2 * i + 1) * width // (2 * k + 1) + jx
            x0 = min(max(x0, 0), width - bar_w)
            y0 = max(height // 6 + jy, 0)
            y1 = min(5 * height // 6 + jy, height)
            frame[y0:y1, x0 : x0 + bar_w] = shade
    return frame


def _add_noise(frame: np.ndarray, rng_np: np.random.Generator, sigma: float) -> np.ndarray:
    noise = rng_np.normal(0.0, sigma, size=frame.shape)
    return np.clip(frame.astype(np.float64) + noise, 0, 255).astype(np.uint8)


def generate_gesture_dataset(
    out_dir: str | Path,
    n_subjects: int = 6,
    frames_per_class: int = 200,
    width: int = 64,
    height: int = 48,
    seed: int = 0,
    noise_sigma: float = 4.0,
) -> Path:
    """Write an .npz-clip dataset plus manifest.json; returns the manifest path.

    Each (subject, class) pair becomes one clip.  frames_per_class frames are
    spread evenly over the subjects.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    rng_np = np.random.default_rng(seed)

    per_subject = max(1, frames_per_class // n_subjects)
    clips: list[ClipEntry] = []
    for label in range(N_CLASSES):
        for s in range(n_subjects):
            subject = f"subj{s:02d}"
            # Per-subject appearance: hand darkness varies by subject
            shade = 20 + 12 * s
            frames = np.stack(
                [
                    _add_noise(
                        _class_pattern(label, width, height, rng, shade),
                        rng_np,
                        noise_sigma,
                    )
                    for _ in range(per_subject)
                ]
            )
            rel = f"clips/{subject}_class{label}.npz"
            clip_path = out / rel
            clip_path.parent.mkdir(exist_ok=True)
            np.savez(clip_path, frames=frames)
            clips.append(
                ClipEntry(
                    path=rel,
                    subject_id=subject,
                    background=("green" if s % 2 == 0 else "wooden"),
                    label=label,
                    frame_count=per_subject,
                )
            )

    manifest = DatasetManifest(root=out, clips=tuple(clips))
    manifest_path = out / "manifest.json"
    save_manifest(manifest, manifest_path)
    return manifest_path
