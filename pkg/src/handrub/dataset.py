"""Dataset manifests, deterministic splits, and pluggable clip decoding.

A manifest is a JSON file listing gesture clips with subject, background and
label metadata.  Clips are directories of numbered image files or .npz frame
archives; additional decoders can be registered.  Splitting is seeded and can
group by subject so no volunteer leaks across train/val/test.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .errors import ConfigurationError, ManifestError

BACKGROUNDS = ("green", "wooden", "other")
N_CLASSES = 9


@dataclass(frozen=True)
class ClipEntry:
    path: str  # relative to the manifest directory
    subject_id: str
    background: str
    label: int
    frame_count: int

    def to_json_obj(self) -> dict:
        return {
            "path": self.path,
            "subject_id": self.subject_id,
            "background": self.background,
            "label": self.label,
            "frame_count": self.frame_count,
        }


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    clips: tuple[ClipEntry, ...]

    def clip_path(self, clip: ClipEntry) -> Path:
        return self.root / clip.path

    def subjects(self) -> list[str]:
        return sorted({c.subject_id for c in self.clips})

    def digest_payload(self) -> str:
        """Canonical JSON used for content digests."""
        entries = sorted(
            (c.to_json_obj() for c in self.clips), key=lambda e: e["path"]
        )
        return json.dumps(entries, sort_keys=True, separators=(",", ":"))

    def to_json_obj(self) -> dict:
        return {"clips": [c.to_json_obj() for c in self.clips]}


def _validate_clip(obj: dict, index: int) -> ClipEntry:
    where = f"clips[{index}]"
    for key in ("path", "subject_id", "background", "label", "frame_count"):
        if key not in obj:
            raise ManifestError(f"{where}: missing field {key!r}")
    if not isinstance(obj["path"], str) or not obj["path"]:
        raise ManifestError(f"{where}: path must be a non-empty string")
    if not isinstance(obj["subject_id"], str) or not obj["subject_id"]:
        raise ManifestError(f"{where}: subject_id must be a non-empty string")
    if obj["background"] not in BACKGROUNDS:
        raise ManifestError(
            f"{where}: background {obj['background']!r} not one of {BACKGROUNDS}"
        )
    label = obj["label"]
    if not isinstance(label, int) or not 0 <= label < N_CLASSES:
        raise ManifestError(f"{where}: label {label!r} outside 0..{N_CLASSES - 1}")
    count = obj["frame_count"]
    if not isinstance(count, int) or count < 0:
        raise ManifestError(f"{where}: frame_count {count!r} invalid")
    return ClipEntry(
        path=obj["path"],
        subject_id=obj["subject_id"],
        background=obj["background"],
        label=label,
        frame_count=count,
    )


def manifest_from_obj(obj: dict, root: Path) -> DatasetManifest:
    if not isinstance(obj, dict) or "clips" not in obj:
        raise ManifestError("manifest must be an object with a 'clips' list")
    clips = [_validate_clip(c, i) for i, c in enumerate(obj["clips"])]
    seen: set[str] = set()
    for c in clips:
        if c.path in seen:
            raise ManifestError(f"duplicate clip path {c.path!r}")
        seen.add(c.path)
    return DatasetManifest(root=root, clips=tuple(clips))


def load_manifest(path: str | Path) -> DatasetManifest:
    p = Path(path)
    if not p.exists():
        raise ManifestError(f"manifest file not found: {p}")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {p} is not valid JSON: {exc}") from exc
    return manifest_from_obj(obj, root=p.parent)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_json_obj(), indent=2) + "\n")


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0
    group_by_subject: bool = True

    def __post_init__(self):
        if any(f < 0 for f in self.fractions):
            raise ConfigurationError("split fractions must be >= 0")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigurationError(
                f"split fractions must sum to 1, got {sum(self.fractions)}"
            )


def split_dataset(
    manifest: DatasetManifest, spec: SplitSpec
) -> tuple[DatasetManifest, DatasetManifest, DatasetManifest]:
    """Deterministic (seeded) train/val/test partition.

    With group_by_subject every clip of a subject lands in one split: shuffled
    subjects are assigned greedily to the split with the largest remaining
    clip deficit.  Without grouping, shuffled clips are sliced by cumulative
    rounded counts.  Union equals the input; splits are pairwise disjoint.
    """
    rng = random.Random(spec.seed)
    total = len(manifest.clips)
    buckets: tuple[list[ClipEntry], list[ClipEntry], list[ClipEntry]] = ([], [], [])

    if spec.group_by_subject:
        by_subject: dict[str, list[ClipEntry]] = {}
        for c in manifest.clips:
            by_subject.setdefault(c.subject_id, []).append(c)
        subjects = sorted(by_subject)
        rng.shuffle(subjects)
        targets = [f * total for f in spec.fractions]
        counts = [0, 0, 0]
        for subj in subjects:
            deficits = [targets[i] - counts[i] for i in range(3)]
            pick = max(range(3), key=lambda i: (deficits[i], -i))
            buckets[pick].extend(by_subject[subj])
            counts[pick] += len(by_subject[subj])
    else:
        clips = list(manifest.clips)
        rng.shuffle(clips)
        c1 = round(spec.fractions[0] * total)
        c2 = round((spec.fractions[0] + spec.fractions[1]) * total)
        buckets = (clips[:c1], clips[c1:c2], clips[c2:])

    return tuple(
        replace(manifest, clips=tuple(b)) for b in buckets
    )  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Clip decoding

ClipDecoder = Callable[[Path], Iterator[np.ndarray]]

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def _decode_image_dir(path: Path) -> Iterator[np.ndarray]:
    from PIL import Image

    files = sorted(
        (f for f in path.iterdir() if f.suffix.lower() in _IMAGE_SUFFIXES),
        key=lambda f: f.name,
    )
    if not files:
        raise ManifestError(f"clip directory {path} holds no image files")
    for f in files:
        with Image.open(f) as img:
            yield np.asarray(img.convert("RGB"), dtype=np.uint8)


def _decode_npz(path: Path) -> Iterator[np.ndarray]:
    with np.load(path) as data:
        frames = data["frames"]
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise ManifestError(
                f"{path}: expected frames array (n, h, w, 3), got {frames.shape}"
            )
        for i in range(frames.shape[0]):
            yield np.ascontiguousarray(frames[i], dtype=np.uint8)


_DECODERS: list[tuple[Callable[[Path], bool], ClipDecoder]] = [
    (lambda p: p.is_dir(), _decode_image_dir),
    (lambda p: p.suffix == ".npz", _decode_npz),
]


def register_decoder(matches: Callable[[Path], bool], decoder: ClipDecoder) -> None:
    """Prepend a custom clip decoder to the lookup chain."""
    _DECODERS.insert(0, (matches, decoder))


def read_clip_frames(
    manifest: DatasetManifest, clip: ClipEntry, stride: int = 1
) -> Iterator[np.ndarray]:
    """Decode a clip's frames, keeping every ``stride``-th frame.

    Verifies the declared frame_count lazily: a mismatch is a manifest error.
    """
    if stride < 1:
        raise ConfigurationError(f"stride must be >= 1, got {stride}")
    path = manifest.clip_path(clip)
    for matches, decoder in _DECODERS:
        if matches(path):
            n = 0
            for i, frame in enumerate(decoder(path)):
                n += 1
                if i % stride == 0:
                    yield frame
            if clip.frame_count and n != clip.frame_count:
                raise ManifestError(
                    f"{clip.path}: declared {clip.frame_count} frames, decoded {n}"
                )
            return
    raise ManifestError(f"no decoder for clip {path}")
