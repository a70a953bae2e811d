"""Manifest validation, split properties, and clip decoding."""

import json

import numpy as np
import pytest

from handrub.dataset import (
    ClipEntry,
    DatasetManifest,
    SplitSpec,
    load_manifest,
    read_clip_frames,
    register_decoder,
    split_dataset,
)
from handrub.errors import ConfigurationError, ManifestError


def write_manifest(tmp_path, clips):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"clips": clips}))
    return path


def clip_obj(path, subject="a", background="green", label=2, frames=4):
    return {
        "path": path,
        "subject_id": subject,
        "background": background,
        "label": label,
        "frame_count": frames,
    }


def test_load_two_clip_manifest(tmp_path):
    path = write_manifest(tmp_path, [clip_obj("c1.npz"), clip_obj("c2.npz", label=3)])
    manifest = load_manifest(path)
    assert len(manifest.clips) == 2
    assert manifest.root == tmp_path


def test_duplicate_paths_rejected_naming_duplicate(tmp_path):
    path = write_manifest(tmp_path, [clip_obj("dup.npz"), clip_obj("dup.npz")])
    with pytest.raises(ManifestError, match="dup.npz"):
        load_manifest(path)


def test_label_out_of_range_rejected(tmp_path):
    path = write_manifest(tmp_path, [clip_obj("c.npz", label=9)])
    with pytest.raises(ManifestError, match="label"):
        load_manifest(path)


@pytest.mark.parametrize(
    "mutation",
    [
        {"subject_id": ""},
        {"background": "blue"},
        {"frame_count": -1},
        {"path": ""},
    ],
)
def test_field_validation(tmp_path, mutation):
    obj = clip_obj("c.npz")
    obj.update(mutation)
    path = write_manifest(tmp_path, [obj])
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ManifestError, match="not found"):
        load_manifest(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ManifestError, match="JSON"):
        load_manifest(bad)


# ---------------------------------------------------------------------------
# splits


def synth_manifest(n_subjects=8, clips_per_subject=5):
    clips = []
    for s in range(n_subjects):
        for c in range(clips_per_subject):
            clips.append(
                ClipEntry(
                    path=f"s{s}_c{c}.npz",
                    subject_id=f"subj{s}",
                    background="green",
                    label=(c % 9),
                    frame_count=3,
                )
            )
    return DatasetManifest(root=None, clips=tuple(clips))


def test_all_in_train_with_unit_fraction():
    manifest = synth_manifest()
    train, val, test = split_dataset(manifest, SplitSpec(fractions=(1, 0, 0), seed=3))
    assert len(train.clips) == len(manifest.clips)
    assert not val.clips and not test.clips


def test_split_deterministic_for_seed():
    manifest = synth_manifest()
    spec = SplitSpec(fractions=(0.6, 0.2, 0.2), seed=11)
    a = split_dataset(manifest, spec)
    b = split_dataset(manifest, spec)
    assert a == b
    c = split_dataset(manifest, SplitSpec(fractions=(0.6, 0.2, 0.2), seed=12))
    assert a != c


@pytest.mark.parametrize("group", [True, False])
def test_split_partitions_input(group):
    manifest = synth_manifest()
    spec = SplitSpec(fractions=(0.5, 0.25, 0.25), seed=7, group_by_subject=group)
    parts = split_dataset(manifest, spec)
    all_paths = [c.path for part in parts for c in part.clips]
    assert sorted(all_paths) == sorted(c.path for c in manifest.clips)
    assert len(set(all_paths)) == len(all_paths)  # pairwise disjoint


def test_grouped_split_never_crosses_subjects():
    import random

    rng = random.Random(0)
    for trial in range(30):
        n_subj = rng.randrange(2, 12)
        manifest = synth_manifest(n_subjects=n_subj, clips_per_subject=rng.randrange(1, 6))
        spec = SplitSpec(fractions=(0.6, 0.2, 0.2), seed=trial, group_by_subject=True)
        parts = split_dataset(manifest, spec)
        # exhaustive pairwise scan of subject membership
        memberships = [set(c.subject_id for c in p.clips) for p in parts]
        for i in range(3):
            for j in range(i + 1, 3):
                assert not (memberships[i] & memberships[j]), f"trial {trial}"


def test_fractions_must_sum_to_one():
    with pytest.raises(ConfigurationError):
        SplitSpec(fractions=(0.5, 0.5, 0.5))


# ---------------------------------------------------------------------------
# clip decoding


def test_npz_clip_roundtrip(tmp_path):
    frames = np.random.default_rng(1).integers(0, 256, size=(6, 8, 10, 3), dtype=np.uint8)
    np.savez(tmp_path / "clip.npz", frames=frames)
    manifest = DatasetManifest(
        root=tmp_path,
        clips=(ClipEntry("clip.npz", "a", "green", 2, frame_count=6),),
    )
    out = list(read_clip_frames(manifest, manifest.clips[0]))
    assert len(out) == 6
    assert np.array_equal(out[0], frames[0])
    strided = list(read_clip_frames(manifest, manifest.clips[0], stride=2))
    assert len(strided) == 3
    assert np.array_equal(strided[1], frames[2])


def test_image_dir_clip(tmp_path):
    from PIL import Image

    clip_dir = tmp_path / "clip"
    clip_dir.mkdir()
    for i in range(3):
        arr = np.full((5, 7, 3), i * 10, dtype=np.uint8)
        Image.fromarray(arr).save(clip_dir / f"{i:03d}.png")
    manifest = DatasetManifest(
        root=tmp_path, clips=(ClipEntry("clip", "a", "wooden", 4, frame_count=3),)
    )
    out = list(read_clip_frames(manifest, manifest.clips[0]))
    assert [int(f[0, 0, 0]) for f in out] == [0, 10, 20]


def test_frame_count_mismatch_detected(tmp_path):
    frames = np.zeros((2, 4, 4, 3), dtype=np.uint8)
    np.savez(tmp_path / "clip.npz", frames=frames)
    manifest = DatasetManifest(
        root=tmp_path, clips=(ClipEntry("clip.npz", "a", "green", 2, frame_count=5),)
    )
    with pytest.raises(ManifestError, match="declared 5"):
        list(read_clip_frames(manifest, manifest.clips[0]))


def test_custom_decoder_registration(tmp_path):
    marker = tmp_path / "clip.custom"
    marker.write_text("x")

    def decode(_path):
        yield np.zeros((4, 4, 3), dtype=np.uint8)

    register_decoder(lambda p: p.suffix == ".custom", decode)
    manifest = DatasetManifest(
        root=tmp_path, clips=(ClipEntry("clip.custom", "a", "other", 0, frame_count=1),)
    )
    out = list(read_clip_frames(manifest, manifest.clips[0]))
    assert len(out) == 1
