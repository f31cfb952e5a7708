"""Turntable-style image collections: loading, splits, and compositing.

A dataset lives under a root directory with one subdirectory per object
instance.  Each instance directory holds a ``meta.json`` describing the
views plus the PNG rasters themselves::

    root/
      texture_roster.json          (optional; falls back to packaged roster)
      obj_000/
        meta.json                  {"instance_id": 0, "category": "ball",
                                    "views": [{"file": ..., "mask_file": ...,
                                               "elevation_deg": 30.0,
                                               "azimuth_deg": 0.0}, ...]}
        el30_az000.png
        el30_az000_mask.png
        ...

Masks are binary PNGs (nonzero = foreground) and are optional per view.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .imageops import as_rgb, mask_bbox


class LoadError(Exception):
    """Raised when a dataset directory cannot be read or fails validation."""


class SplitError(Exception):
    """Raised when a requested train/test split cannot be built."""


@dataclass(frozen=True)
class PoseLabel:
    """Viewing angles of a turntable observation, in degrees."""

    elevation_deg: float
    azimuth_deg: float

    def __post_init__(self):
        if self.elevation_deg < 0:
            raise ValueError(f"elevation must be non-negative, got {self.elevation_deg}")
        object.__setattr__(self, "azimuth_deg", float(self.azimuth_deg) % 360.0)
        object.__setattr__(self, "elevation_deg", float(self.elevation_deg))


@dataclass
class ImageSample:
    """One observation of an object instance."""

    pixels: np.ndarray            # (H, W, 3) uint8
    mask: np.ndarray | None       # (H, W) bool, or None
    pose: PoseLabel
    instance_id: int
    category_id: int
    category: str
    textured: bool

    def __post_init__(self):
        self.pixels = as_rgb(self.pixels)
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.pixels.shape[:2]:
                raise ValueError(
                    f"mask shape {self.mask.shape} does not match "
                    f"image shape {self.pixels.shape[:2]}")


@dataclass
class DatasetSplit:
    """A train/test partition over a closed set of instances."""

    train: list[ImageSample]
    test: list[ImageSample]
    num_classes: int


@dataclass(frozen=True)
class TextureRoster:
    """Per-category textured/untextured assignment."""

    textured_categories: frozenset[str]
    untextured_categories: frozenset[str]

    def __post_init__(self):
        overlap = self.textured_categories & self.untextured_categories
        if overlap:
            raise ValueError(f"categories in both roster sets: {sorted(overlap)}")

    def is_textured(self, category: str) -> bool:
        if category in self.textured_categories:
            return True
        if category in self.untextured_categories:
            return False
        raise KeyError(f"category {category!r} not in texture roster")

    @staticmethod
    def from_json(path: str | Path) -> "TextureRoster":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return TextureRoster(frozenset(data["textured_categories"]),
                             frozenset(data["untextured_categories"]))

    def to_json(self, path: str | Path) -> None:
        data = {"textured_categories": sorted(self.textured_categories),
                "untextured_categories": sorted(self.untextured_categories)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")


def default_roster() -> TextureRoster:
    """The roster shipped with the package (common grocery/desk categories)."""
    ref = resources.files("instarec.data").joinpath("texture_roster.json")
    with resources.as_file(ref) as path:
        return TextureRoster.from_json(path)


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def _read_mask(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127


def load_dataset(root: str | Path, roster: TextureRoster | None = None,
                 exclude: set[str] | frozenset[str] = frozenset()) -> list[ImageSample]:
    """Load every view of every instance under ``root``.

    ``roster`` defaults to ``root/texture_roster.json`` when present, else the
    packaged roster.  ``exclude`` names instance directories to skip; when
    exclusions are given, instance ids are remapped to a dense ``[0, K)``
    range by ascending original id.  Samples are returned sorted by
    ``(instance_id, elevation, azimuth)``.
    """
    root = Path(root)
    if not root.is_dir():
        raise LoadError(f"dataset root {root} is not a directory")
    if roster is None:
        roster_path = root / "texture_roster.json"
        roster = TextureRoster.from_json(roster_path) if roster_path.exists() else default_roster()

    instance_dirs = sorted(p for p in root.iterdir() if p.is_dir() and p.name not in exclude)
    if not instance_dirs:
        raise LoadError(f"no instance directories under {root}")

    raw: list[tuple[int, str, Path, dict]] = []
    for inst_dir in instance_dirs:
        meta_path = inst_dir / "meta.json"
        if not meta_path.exists():
            raise LoadError(f"missing meta.json in object directory {inst_dir}")
        try:
            with open(meta_path, "r", encoding="utf-8") as fh:
                meta = json.load(fh)
            instance_id = int(meta["instance_id"])
            category = str(meta["category"])
            views = meta["views"]
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise LoadError(f"bad metadata in {meta_path}: {exc}") from exc
        raw.append((instance_id, category, inst_dir, {"views": views}))

    ids = sorted(r[0] for r in raw)
    if len(set(ids)) != len(ids):
        raise LoadError(f"duplicate instance ids under {root}")
    id_map = {orig: dense for dense, orig in enumerate(ids)}
    categories = sorted({r[1] for r in raw})
    category_ids = {name: i for i, name in enumerate(categories)}
    for name in categories:
        roster.is_textured(name)  # raises KeyError for unknown categories

    samples: list[ImageSample] = []
    for instance_id, category, inst_dir, meta in raw:
        for view in meta["views"]:
            pixels = _read_image(inst_dir / view["file"])
            mask = None
            if view.get("mask_file"):
                mask = _read_mask(inst_dir / view["mask_file"])
                if mask.shape != pixels.shape[:2]:
                    raise LoadError(
                        f"mask {view['mask_file']} shape {mask.shape} does not match "
                        f"image {view['file']} shape {pixels.shape[:2]} in {inst_dir}")
            samples.append(ImageSample(
                pixels=pixels,
                mask=mask,
                pose=PoseLabel(float(view["elevation_deg"]), float(view["azimuth_deg"])),
                instance_id=id_map[instance_id],
                category_id=category_ids[category],
                category=category,
                textured=roster.is_textured(category),
            ))
    samples.sort(key=lambda s: (s.instance_id, s.pose.elevation_deg, s.pose.azimuth_deg))
    return samples


def save_dataset(samples: list[ImageSample], root: str | Path) -> None:
    """Write samples back to the directory layout read by :func:`load_dataset`."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    by_instance: dict[int, list[ImageSample]] = {}
    for s in samples:
        by_instance.setdefault(s.instance_id, []).append(s)
    for instance_id, group in sorted(by_instance.items()):
        inst_dir = root / f"obj_{instance_id:03d}"
        inst_dir.mkdir(parents=True, exist_ok=True)
        group = sorted(group, key=lambda s: (s.pose.elevation_deg, s.pose.azimuth_deg))
        views = []
        for k, s in enumerate(group):
            stem = f"el{int(round(s.pose.elevation_deg)):02d}_az{int(round(s.pose.azimuth_deg)):03d}_{k:03d}"
            Image.fromarray(s.pixels).save(inst_dir / f"{stem}.png")
            view = {"file": f"{stem}.png",
                    "elevation_deg": s.pose.elevation_deg,
                    "azimuth_deg": s.pose.azimuth_deg}
            if s.mask is not None:
                mask_img = (s.mask.astype(np.uint8) * 255)
                Image.fromarray(mask_img, mode="L").save(inst_dir / f"{stem}_mask.png")
                view["mask_file"] = f"{stem}_mask.png"
            views.append(view)
        meta = {"instance_id": instance_id, "category": group[0].category, "views": views}
        with open(inst_dir / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def apply_mask(sample: ImageSample, fill: tuple[int, int, int] = (0, 0, 0)) -> ImageSample:
    """Replace pixels outside the mask with ``fill``; foreground is untouched."""
    if sample.mask is None:
        raise ValueError("apply_mask requires a sample with a mask")
    out = np.empty_like(sample.pixels)
    out[:] = np.asarray(fill, dtype=np.uint8)
    out[sample.mask] = sample.pixels[sample.mask]
    return replace(sample, pixels=out, mask=sample.mask.copy())


def composite_on_background(sample: ImageSample, background: np.ndarray,
                            rng: np.random.Generator) -> ImageSample:
    """Paste the masked object onto ``background`` at a random location.

    The object's mask bounding box is placed axis-aligned, without scaling,
    at a uniform-random top-left offset within the background bounds.  The
    returned sample has the background's dimensions, the pasted mask, and
    the source sample's pose and labels.
    """
    if sample.mask is None:
        raise ValueError("composite_on_background requires a sample with a mask")
    background = as_rgb(background)
    r0, r1, c0, c1 = mask_bbox(sample.mask)
    obj_h, obj_w = r1 - r0, c1 - c0
    bg_h, bg_w = background.shape[:2]
    if obj_h > bg_h or obj_w > bg_w:
        raise ValueError(
            f"background {bg_h}x{bg_w} smaller than object extent {obj_h}x{obj_w}")
    top = int(rng.integers(0, bg_h - obj_h + 1))
    left = int(rng.integers(0, bg_w - obj_w + 1))

    patch_mask = sample.mask[r0:r1, c0:c1]
    out = background.copy()
    region = out[top:top + obj_h, left:left + obj_w]
    region[patch_mask] = sample.pixels[r0:r1, c0:c1][patch_mask]
    new_mask = np.zeros((bg_h, bg_w), dtype=bool)
    new_mask[top:top + obj_h, left:left + obj_w] = patch_mask
    return replace(sample, pixels=out, mask=new_mask)


def subsample_views(views: list[ImageSample], count: int) -> list[ImageSample]:
    """Evenly subsample ``count`` views, always starting from the first.

    Index rule: ``index_k = floor(k * len(views) / count)`` for
    ``k in [0, count)``.  ``count == len(views)`` returns the list unchanged.
    """
    n = len(views)
    if not 1 <= count <= n:
        raise ValueError(f"count must be in [1, {n}], got {count}")
    return [views[(k * n) // count] for k in range(count)]


def _group_by_instance(samples: list[ImageSample]) -> dict[int, list[ImageSample]]:
    groups: dict[int, list[ImageSample]] = {}
    for s in samples:
        groups.setdefault(s.instance_id, []).append(s)
    return groups


def make_one_shot_split(samples: list[ImageSample], train_elevation: float,
                        test_elevation: float) -> DatasetSplit:
    """One training view per instance; test on a whole held-out elevation ring.

    Train takes the azimuth-minimal view of each instance at
    ``train_elevation``; test takes every view at ``test_elevation``.
    """
    train: list[ImageSample] = []
    test: list[ImageSample] = []
    groups = _group_by_instance(samples)
    for instance_id in sorted(groups):
        views = groups[instance_id]
        at_train = [s for s in views if s.pose.elevation_deg == train_elevation]
        at_test = [s for s in views if s.pose.elevation_deg == test_elevation]
        if not at_train:
            raise SplitError(
                f"instance {instance_id} has no view at elevation {train_elevation}")
        if not at_test:
            raise SplitError(
                f"instance {instance_id} has no view at elevation {test_elevation}")
        train.append(min(at_train, key=lambda s: s.pose.azimuth_deg))
        test.extend(sorted(at_test, key=lambda s: s.pose.azimuth_deg))
    return DatasetSplit(train=train, test=test, num_classes=len(groups))


def make_leave_sequence_out_split(
        samples: list[ImageSample],
        train_elevations: tuple[float, float] = (30.0, 60.0),
        test_elevation: float = 45.0) -> DatasetSplit:
    """Train on two elevation rings per instance, test on a third."""
    train: list[ImageSample] = []
    test: list[ImageSample] = []
    groups = _group_by_instance(samples)
    for instance_id in sorted(groups):
        views = groups[instance_id]
        for elev in train_elevations:
            ring = [s for s in views if s.pose.elevation_deg == elev]
            if not ring:
                raise SplitError(f"instance {instance_id} has no view at elevation {elev}")
            train.extend(sorted(ring, key=lambda s: s.pose.azimuth_deg))
        at_test = [s for s in views if s.pose.elevation_deg == test_elevation]
        if not at_test:
            raise SplitError(
                f"instance {instance_id} has no view at elevation {test_elevation}")
        test.extend(sorted(at_test, key=lambda s: s.pose.azimuth_deg))
    return DatasetSplit(train=train, test=test, num_classes=len(groups))
