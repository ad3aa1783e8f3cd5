"""Style-texture pair generation and lossless dataset persistence.

One sample = six orthogonal target views (color + position + normal maps)
plus several random-view references, each stored raw and after the patch
shuffle/mask transform.  Color images are snapped to the 8-bit grid and
geometry maps to the 16-bit grid at creation time, so the PNG round trip is
exactly lossless.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import orthogonal_cameras, random_view_cameras
from .errors import CorruptManifest, MissingFile, VersionMismatch
from .image import ImageGrid
from .jigsaw import (DEFAULT_TRAIN_PATCH, MASK_RATIO_MAX, JigsawConfig,
                     MaskPattern, PatchPermutation, jigsaw)
from .mesh import TriangleMesh
from .raster import encode_normal, encode_position, rasterize, render_textured
from .rng import SeededRng

MANIFEST_VERSION = 1
TARGET_VIEWS = 6
DEFAULT_REFERENCE_VIEWS = 4
DEFAULT_IMAGE_SIZE = 512


@dataclass
class TargetView:
    color: ImageGrid
    position: ImageGrid
    normal: ImageGrid


@dataclass
class ReferenceView:
    raw: ImageGrid
    jigsawed: ImageGrid
    permutation: PatchPermutation
    mask: MaskPattern
    seed: int


@dataclass
class SamplePair:
    mesh_id: str
    targets: list[TargetView]
    references: list[ReferenceView]
    jigsaw_config: JigsawConfig
    cameras: dict  # {"targets": [...], "references": [...]} camera dicts
    seed: int
    caption: str | None = None


@dataclass
class Manifest:
    version: int
    samples: list[dict]


def make_sample(mesh: TriangleMesh, texture: ImageGrid, mesh_id: str, seed: int,
                image_size: int = DEFAULT_IMAGE_SIZE,
                reference_views: int = DEFAULT_REFERENCE_VIEWS,
                patch_size: int = DEFAULT_TRAIN_PATCH,
                mask_ratio_max: float = MASK_RATIO_MAX,
                caption: str | None = None) -> SamplePair:
    """Render one style-texture sample; deterministic per (inputs, seed).

    The mask ratio is drawn uniformly from [0, mask_ratio_max] per sample.
    """
    mesh.require_uvs()
    rng = SeededRng(seed, f"sample/{mesh_id}")
    target_cams = orthogonal_cameras(image_size=image_size)
    ref_cams = random_view_cameras(reference_views, seed=seed, image_size=image_size)
    targets = []
    for cam in target_cams:
        gb = rasterize(mesh, cam)
        cov = gb.coverage
        targets.append(TargetView(
            color=render_textured(mesh, texture, cam).quantize(8),
            position=encode_position(gb.position, cov).quantize(16),
            normal=encode_normal(gb.normal, cov).quantize(16),
        ))
    mask_ratio = float(rng.child("mask-ratio").uniform()) * mask_ratio_max
    references = []
    for j, cam in enumerate(ref_cams):
        raw = render_textured(mesh, texture, cam).quantize(8)
        ref_seed = seed * 1000 + j
        cfg = JigsawConfig(patch_size=patch_size, mask_ratio=mask_ratio,
                           background=(0.5, 0.5, 0.5), seed=ref_seed)
        out = jigsaw(raw, cfg, mode="train")
        references.append(ReferenceView(
            raw=raw, jigsawed=out.image.quantize(8),
            permutation=out.permutation, mask=out.mask, seed=ref_seed,
        ))
    sample_cfg = JigsawConfig(patch_size=patch_size, mask_ratio=mask_ratio,
                              background=(0.5, 0.5, 0.5), seed=seed)
    return SamplePair(
        mesh_id=mesh_id,
        targets=targets,
        references=references,
        jigsaw_config=sample_cfg,
        cameras={
            "targets": [c.to_dict() for c in target_cams],
            "references": [c.to_dict() for c in ref_cams],
        },
        seed=seed,
        caption=caption,
    )


def _sample_meta(sample: SamplePair) -> dict:
    return {
        "mesh_id": sample.mesh_id,
        "seed": sample.seed,
        "caption": sample.caption,
        "jigsaw": {
            "patch_size": sample.jigsaw_config.patch_size,
            "mask_ratio": sample.jigsaw_config.mask_ratio,
            "background": list(sample.jigsaw_config.background),
            "seed": sample.jigsaw_config.seed,
        },
        "cameras": sample.cameras,
        "references": [
            {
                "seed": ref.seed,
                "rows": ref.permutation.rows,
                "cols": ref.permutation.cols,
                "permutation": [int(i) for i in ref.permutation.mapping],
                "visible": [bool(b) for b in ref.mask.visible],
            }
            for ref in sample.references
        ],
    }


def write_dataset(samples: list[SamplePair], root: str | Path) -> Manifest:
    """Persist samples under root/<mesh_id>/; returns the written manifest.

    Layout per sample: target_{k}_{color|position|normal}.png (k in 0..5,
    color 8-bit, geometry 16-bit), ref_{j}_{raw|jigsaw}.png (8-bit), and
    meta.json; the manifest lands at root/manifest.json.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for sample in samples:
        sdir = root / sample.mesh_id
        sdir.mkdir(parents=True, exist_ok=True)
        files = []
        for k, tv in enumerate(sample.targets):
            for name, img, depth in (
                ("color", tv.color, 8),
                ("position", tv.position, 16),
                ("normal", tv.normal, 16),
            ):
                fname = f"target_{k}_{name}.png"
                img.save_png(sdir / fname, bitdepth=depth)
                files.append(fname)
        for j, ref in enumerate(sample.references):
            for name, img in (("raw", ref.raw), ("jigsaw", ref.jigsawed)):
                fname = f"ref_{j}_{name}.png"
                img.save_png(sdir / fname, bitdepth=8)
                files.append(fname)
        (sdir / "meta.json").write_text(json.dumps(_sample_meta(sample), indent=1))
        entries.append({
            "mesh_id": sample.mesh_id,
            "dir": sample.mesh_id,
            "files": files,
            "seed": sample.seed,
        })
    manifest = Manifest(version=MANIFEST_VERSION, samples=entries)
    (root / "manifest.json").write_text(
        json.dumps({"version": manifest.version, "samples": manifest.samples}, indent=1))
    return manifest


def read_dataset(root: str | Path) -> list[SamplePair]:
    """Reconstruct all samples from a dataset directory."""
    root = Path(root)
    mpath = root / "manifest.json"
    if not mpath.exists():
        raise MissingFile(f"manifest not found: {mpath}")
    try:
        mdata = json.loads(mpath.read_text())
        version = mdata["version"]
        sample_entries = mdata["samples"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CorruptManifest(f"{mpath}: {exc}") from None
    if version != MANIFEST_VERSION:
        raise VersionMismatch(
            f"manifest version {version} unsupported (expected {MANIFEST_VERSION})"
        )
    samples = []
    for entry in sample_entries:
        sdir = root / entry["dir"]
        meta_path = sdir / "meta.json"
        if not meta_path.exists():
            raise MissingFile(f"missing metadata: {meta_path}")
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as exc:
            raise CorruptManifest(f"{meta_path}: {exc}") from None
        for fname in entry["files"]:
            if not (sdir / fname).exists():
                raise MissingFile(f"missing image: {sdir / fname}")
        targets = []
        for k in range(TARGET_VIEWS):
            targets.append(TargetView(
                color=ImageGrid.load_png(sdir / f"target_{k}_color.png"),
                position=ImageGrid.load_png(sdir / f"target_{k}_position.png"),
                normal=ImageGrid.load_png(sdir / f"target_{k}_normal.png"),
            ))
        references = []
        for j, rmeta in enumerate(meta["references"]):
            perm = PatchPermutation(rmeta["rows"], rmeta["cols"],
                                    np.asarray(rmeta["permutation"], dtype=np.int64))
            mask = MaskPattern(rmeta["rows"], rmeta["cols"],
                               np.asarray(rmeta["visible"], dtype=bool))
            references.append(ReferenceView(
                raw=ImageGrid.load_png(sdir / f"ref_{j}_raw.png"),
                jigsawed=ImageGrid.load_png(sdir / f"ref_{j}_jigsaw.png"),
                permutation=perm, mask=mask, seed=int(rmeta["seed"]),
            ))
        jg = meta["jigsaw"]
        samples.append(SamplePair(
            mesh_id=meta["mesh_id"],
            targets=targets,
            references=references,
            jigsaw_config=JigsawConfig(
                patch_size=int(jg["patch_size"]),
                mask_ratio=float(jg["mask_ratio"]),
                background=tuple(jg["background"]),
                seed=int(jg["seed"]),
            ),
            cameras=meta["cameras"],
            seed=int(meta["seed"]),
            caption=meta.get("caption"),
        ))
    return samples
