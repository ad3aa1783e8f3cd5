"""Software rasterization of triangle meshes into per-view G-buffers.

Edge-function rasterization with a z-buffer, pixel-center sampling and a
top-left fill rule; orthographic projection so no perspective division.
Attributes are interpolated barycentrically after the visibility pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .camera import Camera
from .errors import DimensionMismatch
from .image import ImageGrid, bilinear_sample
from .mesh import TriangleMesh

BACKGROUND_VALUE = 0.5


@dataclass
class GBuffer:
    """Per-pixel geometric record for one camera view."""

    camera: Camera
    depth: np.ndarray      # (H,W) float64, inf where uncovered
    tri_id: np.ndarray     # (H,W) int32, -1 where uncovered
    bary: np.ndarray       # (H,W,3) float64
    position: np.ndarray   # (H,W,3) world position
    normal: np.ndarray     # (H,W,3) unit shading normal
    uv: np.ndarray | None  # (H,W,2) or None when the mesh has no UVs

    @property
    def coverage(self) -> np.ndarray:
        return self.tri_id >= 0


def _raster_visibility(xy: np.ndarray, z: np.ndarray, width: int, height: int,
                       znear: float, zfar: float):
    depth = np.full((height, width), np.inf)
    tri = np.full((height, width), -1, dtype=np.int32)
    b0 = np.zeros((height, width))
    b1 = np.zeros((height, width))
    b2 = np.zeros((height, width))
    if len(xy):
        _kernels.raster_tris(
            np.ascontiguousarray(xy, dtype=np.float64),
            np.ascontiguousarray(z, dtype=np.float64),
            width, height, znear, zfar, depth, tri, b0, b1, b2,
        )
    return depth, tri, np.stack([b0, b1, b2], axis=-1)


def rasterize(mesh: TriangleMesh, camera: Camera) -> GBuffer:
    """Rasterize every triangle; empty meshes yield an empty-coverage buffer."""
    n = camera.image_size
    corners = mesh.corner_positions()  # (T,3,3)
    if len(corners):
        px, py, dep = camera.project(corners.reshape(-1, 3))
        xy = np.stack([px, py], axis=-1).reshape(-1, 3, 2)
        z = dep.reshape(-1, 3)
    else:
        xy = np.zeros((0, 3, 2))
        z = np.zeros((0, 3))
    depth, tri, bary = _raster_visibility(xy, z, n, n, camera.near, camera.far)

    cov = tri >= 0
    position = np.zeros((n, n, 3))
    normal = np.zeros((n, n, 3))
    uv = np.zeros((n, n, 2)) if mesh.has_uvs else None
    if cov.any():
        t_sel = tri[cov]
        w = bary[cov]  # (M,3)
        pos_c = corners[t_sel]    # (M,3,3)
        position[cov] = np.einsum("mc,mcd->md", w, pos_c)
        nrm_c = mesh.corner_normals()[t_sel]
        nvec = np.einsum("mc,mcd->md", w, nrm_c)
        lens = np.linalg.norm(nvec, axis=1)
        nvec = nvec / np.where(lens > 1e-12, lens, 1.0)[:, None]
        normal[cov] = nvec
        if uv is not None:
            uv_c = mesh.corner_uvs()[t_sel]
            uv[cov] = np.einsum("mc,mcd->md", w, uv_c)
    return GBuffer(camera=camera, depth=depth, tri_id=tri, bary=bary,
                   position=position, normal=normal, uv=uv)


def encode_position(position: np.ndarray, coverage: np.ndarray) -> ImageGrid:
    """(p + 0.5) clamped to [0,1]^3; background 0.5 per channel."""
    enc = np.clip(position + 0.5, 0.0, 1.0)
    enc = np.where(coverage[:, :, None], enc, BACKGROUND_VALUE)
    return ImageGrid(enc.transpose(2, 0, 1))


def encode_normal(normal: np.ndarray, coverage: np.ndarray) -> ImageGrid:
    """(n + 1) / 2; background 0.5 per channel."""
    enc = np.clip((normal + 1.0) * 0.5, 0.0, 1.0)
    enc = np.where(coverage[:, :, None], enc, BACKGROUND_VALUE)
    return ImageGrid(enc.transpose(2, 0, 1))


def encode_depth(depth: np.ndarray, camera: Camera) -> ImageGrid:
    """Depth normalized to [0,1] over [near, far]; background encodes as 1.0."""
    v = (depth - camera.near) / (camera.far - camera.near)
    v = np.where(np.isfinite(depth), np.clip(v, 0.0, 1.0), 1.0)
    return ImageGrid(v[None, :, :])


def decode_depth(img: ImageGrid, camera: Camera) -> np.ndarray:
    """Inverse of :func:`encode_depth`; the background decodes to exactly far."""
    return camera.near + img.data[0] * (camera.far - camera.near)


def geometry_condition_maps(mesh: TriangleMesh, cameras: list[Camera]
                            ) -> tuple[list[ImageGrid], list[ImageGrid]]:
    """Per-camera position and normal maps (K of each)."""
    positions, normals = [], []
    for cam in cameras:
        gb = rasterize(mesh, cam)
        cov = gb.coverage
        positions.append(encode_position(gb.position, cov))
        normals.append(encode_normal(gb.normal, cov))
    return positions, normals


def render_textured(mesh: TriangleMesh, texture: ImageGrid, camera: Camera,
                    supersample: int = 1, gbuffer: GBuffer | None = None) -> ImageGrid:
    """Bilinear texture lookup at the interpolated UV of every covered pixel.

    supersample renders at an integer multiple and box-filters down; baking
    inputs should keep the default of one surface sample per pixel.  Passing a
    precomputed gbuffer for the same (mesh, camera) skips re-rasterization.
    """
    mesh.require_uvs()
    if texture.channels != 3:
        raise DimensionMismatch(f"texture must be 3-channel, got {texture.channels}")
    if supersample < 1:
        raise ValueError("supersample must be >= 1")
    if supersample > 1:
        big = Camera(view_dir=camera.view_dir, up=camera.up,
                     half_extent=camera.half_extent,
                     image_size=camera.image_size * supersample,
                     near=camera.near, far=camera.far)
        hi = render_textured(mesh, texture, big).data
        c, hh, ww = hi.shape
        s = supersample
        small = hi.reshape(c, hh // s, s, ww // s, s).mean(axis=(2, 4))
        return ImageGrid(small)
    gb = gbuffer if gbuffer is not None else rasterize(mesh, camera)
    n = camera.image_size
    out = np.full((n, n, 3), BACKGROUND_VALUE)
    cov = gb.coverage
    if cov.any():
        uv = gb.uv[cov]
        out[cov] = bilinear_sample(texture.data, uv[:, 0], uv[:, 1])
    return ImageGrid(np.clip(out, 0.0, 1.0).transpose(2, 0, 1))
