"""Procedural meshes and textures used by tests, benchmarks, and demos.

All meshes come UV-unwrapped with islands separated by a margin so texture
baking has a well-posed atlas to land in.
"""
from __future__ import annotations

import math

import numpy as np

from .image import ImageGrid
from .mesh import TriangleMesh
from .rng import SeededRng


def quad_mesh(axis: str = "z", offset: float = 0.0, size: float = 1.0,
              uv_rect: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0),
              flip: bool = False) -> TriangleMesh:
    """Unit quad perpendicular to an axis, facing the positive direction.

    uv_rect = (u0, v0, u1, v1) places the quad's island in the atlas.
    flip reverses the facing direction (normal and winding).
    """
    h = size / 2.0
    if axis == "z":
        corners = [(-h, -h, offset), (h, -h, offset), (h, h, offset), (-h, h, offset)]
        normal = (0.0, 0.0, 1.0)
    elif axis == "y":
        corners = [(-h, offset, -h), (h, offset, -h), (h, offset, h), (-h, offset, h)]
        normal = (0.0, 1.0, 0.0)
    elif axis == "x":
        corners = [(offset, -h, -h), (offset, h, -h), (offset, h, h), (offset, -h, h)]
        normal = (1.0, 0.0, 0.0)
    else:
        raise ValueError(f"axis must be x/y/z, got {axis!r}")
    u0, v0, u1, v1 = uv_rect
    uvs = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
    if flip:
        normal = tuple(-c for c in normal)
        tris = [(0, 2, 1), (0, 3, 2)]
    else:
        tris = [(0, 1, 2), (0, 2, 3)]
    faces = [[[a, 0, a], [b, 0, b], [c, 0, c]] for a, b, c in tris]
    return TriangleMesh(np.array(corners), np.array([normal]),
                        np.array(uvs), np.array(faces))


_CUBE_FACES = [
    # (axis index, sign): +X -X +Y -Y +Z -Z
    (0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0),
]


def cube_mesh(uv_margin: float = 0.02) -> TriangleMesh:
    """Unit cube with six separate UV islands in a 3x2 atlas layout."""
    positions, normals, uvs, faces = [], [], [], []
    for fi, (axis, sign) in enumerate(_CUBE_FACES):
        a1, a2 = [i for i in range(3) if i != axis]
        base = np.zeros(3)
        base[axis] = sign * 0.5
        corner_list = []
        for da, db in [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]:
            p = base.copy()
            p[a1] = da * sign  # flip one tangent axis so faces wind outward
            p[a2] = db
            corner_list.append(p)
        n = np.zeros(3)
        n[axis] = sign
        col, row = fi % 3, fi // 3
        u0 = col / 3.0 + uv_margin
        u1 = (col + 1) / 3.0 - uv_margin
        v0 = row / 2.0 + uv_margin
        v1 = (row + 1) / 2.0 - uv_margin
        uv_list = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
        pbase, ubase = len(positions), len(uvs)
        positions.extend(corner_list)
        uvs.extend(uv_list)
        normals.append(n)
        for (a, b, c) in [(0, 1, 2), (0, 2, 3)]:
            faces.append([[pbase + a, fi, ubase + a],
                          [pbase + b, fi, ubase + b],
                          [pbase + c, fi, ubase + c]])
    return TriangleMesh(np.array(positions), np.array(normals),
                        np.array(uvs), np.array(faces))


def sphere_mesh(lat_segments: int = 24, lon_segments: int = 48,
                radius: float = 0.5) -> TriangleMesh:
    """UV sphere with an equirectangular unwrap (seam vertices duplicated)."""
    positions, normals, uvs, faces = [], [], [], []
    rows = lat_segments + 1
    cols = lon_segments + 1  # duplicate seam column so u spans [0,1]
    for i in range(rows):
        theta = math.pi * i / lat_segments  # 0 at +Y pole
        for j in range(cols):
            phi = 2.0 * math.pi * j / lon_segments
            nx = math.sin(theta) * math.cos(phi)
            ny = math.cos(theta)
            nz = math.sin(theta) * math.sin(phi)
            positions.append((radius * nx, radius * ny, radius * nz))
            normals.append((nx, ny, nz))
            uvs.append((j / lon_segments, 1.0 - i / lat_segments))
    def vid(i, j):
        return i * cols + j
    for i in range(lat_segments):
        for j in range(lon_segments):
            q = [vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)]
            tris = []
            if i > 0:
                tris.append((q[0], q[1], q[2]))
            if i < lat_segments - 1:
                tris.append((q[0], q[2], q[3]))
            for (a, b, c) in tris:
                faces.append([[a, a, a], [b, b, b], [c, c, c]])
    return TriangleMesh(np.array(positions), np.array(normals),
                        np.array(uvs), np.array(faces))


def two_planes_mesh(gap: float = 0.6, size: float = 0.8) -> TriangleMesh:
    """Front and rear quads facing +Z with disjoint UV islands.

    The front plane (island on the left half of the atlas) hides the rear
    plane (right half) from any +Z viewpoint.
    """
    front = quad_mesh("z", offset=+gap / 2, size=size,
                      uv_rect=(0.03, 0.1, 0.47, 0.9))
    rear = quad_mesh("z", offset=-gap / 2, size=size,
                     uv_rect=(0.53, 0.1, 0.97, 0.9))
    n_p, n_n, n_uv = len(front.positions), len(front.normals), len(front.uvs)
    faces2 = rear.faces.copy()
    faces2[:, :, 0] += n_p
    faces2[:, :, 1] += n_n
    faces2[:, :, 2] += n_uv
    return TriangleMesh(
        np.concatenate([front.positions, rear.positions]),
        np.concatenate([front.normals, rear.normals]),
        np.concatenate([front.uvs, rear.uvs]),
        np.concatenate([front.faces, faces2]),
    )


def checkerboard(resolution: int = 1024, cells: int = 4,
                 dark: float = 0.1, light: float = 0.9) -> ImageGrid:
    """cells x cells checker over the full image, distinct colors per channel."""
    idx = np.arange(resolution) * cells // resolution
    pattern = (idx[:, None] + idx[None, :]) % 2
    img = np.empty((3, resolution, resolution))
    img[0] = np.where(pattern, light, dark)
    img[1] = np.where(pattern, dark, light)
    img[2] = np.where(pattern, light, 0.5)
    return ImageGrid(img)


def smooth_noise(resolution: int = 1024, seed: int = 0, grid: int = 12,
                 lo: float = 0.15, hi: float = 0.85) -> ImageGrid:
    """Low-frequency noise: seeded coarse grid upsampled bilinearly."""
    rng = SeededRng(seed, "smooth-noise")
    coarse = lo + (hi - lo) * np.asarray(rng.uniform((3, grid, grid)))
    # bilinear upsample with edge clamping
    pos = (np.arange(resolution) + 0.5) / resolution * grid - 0.5
    pos = np.clip(pos, 0.0, grid - 1.0)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, grid - 1)
    f = pos - i0
    rows = coarse[:, i0][:, :, :] * (1 - f)[None, :, None] + coarse[:, i1] * f[None, :, None]
    img = rows[:, :, i0] * (1 - f)[None, None, :] + rows[:, :, i1] * f[None, None, :]
    return ImageGrid(np.clip(img, 0.0, 1.0))


def stripes(resolution: int = 256, period: int = 32, angle: str = "h",
            c0=(0.2, 0.3, 0.8), c1=(0.9, 0.8, 0.2)) -> ImageGrid:
    coord = np.arange(resolution)
    band = (coord // max(period // 2, 1)) % 2
    mask = band[:, None] if angle == "h" else band[None, :]
    mask = np.broadcast_to(mask, (resolution, resolution))
    img = np.empty((3, resolution, resolution))
    for ch in range(3):
        img[ch] = np.where(mask, c1[ch], c0[ch])
    return ImageGrid(img)
