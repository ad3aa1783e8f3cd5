"""Orthographic cameras: the six axis-aligned views plus seeded random views.

Conventions (documented once, used everywhere):
- world up is +Y; elevation is measured from the XZ plane;
- a camera "on +Z" has view_dir (0,0,-1), i.e. view_dir points from the
  camera toward the origin;
- up vectors: the +-Y cameras use +Z up, all others use +Y up;
- image row 0 is the top of the frame; pixel centers at integer + 0.5;
- depth(p) = dot(p, view_dir) + eye_distance, so depth grows away from the
  camera and the unit cube sits strictly between near and far.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import SeededRng

DEFAULT_HALF_EXTENT = 0.55
DEFAULT_IMAGE_SIZE = 512
EYE_DISTANCE = 1.0
DEFAULT_NEAR = 0.05
DEFAULT_FAR = 2.0


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Camera:
    view_dir: tuple[float, float, float]
    up: tuple[float, float, float]
    half_extent: float = DEFAULT_HALF_EXTENT
    image_size: int = DEFAULT_IMAGE_SIZE
    near: float = DEFAULT_NEAR
    far: float = DEFAULT_FAR

    def __post_init__(self):
        f = _unit(self.view_dir)
        u = _unit(self.up)
        if not (self.near < self.far and self.half_extent > 0 and self.image_size >= 1):
            raise ValueError("camera wants near < far, half_extent > 0, image_size >= 1")
        if abs(float(np.dot(f, u))) > 1.0 - 1e-9:
            raise ValueError("up vector parallel to view direction")
        object.__setattr__(self, "view_dir", tuple(float(x) for x in f))
        object.__setattr__(self, "up", tuple(float(x) for x in u))

    # orthonormal basis (right, true up, forward) -----------------------------

    @property
    def forward(self) -> np.ndarray:
        return np.asarray(self.view_dir)

    @property
    def right(self) -> np.ndarray:
        z_axis = -self.forward  # points from origin toward the camera
        return _unit(np.cross(np.asarray(self.up), z_axis))

    @property
    def true_up(self) -> np.ndarray:
        return np.cross(-self.forward, self.right)

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """World points (N,3) -> continuous pixel coords (px, py) and depth.

        px, py follow the raster convention: pixel (ix, iy) center at
        (ix + 0.5, iy + 0.5), y growing downward.
        """
        pts = np.asarray(points, dtype=np.float64)
        s = pts @ self.right
        t = pts @ self.true_up
        depth = pts @ self.forward + EYE_DISTANCE
        n = self.image_size
        px = (s / self.half_extent + 1.0) * (0.5 * n)
        py = (1.0 - t / self.half_extent) * (0.5 * n)
        return px, py, depth

    def to_dict(self) -> dict:
        return {
            "kind": "orthographic",
            "view_dir": list(self.view_dir),
            "up": list(self.up),
            "half_extent": self.half_extent,
            "image_size": self.image_size,
            "near": self.near,
            "far": self.far,
        }

    @staticmethod
    def from_dict(d: dict) -> "Camera":
        if d.get("kind", "orthographic") != "orthographic":
            raise ValueError(f"unsupported camera kind {d.get('kind')!r}")
        return Camera(
            view_dir=tuple(d["view_dir"]),
            up=tuple(d["up"]),
            half_extent=float(d["half_extent"]),
            image_size=int(d["image_size"]),
            near=float(d["near"]),
            far=float(d["far"]),
        )


_AXIS_VIEWS = [
    ((-1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),  # camera on +X
    ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),   # camera on -X
    ((0.0, -1.0, 0.0), (0.0, 0.0, 1.0)),  # camera on +Y
    ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),   # camera on -Y
    ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0)),  # camera on +Z
    ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),   # camera on -Z
]


def orthogonal_cameras(image_size: int = DEFAULT_IMAGE_SIZE,
                       half_extent: float = DEFAULT_HALF_EXTENT) -> list[Camera]:
    """The six canonical cameras on +-X, +-Y, +-Z looking at the origin."""
    return [
        Camera(view_dir=v, up=u, half_extent=half_extent, image_size=image_size)
        for v, u in _AXIS_VIEWS
    ]


def random_view_cameras(n: int, seed: int,
                        elevation_deg: tuple[float, float] = (-45.0, 45.0),
                        image_size: int = DEFAULT_IMAGE_SIZE,
                        half_extent: float = DEFAULT_HALF_EXTENT) -> list[Camera]:
    """Cameras with directions drawn uniformly (by area) on a sphere band.

    Elevation is relative to the XZ plane; azimuth is uniform in [0, 2pi).
    Deterministic per seed.
    """
    if n < 1:
        raise ValueError("need at least one random view")
    lo, hi = (math.radians(elevation_deg[0]), math.radians(elevation_deg[1]))
    if lo > hi or lo < -math.pi / 2 or hi > math.pi / 2:
        raise ValueError("elevation range must satisfy -90 <= lo <= hi <= 90 degrees")
    rng = SeededRng(seed, "views")
    cams = []
    for _ in range(n):
        azimuth = 2.0 * math.pi * rng.uniform()
        sin_e = math.sin(lo) + (math.sin(hi) - math.sin(lo)) * rng.uniform()
        cos_e = math.sqrt(max(0.0, 1.0 - sin_e * sin_e))
        eye_dir = (cos_e * math.cos(azimuth), sin_e, cos_e * math.sin(azimuth))
        view_dir = tuple(-c for c in eye_dir)
        cams.append(Camera(view_dir=view_dir, up=(0.0, 1.0, 0.0),
                           half_extent=half_extent, image_size=image_size))
    return cams
