"""Indexed triangle meshes and Wavefront OBJ I/O."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMesh, MissingUVs, ParseError

_NORM_TOL = 1e-4


@dataclass
class TriangleMesh:
    """Triangles indexing positions / normals / uvs separately, OBJ style.

    faces has shape (T, 3, 3): faces[t, corner] = (position, normal, uv) index;
    -1 marks a missing uv index.  Normals are unit length after construction.
    """

    positions: np.ndarray
    normals: np.ndarray
    uvs: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 2)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3, 3)
        if len(self.faces):
            if self.faces[:, :, 0].min() < 0 or self.faces[:, :, 0].max() >= len(self.positions):
                raise ParseError("position index out of range")
            if self.faces[:, :, 1].min() < 0 or self.faces[:, :, 1].max() >= len(self.normals):
                raise ParseError("normal index out of range")
            uv_idx = self.faces[:, :, 2]
            if uv_idx.max(initial=-1) >= len(self.uvs):
                raise ParseError("uv index out of range")
        if len(self.normals):
            lens = np.linalg.norm(self.normals, axis=1)
            bad = np.abs(lens - 1.0) > _NORM_TOL
            if bad.any():
                safe = np.where(lens[bad] > 1e-12, lens[bad], 1.0)
                self.normals[bad] /= safe[:, None]

    @property
    def triangle_count(self) -> int:
        return len(self.faces)

    @property
    def has_uvs(self) -> bool:
        return len(self.faces) > 0 and bool((self.faces[:, :, 2] >= 0).all()) and len(self.uvs) > 0

    def require_uvs(self):
        if not self.has_uvs:
            raise MissingUVs("mesh has no complete UV coordinates")

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.positions) == 0:
            raise EmptyMesh("mesh has no vertices")
        return self.positions.min(axis=0), self.positions.max(axis=0)

    # convenience gathers used by the rasterizer
    def corner_positions(self) -> np.ndarray:
        return self.positions[self.faces[:, :, 0]]

    def corner_normals(self) -> np.ndarray:
        return self.normals[self.faces[:, :, 1]]

    def corner_uvs(self) -> np.ndarray:
        self.require_uvs()
        return self.uvs[self.faces[:, :, 2]]


def _face_normal(p0, p1, p2) -> np.ndarray:
    n = np.cross(p1 - p0, p2 - p0)
    length = np.linalg.norm(n)
    if length < 1e-20:
        return np.array([0.0, 0.0, 1.0])
    return n / length


def _resolve(idx: int, count: int, line_no: int, what: str) -> int:
    # OBJ indices are 1-based; negative counts back from the end
    if idx > 0:
        r = idx - 1
    elif idx < 0:
        r = count + idx
    else:
        raise ParseError(f"{what} index 0 is invalid", line_no)
    if not 0 <= r < count:
        raise ParseError(f"{what} index {idx} out of range (have {count})", line_no)
    return r


def load_mesh(path: str | Path) -> TriangleMesh:
    """Load a Wavefront OBJ (v/vn/vt/f records, polygons fan-triangulated).

    Missing face normals are replaced by the face-plane normal; missing UVs
    are allowed (flagged per corner with index -1) and only rejected by
    operations that need them.
    """
    positions: list[list[float]] = []
    normals: list[list[float]] = []
    uvs: list[list[float]] = []
    corners: list[list[int]] = []  # (pos, normal-or--1, uv-or--1) before normal fill
    text = Path(path).read_text()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        key, args = tokens[0], tokens[1:]
        try:
            if key == "v":
                if len(args) < 3:
                    raise ParseError("vertex needs 3 coordinates", line_no)
                positions.append([float(a) for a in args[:3]])
            elif key == "vn":
                if len(args) < 3:
                    raise ParseError("normal needs 3 coordinates", line_no)
                normals.append([float(a) for a in args[:3]])
            elif key == "vt":
                if len(args) < 2:
                    raise ParseError("texture coordinate needs 2 values", line_no)
                uvs.append([float(a) for a in args[:2]])
            elif key == "f":
                if len(args) < 3:
                    raise ParseError("face needs at least 3 vertices", line_no)
                poly = []
                for part in args:
                    fields = part.split("/")
                    vi = _resolve(int(fields[0]), len(positions), line_no, "position")
                    ti = ni = -1
                    if len(fields) > 1 and fields[1]:
                        ti = _resolve(int(fields[1]), len(uvs), line_no, "uv")
                    if len(fields) > 2 and fields[2]:
                        ni = _resolve(int(fields[2]), len(normals), line_no, "normal")
                    poly.append([vi, ni, ti])
                for i in range(2, len(poly)):  # fan triangulation
                    corners.extend([poly[0], poly[i - 1], poly[i]])
        except ValueError as exc:
            raise ParseError(f"malformed {key} record: {exc}", line_no) from None
    pos_arr = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    norm_list = [np.asarray(n, dtype=np.float64) for n in normals]
    faces = np.asarray(corners, dtype=np.int64).reshape(-1, 3, 3)
    # synthesize face normals where vn references are missing
    for t in range(len(faces)):
        if (faces[t, :, 1] < 0).any():
            n = _face_normal(*pos_arr[faces[t, :, 0]])
            faces[t, faces[t, :, 1] < 0, 1] = len(norm_list)
            norm_list.append(n)
    norm_arr = (np.asarray(norm_list).reshape(-1, 3) if norm_list
                else np.zeros((0, 3)))
    uv_arr = np.asarray(uvs, dtype=np.float64).reshape(-1, 2)
    return TriangleMesh(pos_arr, norm_arr, uv_arr, faces)


def save_mesh(mesh: TriangleMesh, path: str | Path) -> None:
    """Write a mesh back out as OBJ text."""
    lines = []
    for p in mesh.positions:
        lines.append(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}")
    for uv in mesh.uvs:
        lines.append(f"vt {float(uv[0])!r} {float(uv[1])!r}")
    for n in mesh.normals:
        lines.append(f"vn {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
    for face in mesh.faces:
        parts = []
        for (vi, ni, ti) in face:
            tpart = str(ti + 1) if ti >= 0 else ""
            parts.append(f"{vi + 1}/{tpart}/{ni + 1}")
        lines.append("f " + " ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def normalize_mesh(mesh: TriangleMesh) -> TriangleMesh:
    """Center on the bounding-box midpoint and scale the longest axis to 1."""
    if len(mesh.positions) == 0:
        raise EmptyMesh("cannot normalize an empty mesh")
    lo, hi = mesh.bbox()
    center = (lo + hi) / 2.0
    extent = float((hi - lo).max())
    scale = 1.0 / extent if extent > 0 else 1.0
    return TriangleMesh(
        (mesh.positions - center) * scale,
        mesh.normals.copy(),
        mesh.uvs.copy(),
        mesh.faces.copy(),
    )
