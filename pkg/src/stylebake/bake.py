"""UV style baking: project multi-view images onto a mesh's texture atlas.

Pipeline: rasterize the mesh's UV layout to get per-texel surface footprints,
reproject every view onto those footprints with depth and orientation tests,
fuse observations by confidence-weighted averaging, fill unobserved surface
texels from their nearest observed neighbors in world space, and finally
dilate island borders in UV space so bilinear sampling never reads background.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .camera import Camera
from .errors import CountMismatch, DimensionMismatch, MissingUVs, NoValidTexels
from .image import ImageGrid
from .mesh import TriangleMesh
from .raster import _raster_visibility


@dataclass(frozen=True)
class BakeConfig:
    resolution: int = 1024
    depth_epsilon: float = 1e-3      # world units; mesh assumed unit-normalized
    cosine_cutoff: float = 0.1
    blend_power: float = 2.0
    inpaint_knn: int = 4
    dilation_margin: int = 4

    def __post_init__(self):
        if self.depth_epsilon <= 0 or self.inpaint_knn < 1:
            raise ValueError("depth_epsilon must be > 0 and inpaint_knn >= 1")
        if not 0.0 <= self.cosine_cutoff < 1.0 or self.blend_power < 0:
            raise ValueError("cosine_cutoff in [0,1) and blend_power >= 0 required")
        if self.resolution < 1 or self.dilation_margin < 0:
            raise ValueError("resolution >= 1 and dilation_margin >= 0 required")


@dataclass
class TexelFootprint:
    """Per-texel surface geometry of the UV atlas."""

    valid: np.ndarray      # (R,R) bool
    world_pos: np.ndarray  # (R,R,3)
    normal: np.ndarray     # (R,R,3) unit where valid
    tri_id: np.ndarray     # (R,R) int32, -1 where invalid
    bary: np.ndarray       # (R,R,3)
    degenerate_uv: list[int] = field(default_factory=list)


@dataclass
class UVAtlas:
    """Accumulation workspace: weighted color sums per texel."""

    accum_color: np.ndarray   # (R,R,3)
    accum_weight: np.ndarray  # (R,R)
    observations: np.ndarray  # (R,R) int32

    @staticmethod
    def empty(resolution: int) -> "UVAtlas":
        return UVAtlas(
            accum_color=np.zeros((resolution, resolution, 3)),
            accum_weight=np.zeros((resolution, resolution)),
            observations=np.zeros((resolution, resolution), dtype=np.int32),
        )


def rasterize_uv_geometry(mesh: TriangleMesh, resolution: int) -> TexelFootprint:
    """Rasterize triangles in UV space; texel centers carry interpolated
    world position and shading normal.  Overlapping UV islands keep the first
    triangle in mesh order; zero-area UV triangles are skipped and recorded.
    """
    mesh.require_uvs()
    uvs = mesh.corner_uvs()  # (T,3,2)
    r = resolution
    # texel (ix, iy) center corresponds to u=(ix+0.5)/R, v=1-(iy+0.5)/R
    xy = np.empty_like(uvs)
    xy[:, :, 0] = uvs[:, :, 0] * r
    xy[:, :, 1] = (1.0 - uvs[:, :, 1]) * r
    ex = xy[:, 1] - xy[:, 0]
    ey = xy[:, 2] - xy[:, 0]
    area2 = ex[:, 0] * ey[:, 1] - ex[:, 1] * ey[:, 0]
    degenerate = np.nonzero(area2 == 0.0)[0]
    keep = area2 != 0.0
    kept_ids = np.nonzero(keep)[0].astype(np.int64)
    # "depth" = original triangle index, so the strict z-test keeps the first
    z = np.repeat(kept_ids[:, None].astype(np.float64), 3, axis=1)
    depth, tri_local, bary = _raster_visibility(
        xy[keep], z, r, r, -np.inf, np.inf)
    valid = tri_local >= 0
    tri = np.full((r, r), -1, dtype=np.int32)
    tri[valid] = kept_ids[tri_local[valid]].astype(np.int32)
    world_pos = np.zeros((r, r, 3))
    normal = np.zeros((r, r, 3))
    if valid.any():
        t_sel = tri[valid]
        w = bary[valid]
        pos_c = mesh.corner_positions()[t_sel]
        world_pos[valid] = np.einsum("mc,mcd->md", w, pos_c)
        nrm_c = mesh.corner_normals()[t_sel]
        nvec = np.einsum("mc,mcd->md", w, nrm_c)
        lens = np.linalg.norm(nvec, axis=1)
        normal[valid] = nvec / np.where(lens > 1e-12, lens, 1.0)[:, None]
    return TexelFootprint(valid=valid, world_pos=world_pos, normal=normal,
                          tri_id=tri, bary=bary,
                          degenerate_uv=[int(i) for i in degenerate])


def reproject(views: list[ImageGrid], cameras: list[Camera],
              view_depths: list[np.ndarray], footprints: TexelFootprint,
              config: BakeConfig) -> UVAtlas:
    """Accumulate view colors onto valid texels with visibility filtering.

    A texel contributes to a view iff its projection lands fully inside the
    frame, the projected depth agrees with the view's stored depth (see
    kernel docstring for the tap rule), and cos(theta) between the texel
    normal and the direction toward the camera exceeds the cutoff.  Accepted
    samples are weighted by cos(theta)^blend_power.
    """
    if not (len(views) == len(cameras) == len(view_depths)):
        raise CountMismatch(
            f"views/cameras/depths counts differ: "
            f"{len(views)}/{len(cameras)}/{len(view_depths)}"
        )
    r = footprints.valid.shape[0]
    atlas = UVAtlas.empty(r)
    vidx = np.nonzero(footprints.valid.ravel())[0]
    if len(vidx) == 0 or not views:
        return atlas
    pos = footprints.world_pos.reshape(-1, 3)[vidx]
    nrm = footprints.normal.reshape(-1, 3)[vidx]
    acc_c = np.zeros((len(vidx), 3))
    acc_w = np.zeros(len(vidx))
    obs = np.zeros(len(vidx), dtype=np.int32)
    disc_cap = 50.0 * config.depth_epsilon
    for view, cam, vdepth in zip(views, cameras, view_depths):
        if view.channels != 3:
            raise DimensionMismatch("views must be 3-channel")
        if vdepth.shape != (cam.image_size, cam.image_size):
            raise CountMismatch("depth map resolution does not match its camera")
        px, py, dep = cam.project(pos)
        cos = nrm @ (-cam.forward)
        k = config.blend_power
        if k == 0.0:
            w = np.ones_like(cos)
        elif k == 2.0:
            w = cos * cos
        else:
            w = np.power(np.maximum(cos, 0.0), k)
        w = np.where(cos > config.cosine_cutoff, w, 0.0)
        far_cut = cam.far - (cam.far - cam.near) * 1e-4
        _kernels.reproject_accum(
            np.ascontiguousarray(view.data), np.ascontiguousarray(vdepth, dtype=np.float64),
            far_cut, config.depth_epsilon, disc_cap,
            px, py, dep, w, acc_c, acc_w, obs,
        )
    flat_c = atlas.accum_color.reshape(-1, 3)
    flat_w = atlas.accum_weight.reshape(-1)
    flat_o = atlas.observations.reshape(-1)
    flat_c[vidx] = acc_c
    flat_w[vidx] = acc_w
    flat_o[vidx] = obs
    return atlas


def fuse(atlas: UVAtlas) -> tuple[ImageGrid, np.ndarray]:
    """Normalize accumulated colors; returns (albedo, validity mask)."""
    validity = atlas.observations > 0
    safe = np.where(atlas.accum_weight > 0.0, atlas.accum_weight, 1.0)
    albedo = np.where(validity[:, :, None], atlas.accum_color / safe[:, :, None], 0.0)
    return ImageGrid(np.clip(albedo, 0.0, 1.0).transpose(2, 0, 1)), validity


def inpaint_3d(albedo: ImageGrid, validity: np.ndarray,
               footprints: TexelFootprint, config: BakeConfig
               ) -> tuple[ImageGrid, np.ndarray]:
    """Fill unobserved surface texels from nearby observed surface texels.

    Each geometry-valid but unobserved texel receives the inverse-distance
    weighted average (weights 1/(dist+1e-6)) of its inpaint_knn nearest
    observed texels by world-space distance.  Observed texels are never
    modified.  Returns the filled albedo and the updated validity mask.
    """
    geo = footprints.valid
    have = geo & validity
    need = geo & ~validity
    if not have.any():
        raise NoValidTexels("no observed texels to inpaint from")
    out = albedo.data.copy()
    if need.any():
        valid_pos = footprints.world_pos[have]
        valid_col = albedo.data.transpose(1, 2, 0)[have]
        targets = footprints.world_pos[need]
        extent = max(float(np.ptp(valid_pos, axis=0).max()), 1e-6)
        cell = extent / 32.0
        filled = _kernels.knn_fill(
            np.ascontiguousarray(targets), np.ascontiguousarray(valid_pos),
            np.ascontiguousarray(valid_col), int(config.inpaint_knn), cell)
        trans = out.transpose(1, 2, 0)
        trans[need] = np.clip(filled, 0.0, 1.0)
    return ImageGrid(out), (validity | need)


def inpaint_uv(albedo: ImageGrid, validity: np.ndarray,
               footprints: TexelFootprint, config: BakeConfig
               ) -> tuple[ImageGrid, np.ndarray]:
    """Dilate island borders: off-surface texels within dilation_margin
    (4-neighborhood BFS hops) copy their nearest filled texel's color, ties
    resolved toward the lower source texel index.  Surface texels are never
    modified.
    """
    r = validity.shape[0]
    src = np.where(validity, np.arange(r * r).reshape(r, r), -1).astype(np.int64)
    fillable = ~footprints.valid
    for _ in range(config.dilation_margin):
        frontier = src >= 0
        best = np.full((r, r), np.iinfo(np.int64).max)
        for shift, sl_dst, sl_src in (
            (1, np.s_[1:, :], np.s_[:-1, :]),   # from above
            (2, np.s_[:-1, :], np.s_[1:, :]),   # from below
            (3, np.s_[:, 1:], np.s_[:, :-1]),   # from left
            (4, np.s_[:, :-1], np.s_[:, 1:]),   # from right
        ):
            cand = np.full((r, r), np.iinfo(np.int64).max)
            region = np.where(frontier[sl_src], src[sl_src], np.iinfo(np.int64).max)
            cand[sl_dst] = region
            best = np.minimum(best, cand)
        newly = fillable & (src < 0) & (best < np.iinfo(np.int64).max)
        if not newly.any():
            break
        src[newly] = best[newly]
    out = albedo.data.copy()
    halo = fillable & (src >= 0)
    if halo.any():
        flat = out.reshape(3, -1)
        idx = src[halo]
        trans = out.transpose(1, 2, 0)
        trans[halo] = flat[:, idx].T
    return ImageGrid(out), (validity | halo)


def bake_tangent_normals(mesh: TriangleMesh, footprints: TexelFootprint,
                         resolution: int) -> ImageGrid:
    """Shading normals expressed in each face's tangent frame, encoded (n+1)/2.

    The tangent follows the face's UV u-derivative, Gram-Schmidt
    orthogonalized against the face normal; the bitangent completes the
    right-handed frame with the UV handedness sign.  Faces with degenerate UV
    area fall back to an arbitrary-but-deterministic frame around the face
    normal.  Flat-shaded texels encode exactly (0.5, 0.5, 1.0).
    """
    mesh.require_uvs()
    if footprints.valid.shape[0] != resolution:
        raise DimensionMismatch("footprint resolution mismatch")
    t_count = mesh.triangle_count
    tangent = np.zeros((t_count, 3))
    bitangent = np.zeros((t_count, 3))
    face_n = np.zeros((t_count, 3))
    pos = mesh.corner_positions()
    uv = mesh.corner_uvs()
    for t in range(t_count):
        p0, p1, p2 = pos[t]
        e1, e2 = p1 - p0, p2 - p0
        n = np.cross(e1, e2)
        ln = np.linalg.norm(n)
        n = n / ln if ln > 1e-14 else np.array([0.0, 0.0, 1.0])
        (u0, v0), (u1, v1), (u2, v2) = uv[t]
        du1, dv1 = u1 - u0, v1 - v0
        du2, dv2 = u2 - u0, v2 - v0
        det = du1 * dv2 - du2 * dv1
        if abs(det) < 1e-14:
            # degenerate UV: build any stable frame around the face normal
            helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            tang = np.cross(helper, n)
            handed = 1.0
        else:
            tang = (e1 * dv2 - e2 * dv1) / det
            handed = 1.0 if det > 0 else -1.0
        tang = tang - n * np.dot(n, tang)
        lt = np.linalg.norm(tang)
        if lt < 1e-14:
            helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            tang = np.cross(helper, n)
            lt = np.linalg.norm(tang)
        tang /= lt
        face_n[t] = n
        tangent[t] = tang
        bitangent[t] = np.cross(n, tang) * handed
    out = np.full((resolution, resolution, 3), 0.5)
    val = footprints.valid
    if val.any():
        t_sel = footprints.tri_id[val]
        sn = footprints.normal[val]
        tx = np.sum(sn * tangent[t_sel], axis=1)
        ty = np.sum(sn * bitangent[t_sel], axis=1)
        tz = np.sum(sn * face_n[t_sel], axis=1)
        enc = np.stack([tx, ty, tz], axis=1)
        lens = np.linalg.norm(enc, axis=1)
        enc = enc / np.where(lens > 1e-12, lens, 1.0)[:, None]
        out[val] = np.clip((enc + 1.0) * 0.5, 0.0, 1.0)
    out[~val] = (0.5, 0.5, 1.0)
    return ImageGrid(out.transpose(2, 0, 1))


@dataclass
class BakeResult:
    albedo: ImageGrid
    normal_map: ImageGrid
    validity: np.ndarray   # filled texels after both inpainting passes
    observed: np.ndarray   # texels with at least one accepted view sample
    report: dict


def bake(mesh: TriangleMesh, views: list[ImageGrid], cameras: list[Camera],
         view_depths: list[np.ndarray], config: BakeConfig,
         footprints: TexelFootprint | None = None) -> BakeResult:
    """Full pipeline: footprints, reprojection, fusion, 3D + UV inpainting,
    and tangent-space normal baking; the report carries fill fractions.
    """
    if footprints is None:
        footprints = rasterize_uv_geometry(mesh, config.resolution)
    atlas = reproject(views, cameras, view_depths, footprints, config)
    albedo, validity = fuse(atlas)
    observed_mask = validity & footprints.valid
    geo_count = max(int(footprints.valid.sum()), 1)
    observed = int(observed_mask.sum())
    albedo, validity = inpaint_3d(albedo, validity, footprints, config)
    filled_3d = int((validity & footprints.valid).sum()) - observed
    albedo, validity = inpaint_uv(albedo, validity, footprints, config)
    halo = int((validity & ~footprints.valid).sum())
    normal_map = bake_tangent_normals(mesh, footprints, config.resolution)
    report = {
        "geometry_texels": int(footprints.valid.sum()),
        "observed_fraction": observed / geo_count,
        "inpainted_3d_fraction": filled_3d / geo_count,
        "uv_halo_texels": halo,
        "degenerate_uv_triangles": len(footprints.degenerate_uv),
        "unfilled_geometry_texels": int((footprints.valid & ~validity).sum()),
    }
    return BakeResult(albedo=albedo, normal_map=normal_map,
                      validity=validity, observed=observed_mask, report=report)
