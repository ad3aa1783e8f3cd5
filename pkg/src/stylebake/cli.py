"""Command-line interface: one executable, one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation/user error, 2 internal error.  Errors are
printed as a single machine-parsable line ``error: <module>.<Name>: message``.
Every run writes its fully resolved configuration next to its outputs so any
result can be replayed byte-for-byte.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .bake import BakeConfig, bake
from .camera import Camera, orthogonal_cameras, random_view_cameras
from .dataset import make_sample, write_dataset
from .errors import MissingFile, StylebakeError
from .features import FeatureBank
from .image import ImageGrid
from .jigsaw import (DEFAULT_INFER_PATCH, DEFAULT_TRAIN_PATCH, MASK_RATIO_MAX,
                     JigsawConfig, jigsaw)
from .mesh import load_mesh, normalize_mesh
from .metrics import multi_view_style_score, style_distance
from .png_io import read_png
from .raster import (decode_depth, encode_depth, encode_normal,
                     encode_position, rasterize, render_textured)

log = logging.getLogger("stylebake")


class CliError(StylebakeError):
    module = "cli"


class InvalidArgs(CliError):
    pass


class RoundtripFailed(CliError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want exit 1
        raise InvalidArgs(message)


def _read_config_file(path: str) -> dict[str, str]:
    """Flat ``section.key = value`` lines; '#' starts a comment."""
    settings: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgs(f"{path}:{line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        settings[key] = value
    return settings


def _coerce(value: str):
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    for caster in (int, float):
        try:
            return caster(value)
        except ValueError:
            continue
    return value


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict,
                       subcommand: str) -> None:
    """Config-file values fill in any flag left at its default."""
    if not getattr(args, "config", None):
        return
    settings = _read_config_file(args.config)
    for key, value in settings.items():
        if "." not in key:
            raise InvalidArgs(f"config key {key!r} must be '<subcommand>.<name>'")
        section, name = key.split(".", 1)
        if section != subcommand:
            continue
        attr = name.replace("-", "_")
        if attr not in vars(args):
            raise InvalidArgs(f"unknown config key {key!r}")
        if vars(args)[attr] == parser_defaults.get(attr):
            vars(args)[attr] = _coerce(value)
    unknown = [k for k in settings if k.split(".", 1)[0] == subcommand
               and k.split(".", 1)[1].replace("-", "_") not in vars(args)]
    if unknown:
        raise InvalidArgs(f"unknown config keys: {', '.join(unknown)}")


def _emit_resolved_config(args: argparse.Namespace, out_anchor: Path) -> None:
    resolved = {k: v for k, v in vars(args).items()
                if k not in ("func", "config") and not k.startswith("_")}
    resolved["backend"] = _kernels.active_backend()
    resolved["version"] = __version__
    if out_anchor.suffix:  # file output: sibling <stem>.config.json
        target = out_anchor.with_name(out_anchor.stem + ".config.json")
    else:
        out_anchor.mkdir(parents=True, exist_ok=True)
        target = out_anchor / "resolved_config.json"
    target.write_text(json.dumps(resolved, indent=1, default=str))


def _load_image(path: str) -> tuple[ImageGrid, int]:
    if not Path(path).exists():
        raise MissingFile(f"no such image: {path}")
    _, bitdepth = read_png(path)
    return ImageGrid.load_png(path), bitdepth


# --- subcommand implementations ---------------------------------------------

def _cmd_jigsaw(args) -> int:
    img, bitdepth = _load_image(args.inp)
    patch = args.patch_size
    if patch is None:
        patch = DEFAULT_TRAIN_PATCH if args.mode == "train" else DEFAULT_INFER_PATCH
        args.patch_size = patch
    cfg = JigsawConfig(patch_size=patch, mask_ratio=args.mask_ratio,
                       background=(args.background,) * img.channels, seed=args.seed)
    out = jigsaw(img, cfg, mode=args.mode)
    out.image.save_png(args.out, bitdepth=bitdepth)
    if args.dump_perm:
        record = {
            "rows": out.permutation.rows,
            "cols": out.permutation.cols,
            "permutation": [int(i) for i in out.permutation.mapping],
            "visible": [bool(b) for b in out.mask.visible],
            "patch_size": patch,
            "mask_ratio": cfg.mask_ratio,
            "mode": args.mode,
            "seed": args.seed,
        }
        Path(args.dump_perm).write_text(json.dumps(record, indent=1))
    _emit_resolved_config(args, Path(args.out))
    log.info("wrote %s", args.out)
    return 0


def _cmd_render(args) -> int:
    mesh = normalize_mesh(load_mesh(args.mesh))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.views == "ortho6":
        cams = orthogonal_cameras(image_size=args.size, half_extent=args.half_extent)
    elif args.views.startswith("random:"):
        n = int(args.views.split(":", 1)[1])
        cams = random_view_cameras(n, seed=args.seed, image_size=args.size,
                                   half_extent=args.half_extent)
    else:
        raise InvalidArgs(f"--views must be ortho6 or random:<n>, got {args.views!r}")
    textured = None
    if args.texture:
        textured, _ = _load_image(args.texture)
    for k, cam in enumerate(cams):
        gb = rasterize(mesh, cam)
        cov = gb.coverage
        encode_position(gb.position, cov).save_png(out_dir / f"view_{k}_position.png", 16)
        encode_normal(gb.normal, cov).save_png(out_dir / f"view_{k}_normal.png", 16)
        encode_depth(gb.depth, cam).save_png(out_dir / f"view_{k}_depth.png", 16)
        if textured is not None and mesh.has_uvs:
            color = render_textured(mesh, textured, cam)
        else:
            color = encode_normal(gb.normal, cov)  # shading stand-in
        color.save_png(out_dir / f"view_{k}_color.png", 8)
    (out_dir / "cameras.json").write_text(
        json.dumps([c.to_dict() for c in cams], indent=1))
    _emit_resolved_config(args, out_dir)
    log.info("wrote %d views to %s", len(cams), out_dir)
    return 0


def _cmd_pairs(args) -> int:
    mesh_dir = Path(args.meshes)
    if not mesh_dir.is_dir():
        raise MissingFile(f"no such mesh directory: {mesh_dir}")
    obj_paths = sorted(mesh_dir.glob("*.obj"))
    if not obj_paths:
        raise MissingFile(f"no .obj files in {mesh_dir}")
    samples = []
    for i, obj in enumerate(obj_paths):
        mesh = normalize_mesh(load_mesh(obj))
        tex_path = obj.with_suffix(".png")
        if tex_path.exists():
            texture, _ = _load_image(str(tex_path))
        elif args.synthesize_textures:
            from .primitives import smooth_noise
            texture = smooth_noise(256, seed=args.seed + i)
        else:
            raise MissingFile(
                f"texture {tex_path} not found (use --synthesize-textures to generate)"
            )
        samples.append(make_sample(
            mesh, texture, mesh_id=obj.stem, seed=args.seed + i,
            image_size=args.size, reference_views=args.refs,
            patch_size=args.patch_size, mask_ratio_max=args.mask_ratio_max,
        ))
    write_dataset(samples, args.out)
    _emit_resolved_config(args, Path(args.out))
    log.info("wrote %d samples to %s", len(samples), args.out)
    return 0


def _cmd_metrics(args) -> int:
    ref, _ = _load_image(args.ref)
    view_paths: list[Path] = []
    for item in args.views:
        p = Path(item)
        if p.is_dir():
            view_paths.extend(sorted(p.glob("*_color.png")) or sorted(p.glob("*.png")))
        elif p.exists():
            view_paths.append(p)
        else:
            raise MissingFile(f"no such view: {p}")
    if not view_paths:
        raise MissingFile("no view images found")
    views = [ImageGrid.load_png(p) for p in view_paths]
    bank = FeatureBank(seed=args.seed)
    per_view = [style_distance(v, ref, bank) for v in views]
    mean = multi_view_style_score(views, ref, bank)
    report = {
        "bank_seed": args.seed,
        "pixel_convention": "raw [0,1], no channel normalization",
        "views": [str(p) for p in view_paths],
        "per_view": [{"gram": list(r.gram), "adain": list(r.adain)} for r in per_view],
        "mean_gram": mean.mean_gram,
        "mean_adain": mean.mean_adain,
    }
    Path(args.out).write_text(json.dumps(report, indent=1))
    _emit_resolved_config(args, Path(args.out))
    print(json.dumps({"mean_gram": mean.mean_gram, "mean_adain": mean.mean_adain}))
    return 0


def _cmd_attn_check(args) -> int:
    from .attention import (finite_difference_grad_check, ref_attention,
                            softmax_rows)
    from .rng import SeededRng

    rng = SeededRng(args.seed, "attn-check")
    checks = []

    def record(name, value, tol):
        checks.append({"name": name, "max_error": value, "tolerance": tol,
                       "pass": bool(value <= tol)})

    worst_row = worst_hull = 0.0
    perm_exact = collapse_exact = True
    for i in range(20):
        r = rng.child(f"case{i}")
        n, m, d = 2 + r.below(6), 1 + r.below(8), 1 + r.below(6)
        q = np.asarray(r.normal((n, d))) * 3.0
        kv = np.asarray(r.normal((m, d))) * 3.0
        s = softmax_rows(q @ kv.T / np.sqrt(d))
        worst_row = max(worst_row, float(np.abs(s.sum(axis=1) - 1.0).max()))
        out = ref_attention(q, kv)
        lo = kv.min(axis=0) - 1e-9
        hi = kv.max(axis=0) + 1e-9
        worst_hull = max(worst_hull, float(np.maximum(lo - out, out - hi).max()))
        perm = r.permutation(m)
        perm_exact &= bool(np.array_equal(out, ref_attention(q, kv[perm])))
        single = kv[:1]
        collapse_exact &= bool(np.array_equal(
            ref_attention(q, single), np.tile(single, (n, 1))))
    record("row_stochastic", worst_row, 1e-12)
    record("convex_hull", worst_hull, 1e-9)
    record("ref_permutation_invariance", 0.0 if perm_exact else 1.0, 0.0)
    record("single_reference_collapse", 0.0 if collapse_exact else 1.0, 0.0)
    worst_grad = 0.0
    for i in range(args.probes):
        r = rng.child(f"grad{i}")
        n, m, d = 2 + r.below(4), 2 + r.below(4), 2 + r.below(4)
        f_in = np.asarray(r.normal((n, d)))
        f_ref = np.asarray(r.normal((m, d)))
        d_in = np.asarray(r.normal((n, d)))
        d_ref = np.asarray(r.normal((m, d)))
        worst_grad = max(worst_grad, finite_difference_grad_check(
            f_in, f_ref, d_in, d_ref, h=1e-5))
    record("gradient_vs_central_difference", worst_grad, 1e-4)
    report = {"seed": args.seed, "probes": args.probes,
              "checks": checks, "pass": all(c["pass"] for c in checks)}
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text)
        _emit_resolved_config(args, Path(args.out))
    print(text)
    return 0 if report["pass"] else 1


def _load_views_for_bake(views_dir: Path, cameras: list[Camera]):
    views, depths = [], []
    for k, cam in enumerate(cameras):
        cpath = views_dir / f"view_{k}_color.png"
        dpath = views_dir / f"view_{k}_depth.png"
        if not cpath.exists():
            raise MissingFile(f"missing view color: {cpath}")
        if not dpath.exists():
            raise MissingFile(f"missing view depth: {dpath}")
        views.append(ImageGrid.load_png(cpath))
        depths.append(decode_depth(ImageGrid.load_png(dpath), cam))
    return views, depths


def _cmd_bake(args) -> int:
    mesh = normalize_mesh(load_mesh(args.mesh))
    mesh.require_uvs()
    cam_path = Path(args.cameras)
    if not cam_path.exists():
        raise MissingFile(f"no such camera file: {cam_path}")
    cameras = [Camera.from_dict(d) for d in json.loads(cam_path.read_text())]
    views, depths = _load_views_for_bake(Path(args.views), cameras)
    config = BakeConfig(resolution=args.resolution, depth_epsilon=args.depth_eps,
                        cosine_cutoff=args.cos_cutoff, blend_power=args.blend_power,
                        inpaint_knn=args.knn, dilation_margin=args.margin)
    result = bake(mesh, views, cameras, depths, config)
    result.albedo.save_png(args.out, bitdepth=8)
    if args.normals:
        result.normal_map.save_png(args.normals, bitdepth=16)
    report_path = Path(args.out).with_suffix(".report.json")
    report_path.write_text(json.dumps(result.report, indent=1))
    _emit_resolved_config(args, Path(args.out))
    print(json.dumps(result.report))
    return 0


def _cmd_roundtrip(args) -> int:
    mesh = normalize_mesh(load_mesh(args.mesh))
    mesh.require_uvs()
    if args.texture:
        texture, _ = _load_image(args.texture)
    else:
        from .primitives import checkerboard
        texture = checkerboard(args.resolution, 4)
    cams = orthogonal_cameras(image_size=args.size)
    views, depths = [], []
    for cam in cams:
        views.append(render_textured(mesh, texture, cam))
        depths.append(rasterize(mesh, cam).depth)
    config = BakeConfig(resolution=args.resolution)
    result = bake(mesh, views, cams, depths, config)
    if texture.height != args.resolution or texture.width != args.resolution:
        raise InvalidArgs("texture resolution must equal --resolution for comparison")
    diff = np.abs(result.albedo.data - texture.data).transpose(1, 2, 0)
    mean_abs = float(diff[result.observed].mean())
    passed = mean_abs < 2.0 / 255.0
    report = {
        "mean_abs_error": mean_abs,
        "pass": passed,
        "threshold": 2.0 / 255.0,
        **result.report,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1))
        _emit_resolved_config(args, Path(args.out))
    print(json.dumps(report))
    if not passed:
        raise RoundtripFailed(f"mean_abs_error={mean_abs:.6f} >= {2.0 / 255.0:.6f}")
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="stylebake", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file (flags win)")
        p.add_argument("--threads", type=int, default=1,
                       help="thread cap (kernels currently run serial)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("jigsaw", help="patch-shuffle (and mask) an image")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch-size", type=int, default=None,
                   help="default 64 in train mode, 128 in infer mode")
    p.add_argument("--mask-ratio", type=float, default=0.0)
    p.add_argument("--background", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["train", "infer"], default="infer")
    p.add_argument("--dump-perm", default=None,
                   help="write permutation+mask JSON record here")
    common(p)
    p.set_defaults(func=_cmd_jigsaw)

    p = sub.add_parser("render", help="rasterize G-buffer maps for a mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--views", default="ortho6", help="ortho6 or random:<n>")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--half-extent", type=float, default=0.55)
    p.add_argument("--texture", default=None, help="albedo texture for color views")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("pairs", help="build style-texture training samples")
    p.add_argument("--meshes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--refs", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--mask-ratio-max", type=float, default=MASK_RATIO_MAX)
    p.add_argument("--patch-size", type=int, default=DEFAULT_TRAIN_PATCH)
    p.add_argument("--synthesize-textures", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("metrics", help="gram/adain style report vs a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--views", nargs="+", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("attn-check", help="attention invariant + gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=_cmd_attn_check)

    p = sub.add_parser("bake", help="project views into a UV texture")
    p.add_argument("--mesh", required=True)
    p.add_argument("--views", required=True, help="dir with view_k_color/depth PNGs")
    p.add_argument("--cameras", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--normals", default=None)
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--depth-eps", type=float, default=1e-3)
    p.add_argument("--cos-cutoff", type=float, default=0.1)
    p.add_argument("--blend-power", type=float, default=2.0)
    p.add_argument("--knn", type=int, default=4)
    p.add_argument("--margin", type=int, default=4)
    common(p)
    p.set_defaults(func=_cmd_bake)

    p = sub.add_parser("roundtrip", help="render 6 views, bake, compare")
    p.add_argument("--mesh", required=True)
    p.add_argument("--texture", default=None, help="default: generated checkerboard")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=_cmd_roundtrip)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        defaults = {a.dest: a.default
                    for a in parser._subparsers._group_actions[0]
                    .choices[args.subcommand]._actions}
        _apply_config_file(args, defaults, args.subcommand)
        logging.basicConfig(
            level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "threads", 1) < 1:
            raise InvalidArgs("--threads must be >= 1")
        return args.func(args)
    except StylebakeError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:  # config/argument validation raises ValueError
        print(f"error: cli.InvalidValue: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - internal failure boundary
        print(f"error: internal.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
