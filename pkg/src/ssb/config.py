"""Run configuration: a strict, nested YAML format.

Strictness is deliberate: any unrecognized key anywhere in the file aborts
before any computation, and exactly one way of each choice (geometry source,
resolution as n or eta) must be given. That keeps sweep configs reproducible
and typos loud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import geometry as geo
from .geometry import RasterMask, Shape, load_mask

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_dict", "resolved_config_dict"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_SHAPE_KINDS = {
    "circle": ("cx", "cy", "r"),
    "annulus": ("cx", "cy", "r_in", "r_out"),
    "rectangle": ("x_min", "x_max", "y_min", "y_max"),
    "sector": ("cx", "cy", "theta_min", "theta_max"),
}

MODEL_KINDS = ("heat", "allen_cahn", "fenton_karma")
INITIAL_KINDS = ("zero", "constant", "preset", "stimulus", "file")

_FK_PARAM_KEYS = (
    "tau_d",
    "tau_r",
    "tau_si",
    "tau_0",
    "tau_v_plus",
    "tau_v1_minus",
    "tau_v2_minus",
    "tau_w_plus",
    "tau_w_minus",
    "u_c",
    "u_v",
    "u_c_si",
    "k",
    "d",
)


def _require_mapping(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, path: str, allowed: tuple[str, ...]) -> None:
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _number(node: dict, path: str, key: str, default=None, required=False):
    if key not in node:
        if required:
            raise ConfigError(f"{path}.{key}: required")
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    return float(value)


def build_shape(node: Any, path: str = "geometry.shape") -> Shape:
    """Build a CSG shape from its nested-dict description."""
    node = _require_mapping(node, path)
    kind = node.get("kind")
    if kind in _SHAPE_KINDS:
        params = _SHAPE_KINDS[kind]
        _check_keys(node, path, ("kind",) + params)
        kwargs = {p: _number(node, path, p, required=True) for p in params}
        cls = {"circle": geo.Circle, "annulus": geo.Annulus, "rectangle": geo.Rectangle, "sector": geo.Sector}[kind]
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind == "polygon":
        _check_keys(node, path, ("kind", "vertices"))
        verts = node.get("vertices")
        if not isinstance(verts, list) or any(not isinstance(v, list) or len(v) != 2 for v in verts):
            raise ConfigError(f"{path}.vertices: expected a list of [x, y] pairs")
        try:
            return geo.Polygon(tuple((float(a), float(b)) for a, b in verts))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind in ("union", "intersection", "difference"):
        _check_keys(node, path, ("kind", "a", "b"))
        if "a" not in node or "b" not in node:
            raise ConfigError(f"{path}: {kind} needs sub-shapes 'a' and 'b'")
        a = build_shape(node["a"], f"{path}.a")
        b = build_shape(node["b"], f"{path}.b")
        cls = {"union": geo.Union, "intersection": geo.Intersection, "difference": geo.Difference}[kind]
        return cls(a, b)
    raise ConfigError(f"{path}.kind: unknown shape kind {kind!r}")


@dataclass
class RunConfig:
    """Validated run configuration with defaults applied."""

    xi: float
    t_end: float
    model_kind: str
    model_params: dict
    geometry_source: str  # "preset" | "shape" | "mask"
    preset: str | None = None
    shape: Shape | None = None
    mask: RasterMask | None = None
    mask_path: str | None = None
    n: int | None = None
    eta: float | None = None
    dt: float | None = None
    snapshot_every: int = 0
    outdir: str = "out"
    heatmaps: bool = True
    csv: bool = False
    initial: dict = field(default_factory=lambda: {"kind": "zero"})
    raw: dict = field(default_factory=dict, repr=False)

    def shape_object(self) -> Shape | None:
        if self.geometry_source == "preset":
            return geo.SHAPE_PRESETS[self.preset]()
        if self.geometry_source == "shape":
            return self.shape
        return None


def parse_config(path: str | Path) -> RunConfig:
    """Parse and validate a YAML config file."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return parse_config_dict(doc, base_dir=Path(path).parent)


def parse_config_dict(doc: Any, base_dir: Path | None = None) -> RunConfig:
    """Validate an already-loaded config mapping (strict on unknown keys)."""
    base = base_dir or Path(".")
    doc = _require_mapping(doc, "config")
    _check_keys(doc, "config", ("geometry", "domain", "model", "time", "output", "initial"))
    for section in ("geometry", "domain", "model", "time"):
        if section not in doc:
            raise ConfigError(f"config.{section}: required section missing")

    # geometry
    gnode = _require_mapping(doc["geometry"], "geometry")
    _check_keys(gnode, "geometry", ("preset", "shape", "mask"))
    sources = [k for k in ("preset", "shape", "mask") if k in gnode]
    if len(sources) != 1:
        raise ConfigError(f"geometry: exactly one of preset/shape/mask required, got {sources or 'none'}")
    source = sources[0]
    preset = shape = mask = mask_path = None
    if source == "preset":
        preset = gnode["preset"]
        if preset not in geo.SHAPE_PRESETS:
            raise ConfigError(f"geometry.preset: unknown preset {preset!r}; choose from {sorted(geo.SHAPE_PRESETS)}")
    elif source == "shape":
        shape = build_shape(gnode["shape"])
    else:
        mnode = _require_mapping(gnode["mask"], "geometry.mask")
        _check_keys(mnode, "geometry.mask", ("path", "origin", "pixel_size"))
        if "path" not in mnode:
            raise ConfigError("geometry.mask.path: required")
        mask_path = str(mnode["path"])
        resolved = Path(mask_path)
        if not resolved.is_absolute():
            resolved = base / resolved
        if not resolved.exists():
            raise ConfigError(f"geometry.mask.path: file not found: {resolved}")
        origin = mnode.get("origin", [0.0, 0.0])
        if not isinstance(origin, list) or len(origin) != 2:
            raise ConfigError("geometry.mask.origin: expected [x, y]")
        pixel_size = _number(mnode, "geometry.mask", "pixel_size", default=1.0)
        try:
            mask = load_mask(resolved, origin=(float(origin[0]), float(origin[1])), pixel_size=pixel_size)
        except ValueError as exc:
            raise ConfigError(f"geometry.mask: {exc}") from exc

    # domain
    dnode = _require_mapping(doc["domain"], "domain")
    _check_keys(dnode, "domain", ("xi", "n", "eta"))
    xi = _number(dnode, "domain", "xi", required=True)
    if xi <= 0:
        raise ConfigError(f"domain.xi: must be positive, got {xi}")
    if ("n" in dnode) == ("eta" in dnode):
        raise ConfigError("domain: exactly one of 'n' or 'eta' must be given")
    n = eta = None
    if "n" in dnode:
        n_val = dnode["n"]
        if not isinstance(n_val, int) or isinstance(n_val, bool):
            raise ConfigError(f"domain.n: expected an integer, got {n_val!r}")
        if n_val < 8 or n_val % 2:
            raise ConfigError(f"domain.n: must be even and >= 8, got {n_val}")
        n = n_val
    else:
        eta = _number(dnode, "domain", "eta", required=True)
        if eta <= 0:
            raise ConfigError(f"domain.eta: must be positive, got {eta}")

    # model
    mnode = _require_mapping(doc["model"], "model")
    kind = mnode.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind: expected one of {MODEL_KINDS}, got {kind!r}")
    params: dict[str, Any] = {}
    if kind == "heat":
        _check_keys(mnode, "model", ("kind", "d", "center"))
        params["d"] = _number(mnode, "model", "d", default=1.0)
        if params["d"] <= 0:
            raise ConfigError("model.d: must be positive")
        center = mnode.get("center", [0.0, 0.0])
        if not isinstance(center, list) or len(center) != 2:
            raise ConfigError("model.center: expected [cx, cy]")
        params["center"] = [float(center[0]), float(center[1])]
    elif kind == "allen_cahn":
        _check_keys(mnode, "model", ("kind", "eps"))
        params["eps"] = _number(mnode, "model", "eps", required=True)
        if params["eps"] <= 0:
            raise ConfigError("model.eps: must be positive")
    else:
        _check_keys(mnode, "model", ("kind",) + _FK_PARAM_KEYS)
        for key in _FK_PARAM_KEYS:
            if key in mnode:
                params[key] = _number(mnode, "model", key, required=True)

    # time
    tnode = _require_mapping(doc["time"], "time")
    _check_keys(tnode, "time", ("dt", "t_end", "snapshot_every"))
    t_end = _number(tnode, "time", "t_end", required=True)
    if t_end < 0 or not math.isfinite(t_end):
        raise ConfigError(f"time.t_end: must be finite and nonnegative, got {t_end}")
    dt = _number(tnode, "time", "dt")
    if dt is not None and dt <= 0:
        raise ConfigError(f"time.dt: must be positive, got {dt}")
    snapshot_every = tnode.get("snapshot_every", 0)
    if not isinstance(snapshot_every, int) or isinstance(snapshot_every, bool) or snapshot_every < 0:
        raise ConfigError(f"time.snapshot_every: expected a nonnegative integer, got {snapshot_every!r}")

    # output
    outdir, heatmaps, csv_out = "out", True, False
    if "output" in doc:
        onode = _require_mapping(doc["output"], "output")
        _check_keys(onode, "output", ("directory", "heatmaps", "csv"))
        outdir = str(onode.get("directory", "out"))
        heatmaps = bool(onode.get("heatmaps", True))
        csv_out = bool(onode.get("csv", False))

    # initial condition
    initial: dict[str, Any] = {"kind": "zero"}
    if "initial" in doc:
        inode = _require_mapping(doc["initial"], "initial")
        ikind = inode.get("kind", "zero")
        if ikind not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind: expected one of {INITIAL_KINDS}, got {ikind!r}")
        initial = {"kind": ikind}
        if ikind == "zero":
            _check_keys(inode, "initial", ("kind",))
        elif ikind == "constant":
            _check_keys(inode, "initial", ("kind", "value"))
            initial["value"] = _number(inode, "initial", "value", required=True)
        elif ikind == "preset":
            _check_keys(inode, "initial", ("kind", "name"))
            name = inode.get("name")
            if name != "allen_cahn_bumps":
                raise ConfigError(f"initial.name: unknown initial-condition preset {name!r}")
            initial["name"] = name
        elif ikind == "stimulus":
            _check_keys(inode, "initial", ("kind", "rect", "value"))
            rect = inode.get("rect")
            if not isinstance(rect, list) or len(rect) != 4:
                raise ConfigError("initial.rect: expected [x_min, x_max, y_min, y_max]")
            initial["rect"] = [float(v) for v in rect]
            if not (initial["rect"][0] < initial["rect"][1] and initial["rect"][2] < initial["rect"][3]):
                raise ConfigError("initial.rect: must satisfy x_min < x_max and y_min < y_max")
            initial["value"] = _number(inode, "initial", "value", default=1.0)
        else:
            _check_keys(inode, "initial", ("kind", "path"))
            if "path" not in inode:
                raise ConfigError("initial.path: required")
            ipath = Path(str(inode["path"]))
            if not ipath.is_absolute():
                ipath = base / ipath
            if not ipath.exists():
                raise ConfigError(f"initial.path: file not found: {ipath}")
            initial["path"] = str(ipath)

    return RunConfig(
        xi=xi,
        t_end=t_end,
        model_kind=kind,
        model_params=params,
        geometry_source=source,
        preset=preset,
        shape=shape,
        mask=mask,
        mask_path=mask_path,
        n=n,
        eta=eta,
        dt=dt,
        snapshot_every=snapshot_every,
        outdir=outdir,
        heatmaps=heatmaps,
        csv=csv_out,
        initial=initial,
        raw=doc,
    )


def _shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, geo.Circle):
        return {"kind": "circle", "cx": shape.cx, "cy": shape.cy, "r": shape.r}
    if isinstance(shape, geo.Annulus):
        return {"kind": "annulus", "cx": shape.cx, "cy": shape.cy, "r_in": shape.r_in, "r_out": shape.r_out}
    if isinstance(shape, geo.Rectangle):
        return {
            "kind": "rectangle",
            "x_min": shape.x_min,
            "x_max": shape.x_max,
            "y_min": shape.y_min,
            "y_max": shape.y_max,
        }
    if isinstance(shape, geo.Sector):
        return {"kind": "sector", "cx": shape.cx, "cy": shape.cy, "theta_min": shape.theta_min, "theta_max": shape.theta_max}
    if isinstance(shape, geo.Polygon):
        return {"kind": "polygon", "vertices": [[v[0], v[1]] for v in shape.vertices]}
    kind = {geo.Union: "union", geo.Intersection: "intersection", geo.Difference: "difference"}[type(shape)]
    return {"kind": kind, "a": _shape_to_dict(shape.a), "b": _shape_to_dict(shape.b)}


def resolved_config_dict(cfg: RunConfig, resolution: dict, dt: float) -> dict:
    """Fully-resolved copy of the config (resolution and dt made explicit).

    ``resolution`` is the domain entry that pins the grid, ``{"n": ...}`` for
    shape geometries (eta is folded into it) or the original key for masks.
    The result is itself a valid config: re-running it reproduces the run.
    """
    geometry: dict[str, Any]
    if cfg.geometry_source == "preset":
        geometry = {"preset": cfg.preset}
    elif cfg.geometry_source == "shape":
        geometry = {"shape": _shape_to_dict(cfg.shape)}
    else:
        geometry = {
            "mask": {
                "path": cfg.mask_path,
                "origin": [cfg.mask.origin[0], cfg.mask.origin[1]],
                "pixel_size": cfg.mask.pixel_size,
            }
        }
    model: dict[str, Any] = {"kind": cfg.model_kind}
    model.update(cfg.model_params)
    domain = {"xi": cfg.xi}
    domain.update(resolution)
    return {
        "geometry": geometry,
        "domain": domain,
        "model": model,
        "time": {"dt": float(dt), "t_end": cfg.t_end, "snapshot_every": cfg.snapshot_every},
        "output": {"directory": cfg.outdir, "heatmaps": cfg.heatmaps, "csv": cfg.csv},
        "initial": dict(cfg.initial),
    }
