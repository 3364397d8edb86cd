"""Command line front end: JSON configs in, CSV / PGM files out.

Exit codes: 0 success, 1 a verification failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import codespace as cs
from .boxcount import fit_dimension
from .construct import (ShiftClosureError, SystemSpec, continuity_report, covering_inclusion,
                        isss_cloud, orbit_cloud, sss_cloud, verify_closure, verify_inclusion)
from .dimension import dim_limit, isss_dim_report, spectral_dim, tau
from .geometry import AmbientBox, CondensationSet, PointCloud, Similarity
from .product import (ProductMap, chaos_game, check_iosc, check_issc, mixed_orders, moment_estimates,
                      product_measure_check, product_system)


class ConfigError(ValueError):
    pass


_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 4}
_POINT = {"oneOf": [_NUM, _VEC]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimension", "maps", "codespace", "condensation", "ambient"],
    "properties": {
        "dimension": {"type": "integer", "minimum": 1, "maximum": 4},
        "maps": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/map"}},
        "codespace": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["full", "sft"]},
                "transitions": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1, True, False]}}},
                "initial": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            },
        },
        "condensation": {"$ref": "#/$defs/condensation"},
        "probabilities": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "ambient": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lo", "hi"],
            "properties": {"lo": _POINT, "hi": _POINT},
        },
        "osc_asserted": {"type": "boolean"},
    },
    "$defs": {
        "map": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ratio": {"type": "number"},
                "sign": {"enum": [1, -1]},
                "angle": _NUM,
                "reflect": {"type": "boolean"},
                "ortho": {"type": "array", "items": _VEC},
                "translate": _POINT,
                "blocks": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"$ref": "#/$defs/map"}},
            },
        },
        "condensation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["none", "points", "segment", "circle", "disk", "box", "union", "product"]},
                "points": {"type": "array", "items": _POINT, "minItems": 1},
                "a": _POINT,
                "b": _POINT,
                "center": _POINT,
                "radius": {"type": "number", "minimum": 0},
                "lo": _POINT,
                "hi": _POINT,
                "parts": {"type": "array", "items": {"$ref": "#/$defs/condensation"}, "minItems": 1},
                "factors": {"type": "array", "items": {"$ref": "#/$defs/condensation"},
                            "minItems": 2, "maxItems": 2},
            },
        },
    },
}


def _vec(v):
    return [float(v)] if isinstance(v, (int, float)) else [float(x) for x in v]


def _need(obj, key, where):
    if key not in obj:
        raise ConfigError(f"{where}: missing key '{key}'")
    return obj[key]


def _parse_map(m, dim, where):
    if "blocks" in m:
        extra = set(m) - {"blocks"}
        if extra:
            raise ConfigError(f"{where}: key '{sorted(extra)[0]}' not allowed next to 'blocks'")
        left = _parse_map(m["blocks"][0], None, f"{where}.blocks[0]")
        right = _parse_map(m["blocks"][1], None, f"{where}.blocks[1]")
        if dim is not None and left.dim + right.dim != dim:
            raise ConfigError(f"{where}: block dimensions do not add up to {dim}")
        return ProductMap(left, right)
    ratio = float(_need(m, "ratio", where))
    if not 0 < ratio < 1:
        raise ConfigError(f"{where}.ratio: contraction ratio must lie in (0, 1), got {ratio}")
    t = _vec(_need(m, "translate", where))
    d = len(t)
    if dim is not None and d != dim:
        raise ConfigError(f"{where}.translate: expected {dim} coordinates, got {d}")
    try:
        if "ortho" in m:
            return Similarity.make(ratio, m["ortho"], t)
        if d == 1:
            if "angle" in m or "reflect" in m:
                raise ConfigError(f"{where}: 'angle'/'reflect' need dimension 2")
            return Similarity.line(ratio, t[0], m.get("sign", 1))
        if d == 2:
            if "sign" in m:
                raise ConfigError(f"{where}.sign: only valid in dimension 1")
            return Similarity.planar(ratio, m.get("angle", 0.0), t, m.get("reflect", False))
        if any(k in m for k in ("sign", "angle", "reflect")):
            raise ConfigError(f"{where}: use 'ortho' in dimension {d}")
        return Similarity.make(ratio, None, t)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_condensation(c, where) -> CondensationSet:
    kind = c["type"]
    try:
        if kind == "none":
            return CondensationSet.empty()
        if kind == "points":
            return CondensationSet.points([_vec(p) for p in _need(c, "points", where)])
        if kind == "segment":
            return CondensationSet.segment(_vec(_need(c, "a", where)), _vec(_need(c, "b", where)))
        if kind in ("circle", "disk"):
            ctor = CondensationSet.circle if kind == "circle" else CondensationSet.disk
            return ctor(_vec(_need(c, "center", where)), float(_need(c, "radius", where)))
        if kind == "box":
            return CondensationSet.box(_vec(_need(c, "lo", where)), _vec(_need(c, "hi", where)))
        if kind == "union":
            parts = [_parse_condensation(p, f"{where}.parts[{i}]") for i, p in enumerate(_need(c, "parts", where))]
            return CondensationSet.union_of(*parts)
        f = _need(c, "factors", where)
        return CondensationSet.product_of(_parse_condensation(f[0], f"{where}.factors[0]"),
                                          _parse_condensation(f[1], f"{where}.factors[1]"))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def spec_from_dict(doc: dict) -> SystemSpec:
    """Validate a config document and build the system it describes."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from exc
    dim = doc["dimension"]
    maps = tuple(_parse_map(m, dim, f"maps[{i}]") for i, m in enumerate(doc["maps"]))
    n = len(maps)
    cfg = doc["codespace"]
    if cfg["type"] == "full":
        if "transitions" in cfg or "initial" in cfg:
            raise ConfigError("codespace: 'transitions'/'initial' only valid for type 'sft'")
        S = cs.Sft.full(n)
    else:
        T = np.asarray(_need(cfg, "transitions", "codespace"), dtype=int)
        if T.shape != (n, n):
            raise ConfigError(f"codespace.transitions: expected a {n}x{n} matrix")
        init = [i - 1 for i in cfg.get("initial", range(1, n + 1))]
        if any(not 0 <= i < n for i in init):
            raise ConfigError("codespace.initial: symbol outside the alphabet")
        S = cs.Sft.from_matrix(T, init)
        bad = cs.validate_shift_closed(S)
        if bad:
            pairs = ", ".join(f"({i + 1},{j + 1})" for i, j in bad)
            raise ConfigError(f"codespace: not shift-closed, violations {pairs}")
    C = _parse_condensation(doc["condensation"], "condensation")
    amb = doc["ambient"]
    lo, hi = _vec(amb["lo"]), _vec(amb["hi"])
    if len(lo) != dim or len(hi) != dim:
        raise ConfigError(f"ambient: corners must have {dim} coordinates")
    try:
        box = AmbientBox.make(lo, hi)
        probs = doc.get("probabilities")
        return SystemSpec(maps, S, C, box, tuple(probs) if probs is not None else None,
                          bool(doc.get("osc_asserted", False)))
    except ValueError as exc:
        key = "probabilities" if "probabilit" in str(exc) else "maps" if "map" in str(exc) else "ambient"
        raise ConfigError(f"{key}: {exc}") from exc


def parse_config(path) -> SystemSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(doc)


def _emit_map(f) -> dict:
    if isinstance(f, ProductMap):
        return {"blocks": [_emit_map(f.left), _emit_map(f.right)]}
    if f.dim == 1:
        return {"ratio": f.ratio, "sign": int(f.ortho[0][0]), "translate": list(f.translation)}
    return {"ratio": f.ratio, "ortho": [list(r) for r in f.ortho], "translate": list(f.translation)}


def _emit_condensation(C: CondensationSet) -> dict:
    s, p = C.shape, C.params
    if s == "empty":
        return {"type": "none"}
    if s == "points":
        return {"type": "points", "points": [list(x) for x in p]}
    if s == "segment":
        return {"type": "segment", "a": list(p[0]), "b": list(p[1])}
    if s in ("circle", "disk"):
        return {"type": s, "center": list(p[0]), "radius": p[1]}
    if s == "box":
        return {"type": "box", "lo": list(p[0]), "hi": list(p[1])}
    if s == "union":
        return {"type": "union", "parts": [_emit_condensation(m) for m in p]}
    return {"type": "product", "factors": [_emit_condensation(p[0]), _emit_condensation(p[1])]}


def spec_to_dict(spec: SystemSpec) -> dict:
    S = spec.codespace
    if S.is_full:
        code = {"type": "full"}
    else:
        code = {"type": "sft", "transitions": S.matrix.astype(int).tolist(),
                "initial": [i + 1 for i in sorted(S.initial)]}
    doc = {
        "dimension": spec.dim,
        "maps": [_emit_map(f) for f in spec.maps],
        "codespace": code,
        "condensation": _emit_condensation(spec.condensation),
        "ambient": {"lo": list(spec.ambient.lo), "hi": list(spec.ambient.hi)},
        "osc_asserted": spec.osc_asserted,
    }
    if spec.probabilities is not None:
        doc["probabilities"] = list(spec.probabilities)
    return doc


def emit_config(spec: SystemSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)


# ---------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(header, rows, out=None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    pixels: np.ndarray

    def to_pgm(self) -> str:
        lines = ["P2", f"{self.width} {self.height}", "255"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.pixels]
        return "\n".join(lines) + "\n"


def rasterize(cloud: PointCloud, width: int, height: int, bbox: AmbientBox) -> RasterImage:
    """Occupancy image: 255 where a pixel cell holds at least one point, y pointing up."""
    if cloud.dim > 2:
        raise ValueError("only 1- and 2-dimensional clouds can be rendered")
    img = np.zeros((height, width), dtype=np.uint8)
    pts = cloud.points
    if len(pts):
        lo, hi = np.asarray(bbox.lo), np.asarray(bbox.hi)
        span = np.where(hi > lo, hi - lo, 1.0)
        keep = np.all((pts >= lo) & (pts <= hi), axis=1)
        u = (pts[keep] - lo) / span
        col = np.minimum((u[:, 0] * width).astype(int), width - 1)
        if cloud.dim == 1:
            img[:, np.unique(col)] = 255
        else:
            row = height - 1 - np.minimum((u[:, 1] * height).astype(int), height - 1)
            img[row, col] = 255
    return RasterImage(width, height, img)


def render_pgm(cloud: PointCloud, width: int, height: int, bbox: AmbientBox, path=None) -> RasterImage:
    image = rasterize(cloud, width, height, bbox)
    if path is not None:
        Path(path).write_text(image.to_pgm())
    return image


# ---------------------------------------------------------------------------
# subcommands


def _resolution(args, spec):
    return args.resolution if args.resolution else spec.ambient.diameter * 1e-3


def _say(msg):
    print(msg, file=sys.stderr)


def cmd_dim(args, spec):
    r = spec.ratios
    seq = dim_limit(spec.codespace, r, args.kmax, args.tol)
    s_spec = spectral_dim(spec.codespace, r, args.tol)
    taus = dict(tau(spec.codespace, r, seq.s_estimate, args.kmax))
    write_csv(["k", "s_k", "tau_k"], [(k, s, taus[k]) for k, s in seq.s_values], args.out)
    lower_E = s_spec if spec.osc_asserted else 0.0
    rep = isss_dim_report(s_spec, spec.condensation, lower_E, s_spec, list(taus.items()), spec.osc_asserted)
    _say(f"s_estimate={fmt(seq.s_estimate)} converged={seq.converged} spectral={fmt(s_spec)}")
    _say(f"hausdorff_isss={fmt(rep.hausdorff_isss)} box_lower={fmt(rep.box_lower_bound)} "
         f"box_upper={fmt(rep.box_upper_bound)} upper_bound_only={rep.upper_bound_only}")
    return 0


def cmd_boxdim(args, spec):
    res = _resolution(args, spec)
    cloud = isss_cloud(spec, res)
    diam = spec.ambient.diameter
    scales = [diam * 2.0 ** -j for j in range(1, (args.depth or 64) + 1) if diam * 2.0 ** -j >= 2 * cloud.resolution]
    scan = fit_dimension(cloud, scales)
    write_csv(["delta", "count"], scan.rows, args.out)
    _say(f"slope={fmt(scan.fitted_slope)} max_residual={fmt(scan.max_residual)} points={len(cloud)}")
    return 0


def _cloud_rows(cloud):
    return [tuple(p) for p in cloud.points]


def cmd_construct(args, spec):
    res = _resolution(args, spec)
    cloud = isss_cloud(spec, res)
    header = [f"x{i + 1}" for i in range(spec.dim)]
    write_csv(header, _cloud_rows(cloud), args.out)
    if args.render:
        if spec.dim > 2:
            _say("render skipped: dimension above 2")
        else:
            render_pgm(cloud, args.width, args.height, spec.ambient, args.render)
    _say(f"points={len(cloud)} resolution={fmt(cloud.resolution)}")
    return 0


def cmd_verify(args, spec):
    res = _resolution(args, spec)
    F = isss_cloud(spec, res)
    inc = verify_inclusion(F, spec, 2 * res)
    ok = inc.passed
    _say(f"inclusion passed={inc.passed} worst_gap={fmt(inc.worst_gap)} tol={fmt(inc.tolerance)}")
    if not spec.condensation.is_empty:
        E = sss_cloud(spec, res)
        O = orbit_cloud(spec, res)
        closed = verify_closure(E, O, 3 * res) if len(E) else True
        _say(f"closure passed={closed} tol={fmt(3 * res)}")
        ok &= closed
        for delta in (0.3, 0.1):
            cov = covering_inclusion(spec, delta, res)
            _say(f"covering delta={delta} passed={cov.passed} checked={cov.checked}")
            ok &= cov.passed
    return 0 if ok else 1


def cmd_stopping(args, spec):
    if args.delta is None:
        raise ConfigError("stopping: --delta is required")
    r = spec.ratios
    words = cs.stopping_set(spec.codespace, r, args.delta)
    write_csv(["word", "ratio"], [(cs.format_word(w), cs.word_ratio(r, w)) for w in words], args.out)
    return 0


def _print_moments(sample, order):
    for o in mixed_orders(sample.points.shape[-1], order):
        est = moment_estimates(sample, o)
        _say(f"moment{list(o)} mean={fmt(est.mean)} se={fmt(est.stderr)}")


def cmd_chaos(args, spec):
    sample = chaos_game(spec, args.samples, args.burn, args.seed)
    d = spec.dim
    rows = []
    for step in range(sample.points.shape[0]):
        for p in sample.points[step]:
            rows.append(tuple(p) + (step + sample.burn_in + 1,))
    write_csv([f"x{i + 1}" for i in range(d)] + ["step"], rows[: args.samples], args.out)
    if args.moments:
        _print_moments(sample, args.moments)
    return 0


def cmd_product(args, spec):
    if not args.config2:
        raise ConfigError("product: --config2 is required")
    other = parse_config(args.config2)
    try:
        pspec = product_system(spec, other)
    except ValueError as exc:
        raise ConfigError(f"product: {exc}") from exc
    text = emit_config(pspec.combined)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    ok = True
    if args.check == "issc":
        rep = check_issc(pspec, _resolution(args, pspec.combined))
        _say(f"issc passed={rep.passed} map_gap={fmt(rep.min_map_separation)} "
             f"condensation_gap={fmt(rep.min_condensation_separation)}")
        ok &= rep.passed
    elif args.check == "iosc":
        amb = pspec.combined.ambient
        variant = "as-stated" if args.iosc_variant == "paper" else args.iosc_variant
        rep = check_iosc(pspec, amb, variant)
        _say(f"iosc passed={rep.passed} inside={rep.images_inside} disjoint={rep.images_disjoint} "
             f"clause={rep.condensation_clause} margin={fmt(rep.min_margin)}")
        ok &= rep.passed
    if pspec.condensation_weight is not None and args.samples:
        rep = product_measure_check(pspec, args.samples, args.seed, args.moments or 2, args.burn)
        for c in rep.comparisons:
            _say(f"moment{list(c.orders)} independent={fmt(c.independent.mean)} "
                 f"decomposed={fmt(c.decomposed.mean)} z={c.z:.3f}")
        _say(f"measure passed={rep.passed} condensation_weight={fmt(rep.condensation_weight)}")
        ok &= rep.passed
    return 0 if ok else 1


def cmd_continuity(args, spec):
    rows = continuity_report(spec, args.kmax)
    write_csv(["k", "s_k", "dim_h"], [("limit" if r.k is None else r.k, r.s_k, r.dim_h) for r in rows], args.out)
    return 0


COMMANDS = {
    "dim": cmd_dim,
    "boxdim": cmd_boxdim,
    "construct": cmd_construct,
    "verify": cmd_verify,
    "stopping": cmd_stopping,
    "chaos": cmd_chaos,
    "product": cmd_product,
    "continuity": cmd_continuity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isss", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--config2")
        p.add_argument("--kmax", type=int, default=20)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--delta", type=float)
        p.add_argument("--resolution", type=float)
        p.add_argument("--depth", type=int)
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--burn", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--render")
        p.add_argument("--width", type=int, default=512)
        p.add_argument("--height", type=int, default=512)
        p.add_argument("--check", choices=["issc", "iosc"])
        p.add_argument("--iosc-variant", choices=["paper", "conventional"], default="conventional")
        p.add_argument("--moments", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = parse_config(args.config)
        return COMMANDS[args.command](args, spec)
    except (ConfigError, ShiftClosureError) as exc:
        _say(f"config error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
