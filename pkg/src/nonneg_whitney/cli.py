"""Command-line front end.

Subcommands: ``decompose``, ``gamma-check``, ``extend``, ``interpolate``,
``feasibility`` and ``selftest``.  Exit status is 0 on success, 1 when a
verification fails and 2 on bad input.

Every run writes its outputs plus ``manifest.json`` into ``--out``.  The
manifest echoes the configuration, records library versions, the SHA-256 of
the dataset and the summary metrics; wall-clock timings go to a separate
``timing.json`` so that all other files are byte-identical across reruns.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import os
import platform
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .czdecomp import (DyadicCube, RegionError, classify_and_anchor, cz_decompose,
                       decomposition_to_csv, decomposition_to_json, padded_region)
from .extension import (GridConfig, PreconditionError, extend_jet_cm, extend_jet_cm1,
                        interpolate_nonneg, verify_interpolant)
from .feasibility import FeasibilityConfig, finiteness_gap, min_norm
from .gamma import (GammaConfig, gamma0plus_member, gamma_prime_member, gamma_tilde0_member,
                    normalize_jet)
from .jets import Jet, multi_indices
from .smoothfn import grid_dump_csv
from .whitney import WhitneyField

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# ingestion
# --------------------------------------------------------------------------

def _digest(path: str | None) -> str:
    if path is None:
        return "none"
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})")


def load_dataset(path: str, m_flag: int | None, n_flag: int | None) -> dict:
    """Parse and validate ``{"n", "m", "points": [{"x", "f"}], "jets"?, "M"?}``."""
    data = _load_json(path)
    if not isinstance(data, dict) or "points" not in data:
        raise InputError(f"{path}: expected an object with a 'points' list")
    n = data.get("n", n_flag)
    m = data.get("m", m_flag)
    if n_flag is not None and n is not None and int(n) != n_flag:
        raise InputError(f"{path}: dataset n={n} conflicts with --n {n_flag}")
    if m_flag is not None and m is not None and int(m) != m_flag:
        raise InputError(f"{path}: dataset m={m} conflicts with --m {m_flag}")
    if n is None or m is None:
        raise InputError(f"{path}: n and m must be given in the dataset or by flags")
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise InputError(f"{path}: n and m must be positive")
    xs, fs = [], []
    for i, rec in enumerate(data["points"]):
        try:
            x = [float(v) for v in rec["x"]]
            fx = float(rec["f"])
        except (KeyError, TypeError, ValueError):
            raise InputError(f"{path}: points[{i}] must have numeric 'x' (list) and 'f'")
        if len(x) != n:
            raise InputError(f"{path}: points[{i}] has {len(x)} coordinates, expected n={n}")
        if not (math.isfinite(fx) and all(math.isfinite(v) for v in x)):
            raise InputError(f"{path}: points[{i}] has non-finite entries")
        if fx < 0:
            raise InputError(f"{path}: points[{i}] has f={fx} < 0")
        xs.append(x)
        fs.append(fx)
    E = np.array(xs, dtype=float).reshape(-1, n)
    seen: dict[tuple, int] = {}
    for i, r in enumerate(E.tolist()):
        if tuple(r) in seen:
            raise InputError(f"{path}: points[{i}] repeats points[{seen[tuple(r)]}]")
        seen[tuple(r)] = i
    out = {"n": n, "m": m, "E": E, "f": np.array(fs), "jets": None, "M": data.get("M")}
    if "jets" in data:
        try:
            jets = [Jet.from_dict(j) for j in data["jets"]]
        except Exception as exc:  # noqa: BLE001 - report any malformed jet record
            raise InputError(f"{path}: malformed jets ({exc})")
        if len(jets) != len(E):
            raise InputError(f"{path}: {len(jets)} jets for {len(E)} points")
        for i, (P, x) in enumerate(zip(jets, E)):
            if P.n != n or P.m != m or not np.array_equal(P.base, x):
                raise InputError(f"{path}: jets[{i}] does not match its point or n/m")
        out["jets"] = jets
    return out


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Jet):
        return o.to_dict()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o)}")


class Run:
    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.digest = _digest(getattr(args, "dataset", None) or getattr(args, "jets", None))
        self.files: list[str] = []
        self.t0 = time.perf_counter()

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.files.append(name)

    def write_json(self, name: str, obj: dict) -> None:
        obj = dict(obj)
        obj["input_digest"] = self.digest
        self.write(name, _dump(obj))

    def finish(self, metrics: dict, status: int) -> int:
        config = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out", "command")}
        manifest = {
            "command": self.command,
            "config": config,
            "versions": {"package": __version__, "numpy": np.__version__,
                         "scipy": __import__("scipy").__version__,
                         "python": platform.python_version()},
            "input_digest": self.digest,
            "outputs": sorted(self.files),
            "metrics": metrics,
            "exit_status": status,
        }
        (self.out / "manifest.json").write_text(_dump(manifest))
        (self.out / "timing.json").write_text(_dump({"seconds": time.perf_counter() - self.t0}))
        return status


def _gamma_cfg(args) -> GammaConfig:
    cfg = GammaConfig()
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    return cfg


def _axes(lo, hi, per_axis: int):
    return [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_decompose(args) -> int:
    ds = load_dataset(args.dataset, args.m, args.n)
    run = Run(args, "decompose")
    E, n = ds["E"], ds["n"]
    if args.region is not None:
        if len(args.region) != 2 * n and len(args.region) != 2:
            raise InputError("--region takes 'lo hi' or 'lo1 hi1 ... lon hin'")
        bounds = args.region if len(args.region) == 2 * n else args.region * n
        lo = [int(math.floor(v)) for v in bounds[0::2]]
        hi = [int(math.ceil(v)) for v in bounds[1::2]]
        region = tuple(DyadicCube(0, c) for c in itertools.product(*[range(a, b) for a, b in zip(lo, hi)]))
    else:
        region = padded_region(E, n=n)
    try:
        dec = classify_and_anchor(cz_decompose(E, region))
    except RegionError as exc:
        raise InputError(str(exc))
    run.write_json("decomposition.json", {"n": n, "region": [q.corner for q in dec.region],
                                          "cubes": json.loads(decomposition_to_json(dec))})
    run.write("cubes.csv", decomposition_to_csv(dec, header_comment=f"input_digest={run.digest}"))
    counts = {str(t): dec.types.count(t) for t in (1, 2, 3)}
    metrics = {"cubes": len(dec.cubes), "types": counts,
               "min_level": int(min(q.level for q in dec.cubes))}
    return run.finish(metrics, EXIT_OK)


def cmd_gamma_check(args) -> int:
    data = _load_json(args.jets)
    if not isinstance(data, list):
        raise InputError(f"{args.jets}: expected a list of records")
    run = Run(args, "gamma-check")
    cfg = _gamma_cfg(args)
    results = []
    for i, rec in enumerate(data):
        try:
            P = Jet.from_dict(rec["jet"])
            which = rec.get("set", "prime")
        except Exception as exc:  # noqa: BLE001
            raise InputError(f"{args.jets}: record {i} malformed ({exc})")
        if which == "gamma0plus":
            v = gamma0plus_member(P, cfg)
        elif which == "tilde0":
            v = gamma_tilde0_member(P, cfg)
        elif which == "prime":
            x = rec.get("x", P.base.tolist())
            v = gamma_prime_member(P, x, float(rec.get("M", 1.0)), rec.get("f"), cfg)
        else:
            raise InputError(f"{args.jets}: record {i} has unknown set {which!r}")
        witness = v.witness.to_dict() if isinstance(v.witness, Jet) else v.witness
        results.append({"index": i, "set": which, "status": v.status, "margin": v.margin,
                        "witness": witness, "reason": v.reason})
    run.write_json("verdicts.json", {"verdicts": results})
    counts = {s: sum(r["status"] == s for r in results) for s in ("member", "nonmember", "undetermined")}
    return run.finish(counts, EXIT_OK)


def cmd_extend(args) -> int:
    rec = _load_json(args.jet)
    run = Run(args, "extend")
    try:
        P = Jet.from_dict(rec["jet"] if "jet" in rec else rec)
    except Exception as exc:  # noqa: BLE001
        raise InputError(f"{args.jet}: malformed jet ({exc})")
    M = float(args.M)
    x = P.base
    cfg = _gamma_cfg(args)
    try:
        if args.flavor == "cm1":
            F = extend_jet_cm1(P, x, M, cfg)
        else:
            if not P.plus:
                v = gamma_tilde0_member(normalize_jet(P, x, M), cfg)
                if not v.member:
                    raise PreconditionError(f"no admissible completion ({v.status}): {v.reason}")
                from .jets import jet_translate
                P = jet_translate(v.witness, x) * M
            F = extend_jet_cm(P, args.k_max, x=x, M=M, cfg=cfg)
    except PreconditionError as exc:
        raise InputError(str(exc))
    n = P.n
    lo, hi = x - 1.0, x + 1.0
    order = P.m
    run.write("grid.csv", grid_dump_csv(F, _axes(lo, hi, args.grid), order,
                                        header_comment=f"input_digest={run.digest}"))
    rep = verify_interpolant(F, x[None], [P.derivs[0]], GridConfig(points=max(10_000, args.grid ** n)),
                             M=M, m=order)
    run.write_json("report.json", rep)
    return run.finish({"min_on_grid": rep["min_on_grid"], "norm_ratio": rep["norm_ratio"]},
                      EXIT_OK if rep["ok"] else EXIT_VERIFY)


def _field_and_level(ds, args) -> tuple[WhitneyField, float, dict]:
    E, f, m = ds["E"], ds["f"], ds["m"]
    info = {}
    if ds["jets"] is not None:
        W = WhitneyField(E, ds["jets"])
        if args.M is None and ds["M"] is None:
            raise InputError("datasets with jets need an M (field 'M' or --M)")
        M = float(args.M if args.M is not None else ds["M"])
    else:
        v = min_norm(E, f, m)
        if not v.feasible:
            raise InputError(f"could not build an admissible Whitney field: {v.message}")
        W = v.witness
        M = float(args.M) if args.M is not None else v.M * (1 + 1e-7)
        info["min_norm"] = v.M
    return W, M, info


def cmd_interpolate(args) -> int:
    ds = load_dataset(args.dataset, args.m, args.n)
    run = Run(args, "interpolate")
    E, f, n, m = ds["E"], ds["f"], ds["n"], ds["m"]
    if len(E) == 0:
        W, M, info = WhitneyField(np.zeros((0, n)), []), float(args.M or 1.0), {}
    else:
        W, M, info = _field_and_level(ds, args)
    grid = GridConfig(points=max(10_000, args.grid ** n))
    try:
        F, rep = interpolate_nonneg(E, f, W, M, flavor=args.flavor, cfg=_gamma_cfg(args),
                                    dilation=args.dilation, grid=grid)
    except PreconditionError as exc:
        raise InputError(f"{exc} {exc.detail}")
    rep.pop("build_seconds", None)
    rep.update(info)
    rep["field"] = W.to_dict()
    if len(E):
        lo, hi = E.min(axis=0) - 1.0, E.max(axis=0) + 1.0
    else:
        lo, hi = -np.ones(n), np.ones(n)
    per_axis = args.grid if n == 1 else min(args.grid, 201)
    run.write("grid.csv", grid_dump_csv(F, _axes(lo, hi, per_axis), m,
                                        header_comment=f"input_digest={run.digest}"))
    run.write_json("report.json", rep)
    metrics = {"interp_ok": rep["interp_ok"], "min_on_grid": rep["min_on_grid"],
               "norm_ratio": rep["norm_ratio"], "M": M}
    return run.finish(metrics, EXIT_OK if rep["ok"] else EXIT_VERIFY)


def cmd_feasibility(args) -> int:
    ds = load_dataset(args.dataset, args.m, args.n)
    run = Run(args, "feasibility")
    E, f, m = ds["E"], ds["f"], ds["m"]
    if len(E) == 0:
        raise InputError("feasibility needs at least one point")
    cfg = FeasibilityConfig()
    k_sharp = args.k_sharp if args.k_sharp is not None else 2 * len(multi_indices(ds["n"], m - 1))
    res = finiteness_gap(E, f, m, k_sharp, cfg)
    lines = [f"# input_digest={run.digest}", "subset_id,size,points,M,status"]
    for t in res["subsets"]:
        lines.append(f"{t['subset']},{t['size']},{' '.join(map(str, t['points']))},"
                     f"{t['M']!r},{t['status']}")
    run.write("subsets.csv", "\n".join(lines) + "\n")
    summary = {k: res[k] for k in ("M_subset", "M_global", "ratio", "k_sharp", "label")}
    if args.witness:
        v = min_norm(E, f, m, cfg)
        if v.witness is not None:
            summary["field"] = v.witness.to_dict()
    run.write_json("summary.json", summary)
    metrics = {k: summary[k] for k in ("M_subset", "M_global", "ratio")}
    ok = summary["ratio"] >= 1 - 1e-9
    return run.finish(metrics, EXIT_OK if ok else EXIT_VERIFY)


def _builtin_checks(seed: int) -> list[tuple[str, bool]]:
    """Small invariant suite: jet algebra, CZ invariants, partition of unity, Lipschitz oracle."""
    from .czdecomp import check_good_geometry
    from .jets import jet_multiply
    from .smoothfn import whitney_partition
    rng = np.random.default_rng(seed)
    out = []
    P = Jet([0.0], 3, [1.0, 1.0, 0.0])
    Q = Jet([0.0], 3, [1.0, -1.0, 0.0])
    out.append(("jet product (1+y)(1-y) = 1 - y^2", jet_multiply(P, Q).allclose(Jet([0.0], 3, [1.0, 0.0, -2.0]))))
    E = rng.random((12, 2)) * 2
    dec = classify_and_anchor(cz_decompose(E, padded_region(E)))
    vol = sum(q.side ** 2 for q in dec.cubes)
    out.append(("CZ cubes tile the region", abs(vol - len(dec.region)) < 1e-12))
    out.append(("CZ good geometry", not check_good_geometry(dec.cubes)))
    part = whitney_partition(dec, 2)
    X = rng.random((200, 2)) * 2
    out.append(("partition sums to 1", bool(np.allclose(part.sum_taylor(X, 0)[:, 0], 1.0, atol=1e-9))))
    x = np.sort(rng.random(6))
    fv = rng.random(6)
    v = min_norm(x, fv, 1)
    d = np.abs(fv[:, None] - fv[None]) / np.where(np.eye(6) > 0, np.inf, np.abs(x[:, None] - x[None]))
    oracle = max(fv.max(), d.max())
    out.append(("Lipschitz minimal norm", abs(v.M - oracle) <= 5e-3 * oracle))
    return out


def cmd_selftest(args) -> int:
    if args.manifest:
        return _replay(args.manifest)
    checks = _builtin_checks(args.seed)
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_VERIFY


def _close(a, b, rtol=1e-6, atol=1e-9) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], rtol, atol) for k in a)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        return abs(a - b) <= atol + rtol * abs(b)
    return a == b


def _replay(manifest_path: str) -> int:
    """Re-run the command recorded in a manifest and compare its metrics."""
    man = _load_json(manifest_path)
    cfg = dict(man["config"])
    ds_path = cfg.get("dataset") or cfg.get("jets") or cfg.get("jet")
    if ds_path and _digest(ds_path) != man["input_digest"]:
        print(f"FAIL  input digest changed for {ds_path}")
        return EXIT_VERIFY
    argv = [man["command"]]
    for key, val in cfg.items():
        if val is None or key in ("manifest",):
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, list):
            argv += [flag] + [str(v) for v in val]
        else:
            argv += [flag, str(val)]
    tmp = tempfile.mkdtemp(prefix="replay_")
    try:
        status = main(argv + ["--out", tmp])
        new = json.loads((Path(tmp) / "manifest.json").read_text())
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    same = status == man["exit_status"] and _close(new["metrics"], man["metrics"])
    print(f"{'PASS' if same else 'FAIL'}  replay of {man['command']}: metrics "
          f"{'match' if same else 'differ'}")
    return EXIT_OK if same else EXIT_VERIFY


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonneg-whitney", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=True):
        if dataset:
            sp.add_argument("--dataset", required=True, help="dataset JSON")
            sp.add_argument("--m", type=int, default=None)
            sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None, help="equality tolerance for membership tests")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="runs", help="output directory")

    sp = sub.add_parser("decompose", help="CZ decomposition dump")
    common(sp)
    sp.add_argument("--region", type=float, nargs="+", default=None,
                    help="lo hi (all axes) or lo1 hi1 ... lon hin; default pads the data by 5")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("gamma-check", help="membership verdicts for jets in a file")
    common(sp, dataset=False)
    sp.add_argument("--jets", required=True,
                    help='JSON list of {"jet": {...}, "set": "prime|tilde0|gamma0plus", "x", "M", "f"}')
    sp.set_defaults(func=cmd_gamma_check)

    sp = sub.add_parser("extend", help="extend a single jet and dump a grid")
    common(sp, dataset=False)
    sp.add_argument("--jet", required=True, help="jet JSON")
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--flavor", choices=["cm", "cm1"], default="cm1")
    sp.add_argument("--grid", type=int, default=2001, help="grid points per axis")
    sp.add_argument("--k-max", type=int, default=20)
    sp.set_defaults(func=cmd_extend)

    sp = sub.add_parser("interpolate", help="full pipeline with report and grid dump")
    common(sp)
    sp.add_argument("--flavor", choices=["cm", "cm1"], default="cm1")
    sp.add_argument("--grid", type=int, default=2001, help="grid points per axis")
    sp.add_argument("--M", type=float, default=None, help="level M (default: minimal admissible)")
    sp.add_argument("--dilation", type=float, default=1.5)
    sp.set_defaults(func=cmd_interpolate)

    sp = sub.add_parser("feasibility", help="minimal norm or finiteness experiment")
    common(sp)
    sp.add_argument("--k-sharp", type=int, default=None,
                    help="largest subset size (default: twice the jet-space dimension)")
    sp.add_argument("--witness", action="store_true", help="also store a minimal-norm Whitney field")
    sp.set_defaults(func=cmd_feasibility)

    sp = sub.add_parser("selftest", help="run the built-in invariant checks or replay a manifest")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--manifest", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
