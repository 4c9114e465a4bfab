"""Command-line interface: ``holorecon <subcommand> [--config c.json] ...``.

Exit codes: 0 success, 1 failed self-test, 2 configuration error, 3 too many
trial failures (or a non-finite record).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .approx import CoeffField
from .bounds import bound_table, bound_table_csv, grow_known_candidates, select_set_known
from .harness import (
    STREAMS,
    ChernoffConfig,
    ConfigError,
    ExperimentConfig,
    build_problem,
    chernoff_csv,
    records_csv,
    run_chernoff,
    run_convergence,
)
from .indices import IndexSet, hyperbolic_cross
from .jacobi import JacobiParams, intrinsic_weight, sample_points
from .recon import SampleSet, assemble, cs_params, ls_budget, min_singular_value, reconstruct_cs, reconstruct_ls
from .selftest import run_selftest

log = logging.getLogger("holorecon")

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3


def git_blob_hash(data: bytes) -> str:
    """Content hash in the git blob format: ``sha1(b"blob <len>\\0" + data)``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


class _ConfigFileError(Exception):
    pass


def _load_config(path: str | None) -> tuple[dict, dict[str, bytes]]:
    if path is None:
        return {}, {}
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise _ConfigFileError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise _ConfigFileError(f"{path}: config is not valid UTF-8") from None
    except json.JSONDecodeError as exc:
        raise _ConfigFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise _ConfigFileError(f"{path}:1:1: config must be a JSON object")
    return data, {os.path.basename(path): raw}


def _apply_overrides(data: dict, args, allowed: set[str]) -> dict:
    out = dict(data)
    if args.seed is not None:
        out["seed"] = args.seed
    if args.threads is not None and "threads" in allowed:
        out["threads"] = args.threads
    if args.profile is not None and "profile" in allowed:
        out["profile"] = args.profile
    return out


def _write(out_dir: str, name: str, text: str) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return name


def _versions() -> dict:
    import scipy
    import sklearn

    return {
        "holorecon": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
    }


def _manifest(out_dir: str, command: str, config: dict, inputs: dict[str, bytes], outputs: list[str]) -> None:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    hashes = {name: git_blob_hash(blob) for name, blob in sorted(inputs.items())}
    hashes["<config>"] = git_blob_hash(canon)
    combined = git_blob_hash("\n".join(f"{k} {v}" for k, v in sorted(hashes.items())).encode())
    manifest = {
        "command": command,
        "config": config,
        "versions": _versions(),
        "inputs": hashes,
        "content_hash": combined,
        "rng_streams": {k: {"id": v, "keyed_by": ["seed", "m", "trial"]} for k, v in STREAMS.items()},
        "outputs": sorted(outputs),
    }
    _write(out_dir, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _finite_json(obj):
    # strict JSON has no NaN/Inf; write them as null
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_json(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_finite_json(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def cmd_converge(args, data, inputs) -> int:
    cfg = ExperimentConfig.from_dict(_apply_overrides(data, args, {"threads", "profile"}))
    records, summary = run_convergence(cfg)
    outputs = [
        _write(args.out_dir, "records.csv", records_csv(records)),
        _write(args.out_dir, "summary.json", _dumps({"config": cfg.to_dict(), **summary})),
    ]
    if cfg.record_timing:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "trial", "wall_ms"])
        for r in records:
            w.writerow([r.m, r.trial, f"{r.wall_ms:.3f}"])
        outputs.append(_write(args.out_dir, "timings.csv", buf.getvalue()))
    _manifest(args.out_dir, "converge", cfg.to_dict(), inputs, outputs)
    fit = summary["fit"] or {}
    log.info("converge: %d records, %d failures, slope %s", len(records), len(summary["failures"]), fit.get("slope"))
    if summary["non_finite"] or summary["failure_frac"] > cfg.max_failure_frac:
        print(f"error: {len(summary['failures'])} trial failures (limit fraction {cfg.max_failure_frac})",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_chernoff(args, data, inputs) -> int:
    cfg = ChernoffConfig.from_dict(_apply_overrides(data, args, {"threads"}))
    rows = run_chernoff(cfg)
    outputs = [_write(args.out_dir, "chernoff.csv", chernoff_csv(rows))]
    _manifest(args.out_dir, "chernoff", cfg.to_dict(), inputs, outputs)
    return EXIT_OK


@dataclass
class ReconstructConfig:
    method: str = "ls"
    alpha: float = 0.0
    beta: float = 0.0
    tau: float | None = None
    samples: str | None = None
    m: int = 200
    b: dict = field(default_factory=lambda: {"kind": "algebraic", "rate": 2.0, "scale": 1.0, "d": 15, "p": 0.51})
    model: dict = field(default_factory=lambda: {"kind": "reciprocal-affine", "c": 1.0, "margin": 0.1})
    K: int = 1
    profile: str = "practical"
    seed: int = 0
    epsilon: float = 0.1
    c: float = 1.0
    n: int | None = None
    N_max: int = 5000
    tol: float = 1e-8
    max_iters: int = 50_000
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ReconstructConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls(**data)
        if cfg.method not in ("ls", "cs"):
            raise ConfigError("method", "must be 'ls' or 'cs'")
        if cfg.profile not in ("practical", "theoretical"):
            raise ConfigError("profile", "must be 'practical' or 'theoretical'")
        if cfg.samples is None and (isinstance(cfg.m, bool) or not isinstance(cfg.m, int) or cfg.m < 3):
            raise ConfigError("m", "must be an integer >= 3")
        return cfg


def _read_samples(path: str) -> tuple[SampleSet, bytes]:
    with open(path, "rb") as fh:
        raw = fh.read()
    rows = list(csv.reader(io.StringIO(raw.decode("utf-8"))))
    if not rows:
        raise ConfigError("samples", "file is empty")
    header = rows[0]
    ycols = [i for i, h in enumerate(header) if h.startswith("y_")]
    fcols = [i for i, h in enumerate(header) if h.startswith("f_")]
    if not ycols or not fcols:
        raise ConfigError("samples", "header needs y_1.. and f_1.. columns")
    try:
        body = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError("samples", f"non-numeric entry ({exc})") from None
    if body.size == 0:
        raise ConfigError("samples", "no sample rows")
    if np.any(np.abs(body[:, ycols]) > 1):
        raise ConfigError("samples", "points must lie in [-1, 1]")
    return SampleSet(body[:, ycols], body[:, fcols], seed=path), raw


def cmd_reconstruct(args, data, inputs) -> int:
    cfg = ReconstructConfig.from_dict(_apply_overrides(data, args, {"profile"}))
    exp = ExperimentConfig(method=cfg.method, alpha=cfg.alpha, beta=cfg.beta, tau=cfg.tau, b=cfg.b,
                           model=cfg.model, K=cfg.K, m_grid=[max(cfg.m, 3)], trials=1, profile=cfg.profile,
                           seed=cfg.seed, epsilon=cfg.epsilon)
    exp.validate()
    params = exp.params()
    inputs = dict(inputs)
    if cfg.samples is not None:
        samples, raw = _read_samples(cfg.samples)
        inputs[os.path.basename(cfg.samples)] = raw
    else:
        prob = build_problem(exp)
        from .harness import stream_rng

        pts = sample_points(params, prob.d, cfg.m, stream_rng(cfg.seed, "train", cfg.m, 0))
        samples = SampleSet(pts, prob.model(pts), seed=cfg.seed)
    m, d = samples.m, samples.d
    diag = {"method": cfg.method, "m": m, "profile": cfg.profile, "seed": cfg.seed}
    if cfg.method == "ls":
        b = exp.anisotropy()
        k = ls_budget(max(m, 3), cfg.epsilon, cfg.c)
        cands, table = grow_known_candidates(b, params, k, max_dim=min(len(b), d))
        S = select_set_known(b, params, k, cands, table)
        coef = reconstruct_ls(samples, S, params)
        diag.update(N=len(S), k=k, n=len(S), **{"lambda": 0.0}, iters=0, objective=None,
                    residual=None, sigma_min=coef.meta["sigma_min"])
    else:
        rule = cs_params(max(m, 3), cfg.epsilon, cfg.c, profile=cfg.profile, N_max=cfg.N_max, max_dim=d)
        n = rule.n if cfg.n is None else cfg.n
        H = hyperbolic_cross(n, max_dim=min(n, d))
        u = np.array([intrinsic_weight(params, nu) for nu in H])
        A = assemble(samples.points, H, params)
        coef = reconstruct_cs(samples, H, u, rule.lam, params, tol=cfg.tol, max_iters=cfg.max_iters, A=A)
        diag.update(N=len(H), k=rule.k, n=n, **{"lambda": rule.lam}, iters=coef.meta["iters"],
                    objective=coef.meta["objective"], residual=coef.meta["residual"],
                    sigma_min=min_singular_value(A), converged=coef.meta["converged"])
    outputs = [
        _write(args.out_dir, "coefficients.csv", coef.to_csv()),
        _write(args.out_dir, "diagnostics.json", _dumps(diag)),
    ]
    _manifest(args.out_dir, "reconstruct", {**vars(cfg)}, inputs, outputs)
    return EXIT_OK


@dataclass
class BoundsConfig:
    alpha: float = 0.0
    beta: float = 0.0
    tau: float | None = None
    b: dict = field(default_factory=lambda: {"kind": "algebraic", "rate": 2.0, "scale": 1.0, "d": 15, "p": 0.51})
    candidates: dict = field(default_factory=lambda: {"kind": "hyperbolic_cross", "n": 8})
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "BoundsConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls(**data)
        kind = cfg.candidates.get("kind") if isinstance(cfg.candidates, dict) else None
        if kind not in ("hyperbolic_cross", "known"):
            raise ConfigError("candidates", "kind must be 'hyperbolic_cross' or 'known'")
        return cfg


def cmd_bounds(args, data, inputs) -> int:
    cfg = BoundsConfig.from_dict(_apply_overrides(data, args, set()))
    exp = ExperimentConfig(alpha=cfg.alpha, beta=cfg.beta, tau=cfg.tau, b=cfg.b)
    exp.validate()
    params, b = exp.params(), exp.anisotropy()
    opts = cfg.candidates
    if opts["kind"] == "hyperbolic_cross":
        n = opts.get("n", 8)
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError("candidates", "n must be a positive integer")
        cands = hyperbolic_cross(n, max_dim=min(n, max(len(b), 1)))
        table = bound_table(b, params, cands)
    else:
        k = opts.get("k", 50.0)
        if isinstance(k, bool) or not isinstance(k, (int, float)) or k < 1:
            raise ConfigError("candidates", "k must be a number >= 1")
        cands, table = grow_known_candidates(b, params, float(k), max_dim=max(len(b), 1))
    outputs = [_write(args.out_dir, "bounds.csv", bound_table_csv(cands, table))]
    _manifest(args.out_dir, "bounds", {**vars(cfg)}, inputs, outputs)
    return EXIT_OK


def cmd_selftest(args, data, inputs) -> int:
    rows = run_selftest()
    buf = io.StringIO()
    buf.write("schema=1,check,passed,value,note\n")
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([1, r["check"], int(r["passed"]), repr(r["value"]), r["note"]])
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']} ({r['value']:.3g})")
    outputs = [_write(args.out_dir, "selftest.csv", buf.getvalue())]
    _manifest(args.out_dir, "selftest", data, inputs, outputs)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_SELFTEST


COMMANDS = {
    "converge": cmd_converge,
    "chernoff": cmd_chernoff,
    "reconstruct": cmd_reconstruct,
    "bounds": cmd_bounds,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holorecon", description="Sparse polynomial reconstruction benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "converge": "convergence sweep over an m grid (records.csv, summary.json)",
        "chernoff": "sigma_min frequency study (chernoff.csv)",
        "reconstruct": "one reconstruction from a samples file or generated samples",
        "bounds": "export the d_nu / u_nu bound table (bounds.csv)",
        "selftest": "run the invariant suites",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out-dir", default=".", help="output directory (created if missing)")
        p.add_argument("--profile", choices=["practical", "theoretical"], help="override the parameter profile")
        p.add_argument("--threads", type=int, help="worker threads for independent trials")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        data, inputs = _load_config(args.config)
        os.makedirs(args.out_dir, exist_ok=True)
        return COMMANDS[args.command](args, data, inputs)
    except _ConfigFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        where = args.config or "<defaults>"
        print(f"error: {where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TypeError as exc:
        # wrong value types surface from dataclass construction
        print(f"error: {args.config or '<defaults>'}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
