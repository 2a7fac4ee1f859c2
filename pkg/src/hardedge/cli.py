"""Command-line batch runner.

Every subcommand writes its CSV output and one ``manifest.json`` into
``--out``. ``hardedge replay MANIFEST --out DIR`` reruns an experiment from
its manifest and reproduces the CSV byte for byte.

Exit codes: 0 success, 1 failed checks, 2 parameter error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import scaled_minima_array
from .exceptions import ParameterError, StepSizeError
from .riccati import count_batch, hard_to_soft
from .rng import EnvironmentPath, RandomStream, bridge_refine, derive_seed
from .sbo import default_domain_length, environment, sample_sbo_eigenvalues, sbo_eigenvalues

log = logging.getLogger("hardedge")

SCHEMA_VERSION = 1
STREAM_POLICY = "Philox keyed by (seed, stream_id); Monte Carlo task i uses stream_id = i"

EXIT_OK, EXIT_CHECK, EXIT_PARAM, EXIT_IO = 0, 1, 2, 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _beta(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"beta must be a number or 'inf', got {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError("beta must be positive")
    return v


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.replace(microsecond=0).isoformat()


def _positive(name, value):
    if value is None or value < 1:
        raise ParameterError(f"--{name} must be a positive integer")


def write_csv(path: Path, header: list[str], rows) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _json_value(v):
    # JSON has no infinity; the CLI spells it "inf"
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def write_manifest(out: Path, subcommand: str, params: dict, seed: int, outputs: list[str],
                   extra: dict | None = None) -> None:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "hardedge",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": {k: _json_value(v) for k, v in params.items()},
        "seed": seed,
        "stream_policy": STREAM_POLICY,
        "timestamp": _timestamp(),
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# subcommands

def cmd_ensemble(args) -> int:
    _positive("samples", args.samples)
    _positive("n", args.n)
    _positive("k", args.k)
    rows = scaled_minima_array(args.n, args.beta, args.a, args.k, args.samples, args.seed)
    out = _outdir(args.out)
    write_csv(out / "ensemble.csv", [f"n_lambda_{j}" for j in range(args.k)], rows)
    write_manifest(out, "ensemble", {"n": args.n, "beta": args.beta, "a": args.a, "k": args.k,
                                     "samples": args.samples}, args.seed, ["ensemble.csv"])
    return EXIT_OK


def _grid_check(args) -> dict:
    """Lambda_0 at h and h/2 on the environment of sample 0 (bridge refined)."""
    stream = None if math.isinf(args.beta) else RandomStream(args.seed, 0)
    path = environment(args.domain_length, args.step, args.beta, stream)
    lam_h = sbo_eigenvalues(args.a, args.beta, args.domain_length, args.step, 1, path=path,
                            boundary=args.boundary)[0]
    mid = 0.5 * (path.grid[1:] + path.grid[:-1])
    if math.isinf(args.beta):
        fine = EnvironmentPath.zero(np.union1d(path.grid, mid))
    else:
        fine = bridge_refine(path, mid, RandomStream(derive_seed(args.seed, "grid-check"), 0))
    lam_h2 = sbo_eigenvalues(args.a, args.beta, args.domain_length, args.step / 2, 1, path=fine,
                             boundary=args.boundary)[0]
    return {"h": args.step, "lambda0_h": float(lam_h), "lambda0_h_half": float(lam_h2),
            "drift": float(abs(lam_h - lam_h2)), "below_1e-3": bool(abs(lam_h - lam_h2) < 1e-3)}


def cmd_sbo(args) -> int:
    _positive("samples", args.samples)
    _positive("k", args.k)
    samples = 1 if math.isinf(args.beta) else args.samples
    rows = sample_sbo_eigenvalues(args.beta, args.a, args.domain_length, args.step, args.k, samples,
                                  args.seed, boundary=args.boundary)
    out = _outdir(args.out)
    write_csv(out / "sbo.csv", [f"Lambda_{j}" for j in range(args.k)], rows)
    write_manifest(out, "sbo", {"beta": args.beta, "a": args.a, "domain_length": args.domain_length,
                                "step": args.step, "k": args.k, "samples": args.samples,
                                "boundary": args.boundary},
                   args.seed, ["sbo.csv"], {"grid_check": _grid_check(args)})
    return EXIT_OK


def cmd_riccati_cdf(args) -> int:
    _positive("paths", args.paths)
    if args.k < 0:
        raise ParameterError("--k must be nonnegative")
    lams = args.grid
    if not lams or min(lams) < 0:
        raise ParameterError("--grid needs nonnegative spectral parameters")
    L = args.domain_length if args.domain_length is not None else default_domain_length(max(lams))
    counts = count_batch(args.beta, args.a, lams, args.paths, args.seed, L=L, dx=args.step,
                         route=args.route)
    rows = []
    for j, lam in enumerate(lams):
        p = float(np.mean(counts[:, j] >= args.k + 1))
        rows.append((lam, p, math.sqrt(p * (1 - p) / args.paths)))
    out = _outdir(args.out)
    write_csv(out / "riccati_cdf.csv", ["lambda", "probability", "standard_error"], rows)
    write_manifest(out, "riccati-cdf", {"beta": args.beta, "a": args.a, "grid": lams, "k": args.k,
                                        "paths": args.paths, "domain_length": L, "step": args.step,
                                        "route": args.route}, args.seed, ["riccati_cdf.csv"])
    return EXIT_OK


def cmd_transition(args) -> int:
    _positive("paths", args.paths)
    if not args.mu_grid or not args.eta_list:
        raise ParameterError("--mu-grid and --eta-list must be non-empty")
    rows = []
    for mu in args.mu_grid:
        for eta in args.eta_list:
            r = hard_to_soft(eta, mu, args.beta, args.paths, derive_seed(args.seed, f"transition-{mu}"),
                             dq=args.step)
            rows.append((eta, mu, r.p_hard, r.p_soft, r.abs_diff))
    out = _outdir(args.out)
    write_csv(out / "transition.csv", ["eta", "mu", "p_hard", "p_soft", "abs_diff"], rows)
    write_manifest(out, "transition", {"beta": args.beta, "mu_grid": args.mu_grid,
                                       "eta_list": args.eta_list, "paths": args.paths,
                                       "step": args.step}, args.seed, ["transition.csv"])
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_checks

    if not args.scale > 0:
        raise ParameterError("--scale must be positive")
    only = [s.strip() for s in args.only.split(",")] if args.only else None

    def progress(key, chk):
        print(f"[{'PASS' if chk.passed else 'FAIL'}] {key} {chk.name}: {chk.threshold}", file=sys.stderr)

    report = run_checks(args.seed, args.scale, only, progress)
    out = _outdir(args.out)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "validate", {"scale": args.scale, "only": only}, args.seed, ["report.json"])
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_replay(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    argv = [manifest["subcommand"], "--seed", str(manifest["seed"]), "--out", args.out]
    for key, value in manifest["parameters"].items():
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, list):
            value = ",".join(repr(float(v)) if not isinstance(v, str) else v for v in value)
        # flag=value keeps negative numbers from being parsed as options
        argv.append(f"{flag}={value!r}" if isinstance(value, float) else f"{flag}={value}")
    return main(argv)


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardedge", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, out=True):
        p.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ensemble", help="scaled smallest eigenvalues of the bidiagonal model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--samples", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("sbo", help="lowest eigenvalues of the discretized limiting operator")
    p.add_argument("--beta", type=_beta, required=True, help="positive number or 'inf'")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--domain-length", type=float, default=12.0)
    p.add_argument("--step", type=float, default=2.0 ** -10, help="cell width h")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--boundary", choices=("natural", "dirichlet"), default="natural")
    common(p)
    p.set_defaults(func=cmd_sbo)

    p = sub.add_parser("riccati-cdf", help="P(Lambda_k < lambda) by explosion counting")
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--grid", type=_float_list, required=True, help="comma-separated lambda values")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--domain-length", type=float, default=None)
    p.add_argument("--step", type=float, default=2.0 ** -9, help="integration step dx")
    p.add_argument("--route", choices=("riccati", "psi"), default="riccati")
    common(p)
    p.set_defaults(func=cmd_riccati_cdf)

    p = sub.add_parser("transition", help="hard-to-soft edge transition experiment")
    p.add_argument("--beta", type=_beta, default=2.0)
    p.add_argument("--mu-grid", type=_float_list, required=True)
    p.add_argument("--eta-list", type=_float_list, required=True)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--step", type=float, default=2.0 ** -7, help="soft-edge step dq")
    common(p)
    p.set_defaults(func=cmd_transition)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--scale", type=float, default=1.0, help="fraction of the full sample counts")
    p.add_argument("--only", default=None, help="comma-separated check ids, e.g. c1,c4")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="rerun an experiment from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ParameterError, StepSizeError) as exc:
        print(f"hardedge: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"hardedge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
