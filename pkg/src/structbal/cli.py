"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 I/O or malformed input,
4 numerical failure. ``STRUCTBAL_OUTPUT_DIR`` sets the directory for
default output files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._kernel import BACKEND
from .balance import classify, count_eigen_signs
from .core import read_matrix
from .dissonance import dissonance
from .dynamics import IntegrationFailure, IntegratorOptions, ModelKind, integrate, write_trajectory
from .equilibria import (
    build_irreducible,
    build_reducible,
    enumerate_balanced,
    equilibrium_dissonance,
    instability_certificate,
    irreducible_pq,
    nst_harmonic,
    nst_k1,
    nst_k2,
    residual,
)
from .landscape import landscape_grid, minima_vs_balanced
from .montecarlo import Family, chernoff_n, default_workers, initial_state, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
FULL_SCALE_TRIALS = 27000


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_path(args, default_name: str):
    """--output, else $STRUCTBAL_OUTPUT_DIR/default_name, else None (stdout)."""
    if args.output:
        return Path(args.output)
    env = os.environ.get("STRUCTBAL_OUTPUT_DIR")
    if env:
        return Path(env) / default_name
    return None


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _read_input(path: str, zero_diagonal: bool = True) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_IO, f"input file not found: {path}")
    try:
        return read_matrix(p, zero_diagonal=zero_diagonal)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_IO, f"malformed matrix in {path}: {exc}") from exc


def _metadata(args) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _options(args, record: bool = True) -> IntegratorOptions:
    try:
        return IntegratorOptions(
            rel_tol=args.rtol, abs_tol=args.atol, max_time=args.max_time,
            blowup_norm=args.blowup_norm, grad_tol=args.grad_tol,
            sign_window=args.sign_window, sign_window_frac=args.sign_window_frac,
            sample_stride=args.sample_stride, zero_tol=args.zero_tol,
            max_step=args.max_step, record=record, backend=args.backend)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    model = ModelKind(args.model)
    if args.input and args.family:
        raise CliError(EXIT_USAGE, "use either --input or --family, not both")
    if not args.input and not args.family:
        raise CliError(EXIT_USAGE, "simulate needs --input or --family/--n/--seed")
    if args.input:
        x = _read_input(args.input, zero_diagonal=model.zero_diagonal)
    else:
        if args.n is None or args.seed is None:
            raise CliError(EXIT_USAGE, "--family needs --n and --seed")
        if model.zero_diagonal and args.family == Family.KULAKOWSKI.value:
            raise CliError(EXIT_USAGE, f"model {model.value} needs a zero-diagonal family")
        try:
            x = initial_state(model, args.family, args.n, args.seed)
        except ValueError as exc:
            raise CliError(EXIT_USAGE, str(exc)) from exc
    normalized = False
    if model.projected:
        nrm = float(np.linalg.norm(x))
        if nrm == 0:
            raise CliError(EXIT_NUMERIC, "cannot project the zero matrix onto the sphere")
        normalized = abs(nrm - 1.0) > 1e-12
        x = x / nrm
    opts = _options(args)
    try:
        traj = integrate(model, x, opts)
    except ValueError as exc:
        raise CliError(EXIT_NUMERIC, str(exc)) from exc

    out = Path(args.output) if args.output else Path(
        os.environ.get("STRUCTBAL_OUTPUT_DIR", ".")) / f"trajectory.{args.format}"
    meta = _metadata(args)
    meta["input_normalized"] = normalized
    meta["backend"] = BACKEND if args.backend == "auto" else args.backend
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        sidecar = write_trajectory(traj, out, fmt=args.format, metadata=meta)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {out}: {exc}") from exc
    term = traj.terminal
    summary = {"trajectory": str(out), "events": str(sidecar), "terminal": term.name,
               "time": term.time, "samples": int(traj.times.size)}
    if traj.sign_event is not None:
        summary["sign_stabilized"] = traj.sign_event.time
    print(json.dumps(summary))
    return EXIT_NUMERIC if isinstance(term, IntegrationFailure) else EXIT_OK


# -- classify ---------------------------------------------------------------

def cmd_classify(args) -> int:
    x = _read_input(args.input, zero_diagonal=False)
    verdict = classify(x, args.zero_tol)
    d = verdict.to_dict()
    d["dissonance"] = dissonance(x)
    d["metadata"] = _metadata(args)
    if args.format == "json":
        text = json.dumps(d, indent=2) + "\n"
    else:
        text = _csv_text(["verdict", "factions", "isolated", "witness", "dissonance"], [[
            d["verdict"], json.dumps(d["factions"]), json.dumps(d["isolated"]),
            "" if d["witness"] is None else json.dumps(d["witness"]), repr(d["dissonance"])]])
    _emit(text, _out_path(args, f"verdict.{args.format}"))
    return EXIT_OK


# -- equilibria -------------------------------------------------------------

def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"bad number list {text!r}") from exc


def _describe(z) -> dict:
    a = z.entries
    lam = np.linalg.eigvalsh(a)
    d = {"matrix": a.tolist(), "residual": residual(a), "dissonance": dissonance(a),
         "eigenvalues": lam.tolist(), "eigen_signs": list(count_eigen_signs(a)),
         "verdict": classify(a).to_dict()}
    try:
        d["instability_certificate"] = instability_certificate(a)
    except ValueError:
        d["instability_certificate"] = None
    return d


def cmd_equilibria(args) -> int:
    modes = sum(x is not None for x in (args.k, args.blocks, args.balanced))
    if modes != 1:
        raise CliError(EXIT_USAGE, "give exactly one of --k, --blocks, --balanced")
    result = {"metadata": _metadata(args)}
    try:
        if args.k is not None:
            n, k = args.n, args.k
            if n is None:
                raise CliError(EXIT_USAGE, "--k needs --n")
            if args.signs is not None:
                if k != 1:
                    raise CliError(EXIT_USAGE, "--signs applies to k = 1 only")
                v = nst_k1(n, _parse_floats(args.signs))
            elif args.angles is not None:
                if k != 2:
                    raise CliError(EXIT_USAGE, "--angles applies to k = 2 only")
                v = nst_k2(n, _parse_floats(args.angles))
            else:
                v = nst_harmonic(n, k)
            z = build_irreducible(n, k, v)
            p, q = irreducible_pq(n, k)
            result.update({"kind": "irreducible", "n": n, "k": k, "p": p, "q": q,
                           "V": v.v.tolist(), "expected_dissonance":
                           equilibrium_dissonance(n, k)})
            result.update(_describe(z))
            matrices = [z.entries]
        elif args.blocks is not None:
            blocks = []
            for item in args.blocks.split(","):
                try:
                    nb, kb = (int(v) for v in item.split(":"))
                except ValueError as exc:
                    raise CliError(EXIT_USAGE, f"bad block {item!r}, expected n:k") from exc
                blocks.append((nb, kb, None if kb == 0 else nst_harmonic(nb, kb)))
            betas = _parse_floats(args.betas) if args.betas else None
            spec, z = build_reducible(blocks, betas=betas)
            result.update({"kind": "reducible", "spec": spec.to_dict()})
            result.update(_describe(z))
            matrices = [z.entries]
        else:
            n = args.n if args.n is not None else args.balanced
            eqs = list(enumerate_balanced(args.balanced, n))
            result.update({"kind": "balanced", "n1": args.balanced, "n": n,
                           "count": len(eqs), "equilibria": [_describe(z) for z in eqs]})
            matrices = [z.entries for z in eqs]
    except (ValueError, ArithmeticError) as exc:
        raise CliError(EXIT_NUMERIC, str(exc)) from exc

    if args.check:
        worst = max(residual(m) for m in matrices)
        result["check"] = {"max_residual": worst, "passed": worst < 1e-9}
        if worst >= 1e-9:
            _emit(json.dumps(result, indent=2) + "\n", _out_path(args, "equilibria.json"))
            return EXIT_NUMERIC

    if args.format == "json":
        text = json.dumps(result, indent=2) + "\n"
    else:
        rows = []
        for m in matrices:
            rows.extend([repr(float(v)) for v in row] for row in m)
            if len(matrices) > 1:
                rows.append([])
        text = _csv_text(None, rows)
    _emit(text, _out_path(args, f"equilibria.{args.format}"))
    return EXIT_OK


# -- montecarlo -------------------------------------------------------------

def cmd_montecarlo(args) -> int:
    if args.full_scale and args.trials is not None:
        raise CliError(EXIT_USAGE, "--full-scale and --trials are exclusive")
    n_trials = FULL_SCALE_TRIALS if args.full_scale else (args.trials or 500)
    if n_trials < 1 or args.n < 3:
        raise CliError(EXIT_USAGE, "need --trials >= 1 and --n >= 3")
    opts = _options(args, record=False)
    workers = args.workers if args.workers is not None else default_workers()
    try:
        report = run_experiment(args.model, args.family, args.n, n_trials, args.seed,
                                opts, workers=workers, eta_conf=args.eta_conf)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    d = report.to_dict()
    d["chernoff_n"] = chernoff_n(args.epsilon, args.eta_conf)
    d["metadata"] = {k: v for k, v in _metadata(args).items() if k != "workers"}
    if args.trials_csv:
        try:
            report.write_trials_csv(args.trials_csv)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {args.trials_csv}: {exc}") from exc
    if args.format == "json":
        text = json.dumps(d, indent=2, sort_keys=True) + "\n"
    else:
        rows = [[k, v] for k, v in sorted(d["counts"].items())]
        rows += [["p_hat", repr(d["p_hat"])], ["p_components", repr(d["p_components"])],
                 ["N", d["N"]], ["epsilon", repr(d["epsilon"])],
                 ["eta_conf", repr(d["eta_conf"])]]
        text = _csv_text(["field", "value"], rows)
    _emit(text, _out_path(args, f"montecarlo.{args.format}"))
    return EXIT_OK


# -- landscape --------------------------------------------------------------

def cmd_landscape(args) -> int:
    if args.n != 3:
        raise CliError(EXIT_USAGE, "landscape supports n = 3 only")
    try:
        grid = landscape_grid(args.n_lon, args.n_lat, args.stereographic, args.matrix_norm)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    check = minima_vs_balanced(grid)
    meta = _metadata(args)
    meta["normalization"] = "matrix" if args.matrix_norm else "coordinate"
    if args.format == "csv":
        text = _csv_text(grid.header(), ([repr(float(v)) for v in r] for r in grid.rows()))
    else:
        cols = {h: [] for h in grid.header()}
        for r in grid.rows():
            for h, v in zip(grid.header(), r):
                cols[h].append(float(v))
        text = json.dumps({"metadata": meta, "columns": cols, "minima": check}) + "\n"
    path = _out_path(args, f"landscape.{args.format}")
    _emit(text, path)
    if path is not None:
        print(json.dumps({"grid": str(path), "minima": check, "metadata": meta}))
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_integrator_flags(p) -> None:
    d = IntegratorOptions()
    g = p.add_argument_group("integrator")
    g.add_argument("--rtol", type=float, default=d.rel_tol)
    g.add_argument("--atol", type=float, default=d.abs_tol)
    g.add_argument("--max-time", type=float, default=d.max_time)
    g.add_argument("--blowup-norm", type=float, default=d.blowup_norm)
    g.add_argument("--grad-tol", type=float, default=d.grad_tol)
    g.add_argument("--sign-window", type=float, default=d.sign_window)
    g.add_argument("--sign-window-frac", type=float, default=d.sign_window_frac)
    g.add_argument("--sample-stride", type=float, default=d.sample_stride)
    g.add_argument("--zero-tol", type=float, default=d.zero_tol)
    g.add_argument("--max-step", type=float, default=d.max_step)
    g.add_argument("--backend", choices=("auto", "cython", "python"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="structbal",
                                 description="Gradient-flow models of structural balance.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    models = [m.value for m in ModelKind]
    families = [f.value for f in Family]

    p = sub.add_parser("simulate", help="integrate one trajectory")
    p.add_argument("--model", choices=models, required=True)
    p.add_argument("--input", help="initial matrix (CSV or JSON)")
    p.add_argument("--family", choices=families)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="trajectory file; events go to <stem>.events.json")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_integrator_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="structural-balance verdict for a matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--zero-tol", type=float, default=1e-7)
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("equilibria", help="build and certify symmetric equilibria")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, help="irreducible equilibrium with k positive eigenvalues")
    p.add_argument("--signs", help="comma-separated +1/-1 entries (k = 1)")
    p.add_argument("--angles", help="comma-separated angles in radians (k = 2)")
    p.add_argument("--blocks", help="reducible equilibrium, e.g. 3:1,3:1,2:0 (k=0 is a zero block)")
    p.add_argument("--betas", help="block weights when every block has n = 2k")
    p.add_argument("--balanced", type=int, metavar="N1",
                   help="enumerate the balanced equilibria on the first N1 nodes")
    p.add_argument("--check", action="store_true", help="exit 4 unless residual < 1e-9")
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("montecarlo", help="estimate the probability of reaching balance")
    p.add_argument("--model", choices=models, required=True)
    p.add_argument("--family", choices=families, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--full-scale", action="store_true",
                   help=f"run {FULL_SCALE_TRIALS} trials (long)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--eta-conf", type=float, default=0.01)
    p.add_argument("--trials-csv", help="write one row per trial")
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    _add_integrator_flags(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("landscape", help="dissonance on the 3-node sphere")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--n-lon", type=int, default=400)
    p.add_argument("--n-lat", type=int, default=200)
    p.add_argument("--stereographic", action="store_true")
    p.add_argument("--matrix-norm", action="store_true",
                   help="scale to unit Frobenius norm instead of the coordinate sphere")
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_landscape)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"structbal: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
