"""Command-line front end: seeded, config-driven, deterministic artifacts.

Exit codes: 0 on success, 1 on configuration or precondition failures, 2
when a verification command finds a violated bound. Diagnostics go to
stderr; data goes to files and stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import conditional_charfun, conditional_containment, uniform_fourier
from .blocks import as_seed_sequence
from .config import RunConfig, parse_config
from .eigenvalue import QuadratureSpec, alpha, closed_form_uniform, principal_eigenvalue
from .errors import CpheatError, PreconditionError
from .experiments import (
    EqualityCaseSpec,
    equality_case_check,
    fk_sweep,
    nonuniqueness_counterexample,
)
from .geometry import Ellipsoid
from .jumps import UniformOnSet
from .rearrangement import check_riesz, load_grid_field, random_indicator_triple
from .shc import EstimateCI, ShcCurve, estimate_Q, lambda_from_shc

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_ASSERTION = 2


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"({_fmt(x.real)}{'+' if x.imag >= 0 else '-'}{_fmt(abs(x.imag))}j)"
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, cfg: RunConfig, header: list[str], rows: list[list]):
    lines = [f"# config_sha256={cfg.sha256} seed={cfg.seed}", ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    path.write_text(text, encoding="ascii")
    return text


def _write_json(path: Path, cfg: RunConfig, payload: dict):
    record = {"config_sha256": cfg.sha256, "seed": cfg.seed}
    record.update(payload)
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    path.write_text(text, encoding="ascii")
    return text


def _require(cfg: RunConfig, command: str) -> dict:
    block = cfg.commands.get(command)
    if block is None:
        raise PreconditionError(f"config has no [{command}] section")
    return block


def _emit(text: str, quiet: bool):
    if not quiet:
        sys.stdout.write(text)


def _run_eig(cfg: RunConfig, out: Path, workers: int, quiet: bool) -> int:
    block = _require(cfg, "eig")
    spec = cfg.processes[block["process"]]
    domain = cfg.domains[block["domain"]]
    method = block.get("method", "grid")
    resolution = int(block.get("resolution", 256))
    quad = QuadratureSpec(method, resolution, cfg.seed if method == "mc" else None)
    waive = bool(block.get("waive_assumptions", False))
    result = principal_eigenvalue(spec, domain, quad, check_assumptions=not waive, workers=workers)
    closed = None
    if isinstance(spec.jump, UniformOnSet):
        closed = closed_form_uniform(spec.rate, domain, spec.jump.support, seed=cfg.seed)
    jump_name = cfg.raw.get("processes", {}).get(block["process"], {}).get("jump", "")
    text = _write_json(
        out / "eig.json",
        cfg,
        {
            "lambda1": result.lambda1,
            "alpha": result.alpha,
            "method": result.method,
            "error_estimate": result.error,
            "r": result.rate,
            "domain": block["domain"],
            "jump": jump_name,
            "closed_form": closed,
            "note": result.note,
        },
    )
    _emit(text, quiet)
    return EXIT_OK


def _run_shc(cfg: RunConfig, out: Path, workers: int, quiet: bool) -> int:
    block = _require(cfg, "shc")
    spec = cfg.processes[block["process"]]
    domain = cfg.domains[block["domain"]]
    times = [float(t) for t in block["times"]]
    n_paths = int(block["n_paths"])
    curve = estimate_Q(
        spec,
        domain,
        times,
        n_paths,
        cfg.seed,
        workers=workers,
        process_id=block["process"],
        domain_id=block["domain"],
    )
    rows = [
        [t, e.mean, e.stderr, n_paths, "paths"] for t, e in zip(curve.times, curve.estimates)
    ]
    text = _write_csv(out / "shc.csv", cfg, ["t", "q_mean", "q_stderr", "n_paths", "method"], rows)
    _emit(text, quiet)
    return EXIT_OK


def _read_shc_csv(path: Path, volume: float) -> ShcCurve:
    rows = []
    for line in path.read_text(encoding="ascii").splitlines():
        if not line or line.startswith("#") or line.startswith("t,"):
            continue
        parts = line.split(",")
        rows.append((float(parts[0]), float(parts[1]), float(parts[2]), int(parts[3])))
    if not rows:
        raise PreconditionError(f"no data rows in {path}")
    times = tuple(r[0] for r in rows)
    ests = tuple(EstimateCI(r[1], r[2], r[3], 0) for r in rows)
    return ShcCurve(times, ests, volume)


def _run_lambda_fit(cfg: RunConfig, out: Path, workers: int, quiet: bool) -> int:
    block = _require(cfg, "lambda_fit")
    domain = cfg.domains[block["domain"]]
    csv_path = Path(block["csv"])
    if not csv_path.is_absolute():
        csv_path = out / csv_path
    curve = _read_shc_csv(csv_path, domain.volume())
    fit = lambda_from_shc(curve, max_rel_ci=float(block.get("max_rel_ci", 0.2)))
    text = _write_json(
        out / "lambda_fit.json",
        cfg,
        {
            "lambda1": fit.lambda1,
            "stderr": fit.stderr,
            "intercept": fit.intercept,
            "n_used": fit.n_used,
            "times_used": list(fit.times_used),
            "residuals": list(fit.residuals),
            "max_rel_ci": fit.max_rel_ci,
        },
    )
    _emit(text, quiet)
    return EXIT_OK


def _run_riesz(cfg: RunConfig, out: Path, workers: int, quiet: bool) -> int:
    block = _require(cfg, "riesz")
    mode = block.get("mode", "random")
    rows = []
    all_ok = True
    if mode == "files":
        fields = [load_grid_field(Path(block[k])) for k in ("f", "g", "h")]
        chk = check_riesz(*fields)
        rows.append(["files", fields[0].dimension, chk.lhs, chk.rhs, chk.margin, chk.tolerance, chk.ok])
        all_ok = chk.ok
    elif mode == "random":
        count = int(block.get("count", 200))
        cell = float(block.get("cell", 1.0 / 64))
        dim = int(block.get("dimension", 0))
        for i in range(count):
            d = dim if dim in (1, 2) else (1 if i % 2 == 0 else 2)
            rng = np.random.default_rng(as_seed_sequence((cfg.seed, i)))
            f, g, h = random_indicator_triple(rng, d, cell)
            chk = check_riesz(f, g, h)
            rows.append([f"case{i:03d}", d, chk.lhs, chk.rhs, chk.margin, chk.tolerance, chk.ok])
            all_ok = all_ok and chk.ok
    else:
        raise PreconditionError(f"unknown riesz mode {mode!r}")
    text = _write_csv(
        out / "riesz.csv",
        cfg,
        ["case", "dim", "lhs", "rhs", "margin", "epsilon", "ok"],
        rows,
    )
    _emit(text, quiet)
    return EXIT_OK if all_ok else EXIT_ASSERTION


def _run_lemmas(cfg: RunConfig, out: Path, workers: int, quiet: bool) -> int:
    block = _require(cfg, "lemmas")
    spec = cfg.processes[block["process"]]
    domain = cfg.domains[block["domain"]]
    starts = block.get("start")
    if starts is None:
        lo, hi = domain.bounding_box()
        starts = [((lo + hi) / 2.0).tolist()]
    starts = [np.atleast_1d(np.asarray(s, dtype=float)) for s in starts]
    n_accepted = int(block.get("n_accepted", 4000))
    min_acc = float(block.get("min_acceptance", 1e-4))
    max_chains = block.get("max_chains")
    max_chains = int(max_chains) if max_chains is not None else None
    freqs = [float(v) for v in block.get("frequencies", [])]
    rows = []
    for n in block.get("charfun_orders", []):
        for freq in freqs:
            xi = np.zeros(domain.dimension)
            xi[0] = freq
            target = uniform_fourier(domain, xi)
            worst = None
            for k, x in enumerate(starts):
                est = conditional_charfun(
                    spec.jump, domain, x, int(n), xi, n_accepted,
                    as_seed_sequence((cfg.seed, 1, int(n), k)),
                    min_acceptance=min_acc, max_chains=max_chains,
                )
                if worst is None or abs(est.value - target) > abs(worst.value - target):
                    worst = est
            rows.append(
                ["charfun", int(n), freq, worst.value.real, worst.value.imag,
                 worst.stderr, complex(target), worst.acceptance_rate]
            )
    if block.get("containment_orders"):
        res = {1: 2048, 2: 256}.get(domain.dimension, 64)
        target_alpha = alpha(domain, spec.jump, QuadratureSpec("grid", res)).value
        for n in block["containment_orders"]:
            worst = None
            for k, x in enumerate(starts):
                est = conditional_containment(
                    spec.jump, domain, x, int(n), n_accepted,
                    as_seed_sequence((cfg.seed, 2, int(n), k)),
                    min_acceptance=min_acc, max_chains=max_chains,
                )
                if worst is None or abs(est.mean - target_alpha) > abs(worst.mean - target_alpha):
                    worst = est
            rows.append(
                ["containment", int(n), None, worst.mean, 0.0, worst.stderr,
                 target_alpha, worst.acceptance_rate]
            )
    text = _write_csv(
        out / "lemmas.csv",
        cfg,
        ["lemma", "n", "xi", "estimate_re", "estimate_im", "stderr", "target", "acceptance_rate"],
        rows,
    )
    _emit(text, quiet)
    return EXIT_OK


def _manifest(cfg: RunConfig, out: Path, name: str):
    _write_json(
        out / f"experiment_{name}_manifest.json",
        cfg,
        {"experiment": name, "library_version": __version__},
    )


def _run_experiment(cfg: RunConfig, name: str, out: Path, workers: int, quiet: bool) -> int:
    body = cfg.experiments.get(name)
    if body is None:
        raise PreconditionError(f"config has no [experiments.{name}] section")
    if name == "fk_sweep":
        spec = cfg.processes[body["process"]]
        shapes = [(ref, cfg.domains[ref]) for ref in body["shapes"]]
        quad = QuadratureSpec(
            body.get("method", "grid"),
            int(body.get("resolution", 256)),
            cfg.seed if body.get("method", "grid") == "mc" else None,
        )
        rows = fk_sweep(spec, shapes, quad, workers=workers)
        text = _write_csv(
            out / "experiment_fk_sweep.csv",
            cfg,
            ["name", "lambda_domain", "lambda_ball", "gap", "combined_error"],
            [[r.name, r.lambda_domain, r.lambda_ball, r.gap, r.combined_error] for r in rows],
        )
        _manifest(cfg, out, name)
        _emit(text, quiet)
        bad = any(r.gap < -3.0 * r.combined_error for r in rows)
        return EXIT_ASSERTION if bad else EXIT_OK
    if name == "equality_case":
        if "ellipsoid" in body:
            base = cfg.domains[body["ellipsoid"]]
            if not isinstance(base, Ellipsoid):
                raise PreconditionError("'ellipsoid' must reference an ellipsoid domain")
            case = EqualityCaseSpec.congruent_ellipsoids(
                base,
                body["translation"],
                float(body["domain_scale"]),
                float(body["support_scale"]),
            )
        else:
            case = EqualityCaseSpec(
                regime=body["regime"],
                domain=cfg.domains[body["domain"]],
                support=cfg.domains[body["support"]],
                expect_equality=bool(body.get("expect_equality", True)),
            )
        report = equality_case_check(
            case,
            float(body["rate"]),
            [float(t) for t in body["times"]],
            int(body["n_paths"]),
            cfg.seed,
            workers=workers,
        )
        text = _write_csv(
            out / "experiment_equality_case.csv",
            cfg,
            ["t", "q_domain", "se_domain", "q_ball", "se_ball", "diff", "combined_se", "closed_form"],
            [
                [r.t, r.q_domain, r.se_domain, r.q_ball, r.se_ball, r.diff, r.combined_se, r.closed_form]
                for r in report.rows
            ],
        )
        _manifest(cfg, out, name)
        _emit(text, quiet)
        return EXIT_OK if report.passed else EXIT_ASSERTION
    if name == "nonuniqueness":
        times = body.get("times")
        report = nonuniqueness_counterexample(
            float(body["rate"]),
            cfg.domains[body["support"]],
            cfg.domains[body["domain1"]],
            cfg.domains[body["domain2"]],
            QuadratureSpec("mc", int(body.get("n_paths", 100_000)), cfg.seed),
            cfg.seed,
            times=[float(t) for t in times] if times else None,
            n_paths=int(body.get("n_paths", 100_000)),
            rel_tol=float(body.get("rel_tol", 0.05)),
            workers=workers,
        )
        text = _write_csv(
            out / "experiment_nonuniqueness.csv",
            cfg,
            ["domain", "closed_form", "fitted", "rel_dev"],
            [
                [body["domain1"], report.closed_form_1, report.fitted_1,
                 abs(report.fitted_1 - report.closed_form_1) / report.closed_form_1],
                [body["domain2"], report.closed_form_2, report.fitted_2,
                 abs(report.fitted_2 - report.closed_form_2) / report.closed_form_2],
            ],
        )
        _manifest(cfg, out, name)
        _emit(text, quiet)
        return EXIT_OK if report.passed else EXIT_ASSERTION
    raise PreconditionError(f"unknown experiment {name!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpheat",
        description="Eigenvalue and heat-content numerics for killed pure-jump processes.",
    )
    parser.add_argument("--version", action="version", version=f"cpheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    names = ["eig", "shc", "lambda-fit", "riesz", "lemmas", "experiment"]
    for name in names:
        p = sub.add_parser(name)
        if name == "experiment":
            p.add_argument("name", choices=["fk_sweep", "equality_case", "nonuniqueness"])
        p.add_argument("--config", required=True, help="path to the TOML run config")
        p.add_argument("--out", default=None, help="output directory (default: config 'out' key)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--quiet", action="store_true", help="suppress stdout echo of results")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        out = Path(args.out if args.out is not None else cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        workers = max(1, args.workers)
        if args.command == "eig":
            return _run_eig(cfg, out, workers, args.quiet)
        if args.command == "shc":
            return _run_shc(cfg, out, workers, args.quiet)
        if args.command == "lambda-fit":
            return _run_lambda_fit(cfg, out, workers, args.quiet)
        if args.command == "riesz":
            return _run_riesz(cfg, out, workers, args.quiet)
        if args.command == "lemmas":
            return _run_lemmas(cfg, out, workers, args.quiet)
        if args.command == "experiment":
            return _run_experiment(cfg, args.name, out, workers, args.quiet)
        raise AssertionError(args.command)
    except CpheatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
