"""Config-driven command line interface.

Subcommands: kernel, apply, trace, kato, validate, experiment.  A single
TOML file determines every run; outputs (results.csv, report.json,
manifest.json) are byte-identical across reruns at fixed config and shard
count.  Exit codes: 0 success / all checks pass, 1 validation failure,
2 config or precondition error.

Defaults (overridable in [run]): n_paths = 100000, n_steps from
ds_max = 1e-3, field cap = 1e6, seed = 0, killing = "corrected" when the
domain supports distances, "naive" otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - py3.10 shim
    import tomli as tomllib

from . import estimators, potentials, validation
from .geometry import FullSpace, make_domain
from .potentials import ScalarField, make_scalar, make_vector, mollify
from .validation import psi_bump, psi_gaussian, psi_one

DEFAULTS = {
    "n_paths": 100_000,
    "ds_max": 1e-3,
    "cap": 1e6,
    "seed": 0,
    "workers": 1,
    "out": "out",
}

SUBCOMMANDS = ("kernel", "apply", "trace", "kato", "validate", "experiment")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config assembly


@dataclass
class RunConfig:
    t_values: list
    points: np.ndarray  # (m, d)
    targets: np.ndarray  # (m, d), kernel only
    n_paths: int
    n_steps: dict  # t -> steps
    seed: int
    killing: str
    workers: int


@dataclass
class ExperimentConfig:
    """Fully determines a run: problem, schedule, output location."""

    spec: estimators.ProblemSpec
    run: RunConfig
    out_dir: Path
    raw: dict = field(repr=False, default_factory=dict)


def _table(cfg: dict, key: str) -> dict:
    v = cfg.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(f"[{key}] must be a table")
    return v


def _build_problem(cfg: dict) -> estimators.ProblemSpec:
    prob = _table(cfg, "problem")
    try:
        dim = int(prob["dim"])
    except KeyError:
        raise ConfigError("problem.dim is required")
    dom_tbl = dict(_table(prob, "domain"))
    kind = dom_tbl.pop("kind", "full_space")
    try:
        domain = make_domain(kind, dim, **dom_tbl)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad domain spec: {e}")

    cap = float(_table(cfg, "run").get("cap", DEFAULTS["cap"]))

    def build(tbl, maker, zero):
        if not tbl:
            return zero(dim)
        name = tbl.get("name")
        if name is None:
            raise ConfigError("potential tables need a 'name'")
        params = dict(tbl.get("params", {}))
        try:
            f = maker(name, dim, **params)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad potential '{name}': {e}")
        return replace(f, cap=cap) if f.cap != cap else f

    V = build(_table(prob, "scalar"), make_scalar, potentials.zero_scalar)
    A = build(_table(prob, "vector"), make_vector, potentials.zero_vector)
    try:
        return estimators.ProblemSpec(A=A, V=V, domain=domain)
    except ValueError as e:
        raise ConfigError(str(e))


def _build_run(cfg: dict, spec: estimators.ProblemSpec, args) -> RunConfig:
    run = _table(cfg, "run")
    t_raw = run.get("t", 1.0)
    t_values = [float(t) for t in (t_raw if isinstance(t_raw, list) else [t_raw])]
    if any(t <= 0 for t in t_values):
        raise ConfigError("run.t values must be positive")

    d = spec.domain.dim
    pts = np.atleast_2d(np.asarray(run.get("points", [[0.0] * d]), dtype=float))
    tgt = np.atleast_2d(np.asarray(run.get("targets", pts), dtype=float))
    if pts.shape[-1] != d or tgt.shape[-1] != d:
        raise ConfigError(f"points/targets must have dimension {d}")

    n_paths = int(run.get("n_paths", DEFAULTS["n_paths"]))
    ds_max = float(run.get("ds_max", DEFAULTS["ds_max"]))
    if "n_steps" in run:
        n_steps = {t: int(run["n_steps"]) for t in t_values}
    else:
        n_steps = {t: estimators.default_n_steps(t, ds_max) for t in t_values}

    seed = int(args.seed if args.seed is not None else run.get("seed", DEFAULTS["seed"]))
    # every shipped domain carries a boundary-distance function, so the
    # crossing-corrected estimator is the safe default
    killing = run.get("killing", "corrected")
    if killing not in ("naive", "corrected"):
        raise ConfigError("run.killing must be 'naive' or 'corrected'")
    workers = int(args.workers if args.workers is not None else run.get("workers", DEFAULTS["workers"]))
    return RunConfig(t_values, pts, tgt, n_paths, n_steps, seed, killing, workers)


def load_config(path: str, args) -> ExperimentConfig:
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config not found: {p}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"malformed TOML: {e}")
    spec = _build_problem(raw)
    run = _build_run(raw, spec, args)
    out_dir = Path(args.out if args.out is not None else _table(raw, "output").get("directory", DEFAULTS["out"]))
    return ExperimentConfig(spec=spec, run=run, out_dir=out_dir, raw=raw)


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_outputs(cfg: ExperimentConfig, subcommand: str, header, rows, report: dict) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out_dir / "results.csv", header, rows)
    with open(cfg.out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest = {
        "subcommand": subcommand,
        "config": cfg.raw,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "artifact": "0.1.0",
        },
    }
    with open(cfg.out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_kernel(cfg: ExperimentConfig) -> int:
    r = cfg.run
    header = ["t", "x", "y", "re", "im", "stderr", "n_paths", "n_steps", "seed"]
    rows = []
    for t in r.t_values:
        for i, (x, y) in enumerate(zip(r.points, r.targets)):
            est = estimators.kernel(
                cfg.spec, t, x, y, r.n_paths, r.n_steps[t], r.seed,
                killing=r.killing, stream_base=i * estimators.STREAM_STRIDE,
                workers=r.workers,
            )
            rows.append([t, _pt(x), _pt(y), est.mean.real, est.mean.imag,
                         est.stderr, est.n_paths, est.n_steps, est.seed])
    report = {"rows": len(rows), "status": "ok"}
    write_outputs(cfg, "kernel", header, rows, report)
    print(f"kernel: {len(rows)} estimates -> {cfg.out_dir}/results.csv")
    return 0


def _pt(x) -> str:
    return "(" + ",".join(format(float(v), ".17g") for v in np.atleast_1d(x)) + ")"


_PSI = {"gaussian": lambda tbl: psi_gaussian,
        "bump": lambda tbl: psi_bump(float(tbl.get("radius", 1.0))),
        "one": lambda tbl: psi_one}


def _psi_from(tbl: dict):
    name = tbl.get("psi", "gaussian")
    if name not in _PSI:
        raise ConfigError(f"unknown psi '{name}' (choose from {sorted(_PSI)})")
    return name, _PSI[name](tbl)


def cmd_apply(cfg: ExperimentConfig) -> int:
    r = cfg.run
    psi_name, psi = _psi_from(_table(cfg.raw, "apply"))
    header = ["t", "x", "psi", "re", "im", "stderr", "n_paths", "n_steps", "seed"]
    rows = []
    for t in r.t_values:
        for i, x in enumerate(r.points):
            est = estimators.apply_semigroup(
                cfg.spec, psi, t, x, r.n_paths, r.n_steps[t], r.seed,
                killing=r.killing, stream_base=i * estimators.STREAM_STRIDE,
                workers=r.workers,
            )
            rows.append([t, _pt(x), psi_name, est.mean.real, est.mean.imag,
                         est.stderr, est.n_paths, est.n_steps, est.seed])
    write_outputs(cfg, "apply", header, rows, {"rows": len(rows), "status": "ok"})
    print(f"apply: {len(rows)} estimates -> {cfg.out_dir}/results.csv")
    return 0


def cmd_trace(cfg: ExperimentConfig) -> int:
    r = cfg.run
    tbl = _table(cfg.raw, "trace")
    res = int(tbl.get("grid_resolution", 16))
    box = tbl.get("integration_box")  # [[lo per dim], [hi per dim]]
    if box is not None:
        box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
        if box[0].shape != (cfg.spec.domain.dim,) or box[1].shape != (cfg.spec.domain.dim,):
            raise ConfigError("trace.integration_box must be [[lo...], [hi...]]")
    header = ["t", "trace_re", "trace_im", "stderr", "grid_resolution",
              "n_paths", "n_steps", "seed"]
    rows = []
    for t in r.t_values:
        est = estimators.trace(
            cfg.spec, t, r.n_paths, r.n_steps[t], res, r.seed,
            killing=r.killing, integration_box=box, workers=r.workers,
        )
        rows.append([t, est.mean.real, est.mean.imag, est.stderr, res,
                     r.n_paths, r.n_steps[t], r.seed])
    write_outputs(cfg, "trace", header, rows, {"rows": len(rows), "status": "ok"})
    print(f"trace: {len(rows)} estimates -> {cfg.out_dir}/results.csv")
    return 0


def cmd_kato(cfg: ExperimentConfig) -> int:
    tbl = _table(cfg.raw, "kato")
    d = cfg.spec.domain.dim
    target = tbl.get("target", "scalar")
    if target == "scalar":
        f = cfg.spec.V
    elif target == "divergence":
        A = cfg.spec.A
        f = ScalarField(lambda x: np.abs(A.divergence(x)), d,
                        singular_points=A.singular_points, name=f"|div {A.name}|")
    elif target == "vector_square":
        A = cfg.spec.A
        f = ScalarField(lambda x: np.sum(np.square(A(x)), axis=-1), d,
                        singular_points=A.singular_points, name=f"|{A.name}|^2")
    else:
        raise ConfigError("kato.target must be scalar | divergence | vector_square")
    rhos = [float(v) for v in tbl.get("rho", [0.5, 0.1, 0.01])]
    probes = np.atleast_2d(np.asarray(tbl.get("probes", [[0.0] * d]), dtype=float))
    if probes.shape[-1] != d:
        raise ConfigError(f"kato.probes must have dimension {d}")
    try:
        report = potentials.kato_smallness_profile(f, rhos, probes, d)
    except ValueError as e:
        raise ConfigError(str(e))
    header = ["rho", "value", "seed", "n_steps"]
    rows = [[rho, val, cfg.run.seed, 0] for rho, val in report.profile]
    write_outputs(cfg, "kato", header, rows, {"target": target, **report.to_dict()})
    print(f"kato: {f.name} -> {report.verdict}")
    return 0


_DEFAULT_CHECKS = ("diamagnetic", "hermiticity", "semigroup", "girsanov", "boundary")


def cmd_validate(cfg: ExperimentConfig) -> int:
    r = cfg.run
    tbl = _table(cfg.raw, "validate")
    names = tbl.get("checks", list(_DEFAULT_CHECKS))
    n_paths = int(tbl.get("n_paths", min(r.n_paths, 16_384)))
    n_steps = int(tbl.get("n_steps", 300))
    t = r.t_values[0]
    d = cfg.spec.domain.dim
    rng = np.random.default_rng(r.seed)
    base = r.points[0]
    reports = []
    for name in names:
        if name == "diamagnetic":
            pairs = [(base + 0.6 * rng.normal(size=d), base + 0.6 * rng.normal(size=d))
                     for _ in range(5)]
            pairs = [(x, y) for x, y in pairs
                     if cfg.spec.domain.contains(x) and cfg.spec.domain.contains(y)]
            if not pairs:
                raise ConfigError("diamagnetic check: no sampled pair lies in the domain")
            reports.append(validation.check_diamagnetic(
                cfg.spec, pairs, t, n_paths, n_steps, r.seed))
        elif name == "hermiticity":
            reports.append(validation.check_hermiticity(
                cfg.spec, [(base, base + 0.5)], t, n_paths, n_steps, r.seed))
        elif name == "semigroup":
            reports.append(validation.check_semigroup(
                cfg.spec, t / 2, t / 2, base, base + 0.5,
                base - 3.0, base + 3.0, int(tbl.get("z_res", 7)),
                max(n_paths // 4, 2048), n_steps, r.seed))
        elif name == "girsanov":
            for fn in ("one", "coordinate", "indicator"):
                reports.append(validation.check_girsanov(
                    fn, t / 2, t, base, base + 0.5, d, n_paths, n_steps, r.seed))
        elif name == "boundary":
            reports.append(_boundary_check(cfg, t, n_paths, n_steps))
        else:
            raise ConfigError(f"unknown check '{name}'")
    failed = [rep.name for rep in reports if not rep.passed]
    header = ["check", "passed", "statistic", "threshold", "seed", "n_steps"]
    rows = [[rep.name, int(rep.passed), rep.statistic, rep.threshold, r.seed, n_steps]
            for rep in reports]
    report = {"checks": [rep.to_dict() for rep in reports],
              "n_failed": len(failed), "failed": failed,
              "status": "pass" if not failed else "fail"}
    write_outputs(cfg, "validate", header, rows, report)
    print(f"validate: {len(reports) - len(failed)}/{len(reports)} checks passed")
    return 0 if not failed else 1


def _boundary_check(cfg: ExperimentConfig, t, n_paths, n_steps):
    dom = cfg.spec.domain
    d = dom.dim
    if isinstance(dom, FullSpace):
        z = np.zeros(d)
        return validation.check_boundary_vanishing(
            cfg.spec, z, z, [1.0], z, t, n_paths, n_steps, cfg.run.seed)
    try:
        [(b, axis)] = dom.boundary_witness(1, cfg.run.seed)
    except NotImplementedError:
        raise ConfigError("boundary check needs a domain with boundary witnesses")
    inward = -np.asarray(axis, dtype=float)
    y_ref = b + 1.0 * inward
    return validation.check_boundary_vanishing(
        cfg.spec, b, inward, [0.8, 0.4, 0.2, 0.1], y_ref,
        t, n_paths, n_steps, cfg.run.seed)


def cmd_experiment(cfg: ExperimentConfig) -> int:
    r = cfg.run
    tbl = _table(cfg.raw, "experiment")
    kind = tbl.get("kind")
    t = r.t_values[0]
    d = cfg.spec.domain.dim
    n_paths = int(tbl.get("n_paths", min(r.n_paths, 20_000)))
    n_steps = int(tbl.get("n_steps", 400))

    if kind == "soft_kill":
        mu = float(tbl.get("mu", 1.0))
        levels = [int(n) for n in tbl.get("levels", [10, 100, 1000, 10000])]
        rep = validation.soft_kill_convergence(
            cfg.spec, mu, levels, t, r.points[0], r.targets[0],
            n_paths, n_steps, r.seed)
        rows = [[str(e["n"]), e["value"], e["stderr"], r.seed, n_steps]
                for e in rep.details if "value" in e and e["value"] is not None]
        header = ["level", "estimate", "stderr", "seed", "n_steps"]
    elif kind == "strong_continuity":
        _, psi = _psi_from(tbl)
        p = float(tbl.get("p", 2.0))
        ts = [float(v) for v in tbl.get("t_sequence", [0.5, 0.2, 0.1, 0.05])]
        lo, hi = (float(v) for v in tbl.get("grid", [-3.0, 3.0]))
        res = int(tbl.get("grid_resolution", 7))
        thr = float(tbl.get("threshold", 0.15))
        rep = validation.strong_continuity_experiment(
            cfg.spec, psi, p, ts, np.full(d, lo), np.full(d, hi), res,
            n_paths, n_steps, r.seed, thr, killing=r.killing)
        rows = [[e["t"], e["norm"], r.seed, n_steps] for e in rep.details]
        header = ["t", "lp_distance", "seed", "n_steps"]
    elif kind == "potential_convergence":
        radii = [float(v) for v in tbl.get("radii", [0.8, 0.4, 0.2, 0.1])]
        cutoff = float(tbl.get("cutoff", 6.0))
        approx = [(mollify(cfg.spec.A, rad, cutoff), mollify(cfg.spec.V, rad, cutoff))
                  for rad in radii]
        pairs = list(zip(r.points, r.targets))
        thr = float(tbl.get("threshold", 0.05))
        rep = validation.potential_convergence_experiment(
            cfg.spec, approx, pairs, t, n_paths, n_steps, r.seed, thr)
        rows = [[rad, e["sup_difference"], r.seed, n_steps]
                for rad, e in zip(radii, rep.details)]
        header = ["mollifier_radius", "sup_difference", "seed", "n_steps"]
    elif kind == "regularity":
        taus = [float(v) for v in tbl.get("tau_sequence", [0.0, 0.01, 0.05])]
        pts = np.atleast_2d(np.asarray(tbl.get("boundary_points", [[0.0] * d]), float))
        mode = tbl.get("mode", r.killing)
        rep = validation.regularity_probe(
            cfg.spec.domain, pts, t, taus, n_paths, n_steps, r.seed, mode=mode)
        rows = [[_pt(e["point"]), est["tau"], est["value"], r.seed, n_steps]
                for e in rep.details for est in e["estimates"]]
        header = ["point", "tau", "survival", "seed", "n_steps"]
    else:
        raise ConfigError(
            "experiment.kind must be soft_kill | strong_continuity | "
            "potential_convergence | regularity")

    write_outputs(cfg, "experiment", header, rows,
                  {"kind": kind, **rep.to_dict()})
    print(f"experiment {kind}: {'pass' if rep.passed else 'FAIL'} "
          f"(stat {rep.statistic:.4g} vs {rep.threshold:.4g})")
    return 0 if rep.passed else 1


_DISPATCH = {
    "kernel": cmd_kernel,
    "apply": cmd_apply,
    "trace": cmd_trace,
    "kato": cmd_kato,
    "validate": cmd_validate,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fkmc",
        description="Feynman-Kac-Ito Monte Carlo for magnetic Schrodinger "
                    "semigroups with Dirichlet killing.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="TOML experiment config")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override config seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        return _DISPATCH[args.subcommand](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, estimators.KhasminskiiFailure) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
