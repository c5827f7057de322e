"""Command-line front end: paper-style experiment sweeps and pipeline access.

Subcommands: sweep-cutoff, workdist, scaling, run, qsp-phases, verify.
Every command reads a JSON config (--config), writes CSV/JSON atomically
(--out), and exits 0 on success, 2 on config errors, 3 on certification
failures, 4 on solver non-convergence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .approx import build_series
from .circuitsim import solve_phase_set
from .errors import CertificationError, ConfigError, NoSignalError, QspConvergenceError
from .hamiltonians import diagonalize, tfim_coupling_part, tfim_field_part
from .nonequilibrium import (
    NonEqUnitary,
    haar_random_unitary,
    identity_unitary,
    interpolated_evolution,
    optimal_unitary_for_eps,
)
from .pipeline import RunConfig, run_tspp
from .thermal import free_energy_difference
from .workstats import forward_distribution, largest_cutoff, reverse_distribution, verify_fluctuation_identities

WORKERS_ENV = "FLUCTHERM_WORKERS"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_row(values) -> str:
    out = []
    for v in values:
        if isinstance(v, float):
            out.append(f"{v:.12g}")
        else:
            out.append(str(v))
    return ",".join(out)


def _write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)] + [_format_row(r) for r in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _load_config(path: "str | None", defaults: dict) -> dict:
    doc = dict(defaults)
    if path is not None:
        try:
            with open(path) as handle:
                doc.update(json.load(handle))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error in {path}, line {exc.lineno}: {exc.msg}"
            ) from exc
    return doc


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _parallel_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _tfim_instance(doc: dict):
    n = int(doc.get("n", 6))
    field = float(doc.get("field", 1.0))
    coupling = float(doc.get("coupling", 0.5))
    beta = float(doc.get("beta", 1.0))
    h0 = tfim_field_part(n, field)
    v = tfim_coupling_part(n, coupling)
    spec0 = diagonalize(h0)
    spec1 = diagonalize(h0.dense() + v.dense())
    thermo = free_energy_difference(spec0, spec1, beta)
    return n, beta, h0, v, spec0, spec1, thermo


def _drive_for_label(label, instance, eps, steps):
    """Resolve a sweep unitary: a number is an interpolation time T, the
    string "optimal" is the greedy construction for the given eps."""
    n, beta, h0, v, spec0, spec1, _ = instance
    if label == "optimal":
        u, _, _ = optimal_unitary_for_eps(spec0, spec1, beta, eps)
        return u
    total_time = float(label)
    if total_time == 0.0:
        return identity_unitary(spec0.dim)
    return interpolated_evolution(h0, v, total_time, steps)


def _cutoff_for_drive(instance, drive: NonEqUnitary, eps: float) -> float:
    _, beta, _, _, spec0, spec1, thermo = instance
    _, dist = forward_distribution(spec0, spec1, beta, drive.matrix, thermo.deltaA)
    return largest_cutoff(dist, beta, thermo.deltaA, eps).w_l


def cmd_sweep_cutoff(args) -> int:
    defaults = {
        "instance": {"n": 6, "beta": 1.0, "field": 1.0, "coupling": 0.5},
        "variable": "eps",
        "grid": [0.0005, 0.005, 0.05, 0.5],
        "T_set": [0, 1, 2, 3, 5, "optimal"],
        "eps_set": [0.005, 0.05, 0.5],
        "steps": "auto",
    }
    doc = _load_config(args.config, defaults)
    instance = _tfim_instance(doc["instance"])
    steps = doc["steps"]
    grid = list(doc["grid"])
    if not grid or len(set(map(str, grid))) != len(grid):
        raise ConfigError("sweep grid must be non-empty with unique values")
    rows = []
    if doc["variable"] == "eps":
        labels = doc["T_set"]
        cached = {
            label: _drive_for_label(label, instance, 0.0, steps)
            for label in labels
            if label != "optimal"
        }
        for eps in grid:
            for label in labels:
                if label == "optimal":
                    drive = _drive_for_label("optimal", instance, float(eps), steps)
                else:
                    drive = cached[label]
                w_l = _cutoff_for_drive(instance, drive, float(eps))
                rows.append((float(eps), _sweep_label(label), w_l))
    elif doc["variable"] == "T":
        for label in grid:
            drive = _drive_for_label(label, instance, 0.0, steps)
            for eps in doc["eps_set"]:
                w_l = _cutoff_for_drive(instance, drive, float(eps))
                rows.append((float(label), f"eps={eps:g}", w_l))
    else:
        raise ConfigError("variable must be 'eps' or 'T'")
    _write_csv(args.out, ["variable", "unitary_label", "w_l_star"], rows)
    if args.plot:
        _emit_svg(args.out, "variable", "w_l_star", "unitary_label")
    return 0


def _sweep_label(label) -> str:
    return "optimal" if label == "optimal" else f"T={float(label):g}"


def cmd_workdist(args) -> int:
    defaults = {
        "instance": {"n": 6, "beta": 1.0, "field": 1.0, "coupling": 0.5},
        "eps": 0.005,
        "T_set": [0, 2, 5, "optimal"],
        "steps": "auto",
    }
    doc = _load_config(args.config, defaults)
    instance = _tfim_instance(doc["instance"])
    _, beta, _, _, spec0, spec1, thermo = instance
    eps = float(doc["eps"])
    rows, cutoff_rows = [], []
    for label in doc["T_set"]:
        drive = _drive_for_label(label, instance, eps, doc["steps"])
        _, dist = forward_distribution(
            spec0, spec1, beta, drive.matrix, thermo.deltaA
        )
        name = _sweep_label(label)
        rows += [(name, float(w), float(p)) for w, p in zip(dist.w, dist.P)]
        w_l = largest_cutoff(dist, beta, thermo.deltaA, eps).w_l
        cutoff_rows.append((name, w_l))
    _write_csv(args.out, ["unitary_label", "w", "P"], rows)
    stem, ext = os.path.splitext(args.out)
    _write_csv(stem + "_cutoffs" + ext, ["unitary_label", "w_l_star"], cutoff_rows)
    if args.plot:
        _emit_svg(args.out, "w", "P", "unitary_label")
    return 0


def _scaling_point(task) -> tuple:
    n, t_label, doc = task
    instance = _tfim_instance(
        {
            "n": n,
            "beta": doc["beta"],
            "field": doc["field"],
            "coupling": doc["coupling"],
        }
    )
    total_time = {"T=0": 0.0, "T=2": 2.0, "T=n": float(n), "T=5n": 5.0 * n}[t_label]
    steps = doc["steps"]
    if steps == "policy":
        steps = max(256, int(np.ceil(16.0 * total_time)))
    if total_time == 0.0:
        drive = identity_unitary(instance[4].dim)
    else:
        drive = interpolated_evolution(instance[2], instance[3], total_time, steps)
    w_l = _cutoff_for_drive(instance, drive, doc["eps"])
    return (n, t_label, w_l)


def cmd_scaling(args) -> int:
    defaults = {
        "n_max": 8,
        "beta": 1.0,
        "field": 1.0,
        "coupling": 0.5,
        "eps": 0.005,
        "T_labels": ["T=0", "T=2", "T=n", "T=5n"],
        # fixed per-T step policy keeps the n=8 rows inside the runtime
        # budget; midpoint error ~1e-3 does not move the w_l* orderings
        "steps": "policy",
    }
    doc = _load_config(args.config, defaults)
    doc["eps"] = float(doc["eps"])
    tasks = [
        (n, t_label, doc)
        for n in range(1, int(doc["n_max"]) + 1)
        for t_label in doc["T_labels"]
    ]
    rows = _parallel_map(_scaling_point, tasks, _workers(args))
    _write_csv(args.out, ["n", "T_label", "w_l_star"], rows)
    if args.plot:
        _emit_svg(args.out, "n", "w_l_star", "T_label")
    return 0


def cmd_run(args) -> int:
    doc = _load_config(args.config, {})
    if not doc:
        raise ConfigError("run requires --config with a run configuration")
    if args.backend is not None:
        doc["backend"] = args.backend
    config = RunConfig.from_json(doc)
    result = run_tspp(config)
    _atomic_write(args.out, result.to_json() + "\n")
    tau_csv = doc.get("tau_csv")
    if tau_csv:
        _atomic_write(tau_csv, result.tau1.to_csv())
    return 0


def cmd_qsp_phases(args) -> int:
    defaults = {"beta": 1.0, "w_max": 50.0, "w_l": -1.0, "eps": 0.05}
    doc = _load_config(args.config, defaults)
    series = build_series(
        float(doc["beta"]), float(doc["w_max"]), float(doc["w_l"]), float(doc["eps"])
    )
    phase_set = solve_phase_set(series)
    rows = [("phi1", i, float(p)) for i, p in enumerate(phase_set.phases1)]
    rows += [("phi2", i, float(p)) for i, p in enumerate(phase_set.phases2)]
    _write_csv(args.out, ["set", "index", "phi"], rows)
    meta = {
        "count_per_set": int(phase_set.phases1.shape[0]),
        "endpoints_phi1": [float(phase_set.phases1[0]), float(phase_set.phases1[-1])],
        "endpoints_phi2": [float(phase_set.phases2[0]), float(phase_set.phases2[-1])],
        "residuals": [phase_set.residual1, phase_set.residual2],
        "J": series.J,
        "delta": series.delta,
    }
    _atomic_write(args.out + ".meta.json", json.dumps(meta, indent=2) + "\n")
    return 0


def cmd_verify(args) -> int:
    defaults = {
        "instance": {"n": 4, "beta": 1.0, "field": 1.0, "coupling": 0.5},
        "unitary": {"type": "identity"},
        "steps": "auto",
    }
    doc = _load_config(args.config, defaults)
    instance = _tfim_instance(doc["instance"])
    _, beta, h0, v, spec0, spec1, thermo = instance
    desc = doc["unitary"]
    if desc.get("type") == "interpolation":
        drive = interpolated_evolution(
            h0, v, float(desc["T"]), desc.get("steps", doc["steps"])
        )
    elif desc.get("type") == "optimal":
        drive, _, _ = optimal_unitary_for_eps(
            spec0, spec1, beta, float(desc.get("eps", 0.0))
        )
    elif desc.get("type") == "haar":
        drive = haar_random_unitary(
            spec0.dim, np.random.default_rng(args.seed or 0)
        )
    else:
        drive = identity_unitary(spec0.dim)
    _, fwd = forward_distribution(spec0, spec1, beta, drive.matrix, thermo.deltaA)
    rev = reverse_distribution(spec0, spec1, beta, drive.matrix)
    res = verify_fluctuation_identities(fwd, rev, beta, thermo.deltaA)
    payload = json.dumps(
        {
            "jarzynski": res.jarzynski,
            "crooks_per_bin": res.crooks_per_bin,
            "crooks_w2": res.crooks_w2,
            "deltaA": thermo.deltaA,
        },
        indent=2,
    )
    print(payload)
    if args.out:
        _atomic_write(args.out, payload + "\n")
    return 0


def _emit_svg(csv_path: str, x_col: str, y_col: str, group_col: str) -> None:
    """Optional line/scatter plot regenerated from the written CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(csv_path) as handle:
        header = handle.readline().strip().split(",")
        data = [line.strip().split(",") for line in handle if line.strip()]
    xi, yi, gi = header.index(x_col), header.index(y_col), header.index(group_col)
    groups: dict[str, list] = {}
    for row in data:
        groups.setdefault(row[gi], []).append((float(row[xi]), float(row[yi])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in groups.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.splitext(csv_path)[0] + ".svg")
    plt.close(fig)


COMMANDS = {
    "sweep-cutoff": (cmd_sweep_cutoff, "sweep_cutoff.csv"),
    "workdist": (cmd_workdist, "workdist.csv"),
    "scaling": (cmd_scaling, "scaling.csv"),
    "run": (cmd_run, "run_result.json"),
    "qsp-phases": (cmd_qsp_phases, "qsp_phases.csv"),
    "verify": (cmd_verify, None),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluctherm",
        description="thermal-state preparation experiments on exact statevectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, default_out) in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--out", default=default_out)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--backend", choices=["lcu", "qsp"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--plot", action="store_true")
    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    handler, _ = COMMANDS[args.command]
    try:
        return handler(args)
    except QspConvergenceError as exc:
        print(f"solver non-convergence: {exc}", file=sys.stderr)
        return 4
    except (CertificationError, NoSignalError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, json.JSONDecodeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
