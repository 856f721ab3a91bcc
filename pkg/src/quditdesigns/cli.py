"""Command-line front end: every experiment is a seeded, reproducible run
emitting CSV (plot-ready rows) and JSON (metadata, fits).

Exit codes: 0 success, 2 usage error, 3 resource bound exceeded,
4 numerical-fit failure (raw data is still written).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import FitError, ResourceLimitError
from .linalg import RandomSource
from . import charrb, constructions, groups, metrics, spin
from .metrics import WeightedStateEnsemble
from .report import ExperimentReport, RunManifest, utc_now

DEFAULT_THREADS_ENV = "QUDITDESIGNS_THREADS"


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# spec parsers


def parse_t_grid(text: str) -> list[float]:
    """'start:stop:step' inclusive of the endpoint (within 1e-9)."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad t-grid {text!r}; expected start:stop:step") from exc
    if step <= 0 or stop < start:
        raise UsageError(f"bad t-grid {text!r}")
    out = []
    t = start
    while t <= stop + 1e-9:
        out.append(round(t, 12))
        t += step
    return out


def parse_lengths(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad lengths {text!r}; expected comma-separated integers") from exc


def build_ensemble(spec: str, t: int) -> WeightedStateEnsemble:
    """Ensemble specs: wf:p, phase:d:p, sic2, mub:p, project:src:dim,
    stab:n, file:path."""
    parts = spec.split(":")
    try:
        if parts[0] == "wf" and len(parts) == 2:
            return constructions.wootters_fields(int(parts[1]))
        if parts[0] == "phase" and len(parts) == 3:
            return constructions.phase_state_ensemble(int(parts[1]), int(parts[2]))
        if parts[0] == "sic2" and len(parts) == 1:
            return constructions.sic_qubit()
        if parts[0] == "mub" and len(parts) == 2:
            return constructions.mub_ensemble(int(parts[1]))
        if parts[0] == "stab" and len(parts) == 2:
            stab = groups.stabilizer_states(int(parts[1]))
            return WeightedStateEnsemble.uniform(stab.states, name=spec)
        if parts[0] == "project" and len(parts) >= 3:
            src = ":".join(parts[1:-1])
            dim = int(parts[-1])
            inner = build_ensemble(src, t)
            proj = constructions.ProjectionSpec.onto_first(inner.dim, dim)
            return constructions.project_ensemble(inner, proj, t)
        if parts[0] == "file" and len(parts) >= 2:
            path = ":".join(parts[1:])
            return constructions.ensemble_from_json(Path(path).read_text())
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad ensemble spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown ensemble spec {spec!r}")


def build_group(spec: str):
    """Group specs: clifford:d, cyclic:d, pauli:d, sl2f5, su2mc:S."""
    parts = spec.split(":")
    try:
        if parts[0] == "clifford" and len(parts) == 2:
            return groups.clifford_group(int(parts[1]))
        if parts[0] == "cyclic" and len(parts) == 2:
            return groups.cyclic_group(int(parts[1]))
        if parts[0] == "pauli" and len(parts) == 2:
            return groups.pauli_group(int(parts[1]))
        if parts[0] == "sl2f5" and len(parts) == 1:
            return groups.sl2f5_group()
        if parts[0] == "su2mc" and len(parts) == 2:
            return ("su2mc", float(parts[1]))
    except ValueError as exc:
        raise UsageError(f"bad group spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown group spec {spec!r}")


# ---------------------------------------------------------------------------
# runners (params dict -> ExperimentReport), shared by argparse and replay


def run_welch(params: dict) -> ExperimentReport:
    t = params["t"]
    tol = params.get("tol", 1e-9)
    if abs(t - round(t)) > 1e-12 and params["ensemble"].startswith("project:"):
        raise UsageError("projection ensembles need integer t")
    ens = build_ensemble(params["ensemble"], int(round(t)))
    lhs = metrics.welch_lhs(ens, t)
    rhs = metrics.welch_rhs(ens.dim, t)
    ratio = lhs / rhs
    row = {
        "ensemble": params["ensemble"],
        "t": float(t),
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "passed": bool(abs(ratio - 1.0) <= tol),
        "tol": tol,
    }
    return ExperimentReport(
        command="welch",
        params=params,
        seed=params.get("seed"),
        columns=["ensemble", "t", "lhs", "rhs", "ratio", "passed", "tol"],
        rows=[row],
        meta={"dim": ens.dim, "size": ens.size},
    )


def run_frame(params: dict) -> ExperimentReport:
    grid = parse_t_grid(params["t_grid"])
    group = build_group(params["group"])
    samples = params.get("samples")
    stderr = None
    if isinstance(group, tuple):  # Monte Carlo SU(2)
        s = group[1]
        d = round(2 * s) + 1
        samples = int(samples or 100_000)
        rng = RandomSource(params.get("seed") or 0)
        gen = rng.generator()
        alpha, beta, gamma = charrb.haar_su2_angles(gen, samples)
        theta = 2 * np.arccos(
            np.clip(np.cos(beta / 2) * np.cos((alpha + gamma) / 2), -1.0, 1.0)
        )
        chi = np.abs(charrb.su2_char(s, theta))
        potentials, stderr = [], []
        for t in grid:
            x = chi ** (2 * t)
            potentials.append(float(x.mean()))
            stderr.append(float(x.std(ddof=1) / math.sqrt(samples)))
    else:
        d = group.dim
        samples = None
        potentials = [metrics.frame_potential(group, t) for t in grid]
    refs, exact = [], []
    for t in grid:
        val, flag = metrics.haar_reference_fractional(d, t)
        refs.append(val)
        exact.append(flag)
    report = metrics.FramePotentialReport(
        ensemble_id=params["group"],
        t_values=grid,
        potentials=potentials,
        references=refs,
        exact_reference=exact,
        samples=samples,
        stderr=stderr,
    )
    return ExperimentReport(
        command="frame",
        params=params,
        seed=params.get("seed"),
        columns=["t", "F", "reference", "ratio", "exactness", "samples", "stderr"],
        rows=report.rows,
        meta={"group": params["group"], "dim": d},
    )


def run_rb(params: dict) -> ExperimentReport:
    spec = params["group"]
    parts = spec.split(":")
    lengths = parse_lengths(params["lengths"]) if isinstance(params["lengths"], str) else params["lengths"]
    shots = params.get("shots") if params.get("mode", "exact") == "shots" else None
    try:
        cfg = charrb.RBConfig(
            lengths=lengths,
            sequences=int(params.get("sequences", 200)),
            shots=shots,
            seed=RandomSource(params.get("seed") or 0),
        )
        if parts[0] == "clifford" and len(parts) == 2:
            d = int(parts[1])
            group = groups.clifford_group(d)
            blocks = charrb.clifford_blocks(d)
            noise = charrb.parse_noise(params["noise"], d)
            table = charrb.clifford_character_table(d, np.stack(group.elements))
            data = charrb.rb_simulate(group, blocks, cfg, noise, char_table=table)
        elif parts[0] == "su2" and len(parts) == 2:
            s = float(parts[1])
            d = round(2 * s) + 1
            blocks = charrb.su2_blocks(s)
            noise = charrb.parse_noise(params["noise"], d)
            data = charrb.su2_rb_simulate(s, noise, cfg)
        else:
            raise UsageError(f"rb supports clifford:d or su2:S, got {spec!r}")
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(str(exc)) from exc

    rows = []
    for bi, label in enumerate(data.block_labels):
        for li, length in enumerate(data.lengths):
            rows.append(
                {
                    "block_label": label,
                    "length": length,
                    "signal": float(data.signals[bi, li]),
                    "sequences": data.sequences,
                    "shots": data.shots,
                }
            )
    report = ExperimentReport(
        command="rb",
        params=params,
        seed=params.get("seed"),
        columns=["block_label", "length", "signal", "sequences", "shots"],
        rows=rows,
        meta={"noise": params["noise"], "group": spec},
    )
    try:
        _rb_fits(report, data, blocks, noise)
    except (FitError, ValueError) as exc:
        # raw decay rows still get written; main() maps this to exit code 4
        report.meta["fit_error"] = str(exc)
    return report


def _rb_fits(report: ExperimentReport, data, blocks, noise) -> None:
    fits = {}
    for bi, label in enumerate(data.block_labels):
        fit = charrb.fit_decay(np.array(data.lengths, dtype=float), data.signals[bi])
        oracle = charrb.twirl_eigenvalue(noise, blocks[bi])
        fits[label] = {
            "amplitude": fit.amplitude,
            "rate": fit.rate,
            "residual": fit.residual,
            "covariance": fit.covariance.tolist(),
            "oracle_rate": oracle,
            "abs_rate_error": abs(fit.rate - oracle),
        }
    report.meta["fits"] = fits


def run_circuit(params: dict) -> ExperimentReport:
    d, t = int(params["d"]), int(params["t"])
    depth, samples = int(params["depth"]), int(params["samples"])
    seed = params.get("seed") or 0
    points = spin.welch_ratio_experiment(d, t, depth, samples, RandomSource(seed))
    rows = [
        {"N": n, "R_w": r, "t": t, "d": d, "depth": depth, "seed": seed, "slope": None}
        for n, r in points
    ]
    meta: dict = {"points": len(points)}
    try:
        slope = spin.loglog_slope(points, 32, samples)
        meta["slope"] = slope
        rows.append(
            {"N": samples, "R_w": None, "t": t, "d": d, "depth": depth, "seed": seed, "slope": slope}
        )
    except ValueError:
        meta["slope"] = None
    return ExperimentReport(
        command="circuit",
        params=params,
        seed=seed,
        columns=["N", "R_w", "t", "d", "depth", "seed", "slope"],
        rows=rows,
        meta=meta,
    )


def run_haar_mc(params: dict) -> ExperimentReport:
    d = int(params["d"])
    grid = parse_t_grid(params["t_grid"])
    samples = int(params["samples"])
    seed = params.get("seed") or 0
    est, err = metrics.haar_trace_moment_mc(d, np.array(grid), samples, RandomSource(seed))
    rows = []
    for i, t in enumerate(grid):
        ref, exact = metrics.haar_reference_fractional(d, t)
        dev = est[i] / ref - 1.0
        rows.append(
            {
                "t": t,
                "estimate": float(est[i]),
                "stderr": float(err[i]),
                "reference": ref,
                "exactness": "exact" if exact else "approximate",
                "rel_deviation": float(dev),
                "sigmas": float(abs(est[i] - ref) / err[i]) if err[i] > 0 else 0.0,
            }
        )
    return ExperimentReport(
        command="haar-mc",
        params=params,
        seed=seed,
        columns=["t", "estimate", "stderr", "reference", "exactness", "rel_deviation", "sigmas"],
        rows=rows,
        meta={"samples": samples, "dim": d},
    )


def run_spacing(params: dict) -> ExperimentReport:
    samples = int(params["samples"])
    seed = params.get("seed") or 0
    ks = metrics.spacing_density_test(samples, RandomSource(seed))
    crit = metrics.ks_critical_value(samples, 0.01)
    row = {
        "samples": samples,
        "ks_stat": ks,
        "critical_alpha001": crit,
        "passed": bool(ks <= crit),
    }
    return ExperimentReport(
        command="spacing",
        params=params,
        seed=seed,
        columns=["samples", "ks_stat", "critical_alpha001", "passed"],
        rows=[row],
    )


RUNNERS = {
    "welch": run_welch,
    "frame": run_frame,
    "rb": run_rb,
    "circuit": run_circuit,
    "haar-mc": run_haar_mc,
    "spacing": run_spacing,
}


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditdesigns", description="Qudit design experiments (CSV/JSON reports)."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get(DEFAULT_THREADS_ENV, "0")) or None,
            help="cap BLAS worker threads (results are thread-count independent)",
        )

    p = sub.add_parser("welch", help="Welch test of a state ensemble")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)

    p = sub.add_parser("frame", help="frame potential over a t grid")
    p.add_argument("--group", required=True)
    p.add_argument("--t-grid", dest="t_grid", required=True)
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples (su2mc only)")
    common(p)

    p = sub.add_parser("rb", help="character randomized benchmarking")
    p.add_argument("--group", required=True)
    p.add_argument("--noise", default="none")
    p.add_argument("--lengths", default="1,2,4,8,16,32")
    p.add_argument("--sequences", type=int, default=200)
    p.add_argument("--mode", choices=("exact", "shots"), default="exact")
    p.add_argument("--shots", type=int, default=500)
    common(p)

    p = sub.add_parser("circuit", help="SNAP/displacement random-circuit Welch ratios")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--samples", type=int, default=4096)
    common(p)

    p = sub.add_parser("haar-mc", help="Monte Carlo Haar trace moments")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t-grid", dest="t_grid", required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    common(p)

    p = sub.add_parser("spacing", help="U(2) eigenangle spacing KS test")
    p.add_argument("--samples", type=int, default=100_000)
    common(p)

    p = sub.add_parser("replay", help="re-run a manifest, reproducing outputs")
    p.add_argument("manifest")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None)
    return parser


_PARAM_KEYS = {
    "welch": ("ensemble", "t", "tol", "seed"),
    "frame": ("group", "t_grid", "samples", "seed"),
    "rb": ("group", "noise", "lengths", "sequences", "mode", "shots", "seed"),
    "circuit": ("d", "t", "depth", "samples", "seed"),
    "haar-mc": ("d", "t_grid", "samples", "seed"),
    "spacing": ("samples", "seed"),
}


def _emit(report: ExperimentReport, out: str | None, fmt: str, params: dict) -> None:
    text = report.csv_text() if fmt == "csv" else report.json_text()
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    manifest = RunManifest(
        command=report.command,
        params=params,
        seed=params.get("seed"),
        outputs=[str(path)],
    )
    Path(str(path) + ".manifest.json").write_text(manifest.json_text())


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "replay":
        try:
            manifest = RunManifest.from_json(Path(args.manifest).read_text())
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return 2
        command, params = manifest.command, manifest.params
        out, fmt = args.out, args.format
        threads = args.threads
    else:
        command = args.command
        params = {k: getattr(args, k) for k in _PARAM_KEYS[command]}
        out, fmt = args.out, args.format
        threads = args.threads

    runner = RUNNERS.get(command)
    if runner is None:
        print(f"error: unknown command {command!r} in manifest", file=sys.stderr)
        return 2

    started = utc_now()
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=threads):
                report = runner(params)
        else:
            report = runner(params)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return 4
    report.started = started
    report.finished = utc_now()
    _emit(report, out, fmt, params)
    if report.meta.get("fit_error"):
        print(f"fit failure: {report.meta['fit_error']}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
