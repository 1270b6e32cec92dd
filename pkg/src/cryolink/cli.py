"""Command-line front end.

Exit codes: 0 success, 2 input or validation error, 3 numerical
non-convergence.  All outputs of a command are computed before anything is
written, and every file is written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, CryolinkError, DomainError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3

QUADRATURE_NAMES = ("I1", "Q1", "I2", "Q2")


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    output_paths: list[str]
    seed: int | None
    tool_version: str = __version__
    timestamp: str = ""
    extra: dict = field(default_factory=dict)


def _timestamp(args) -> str:
    if getattr(args, "timestamp", None):
        return args.timestamp
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def _manifest(args, command, config_path, outputs, seed=None, **extra) -> dict:
    m = RunManifest(command, None if config_path is None else str(config_path), [str(p) for p in outputs], seed,
                    timestamp=_timestamp(args), extra=extra)
    return asdict(m)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(outputs: dict[Path, str]):
    """Write every ``path -> text`` pair via a temporary file and rename."""
    for path in outputs:
        path.parent.mkdir(parents=True, exist_ok=True)
    for path, text in outputs.items():
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _g(x: float) -> str:
    return f"{x:.9g}"


def resolve_config(name_or_path: str) -> Path:
    """A filesystem path, or the name of a shipped config such as ``base_temperature``."""
    path = Path(name_or_path)
    if path.exists() or path.suffix:
        return path
    from .config import shipped_config_path

    try:
        return shipped_config_path(name_or_path)
    except FileNotFoundError:
        return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# -- thresholds ------------------------------------------------------------------


def cmd_thresholds(args) -> int:
    from . import thermal

    if not np.isfinite(args.freq_ghz) or args.freq_ghz <= 0:
        raise DomainError(f"--freq-ghz must be positive, got {args.freq_ghz}")
    f = args.freq_ghz * 1e9
    t_kappa = thermal.threshold_kappa(f)
    t0 = float(thermal.quantum_temperature(f))
    rows = [
        ("frequency_GHz", _g(args.freq_ghz)),
        ("T_kappa_mK", _g(t_kappa * 1e3)),
        ("T_kappa_ratio", _g(t_kappa / t0)),
        ("T_cr_mK", _g(thermal.crossover_temperature(f) * 1e3)),
        ("T_sudden_death_mK", _g(thermal.sudden_death_temperature(f) * 1e3)),
        ("T_ln3_bound_mK", _g(thermal.max_input_temperature_for_squeezing(f) * 1e3)),
    ]
    for t in args.at_kelvin or []:
        if t < 0:
            raise DomainError(f"--at-kelvin values must be >= 0, got {t}")
        rows.append((f"n_th_at_{_g(t)}K", _g(thermal.planck_occupation(f, t))))
    text = _csv(("quantity", "value"), rows)
    if args.out:
        write_atomic({Path(args.out): text})
    sys.stdout.write(text)
    return EXIT_OK


# -- transfer --------------------------------------------------------------------


def _cov_entries(cov) -> dict[str, float]:
    out = {}
    for i in range(4):
        for j in range(i, 4):
            out[f"cov_{QUADRATURE_NAMES[i]}_{QUADRATURE_NAMES[j]}"] = float(cov[i, j])
    return out


def _tomography(result, count: int, seed: int) -> dict:
    """Emulated heterodyne tomography of the last tap from ``count`` samples.

    Finite statistics can push the reconstructed covariance of a nearly pure
    state across the uncertainty bound; such estimates are reported with
    ``physical: false`` and without state-derived metrics.
    """
    from .errors import InvalidStateError
    from .gaussian import GaussianState, fourth_cumulants, moments_to_covariance, sample_quadratures
    from .metrics import metric_report

    if count < 1:
        raise DomainError(f"--samples must be positive, got {count}")
    tap = list(result.states)[-1]
    samples = sample_quadratures(result.states[tap], count, seed)
    mean, cov = moments_to_covariance(samples)
    out = {
        "tap": tap,
        "samples": count,
        "covariance": cov.tolist(),
        "max_abs_fourth_cumulant": max(abs(v) for v in fourth_cumulants(samples).values()),
    }
    try:
        report = metric_report(GaussianState(mean, cov))
    except InvalidStateError:
        out["physical"] = False
        return out
    out.update(physical=True, squeezing_dB=list(report.squeezing_db), negativity=report.negativity)
    return out


def cmd_transfer(args) -> int:
    from .config import load_experiment
    from .network import run_transfer

    args.config = str(resolve_config(args.config))
    config = load_experiment(args.config)
    result = run_transfer(config)
    out_dir = Path(args.out_dir)
    json_path, csv_path = out_dir / "transfer.json", out_dir / "transfer.csv"

    taps = {}
    rows = []
    for tap, rep in result.reports.items():
        cov = result.states[tap].covariance
        entry = {
            "squeezing_dB": list(rep.squeezing_db),
            "purity": rep.purity,
            "mode_purity": list(rep.mode_purity),
            "symplectic_eigenvalues": list(rep.symplectic_eigenvalues),
            "pt_symplectic_min": rep.pt_symplectic_min,
            "negativity": rep.negativity,
            "covariance": cov.tolist(),
        }
        taps[tap] = entry
        covs = _cov_entries(cov)
        rows.append([tap, *(_g(v) for v in (*rep.squeezing_db, rep.purity, *rep.mode_purity, rep.negativity)),
                     *(_g(v) for v in covs.values())])
    header = ["tap", "s_mode0_dB", "s_mode1_dB", "purity", "purity_mode0", "purity_mode1", "negativity",
              *_cov_entries(np.zeros((4, 4))).keys()]

    doc = {"taps": taps}
    if args.samples:
        doc["tomography"] = _tomography(result, args.samples, args.seed)
    doc["manifest"] = _manifest(args, "transfer", args.config, [json_path, csv_path],
                                seed=args.seed if args.samples else None)
    write_atomic({json_path: _dumps(doc), csv_path: _csv(header, rows)})
    return EXIT_OK


# -- sweep -------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    from .config import load_experiment
    from .network import sweep_center_temperature

    args.config = str(resolve_config(args.config))
    config = load_experiment(args.config)
    values = args.t_kelvin
    if values is not None and len(values) == 0:
        raise DomainError("--t-kelvin needs at least one temperature")
    result = sweep_center_temperature(config, values, mode=args.mode, workers=args.workers)
    out = Path(args.out)
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest = _manifest(args, "sweep", args.config, [out, manifest_path],
                         mode=args.mode or (config.sweep.mode if config.sweep else "center_only"))
    write_atomic({out: result.to_csv(), manifest_path: _dumps({"manifest": manifest})})
    return EXIT_OK


# -- heat --------------------------------------------------------------------------


def cmd_heat(args) -> int:
    from dataclasses import replace

    from .config import heat_model, load_document
    from .heatprofile import solve_profile

    args.config = str(resolve_config(args.config))
    model = heat_model(load_document(args.config))
    if args.grid_points is not None:
        if args.grid_points < 3:
            raise DomainError("--grid-points must be >= 3")
        model = replace(model, grid_points=args.grid_points)
    profile = solve_profile(model)
    out = Path(args.out)
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest = _manifest(args, "heat", args.config, [out, manifest_path],
                         iterations=profile.iterations, center_temperature_K=profile.center_temperature)
    write_atomic({out: profile.to_csv(), manifest_path: _dumps({"manifest": manifest})})
    return EXIT_OK


# -- fit ---------------------------------------------------------------------------


def read_two_columns(path) -> tuple[np.ndarray, np.ndarray]:
    """Numeric ``(T_center, T_measured)`` pairs; ``#`` starts a comment line."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None
    xs, ys = [], []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.replace(",", " ").split()
        try:
            if len(parts) != 2:
                raise ValueError
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise DomainError(f"{path}:{lineno}: expected two numeric columns, got {stripped!r}") from None
        xs.append(x)
        ys.append(y)
    return np.array(xs), np.array(ys)


def cmd_fit(args) -> int:
    from .heatprofile import fit_response

    t, y = read_two_columns(args.data)
    fit = fit_response(t, y)
    out = Path(args.out)
    doc = {"a": fit.a, "b": fit.b, "c": fit.c, "residual": fit.residual,
           "manifest": _manifest(args, "fit", args.data, [out], points=int(t.size))}
    write_atomic({out: _dumps(doc)})
    sys.stdout.write(_dumps({k: doc[k] for k in ("a", "b", "c", "residual")}))
    return EXIT_OK


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cryolink", description="Microwave cryolink quantum channel simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--timestamp", help="manifest timestamp (default: current UTC time)")

    p = sub.add_parser("thresholds", help="Planck thresholds at a signal frequency")
    p.add_argument("--freq-ghz", type=float, required=True)
    p.add_argument("--at-kelvin", type=float, nargs="*", help="also report n_th at these temperatures")
    p.add_argument("--out", help="also write the table to this CSV file")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("transfer", help="propagate the base-point state through the transfer chain")
    p.add_argument("config", help="config file or shipped config name")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--samples", type=int, default=0, help="emulate tomography with this many samples")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("sweep", help="sweep the cable center temperature")
    p.add_argument("config", help="config file or shipped config name")
    p.add_argument("--t-kelvin", type=float, nargs="*", help="center temperatures (default: from config)")
    p.add_argument("--mode", choices=("full_heating", "center_only"))
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("heat", help="solve the cable temperature profile")
    p.add_argument("config", help="config file or shipped config name")
    p.add_argument("--out", default="profile.csv")
    p.add_argument("--grid-points", type=int)
    common(p)
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("fit", help="fit the sigmoid-smoothed piecewise-linear temperature response")
    p.add_argument("data")
    p.add_argument("--out", default="fit.json")
    common(p)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        detail = f" after {exc.iterations} iterations" if exc.iterations is not None else ""
        print(f"error: {exc}{detail}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except CryolinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
