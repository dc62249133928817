"""Config-driven command line front end.

Subcommands mirror the experiment families: ``evolve`` runs protocol
comparisons over a disorder ensemble, ``spectrum`` computes level
statistics and the ground-state charge census, ``overlap`` the
eigenstate-overlap histograms. Results are CSV files plus a JSON sidecar
carrying the resolved config, so a run can be reproduced by feeding the
sidecar back in as the config.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import spectrum_statistics
from .ensemble import EnsembleSpec, ProtocolSpec, StageSpec, run_ensemble

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(x) -> str:
    """Serialize a number with 17 significant digits (lossless doubles)."""
    if isinstance(x, (int,)):
        return str(x)
    return format(float(x), ".17g")


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_csv(path: str, header: list[str], rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_sidecar(path: str, cfg: ExperimentConfig, command: str, wall_time: float):
    payload = cfg.resolved()
    payload["meta"] = {
        "command": command,
        "seed": cfg.ensemble["master_seed"],
        "git_describe": _git_describe(),
        "wall_time_seconds": wall_time,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _series_rows(series):
    if series.observable == "pe":
        header = ["bin_center", "weight_mean", "weight_stderr"]
        rows = zip(series.times, series.mean, series.stderr)
    else:
        header = ["time", "mean", "stderr", "n"]
        rows = (
            (t, m, e, series.n_realizations)
            for t, m, e in zip(series.times, series.mean, series.stderr)
        )
    return header, rows


def cmd_evolve(cfg: ExperimentConfig, out_dir: str, threads: int) -> int:
    start = time.time()
    series = run_ensemble(cfg.ensemble_spec(), threads=threads)
    os.makedirs(out_dir, exist_ok=True)
    for s in series:
        header, rows = _series_rows(s)
        _write_csv(os.path.join(out_dir, f"{s.observable}_{s.protocol}.csv"), header, rows)
    _write_sidecar(os.path.join(out_dir, "run.json"), cfg, "evolve", time.time() - start)
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig, out_dir: str, threads: int) -> int:
    if cfg.model["gamma_sym"] != 1.0:
        raise ConfigError("spectrum requires model.gamma_sym = 1")
    start = time.time()
    stats = spectrum_statistics(
        cfg.model_params(gamma=1.0),
        cfg.ensemble["n_realizations"],
        cfg.ensemble["master_seed"],
    )
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "r_stats.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {
                "r_mean": stats["r_mean"],
                "r_stderr": stats["r_stderr"],
                "n_realizations": stats["n_realizations"],
                "skipped_degenerate": stats["skipped_degenerate"],
                "reliable": stats["reliable"],
            },
            fh, indent=2,
        )
        fh.write("\n")
    _write_csv(
        os.path.join(out_dir, "census.csv"),
        ["Q", "N_Q"],
        sorted(stats["census"].items()),
    )
    _write_sidecar(os.path.join(out_dir, "run.json"), cfg, "spectrum", time.time() - start)
    return EXIT_OK


def cmd_overlap(cfg: ExperimentConfig, out_dir: str, threads: int) -> int:
    start = time.time()
    spec = EnsembleSpec(
        model=cfg.model_params(gamma=cfg.model["gamma_sym"]),
        state_kind=cfg.state["kind"],
        theta_over_pi=cfg.state["theta_over_pi"],
        protocols=(
            ProtocolSpec("sym", (StageSpec(cfg.model["gamma_sym"], 0.0, "imaginary"),)),
            ProtocolSpec("asym", (StageSpec(cfg.model["gamma_asym"], 0.0, "imaginary"),)),
        ),
        grid=(0.0,),
        observables=("pe",),
        pe_bins=cfg.observe["pe_bins"],
        n_realizations=cfg.ensemble["n_realizations"],
        master_seed=cfg.ensemble["master_seed"],
    )
    series = run_ensemble(spec, threads=threads)
    os.makedirs(out_dir, exist_ok=True)
    for s in series:
        header, rows = _series_rows(s)
        _write_csv(os.path.join(out_dir, f"pe_{s.protocol}.csv"), header, rows)
    _write_sidecar(os.path.join(out_dir, "run.json"), cfg, "overlap", time.time() - start)
    return EXIT_OK


_COMMANDS = {"evolve": cmd_evolve, "spectrum": cmd_spectrum, "overlap": cmd_overlap}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpme",
        description="Exact-diagonalization simulator for quantum Pontus-Mpemba protocols",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("evolve", "run evolution protocols over a disorder ensemble"),
        ("spectrum", "level statistics and ground-state charge census"),
        ("overlap", "eigenstate-overlap histograms for H_sym and H_asym"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default: config output.directory)")
        p.add_argument("--threads", type=int, default=None,
                       help="realization-parallel workers (default: QPME_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("QPME_THREADS", "1"))
    try:
        cfg = load_config(args.config)
        out_dir = args.out if args.out is not None else cfg.output["directory"]
        return _COMMANDS[args.command](cfg, out_dir, max(1, threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
