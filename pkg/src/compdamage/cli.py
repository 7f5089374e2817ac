"""Command line entry point: ``python -m compdamage <command> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="BLAS/OpenMP thread count")
    common.add_argument("--output", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="compdamage", parents=[common],
                                description="Quasi-static complete damage with material exclusion.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="integrate a configuration to its final time")
    r.add_argument("--config", type=Path, required=True)
    g = sub.add_parser("probe-gamma", parents=[common], help="recovery-sequence energies for a snapshot")
    g.add_argument("--config", type=Path, required=True)
    g.add_argument("--state", type=Path, required=True)
    c = sub.add_parser("continuation", parents=[common], help="epsilon continuation on a frozen snapshot")
    c.add_argument("--config", type=Path, required=True)
    c.add_argument("--state", type=Path, required=True)
    v = sub.add_parser("verify", parents=[common], help="re-audit a ledger file")
    v.add_argument("--ledger", type=Path, required=True)
    return p


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows([repr(v) if isinstance(v, float) else v for v in row] for row in rows)


def _run(args) -> int:
    from .driver import load_config, run
    from .energy import cumulative_slack
    from .errors import StepUnderflow

    cfg = load_config(args.config, output=getattr(args, "output", None))
    if cfg.output is None:
        cfg.output = Path("output")
    try:
        res = run(cfg)
    except StepUnderflow as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        print(f"partial trajectory written to {cfg.output}", file=sys.stderr)
        return 3
    last = res.ledger[-1]
    print(f"steps {len(res.ledger) - 1}  jumps {len(res.jumps)}  final energy {last.E_total:.6g}  "
          f"cumulative slack {cumulative_slack(res.ledger):.3e}")
    print(f"wrote {cfg.output / 'ledger.csv'}, {cfg.output / 'jumps.log'} and {len(res.states)} snapshots")
    return 0


def _probe(args) -> int:
    from .driver import load_config
    from .energy import gamma_probe
    from .state import read_snapshot

    cfg = load_config(args.config, output=getattr(args, "output", None))
    state = read_snapshot(args.state, cfg.mesh, cfg.theta_z)
    b = cfg.program.values(cfg.mesh, state.t)
    rep = gamma_probe(cfg.mesh, b, state.z, cfg.material, cfg.probe_epsilon, cfg.probe_delta)
    rows = list(zip(rep.epsilons, rep.deltas, rep.values))
    for e, d, v in rows:
        print(f"epsilon {e:.3e}  delta {d:.3e}  energy {v:.12g}")
    print(f"limit estimate {rep.estimate:.12g}  monotonicity defect {rep.monotonicity_defect:.3e}")
    if cfg.output is not None:
        _write_rows(cfg.output / "gamma_probe.csv", ("epsilon", "delta", "energy"), rows)
    return 0


def _continuation(args) -> int:
    from .driver import epsilon_continuation, load_config
    from .state import read_snapshot

    cfg = load_config(args.config, output=getattr(args, "output", None))
    state = read_snapshot(args.state, cfg.mesh, cfg.theta_z)
    rep = epsilon_continuation(cfg, state)
    rows = list(zip(rep.epsilons, rep.energies, rep.zero_set_energies, rep.truncated_strain_norms))
    for e, en, ze, sn in rows:
        print(f"epsilon {e:.3e}  energy {en:.12g}  zero-set energy {ze:.6e}  strain norm {sn:.6g}")
    print(f"strain ratio {rep.strain_ratio:.4f}  monotonicity defect {rep.monotonicity_defect:.3e}  "
          f"zero-set slope {rep.zero_set_slope:.4f}")
    if rep.admissible_energy is not None:
        print(f"energy on the Dirichlet-connected region at epsilon = 0: {rep.admissible_energy:.12g}")
    if cfg.output is not None:
        _write_rows(cfg.output / "continuation.csv",
                    ("epsilon", "energy", "zero_set_energy", "truncated_strain_norm"), rows)
    return 0


def _verify(args) -> int:
    from .energy import read_ledger, verify_ledger

    rep = verify_ledger(read_ledger(args.ledger))
    print(f"{'OK' if rep.ok else 'FAILED'}  min slack {rep.min_slack:.3e}  cumulative slack "
          f"{rep.cumulative_slack:.3e}  tolerance {rep.tolerance:.1e}")
    for msg in rep.problems:
        print(f"  {msg}")
    return 0 if rep.ok else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    threads = getattr(args, "threads", None)
    if threads is not None:
        if threads < 1:
            print("--threads must be >= 1", file=sys.stderr)
            return 2
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from threadpoolctl import threadpool_limits

    from .errors import ConfigError, MeshFormatError, MeshInvariantError

    handlers = {"run": _run, "probe-gamma": _probe, "continuation": _continuation, "verify": _verify}
    try:
        with threadpool_limits(limits=threads):
            return handlers[args.command](args)
    except (ConfigError, MeshFormatError, MeshInvariantError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
