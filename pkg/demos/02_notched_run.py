"""A quasi-static run with an energy ledger.

A square with a weakened notch is stretched along x.  Damage grows from
the notch; each accepted step records stored energy, dissipation and the
work of the boundary load, and the run is audited step by step.
"""

import sys
from pathlib import Path

from compdamage import run, verify_ledger
from compdamage.energy import cumulative_slack
from compdamage.fixtures import notched_square_config

# %% Configuration: half the final time keeps the demo short
cfg = notched_square_config(T=0.5)
cfg.output = Path(sys.argv[1]) if len(sys.argv) > 1 else None
res = run(cfg, write=cfg.output is not None)

# %% Ledger summary
first, last = res.ledger[0], res.ledger[-1]
print(f"{len(res.ledger) - 1} accepted steps, {len(res.jumps)} exclusions")
print(f"energy {first.E_total:.5f} -> {last.E_total:.5f}")
print(f"total dissipation {sum(r.diss_inc for r in res.ledger):.5f}, work {sum(r.work_inc for r in res.ledger):.5f}")
print(f"cumulative slack {cumulative_slack(res.ledger):.3e}")
print(f"minimum damage {res.states[-1].z.min():.4f}")

# %% Re-audit the ledger from its rows alone
rep = verify_ledger(res.ledger)
print("ledger verified" if rep.ok else "ledger FAILED: " + "; ".join(rep.problems))
