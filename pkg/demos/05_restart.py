"""Resuming from a checkpoint.

Any accepted state can seed a new run.  Carrying the energy reference and
the accumulated slack along makes the resumed ledger identical to the
unbroken one.
"""

from compdamage import checkpoint_restart, run
from compdamage.fixtures import smooth_config

cfg = smooth_config(0.05, n=6, T=0.6)
res = run(cfg, write=False)
split = res.states[len(res.states) // 2].t

rep = checkpoint_restart(res.states, split, cfg, ledger=res.ledger)
worst = max(rep.column_deviation.values())
print(f"split at t = {rep.t_split:.4f} (step {rep.split_index}), {rep.n_rows} steps replayed")
print(f"largest ledger deviation {worst:.1e}, field deviation {rep.field_deviation:.1e}")
print("restart reproduces the run" if rep.ok else "restart deviates")
