"""Loss of support and the energy released by it.

Two blocks are separated by a broken slit.  The right block hangs on a
strip of weak "glue" at its clamped edge.  When the glue is fully damaged
the block is cut off from the support, its stored elastic energy is
released at once and recorded as a jump.
"""

from compdamage import fineness_report, run
from compdamage.fixtures import bridge_config

cfg = bridge_config()
res = run(cfg, write=False)

# %% The jump log
for ev in res.jumps:
    print(f"t = {ev.time:.4f}: {len(ev.excluded_elements)} elements excluded, released energy {ev.jump_energy:.5f}")

# %% Active elements over time
for st in res.states[:: max(1, len(res.states) // 8)]:
    print(f"t = {st.t:.3f}  active elements {st.F.n_active}")

# %% Set comparison between the tracked region and the one rebuilt from damage
fin = fineness_report(res.states, res.jumps, cfg.eta_fineness, cfg.theta_z)
print(f"region consistency: {'ok' if fin.ok else 'violated'} ({fin.note})")
