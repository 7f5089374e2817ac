"""What happens as the residual stiffness vanishes.

Fully damaged material keeps a stiffness epsilon so that the equilibrium
problem stays solvable.  On a body with a z = 0 strip, the energy stored in
the strip decays linearly in epsilon while the strain in the intact part
stays bounded.  On a body with an unsupported island, the recovery-sequence
probe converges to the energy of the truncated damage field.
"""

import numpy as np

from compdamage import gamma_probe, maximal_admissible, reduced_energy, superlevel_region, truncate_field
from compdamage.driver import epsilon_continuation, initial_state
from compdamage.fixtures import strip_fixture, two_component_fixture

cfg, z = strip_fixture()
frozen = initial_state(cfg).with_(z=z)

# %% Continuation in epsilon on frozen damage
rep = epsilon_continuation(cfg, frozen)
for e, en, ze in zip(rep.epsilons, rep.energies, rep.zero_set_energies):
    print(f"epsilon {e:.0e}  energy {en:.8f}  energy in z = 0 set {ze:.3e}")
print(f"log-log slope of the zero-set energy: {rep.zero_set_slope:.3f}")
print(f"strain norm ratio across the schedule: {rep.strain_ratio:.3f}")

# %% Recovery sequence: shift damage by delta, lower epsilon together
cfg, z = two_component_fixture()
b = cfg.program.values(cfg.mesh, 0.0)
probe = gamma_probe(cfg.mesh, b, z, cfg.material, cfg.probe_epsilon, cfg.probe_delta)
print("probe values:", np.array2string(np.array(probe.values), precision=8))
zt = truncate_field(z, maximal_admissible(cfg.mesh, superlevel_region(cfg.mesh, z)))
ref = reduced_energy(cfg.mesh, b, zt, cfg.probe_epsilon[-1], cfg.material)
print(f"limit estimate {probe.estimate:.8f}, energy of the truncated field {ref:.8f}")
