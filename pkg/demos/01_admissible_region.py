"""Which parts of a damaged body can still carry load.

Material only takes part in the mechanics while it is connected, through
cells with positive damage variable, to a clamped edge.  This script builds
a square clamped on the left, cuts it with a fully damaged moat, and shows
the island on the other side dropping out.
"""

import numpy as np

from compdamage import maximal_admissible, superlevel_region, truncate_field
from compdamage.admissible import component_labels
from compdamage.fixtures import two_component_fixture

# %% A square with a moat of z = 0 two node columns wide
cfg, z = two_component_fixture(n=8, island_value=0.6)
mesh = cfg.mesh
print(f"{mesh.n_nodes} nodes, {mesh.n_elements} triangles")

# %% Elements whose nodal damage stays above the threshold
positive = superlevel_region(mesh, z)
labels = component_labels(mesh, positive)
print(f"elements with z > 0: {positive.sum()} in {len(np.unique(labels[positive]))} components")

# %% Keep only the components that touch a Dirichlet edge
F = maximal_admissible(mesh, positive)
print(f"admissible elements: {F.n_active}")
print(f"island elements excluded: {int(positive.sum() - F.n_active)}")

# %% The damage field is truncated to zero outside the admissible region
zt = truncate_field(z, F)
print(f"max z on the island before {z[mesh.nodes[:, 0] > 0.8].max():.2f}, after {zt[mesh.nodes[:, 0] > 0.8].max():.2f}")
assert np.all(zt <= z)
