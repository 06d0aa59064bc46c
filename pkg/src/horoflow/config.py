"""Central tolerance record shared by every module."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    group: float = 1e-9            # ||g^T J g - J||_F for membership
    roundtrip: float = 1e-10       # Bruhat / P^- recomposition
    kak: float = 1e-9
    bruhat_cell: float = 1e-10     # |g[0,0]| above this -> big cell
    bruhat_floor: float = 1e-12    # below this -> w-cell without complaint
    weight_block: float = 1e-10    # relative norm for "q_mu(v) != 0"
    probe_floor: float = 1e-14
    normalizer: float = 1e-10
    derivative_floor: float = 1e-12
    containment: float = 1e-8      # sphere/affine residual for "lies in"
    rolle_slack: float = 1e-9
    sg_kernel: float = 1e-8
    mobius_det: float = 1e-10
    fundamental_domain: float = 1e-9


TOL = Tolerances()
