"""Nonnegative C^m and C^(m-1,1) interpolation of finite data via jets.

Modules
-------
jets         polynomial jets, truncated products, re-expansion
whitney      Whitney fields and their homogeneous seminorm
gamma        membership tests for the admissible jet sets
czdecomp     dyadic cubes and the Calderon-Zygmund decomposition
smoothfn     evaluable functions with exact derivatives, bumps, partitions of unity
extension    local extensions, patching, gluing, end-to-end interpolation
feasibility  jet-field linear programs, minimal norms, finiteness and Helly experiments
cli          command-line entry point
"""
from .jets import (Jet, JetMismatchError, jet_embed, jet_multiply, jet_project, jet_rebase,
                   jet_taylor, jet_translate, multi_indices)
from .whitney import WhitneyField, seminorm, taylor_compat_check
from .gamma import (GammaConfig, MembershipVerdict, bk_sequence, gamma0plus_member,
                    gamma_prime_member, gamma_tilde0_member, minimal_scale)
from .czdecomp import (CZDecomposition, DyadicCube, classify_and_anchor, cz_decompose, is_ok,
                       padded_region)
from .smoothfn import FunctionHandle, build_bumps, unit_partition, whitney_partition
from .extension import (GridConfig, PreconditionError, extend_jet_cm, extend_jet_cm1, glue_cz,
                        interpolate_nonneg, patch_pair, verify_interpolant)
from .feasibility import (FeasibilityConfig, finiteness_gap, helly_check, min_norm,
                          whitney_feasible)

__version__ = "0.1.0"
