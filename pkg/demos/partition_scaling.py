"""How the Whitney partition's derivatives scale with cube size.

Builds the decomposition for a pair of points 2^-10 apart and prints, per
level, the largest first and second derivative of the partition functions
multiplied by side^|beta|, for the tight 65/64 dilation and for 1.5.
Bounded columns mean the expected scaling; the constants show why the
interpolation pipeline defaults to the wider collars.
"""
import numpy as np

from nonneg_whitney import smoothfn as sf
from nonneg_whitney.czdecomp import cz_decompose, padded_region

m = 2
E = np.array([[0.3], [0.3 + 2.0 ** -10], [1.2]])
dec = cz_decompose(E, padded_region(E, n=1))
for dilation in (65 / 64, 1.5):
    part = sf.whitney_partition(dec, m, dilation=dilation)
    rows = {}
    for i, q in enumerate(dec.cubes):
        lo, hi = part.support_lo[i, 0], part.support_hi[i, 0]
        Y = np.linspace(lo, hi, 2001)[:, None]
        d = np.abs(part.member(i).derivs(Y, m)).max(axis=0)
        best = rows.get(q.level, np.zeros(m))
        rows[q.level] = np.maximum(best, [d[k] * q.side ** k for k in range(1, m + 1)])
    print(f"\ndilation {dilation:.4f}")
    print("level    sup|theta'|*side   sup|theta''|*side^2")
    for level in sorted(rows):
        a, b = rows[level]
        print(f"{level:5d}    {a:16.3f}   {b:19.3f}")
