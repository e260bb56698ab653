"""Level step of the scanner, compiled when available.

``advance(A, B, V, var, mean, rows, center, A_next=None, B_next=None)``
takes the first ``rows`` parent pairs of a level.  Row ``i`` of ``A``/``B``
holds the numerators of the two parent measures of one node, column ``j``
standing for offset ``j - center``.  For each row it forms the node's
measure ``P[j] = A[j+1] + B[j-1]`` and writes

* ``V[i]``    = sum of ``P`` over offsets >= 0,
* ``var[i]``  = sum of ``d**2 P(d)``,
* ``mean[i]`` = sum of ``d P(d)`` (zero for a correct run).

If ``A_next``/``B_next`` are given, rows ``2i`` and ``2i+1`` receive the
pairs of the L and R children: ``(P, 2B)`` and ``(2A, P)``.

Set ``CUSICKWALK_KERNEL=python`` to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
advance = _kernels_py.advance

if os.environ.get("CUSICKWALK_KERNEL", "").lower() != "python":
    try:
        from ._kernels import advance  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

python_advance = _kernels_py.advance
