"""Construction and verification of qudit state/unitary designs.

Subpackages cover dense linear algebra and Haar sampling (``linalg``),
finite unitary groups and qudit Cliffords (``groups``), frame potentials
and Welch tests (``metrics``), explicit design constructions
(``constructions``), spin/SNAP circuits (``spin``), character randomized
benchmarking (``charrb``), and a CSV/JSON experiment CLI (``cli``).
"""

__version__ = "0.1.0"
