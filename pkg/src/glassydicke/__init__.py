"""Disordered Dicke model: exact enumeration, replica-symmetric phase diagrams, Monte Carlo."""

import os

# The bundled workqueue layer is always available; probing for TBB on systems
# with an old TBB only produces a warning.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

__version__ = "0.1.0"
