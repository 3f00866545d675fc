"""Operator-network surrogates for brittle fracture and Darcy flow.

Subpackages:

* :mod:`vdeeponet.autodiff` -- reverse-mode differentiation engine
* :mod:`vdeeponet.network` -- tanh MLPs, Glorot init, Adam
* :mod:`vdeeponet.phasefield` -- fracture physics and energy densities
* :mod:`vdeeponet.deeponet` -- branch/trunk operator, lifting, hybrid loss
* :mod:`vdeeponet.surrogate` -- dataset layouts, training, rollout
* :mod:`vdeeponet.oracle` -- finite-difference ground-truth generators
* :mod:`vdeeponet.darcy` -- conductivity sampling and label-free training
* :mod:`vdeeponet.cli` -- command-line entry points
"""

__version__ = "0.1.0"
