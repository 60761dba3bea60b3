"""Numerical toolkit for identification over quantum channels.

Submodules: ``qmat`` (states and matrices), ``channels`` (cptp maps),
``entropy``, ``capacity`` (single-letter optimizers), ``idcodes``,
``decoupling``, ``chernoff`` and ``cli``.
"""

__version__ = "0.1.0"
