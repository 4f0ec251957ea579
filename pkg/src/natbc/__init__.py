"""Natural boundary conditions for variational problems with free boundary values.

Subpackages and modules:

- ``natbc.jet``: jet-space expressions, parsing, total derivatives, Lagrangians.
- ``natbc.variational``: Euler-Lagrange and relative Euler operators, natural boundary conditions.
- ``natbc.contact``: point transformations, their first-order lift, transversality on curved boundaries.
- ``natbc.solver``: sliding-endpoint minimization in 1D and soap-film relaxation in a pipe.
- ``natbc.cli``: the ``natbc`` command.
"""

__version__ = "0.1.0"
