"""Risk-informed decision support for populations of monitored structures.

Subpackages by concern: `pgm` (discrete Bayesian networks, exact inference),
`fault_tree` (failure-mode DSL and compilation into network fragments),
`hierarchy` (the S1-S6 population tree, availability failure modes, transfer
gating), `decision` (the one-slice maintenance decision process and rolling
horizon), `voi` (value of observation / transfer / run-to-failure data),
`sim` (the seeded ground-truth simulator), `scenario` (configuration files),
`cli` and `service` (command line and HTTP front doors).
"""

__version__ = "0.1.0"
