"""Factor and stock momentum research engine.

Submodules: ``panel`` (return panels, CSV I/O), ``riskpipe`` (beta-hedge,
vol targeting, menagerie), ``momentum`` (signals, rank/sign strategies,
(m, n) grids), ``analytics`` (Sharpe/t stats, spanning regressions, AR(1)
momentum decomposition), ``model`` (feedback-trading simulator with
closed-form oracles) and ``cli``.
"""

from . import analytics, cli, model, momentum, panel, riskpipe

__all__ = ["analytics", "cli", "model", "momentum", "panel", "riskpipe"]
__version__ = "0.1.0"
