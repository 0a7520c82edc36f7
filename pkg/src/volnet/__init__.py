"""volnet: volatility modeling with institutional-response dynamics and
cross-market spillover networks.

Submodules: timeseries (ingestion/alignment), garch (asymmetric GARCH MLE),
shocks (policy/information/crisis-memory/realized-vol construction), midas
(monthly-to-daily index), irdm and nirdm (institutional-response variance
models), networks (DCC correlation and similarity networks), panel
(interaction regression), evaluate (model comparison and forecast tests),
simgen (known-truth synthetic panels), pipeline/cli (the runner).
"""

__version__ = "0.1.0"
