"""Intent-driven network operations: simulated 5G core, analytics pipeline,
tool gateway, and a safety-gated agent loop, plus the operator surfaces."""

__version__ = "0.1.0"
