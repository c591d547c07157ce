"""Link-level Monte Carlo simulator for relay-assisted OFDM with index modulation."""

__version__ = "0.1.0"
