"""SM-MC Simulator.

Link-level symbol error rate analysis and Monte-Carlo simulation for
spatial-modulation molecular communication and its SSK, MIMO-OOK and
SISO-CSK baselines.
"""

__version__ = "0.1.0"
