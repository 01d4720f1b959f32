"""lumenwave: a deterministic CPU light transport renderer.

Two-way path tracing with hierarchical light and environment importance
sampling, a wavefront sample-state engine with a megakernel fallback, a
simulated multi-device scheduler, and light-path-expression output layers,
all driven by scrambled-Halton quasi-Monte Carlo sampling.
"""

__version__ = "0.1.0"
