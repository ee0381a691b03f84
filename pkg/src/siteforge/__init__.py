"""Site layout generation toolkit.

Synthesizes tile-grid site layouts with a constraint solver, searches the
space of solver genomes with an elite-archive optimizer to build diverse
high-performing datasets, trains a prompt-conditioned autoregressive tile
model on those datasets, and turns attribute prompts into constraint-valid
detailed layouts.
"""

__version__ = "0.1.0"
