"""Behavioral simulator for polymorphic electro-optic computing.

Submodules
----------
unary        correlated unary bit-stream encodings and bit-wise algebra
device       MRR logic gate, photo-charge accumulator, nonlinear MRR node
pbau         polymorphic binary arithmetic unit with cost accounting
link_budget  photonic link noise/power model and max-N search
ceona        CoPU/CoPE functional and performance model
dfrc         delay-feedback reservoir engine and benchmark tasks
cli          command-line entry point
"""

__version__ = "0.1.0"
