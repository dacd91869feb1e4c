"""xshark: record-and-replay performance analysis for a toy ML accelerator.

A reference ISA simulator with a performance tracker, a step-debugger-driven
execution recorder, a trace replayer, and analyzers that classify DMA
stalls, measure cycle-granular unit and scratchpad utilization, build
dependency graphs and verify suggested instruction reorderings by
re-simulation.
"""

__version__ = "0.1.0"
