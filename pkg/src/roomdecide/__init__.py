"""Room-level heating decisions under uncertain outside temperature.

Agents controlling rooms ask a shared pronouncer for advice; the pronouncer
evaluates template influence diagrams by compiling them to decision trees.
"""
__version__ = "0.1.0"
