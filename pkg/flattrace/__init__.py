"""Translation surfaces, straight-line flows, billiards and the GL(2,R) action."""
__version__ = "0.1.0"
