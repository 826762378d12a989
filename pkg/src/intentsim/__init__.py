"""intentsim: a deterministic delivery-fleet simulator with an analysis
pipeline that mines agent thoughts, detects emergent intentions, clusters
them, and renders temporal emergence diagrams."""

__version__ = "0.1.0"
