"""Point-prompt segmentation workbench.

Submodules:

- grid: binary-mask morphology, exact Euclidean distance fields, components
- sampler: boundary-regularized positive/negative prompt sampling
- metrics: Dice, IoU, matched segmentation accuracy, report aggregation
- ingest: dataset preprocessing (2D conversion, padding, resizing, label I/O)
- vlsa: toy tensor data-flow replica (pixel shuffle, token ops, projection)
- segmenter: baseline and remote point-prompt segmenters, synthetic data
- bench: evaluation runs and (P,N) ablation sweeps
- service: HTTP annotation service
- cli: command-line entry points
"""

__version__ = "0.1.0"
