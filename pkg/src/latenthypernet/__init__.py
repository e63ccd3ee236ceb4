"""Latent hypernet over small convnets for wearable-sensor activity data.

Pipeline: segment multichannel recordings into temporal windows, train a
small 2D convnet, project every max-pooling layer's feature maps into a
low-dimensional latent space with supervised partial least squares,
concatenate those latent features, and classify with a fresh fully
connected + softmax head; the network's weights are never modified.

Submodules are imported on demand (``from latenthypernet import lhn``)
so the command-line entry point can cap the BLAS thread pool before
numpy loads.
"""

from .errors import LhnError

__version__ = "0.1.0"

__all__ = ["LhnError", "__version__"]
