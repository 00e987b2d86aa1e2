"""On-the-fly training-sample adapter over scribeforge artifacts."""

from .stream import DEFAULT_BATCH_SIZE, OnTheFlyConfig, batched, sample_stream

__version__ = "0.1.0"
