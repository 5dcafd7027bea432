"""Super-twisting robust tracking and model-following control toolkit."""

__version__ = "0.1.0"
