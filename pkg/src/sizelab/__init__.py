"""Size-based termination checking and semantic labelling for
simply-typed higher-order rewrite systems."""

__version__ = "0.1.0"
